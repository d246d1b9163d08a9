#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "geomsde/brownian.hpp"
#include "geomsde/diagnostics.hpp"
#include "geomsde/errors.hpp"
#include "geomsde/geometry.hpp"
#include "geomsde/rng.hpp"

using namespace geomsde;
using geometry::Frame;
using geometry::Hyperboloid;
using geometry::Point;
using geometry::Sphere;
using geometry::Tangent;

namespace {

Point random_point(const geometry::Manifold& m, RngStream& rng, double spread = 1.0) {
    const Point o = m.origin();
    const Frame E = m.reference_frame(o);
    Eigen::VectorXd c = spread * rng.gaussian_vector(m.dim());
    return m.exp(o, m.from_frame_coords(E, c));
}

Tangent random_tangent(const geometry::Manifold& m, const Point& x, RngStream& rng) {
    return m.from_frame_coords(m.reference_frame(x), rng.gaussian_vector(m.dim()));
}

} // namespace

TEST_CASE("sphere: quarter great circle") {
    Sphere s(2);
    Point x{Eigen::Vector3d(0, 0, 1)};
    Tangent v{x, Eigen::Vector3d(M_PI / 2, 0, 0)};
    const Point y = s.exp(x, v);
    CHECK((y.x - Eigen::Vector3d(1, 0, 0)).norm() < 1e-12);
}

TEST_CASE("exp with zero tangent is the identity") {
    RngStream rng(7);
    Sphere s(2);
    Hyperboloid h(2);
    geometry::EuclideanSpace e(3);
    for (const geometry::Manifold* m :
         {static_cast<const geometry::Manifold*>(&s), static_cast<const geometry::Manifold*>(&h),
          static_cast<const geometry::Manifold*>(&e)}) {
        const Point x = random_point(*m, rng, 0.3);
        CHECK((m->exp(x, m->zero_tangent(x)).x - x.x).norm() < 1e-12);
    }
}

TEST_CASE("hyperboloid: exp endpoint lands at the prescribed distance") {
    Hyperboloid h(2);
    RngStream rng(11);
    const Point x = h.base_point();
    for (int i = 0; i < 20; ++i) {
        Tangent v = random_tangent(h, x, rng);
        const double r = h.norm(v);
        CHECK(h.distance(x, h.exp(x, v)) == doctest::Approx(r).epsilon(1e-10));
    }
}

TEST_CASE("log round trip on random sphere pairs") {
    Sphere s(2);
    RngStream rng(13);
    for (int i = 0; i < 50; ++i) {
        const Point x = random_point(s, rng);
        const Point y = random_point(s, rng);
        if (s.distance(x, y) > s.cut_locus_margin()) continue;
        const Tangent v = s.log(x, y);
        CHECK((s.exp(x, v).x - y.x).norm() < 1e-8);
        CHECK(s.norm(v) == doctest::Approx(s.distance(x, y)).epsilon(1e-10));
    }
}

TEST_CASE("log of the same point is zero; antipodes raise the cut-locus error") {
    Sphere s(2);
    const Point x{Eigen::Vector3d(0, 0, 1)};
    CHECK(s.norm(s.log(x, x)) < 1e-12);
    const Point anti{Eigen::Vector3d(0, 0, -1)};
    CHECK_THROWS_AS(s.log(x, anti), CutLocusError);
}

TEST_CASE("exp rejects a tangent based elsewhere") {
    Sphere s(2);
    const Point x{Eigen::Vector3d(0, 0, 1)};
    const Point y{Eigen::Vector3d(1, 0, 0)};
    Tangent v{y, Eigen::Vector3d(0, 1e-3, 0)};
    CHECK_THROWS_AS(s.exp(x, v), PreconditionError);
}

TEST_CASE("transport is an isometry and fixes the trivial case") {
    RngStream rng(17);
    Sphere s(2);
    Hyperboloid h(2);
    for (const geometry::Manifold* m :
         {static_cast<const geometry::Manifold*>(&s), static_cast<const geometry::Manifold*>(&h)}) {
        for (int i = 0; i < 30; ++i) {
            const Point x = random_point(*m, rng, 0.6);
            const Point y = random_point(*m, rng, 0.6);
            const Tangent a = random_tangent(*m, x, rng);
            const Tangent b = random_tangent(*m, x, rng);
            const Tangent ta = m->transport(a, x, y);
            const Tangent tb = m->transport(b, x, y);
            CHECK(m->norm(ta) == doctest::Approx(m->norm(a)).epsilon(1e-8));
            CHECK(m->inner(y, ta.v, tb.v) == doctest::Approx(m->inner(x, a.v, b.v)).epsilon(1e-8));
        }
        const Point x = random_point(*m, rng, 0.6);
        const Tangent a = random_tangent(*m, x, rng);
        CHECK((m->transport(a, x, x).v - a.v).norm() < 1e-12);
    }
}

TEST_CASE("holonomy around the octant triangle rotates by a right angle") {
    Sphere s(2);
    const Point a{Eigen::Vector3d(0, 0, 1)};
    const Point b{Eigen::Vector3d(1, 0, 0)};
    const Point c{Eigen::Vector3d(0, 1, 0)};
    Tangent v{a, Eigen::Vector3d(1, 0, 0)};
    Tangent w = s.transport(v, a, b);
    w = s.transport(w, b, c);
    w = s.transport(w, c, a);
    // enclosed area pi/2 -> rotation by pi/2 in T_a
    const double angle = std::atan2(w.v[1], w.v[0]);
    CHECK(std::abs(std::abs(angle) - M_PI / 2) < 1e-10);
    CHECK(s.norm(w) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("distance basics and the triangle inequality") {
    Sphere s(2);
    CHECK(s.distance({Eigen::Vector3d(0, 0, 1)}, {Eigen::Vector3d(0, 0, -1)}) ==
          doctest::Approx(M_PI));
    RngStream rng(19);
    Hyperboloid h(2);
    for (const geometry::Manifold* m :
         {static_cast<const geometry::Manifold*>(&s), static_cast<const geometry::Manifold*>(&h)}) {
        for (int i = 0; i < 40; ++i) {
            const Point x = random_point(*m, rng, 0.7);
            const Point y = random_point(*m, rng, 0.7);
            const Point z = random_point(*m, rng, 0.7);
            CHECK(m->distance(x, x) < 1e-12);
            CHECK(m->distance(x, y) <= m->distance(x, z) + m->distance(z, y) + 1e-10);
        }
    }
}

TEST_CASE("curvature coordinates: flat, spherical, hyperbolic") {
    geometry::EuclideanSpace e(3);
    const Point z{Eigen::Vector3d::Zero()};
    auto ce = e.curvature_coords(z, e.reference_frame(z));
    for (double v : ce.R) CHECK(v == 0.0);

    Sphere s(2);
    const Point xs = s.base_point();
    auto cs = s.curvature_coords(xs, s.reference_frame(xs));
    CHECK(cs.r(0, 0, 1, 1) == doctest::Approx(1.0)); // <R(e1,e2)e2, e1> = +1
    CHECK(cs.is_zero_derivative());

    Hyperboloid h(2);
    const Point xh = h.base_point();
    auto ch = h.curvature_coords(xh, h.reference_frame(xh));
    CHECK(ch.r(0, 0, 1, 1) == doctest::Approx(-1.0));
}

TEST_CASE("transported frames keep an identity Gram matrix and compose along geodesics") {
    RngStream rng(23);
    Sphere s(3);
    const Point x = random_point(s, rng, 0.4);
    const Point y = random_point(s, rng, 0.4);
    const Frame E = s.reference_frame(x);
    CHECK(s.frame_gram_residual(E) < 1e-12);
    const Frame F = s.transported_frame(E, x, y);
    CHECK(s.frame_gram_residual(F) < 1e-8);
    CHECK((F.base.x - y.x).norm() < 1e-12);

    // segment composition: transport to the midpoint and on equals one shot
    const Tangent u = s.log(x, y);
    const Point mid = s.exp(x, {x, 0.5 * u.v});
    const Frame via = s.transported_frame(s.transported_frame(E, x, mid), mid, y);
    CHECK((via.vectors - F.vectors).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("geodesics have constant speed") {
    RngStream rng(29);
    Sphere s(2);
    Hyperboloid h(2);
    for (const geometry::Manifold* m :
         {static_cast<const geometry::Manifold*>(&s), static_cast<const geometry::Manifold*>(&h)}) {
        const Point x = random_point(*m, rng, 0.3);
        const Tangent v = random_tangent(*m, x, rng);
        const double speed = m->norm(v);
        const double fd = 1e-5;
        for (double t : {0.2, 0.5, 0.8}) {
            const Point a = m->exp(x, {x, (t - fd) * v.v});
            const Point b = m->exp(x, {x, (t + fd) * v.v});
            CHECK(m->distance(a, b) / (2 * fd) == doctest::Approx(speed).epsilon(1e-6));
        }
    }
}

TEST_CASE("renormalization keeps the chart constraint tight") {
    RngStream rng(31);
    Sphere s(2);
    Hyperboloid h(2);
    for (const geometry::Manifold* m :
         {static_cast<const geometry::Manifold*>(&s), static_cast<const geometry::Manifold*>(&h)}) {
        Point x = random_point(*m, rng, 0.5);
        for (int i = 0; i < 200; ++i) {
            x = m->exp(x, random_tangent(*m, x, rng));
            CHECK(m->constraint_residual(x) < 1e-12);
        }
    }
}

TEST_CASE("transport preserves identity covariance of noise samples") {
    Sphere s(2);
    RngStream rng(37);
    const Point x = s.base_point();
    const Point y = random_point(s, rng, 0.8);
    const Frame Ex = s.reference_frame(x);
    const Frame Ey = s.reference_frame(y);
    const int n = 100000;
    std::vector<Eigen::VectorXd> coords;
    coords.reserve(n);
    for (int i = 0; i < n; ++i) {
        const Tangent v = s.from_frame_coords(Ex, rng.gaussian_vector(2));
        coords.push_back(s.frame_coords(Ey, s.transport(v, x, y)));
    }
    CHECK(diagnostics::covariance_deviation(coords) < 3.0 * 5.0 / std::sqrt(double(n)));
    // spherical symmetry: per-coordinate law stays standard normal
    for (int j = 0; j < 2; ++j) {
        std::vector<double> c(n);
        for (int i = 0; i < n; ++i) c[i] = coords[i][j];
        CHECK(diagnostics::ks_statistic_normal(std::move(c)) < diagnostics::ks_critical_1pct(n));
    }
}

TEST_CASE("make_manifold dispatches by kind") {
    CHECK(geometry::make_manifold("sphere", 2, 1.0)->name() == "sphere");
    CHECK(geometry::make_manifold("hyperboloid", 3, 2.0)->dim() == 3);
    CHECK(geometry::make_manifold("euclidean", 4, 1.0)->ambient_dim() == 4);
    CHECK_THROWS_AS(geometry::make_manifold("torus", 2, 1.0), PreconditionError);
}
