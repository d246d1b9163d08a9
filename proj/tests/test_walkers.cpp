#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "geomsde/brownian.hpp"
#include "geomsde/diagnostics.hpp"
#include "geomsde/geometry.hpp"
#include "geomsde/rng.hpp"
#include "geomsde/walkers.hpp"

using namespace geomsde;
using geometry::EuclideanSpace;
using geometry::Frame;
using geometry::Point;
using geometry::Sphere;
using geometry::Tangent;

TEST_CASE("flat space: every level reproduces x0 + T b + B(T) exactly") {
    EuclideanSpace e(3);
    const Point x0{Eigen::Vector3d(0.5, -1.0, 2.0)};
    const Frame E0 = e.reference_frame(x0);
    const Eigen::Vector3d b(0.3, 0.1, -0.2);
    walkers::DriftField beta;
    beta.eval = [b](const Point& x) -> Tangent { return {x, b}; };
    const double T = 0.75;
    const brownian::BrownianPath path(T, 8, 3, 99, 8);
    const Eigen::VectorXd bt = path.increment(0, 0);
    const auto tower = walkers::dyadic_tower(e, x0, E0, beta, path, 8);
    const Eigen::Vector3d expect = x0.x + T * b + bt;
    for (const auto& traj : tower) CHECK((traj.endpoint().x - expect).norm() < 1e-10);
}

TEST_CASE("zero drift on a degenerate path keeps the trajectory constant") {
    Sphere s(2);
    const Point x0 = s.base_point();
    const Frame E0 = s.reference_frame(x0);
    const walkers::DriftField beta = walkers::zero_drift(s);
    // degenerate path: level 0 increment is zero when T = 0 variance path
    const brownian::BrownianPath path(0.0, 4, 2, 1, 4);
    const auto traj = walkers::euler_murayama(s, x0, E0, beta, path, 4);
    for (const auto& p : traj.points) CHECK((p.x - x0.x).norm() < 1e-12);
}

TEST_CASE("refine pair returns both levels; flat space couples them exactly") {
    EuclideanSpace e(2);
    const Point x0{Eigen::Vector2d::Zero()};
    const walkers::DriftField beta = walkers::zero_drift(e);
    const brownian::BrownianPath path(1.0, 7, 2, 5, 7);
    const auto [coarse, fine] = walkers::refine_pair(e, x0, e.reference_frame(x0), beta, path, 6);
    CHECK(coarse.level == 6);
    CHECK(fine.level == 7);
    for (std::size_t k = 0; k < coarse.points.size(); ++k)
        CHECK((coarse.points[k].x - fine.points[2 * k].x).norm() < 1e-10);
}

TEST_CASE("coupled refinement contracts on the sphere") {
    Sphere s(2);
    const Point x_star = s.base_point();
    const walkers::DriftField beta = walkers::log_drift(s, x_star, 1.0);
    const Point x0 = s.exp(x_star, s.from_frame_coords(s.reference_frame(x_star),
                                                       Eigen::Vector2d(0.5, 0)));
    const Frame E0 = s.reference_frame(x0);
    const double T = 1.0 / 32;
    double mean3 = 0.0, mean6 = 0.0;
    const int n = 200;
    for (int r = 0; r < n; ++r) {
        const brownian::BrownianPath path(T, 7, 2, derive_key(2024, r), 7);
        const auto tower = walkers::dyadic_tower(s, x0, E0, beta, path, 7);
        mean3 += std::pow(s.distance(tower[3].endpoint(), tower[4].endpoint()), 2) / n;
        mean6 += std::pow(s.distance(tower[6].endpoint(), tower[7].endpoint()), 2) / n;
    }
    CHECK(mean6 < mean3); // mean-square decay ~ 2^{-i}
}

TEST_CASE("interpolation coincides with the nodes and respects the scaled increment") {
    EuclideanSpace e(2);
    const Point x0{Eigen::Vector2d::Zero()};
    walkers::DriftField beta;
    beta.eval = [](const Point& x) -> Tangent { return {x, Eigen::Vector2d(1.0, 0.0)}; };
    const brownian::BrownianPath path(1.0, 6, 2, 17, 6);
    const auto traj = walkers::euler_murayama(e, x0, e.reference_frame(x0), beta, path, 3);
    // node times reproduce stored points
    for (std::uint64_t j = 0; j <= 8; ++j) {
        const Point p = walkers::interpolate(e, traj, beta, path, 3, j);
        CHECK((p.x - traj.points[j].x).norm() < 1e-12);
    }
    // midpoint: x_k + (delta/2) b + (1/2) (B(mid) - B(k delta))
    const double dt = path.delta(3);
    const Eigen::VectorXd half = path.increment(4, 2); // [delta, 1.5 delta)
    const Point mid = walkers::interpolate(e, traj, beta, path, 4, 3);
    const Eigen::Vector2d expect =
        traj.points[1].x + 0.5 * dt * Eigen::Vector2d(1.0, 0.0) + 0.5 * half;
    CHECK((mid.x - expect).norm() < 1e-12);
}

TEST_CASE("flat-space reference endpoint law is N(x0 + T b, T I)") {
    EuclideanSpace e(2);
    const Point x0{Eigen::Vector2d::Zero()};
    walkers::DriftField beta;
    beta.eval = [](const Point& x) -> Tangent { return {x, Eigen::Vector2d(0.4, -0.7)}; };
    const double T = 0.5;
    const int n = 800;
    std::vector<Eigen::VectorXd> ends(n), ref(n);
    RngStream rng(0xabcdULL);
    for (int r = 0; r < n; ++r) {
        const brownian::BrownianPath path(T, 9, 2, derive_key(7, r), 9);
        ends[r] = walkers::reference_sde(e, x0, e.reference_frame(x0), beta, path, 9).endpoint().x;
        ref[r] = Eigen::Vector2d(0.4, -0.7) * T + std::sqrt(T) * rng.gaussian_vector(2);
    }
    const double stat = diagnostics::energy_distance(ends, ref);
    const double thr = diagnostics::energy_permutation_threshold(ends, ref, 0.99, 100, 3);
    CHECK(stat < thr);
}

TEST_CASE("nongaussian walk: degenerate noise keeps the walk on the drift flow") {
    Sphere s(2);
    const Point y0 = s.base_point();
    const walkers::DriftField beta = walkers::zero_drift(s);
    brownian::NoiseModel noise;
    noise.kind = brownian::NoiseKind::rademacher;
    noise.dim = 2;
    RngStream rng(5);
    const auto traj = walkers::nongaussian_walk(s, y0, beta, noise, 1e-4, 50, rng);
    CHECK(traj.points.size() == 51);
    CHECK_FALSE(traj.aborted);
    // rademacher coordinates have norm exactly sqrt(2), so steps have length
    // sqrt(delta * 2)
    for (std::size_t k = 1; k < traj.points.size(); ++k)
        CHECK(s.distance(traj.points[k - 1], traj.points[k]) ==
              doctest::Approx(std::sqrt(2e-4)).epsilon(1e-6));
}

TEST_CASE("gaussian one-step walk matches the level-0 discretization in law") {
    Sphere s(2);
    const Point y0 = s.base_point();
    const Frame E0 = s.reference_frame(y0);
    const walkers::DriftField beta = walkers::log_drift(s, s.exp(y0, s.from_frame_coords(E0, Eigen::Vector2d(0.4, 0))), 1.0);
    brownian::NoiseModel noise;
    noise.kind = brownian::NoiseKind::gaussian;
    noise.dim = 2;
    const double T = 0.05;
    const int n = 700;
    std::vector<Eigen::VectorXd> a(n), b(n);
    for (int r = 0; r < n; ++r) {
        RngStream rng = RngStream::substream(31, r);
        a[r] = walkers::nongaussian_walk(s, y0, beta, noise, T, 1, rng).endpoint().x;
        const brownian::BrownianPath path(T, 1, 2, derive_key(77, r));
        b[r] = walkers::euler_murayama(s, y0, E0, beta, path, 0).endpoint().x;
    }
    const double stat = diagnostics::energy_distance(a, b);
    const double thr = diagnostics::energy_permutation_threshold(a, b, 0.99, 100, 11);
    CHECK(stat < thr);
}

TEST_CASE("tangent walk in flat space is the plain sum") {
    EuclideanSpace e(2);
    const Point y0{Eigen::Vector2d(1.0, 2.0)};
    const Frame E0 = e.reference_frame(y0);
    walkers::DriftField beta;
    beta.eval = [](const Point& x) -> Tangent { return {x, Eigen::Vector2d(0.2, -0.1)}; };
    brownian::NoiseModel noise;
    noise.kind = brownian::NoiseKind::rademacher;
    noise.dim = 2;
    const double delta = 1e-3;
    const int K = 40;

    RngStream rng_a = RngStream::substream(13, 0);
    const auto walk = walkers::tangent_walk(e, y0, E0, beta, noise, delta, K, rng_a);
    RngStream rng_b = RngStream::substream(13, 0);
    Eigen::Vector2d z = Eigen::Vector2d::Zero();
    for (int k = 0; k < K; ++k)
        z += delta * Eigen::Vector2d(0.2, -0.1) + std::sqrt(delta) * noise.sample_coords(rng_b);
    CHECK((walk.z.back() - z).norm() < 1e-12);
    CHECK((walk.retracted.endpoint().x - (y0.x + z)).norm() < 1e-12);
}

TEST_CASE("coupled tangent/manifold walks drift apart at the T^(3/2) scale") {
    Sphere s(2);
    const Point y0 = s.base_point();
    const Frame E0 = s.reference_frame(y0);
    const walkers::DriftField beta = walkers::zero_drift(s);
    brownian::NoiseModel noise;
    noise.kind = brownian::NoiseKind::rademacher;
    noise.dim = 2;
    auto mean_gap = [&](double T, int replicas) {
        const double delta = T * T * T;
        const int K = static_cast<int>(std::lround(T / delta));
        double acc = 0.0;
        int kept = 0;
        for (int r = 0; r < replicas; ++r) {
            RngStream rng = RngStream::substream(derive_key(19, static_cast<std::uint64_t>(1e6 * T)), r);
            const auto pair = walkers::coupled_nongaussian_tangent(s, y0, E0, beta, noise, delta, K, rng);
            if (pair.aborted) continue;
            acc += s.distance(pair.walk.endpoint(), pair.tangent.retracted.endpoint());
            ++kept;
        }
        return acc / kept;
    };
    const double g1 = mean_gap(0.25, 300);
    const double g2 = mean_gap(0.125, 300);
    const double slope = std::log(g1 / g2) / std::log(2.0);
    CHECK(slope > 1.0);
    CHECK(slope < 2.0);
}

TEST_CASE("trajectory frames satisfy the frame invariants along the walk") {
    Sphere s(2);
    const Point x_star = s.base_point();
    const walkers::DriftField beta = walkers::log_drift(s, x_star, 1.0);
    const Point x0 = s.exp(x_star, s.from_frame_coords(s.reference_frame(x_star),
                                                       Eigen::Vector2d(0.3, 0.2)));
    const brownian::BrownianPath path(0.25, 6, 2, 23, 6);
    const auto tower = walkers::dyadic_tower(s, x0, s.reference_frame(x0), beta, path, 6);
    for (const auto& traj : tower)
        for (const auto& F : traj.frames) CHECK(s.frame_gram_residual(F) < 1e-8);
}
