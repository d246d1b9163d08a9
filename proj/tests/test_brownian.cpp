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
using brownian::BrownianPath;
using brownian::NoiseKind;
using brownian::NoiseModel;

TEST_CASE("dyadic consistency holds exhaustively") {
    const BrownianPath path(0.7, 9, 3, 12345);
    for (int i = 0; i < 9; ++i) {
        for (std::uint64_t k = 0; k < (std::uint64_t{1} << i); ++k) {
            const Eigen::VectorXd parent = path.increment(i, k);
            const Eigen::VectorXd sum =
                path.increment(i + 1, 2 * k) + path.increment(i + 1, 2 * k + 1);
            CHECK((parent - sum).cwiseAbs().maxCoeff() == 0.0); // exact by construction
        }
    }
}

TEST_CASE("equal seeds are bitwise equal; the precomputed table matches lazy queries") {
    const BrownianPath a(1.0, 12, 2, 777);
    const BrownianPath b(1.0, 12, 2, 777);
    const BrownianPath c(1.0, 12, 2, 777, 12);
    RngStream rng(1);
    for (int t = 0; t < 200; ++t) {
        const int i = static_cast<int>(rng.below(13));
        const std::uint64_t k = rng.below(std::uint64_t{1} << i);
        const Eigen::VectorXd va = a.increment(i, k);
        CHECK((va - b.increment(i, k)).cwiseAbs().maxCoeff() == 0.0);
        CHECK((va - c.increment(i, k)).cwiseAbs().maxCoeff() == 0.0);
    }
    const BrownianPath d(1.0, 12, 2, 778);
    CHECK((a.increment(3, 1) - d.increment(3, 1)).norm() > 1e-12);
}

TEST_CASE("out-of-range queries are rejected") {
    const BrownianPath path(1.0, 4, 2, 1);
    CHECK_THROWS_AS(path.increment(5, 0), PreconditionError);
    CHECK_THROWS_AS(path.increment(3, 8), PreconditionError);
}

TEST_CASE("level increments have the right variance") {
    const double T = 2.0;
    const int level = 4;
    const double expect = T * std::pow(2.0, -level);
    double acc = 0.0;
    const int n = 4000;
    for (int r = 0; r < n; ++r) {
        const BrownianPath path(T, 6, 1, derive_key(9, r));
        const Eigen::VectorXd w = path.increment(level, r % 16);
        acc += w[0] * w[0] / n;
    }
    CHECK(acc == doctest::Approx(expect).epsilon(3.0 / std::sqrt(double(n)) * 3));
}

TEST_CASE("noise kinds: support and exact norms") {
    RngStream rng(3);
    NoiseModel r4{NoiseKind::rademacher, 4};
    for (int i = 0; i < 50; ++i) {
        const Eigen::VectorXd c = r4.sample_coords(rng);
        for (int j = 0; j < 4; ++j) CHECK(std::abs(c[j]) == 1.0);
        CHECK(c.norm() == doctest::Approx(2.0));
    }
    NoiseModel s3{NoiseKind::scaled_sphere, 3};
    for (int i = 0; i < 50; ++i)
        CHECK(s3.sample_coords(rng).norm() == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
    CHECK(r4.L_xi() == doctest::Approx(2.0));
    CHECK(std::isinf(NoiseModel{NoiseKind::gaussian, 4}.L_xi()));
}

TEST_CASE("all noise kinds have zero mean and identity covariance") {
    RngStream rng(5);
    const int n = 100000;
    for (NoiseKind kind : {NoiseKind::gaussian, NoiseKind::rademacher, NoiseKind::scaled_sphere}) {
        NoiseModel model{kind, 3};
        std::vector<Eigen::VectorXd> samples(n);
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
        for (int i = 0; i < n; ++i) {
            samples[i] = model.sample_coords(rng);
            mean += samples[i] / n;
        }
        CHECK(mean.norm() <= 3.0 * std::sqrt(3.0 / n));
        CHECK(diagnostics::covariance_deviation(samples) <= 3.0 * std::sqrt(3.0 / n) * 2.0);
    }
}

TEST_CASE("position-dependent rotation preserves covariance and varies smoothly") {
    geometry::Sphere s(2);
    NoiseModel model{NoiseKind::rademacher, 2};
    model.rotation_theta0 = 0.7;
    model.rotation_w = Eigen::Vector3d(1.0, 0.0, 0.0);
    RngStream rng(7);
    const geometry::Point x{Eigen::Vector3d(std::sqrt(0.5), 0.0, std::sqrt(0.5))};
    const geometry::Frame E = s.reference_frame(x);
    const int n = 100000;
    std::vector<Eigen::VectorXd> coords(n);
    for (int i = 0; i < n; ++i) {
        const geometry::Tangent xi = brownian::sample_noise(model, x, E, rng);
        coords[i] = s.frame_coords(E, xi);
        CHECK(std::abs(s.norm(xi) - std::sqrt(2.0)) < 1e-9); // rotation is an isometry
    }
    CHECK(diagnostics::covariance_deviation(coords) <= 6.0 * std::sqrt(2.0 / n) * 2.0);

    // the rotation angle moves continuously with the base point
    const geometry::Point x2{Eigen::Vector3d(std::sqrt(0.5) + 1e-6, 0.0, std::sqrt(0.5))};
    const Eigen::VectorXd c = model.rotate(x, Eigen::Vector2d(1.0, 0.0));
    const Eigen::VectorXd c2 = model.rotate(x2, Eigen::Vector2d(1.0, 0.0));
    CHECK((c - c2).norm() < 1e-5);
    CHECK((c - Eigen::Vector2d(1.0, 0.0)).norm() > 1e-2); // rotation actually acts
}

TEST_CASE("gaussian law in a frame does not depend on the frame") {
    // two-sample energy test between coordinates sampled via two different frames
    geometry::Sphere s(2);
    RngStream rng(11);
    const geometry::Point x = s.base_point();
    const geometry::Frame E1 = s.reference_frame(x);
    // second frame: rotate E1 by 0.6 in its plane
    geometry::Frame E2 = E1;
    const double a = 0.6;
    E2.vectors.col(0) = std::cos(a) * E1.vectors.col(0) + std::sin(a) * E1.vectors.col(1);
    E2.vectors.col(1) = -std::sin(a) * E1.vectors.col(0) + std::cos(a) * E1.vectors.col(1);
    NoiseModel model{NoiseKind::gaussian, 2};
    const int n = 600;
    std::vector<Eigen::VectorXd> s1(n), s2(n);
    for (int i = 0; i < n; ++i) {
        s1[i] = s.frame_coords(E1, brownian::sample_noise(model, x, E1, rng));
        s2[i] = s.frame_coords(E1, brownian::sample_noise(model, x, E2, rng));
    }
    const double stat = diagnostics::energy_distance(s1, s2);
    const double thr = diagnostics::energy_permutation_threshold(s1, s2, 0.99, 100, 13);
    CHECK(stat < thr);
}
