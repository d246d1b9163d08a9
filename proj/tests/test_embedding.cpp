#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "geomsde/diagnostics.hpp"
#include "geomsde/embedding.hpp"
#include "geomsde/rng.hpp"

using namespace geomsde;
using embedding::DiagExpMetric;
using embedding::IdentityMetric;
using embedding::ScalarField;

namespace {

ScalarField quadratic_field(int d) {
    ScalarField f;
    f.value = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
    f.gradient = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(2.0 * x); };
    f.hessian = [d](const Eigen::VectorXd&) {
        return Eigen::MatrixXd(2.0 * Eigen::MatrixXd::Identity(d, d));
    };
    return f;
}

} // namespace

TEST_CASE("christoffel symbols vanish for the identity metric") {
    IdentityMetric metric(3);
    const auto ch = embedding::christoffel(metric, Eigen::Vector3d(0.3, -0.5, 1.0));
    for (const auto& g : ch.Gamma) CHECK(g.norm() == 0.0);
    CHECK(ch.phi.norm() == 0.0);
}

TEST_CASE("diagonal exponential metric has the hand-computed symbols") {
    // A = diag(e^{x1}, 1, 1): only Gamma^1_{11} = -1/2 survives
    DiagExpMetric metric(3, Eigen::Vector3d(1.0, 0.0, 0.0));
    const Eigen::Vector3d x(0.7, -0.2, 0.4);
    const auto ch = embedding::christoffel(metric, x);
    CHECK(ch.Gamma[0](0, 0) == doctest::Approx(-0.5).epsilon(1e-10));
    double off = 0.0;
    for (int k = 0; k < 3; ++k)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (!(k == 0 && i == 0 && j == 0)) off = std::max(off, std::abs(ch.Gamma[k](i, j)));
    CHECK(off < 1e-10);
    // phi_k = tr(A Gamma^k)
    CHECK(ch.phi[0] == doctest::Approx(-0.5 * std::exp(x[0])).epsilon(1e-10));
    // symmetry of the symbols
    for (int k = 0; k < 3; ++k) CHECK((ch.Gamma[k] - ch.Gamma[k].transpose()).norm() < 1e-14);
}

TEST_CASE("analytic metric derivatives agree with finite differences") {
    DiagExpMetric metric(3, Eigen::Vector3d(1.0, 0.6, 0.3));
    RngStream rng(3);
    for (int t = 0; t < 5; ++t) {
        Eigen::VectorXd x = rng.gaussian_vector(3) * 0.5;
        for (int i = 0; i < 3; ++i) {
            Eigen::VectorXd xp = x, xm = x;
            xp[i] += 1e-6;
            xm[i] -= 1e-6;
            const Eigen::MatrixXd fd = (metric.g(xp) - metric.g(xm)) / 2e-6;
            CHECK((fd - metric.dg(x, i)).cwiseAbs().maxCoeff() < 1e-6);
        }
    }
}

TEST_CASE("phi(x, v) is an exact quadratic form") {
    DiagExpMetric metric(3, Eigen::Vector3d(1.0, 0.6, 0.3));
    RngStream rng(5);
    const Eigen::VectorXd x = rng.gaussian_vector(3) * 0.4;
    const auto ch = embedding::christoffel(metric, x);
    const Eigen::VectorXd u = rng.gaussian_vector(3);
    const Eigen::VectorXd v = rng.gaussian_vector(3);
    CHECK((ch.phi_quad(2.5 * u) - 6.25 * ch.phi_quad(u)).norm() < 1e-12);
    // parallelogram bilinearity
    const Eigen::VectorXd lhs = ch.phi_quad(u + v) + ch.phi_quad(u - v);
    const Eigen::VectorXd rhs = 2.0 * ch.phi_quad(u) + 2.0 * ch.phi_quad(v);
    CHECK((lhs - rhs).norm() < 1e-12);
}

TEST_CASE("pullback exp: identity metric is translation") {
    IdentityMetric metric(2);
    const auto g = embedding::pullback_exp(metric, Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d(0.3, -0.4));
    CHECK((g.endpoint - Eigen::Vector2d(1.3, 1.6)).norm() < 1e-12);
    CHECK(g.speed_drift < 1e-12);
}

TEST_CASE("pullback exp: fourth-order convergence and conserved g-speed") {
    DiagExpMetric metric(2, Eigen::Vector2d(1.0, 0.5));
    const Eigen::Vector2d x(0.2, -0.3), v(0.8, 0.5);
    const auto fine = embedding::pullback_exp(metric, x, v, 1e-4);
    const auto h1 = embedding::pullback_exp(metric, x, v, 2e-2);
    const auto h2 = embedding::pullback_exp(metric, x, v, 1e-2);
    const double e1 = (h1.endpoint - fine.endpoint).norm();
    const double e2 = (h2.endpoint - fine.endpoint).norm();
    CHECK(e1 / e2 > 12.0);
    CHECK(e1 / e2 < 20.0);
    CHECK(h2.speed_drift < 1e-6);
}

TEST_CASE("corrected step is exact under the identity metric") {
    IdentityMetric metric(2);
    const auto step = embedding::corrected_step(metric, Eigen::Vector2d(0.1, 0.2),
                                                Eigen::Vector2d(1.0, -1.0),
                                                Eigen::Vector2d(0.5, 0.25), 0.01);
    CHECK((step.manifold_point - step.euclidean_point).norm() < 1e-12);
    CHECK(step.residual_raw < 1e-12);
    CHECK(step.residual_corrected < 1e-12);
}

TEST_CASE("corrected residual scales at a higher order than the raw residual") {
    DiagExpMetric metric(2, Eigen::Vector2d(1.0, 0.5));
    const Eigen::Vector2d x(0.3, -0.2);
    RngStream rng(7);
    const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(metric.A(x)).matrixL();
    auto mean_residuals = [&](double delta) {
        double r1 = 0.0, r2 = 0.0;
        const int n = 400;
        for (int i = 0; i < n; ++i) {
            const Eigen::VectorXd xi = chol * rng.gaussian_vector(2);
            const auto st = embedding::corrected_step(metric, x, -x, xi, delta, 1e-2);
            r1 += st.residual_raw / n;
            r2 += st.residual_corrected / n;
        }
        return std::make_pair(r1, r2);
    };
    const auto [a1, a2] = mean_residuals(1.0 / 64);
    const auto [b1, b2] = mean_residuals(1.0 / 256);
    const double slope_raw = std::log(a1 / b1) / std::log(4.0);
    const double slope_corr = std::log(a2 / b2) / std::log(4.0);
    CHECK(slope_raw > 0.9);
    CHECK(slope_corr > 1.4);
    CHECK(slope_corr > slope_raw);
}

TEST_CASE("laplace-beltrami identity: exact for the flat metric, pins the sign in general") {
    IdentityMetric flat(2);
    CHECK(embedding::laplace_beltrami_residual(flat, quadratic_field(2),
                                               Eigen::Vector2d(0.4, -0.7)) < 1e-9);

    DiagExpMetric metric(3, Eigen::Vector3d(1.0, 0.6, 0.3));
    const Eigen::Vector3d x(0.2, -0.1, 0.3);
    CHECK(embedding::laplace_beltrami_residual(metric, quadratic_field(3), x,
                                               embedding::PhiSign::canonical) < 1e-5);
    CHECK(embedding::laplace_beltrami_residual(metric, quadratic_field(3), x,
                                               embedding::PhiSign::flipped) > 1e-1);
}

TEST_CASE("walk pair: identity metric keeps both walks equal") {
    IdentityMetric metric(2);
    RngStream rng(11);
    const auto res = embedding::euclidean_walk_pair(
        metric, Eigen::Vector2d(0.0, 0.0),
        [](const Eigen::VectorXd& x) { return Eigen::VectorXd(-x); }, 0.01, 50, rng);
    CHECK(res.gap_sq < 1e-20);
}

TEST_CASE("walk pair divergence scales linearly with delta at fixed horizon") {
    DiagExpMetric metric(2, Eigen::Vector2d(1.0, 0.5));
    auto mean_gap = [&](double delta, int K) {
        double acc = 0.0;
        const int n = 300;
        for (int r = 0; r < n; ++r) {
            RngStream rng = RngStream::substream(derive_key(13, K), r);
            acc += embedding::euclidean_walk_pair(
                       metric, Eigen::Vector2d(0.1, -0.1),
                       [](const Eigen::VectorXd& x) { return Eigen::VectorXd(-x); }, delta, K, rng)
                       .gap_sq /
                   n;
        }
        return acc;
    };
    // K delta = 1/4 fixed; E|x_K - z_K|^2 ~ K delta^2 = (1/4) delta
    const double g1 = mean_gap(1.0 / 64, 16);
    const double g2 = mean_gap(1.0 / 256, 64);
    const double slope = std::log(g1 / g2) / std::log(4.0);
    CHECK(slope > 0.8);
    CHECK(slope < 1.2);
}

TEST_CASE("perturbed SDE pair diverges linearly in the squared perturbation size") {
    // dx = u dt + F dW vs dy = (u + c_u) dt + (F + C_F) dW on shared noise
    const int d = 2, steps = 200;
    const double T = 1.0, dt = T / steps;
    auto divergence = [&](double eps_u, double eps_F) {
        double acc = 0.0;
        const int n = 400;
        for (int r = 0; r < n; ++r) {
            RngStream rng = RngStream::substream(17, r);
            Eigen::Vector2d x = Eigen::Vector2d::Zero(), y = x;
            for (int k = 0; k < steps; ++k) {
                const Eigen::VectorXd dw = std::sqrt(dt) * rng.gaussian_vector(d);
                const Eigen::Vector2d ux = -x, uy = -y + eps_u * Eigen::Vector2d(1, 0);
                x += ux * dt + dw;
                y += uy * dt + (1.0 + eps_F / std::sqrt(2.0)) * dw;
            }
            acc += (x - y).squaredNorm() / n;
        }
        return acc;
    };
    const double base = divergence(0.0, 0.0);
    CHECK(base < 1e-20);
    const double d1 = divergence(0.05, 0.05);
    const double d2 = divergence(0.1, 0.1);
    CHECK(d2 / d1 == doctest::Approx(4.0).epsilon(0.35));
}

TEST_CASE("chart-norm sandwich brackets the solved geodesic length") {
    DiagExpMetric metric(2, Eigen::Vector2d(1.0, 0.5), 2.0);
    RngStream rng(19);
    for (int t = 0; t < 10; ++t) {
        const Eigen::VectorXd x = 0.3 * rng.gaussian_vector(2);
        const Eigen::VectorXd v = 0.2 * rng.gaussian_vector(2);
        const auto g = embedding::pullback_exp(metric, x, v);
        const auto [lo, hi] = embedding::distance_bounds(metric, x, g.endpoint);
        CHECK(g.g_length >= lo - 1e-9);
        CHECK(g.g_length <= hi + 1e-9);
    }
}

TEST_CASE("pullback manifold adapter: exp works, closed-form ops are refused") {
    auto metric = std::make_shared<DiagExpMetric>(2, Eigen::Vector2d(1.0, 0.5));
    embedding::PullbackManifold m(metric);
    const geometry::Point x{Eigen::Vector2d(0.1, 0.2)};
    const geometry::Frame E = m.reference_frame(x);
    CHECK(m.frame_gram_residual(E) < 1e-10);
    const geometry::Point y = m.exp(x, m.from_frame_coords(E, Eigen::Vector2d(0.3, -0.1)));
    CHECK(y.x.allFinite());
    CHECK_THROWS_AS(m.log(x, y), UnsupportedOperation);
    CHECK_THROWS_AS(m.distance(x, y), UnsupportedOperation);
    CHECK_THROWS_AS(m.transport(m.zero_tangent(x), x, y), UnsupportedOperation);
}
