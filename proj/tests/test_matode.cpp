#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "geomsde/errors.hpp"
#include "geomsde/matode.hpp"
#include "geomsde/rng.hpp"

using namespace geomsde;
using matode::MatrixPath;

TEST_CASE("zero generator gives the identity") {
    MatrixPath M = MatrixPath::constant(Eigen::MatrixXd::Zero(2, 2));
    const Eigen::MatrixXd E = matode::matrix_exponent_ode(M, 1.0);
    CHECK((E - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-14);
}

TEST_CASE("constant block system matches the cosh/sinh closed form") {
    // x'' = c x stacked as [[0,1],[c,0]]; c = 4
    Eigen::MatrixXd m(2, 2);
    m << 0, 1, 4, 0;
    const Eigen::MatrixXd E = matode::matrix_exponent_ode(MatrixPath::constant(m), 1.0);
    Eigen::MatrixXd expect(2, 2);
    expect << std::cosh(2.0), std::sinh(2.0) / 2.0, 2.0 * std::sinh(2.0), std::cosh(2.0);
    CHECK((E - expect).norm() < 1e-10);
}

TEST_CASE("Richardson self-consistency for a time-dependent path") {
    MatrixPath M;
    M.dim = 2;
    M.eval = [](double t) {
        Eigen::MatrixXd m(2, 2);
        m << 0, 1, std::sin(t), 0;
        return m;
    };
    const Eigen::MatrixXd a = matode::matrix_exponent_ode(M, 1.0, 1e-3);
    const Eigen::MatrixXd b = matode::matrix_exponent_ode(M, 1.0, 5e-4);
    CHECK((a - b).norm() < 1e-8);
}

TEST_CASE("fourth-order convergence under step halving") {
    MatrixPath M;
    M.dim = 2;
    M.eval = [](double t) {
        Eigen::MatrixXd m(2, 2);
        m << std::cos(3 * t), 1, std::sin(t), -0.5;
        return m;
    };
    const Eigen::MatrixXd fine = matode::matrix_exponent_ode(M, 1.0, 1e-4);
    const Eigen::MatrixXd h1 = matode::matrix_exponent_ode(M, 1.0, 4e-2);
    const Eigen::MatrixXd h2 = matode::matrix_exponent_ode(M, 1.0, 2e-2);
    const double e1 = (h1 - fine).norm();
    const double e2 = (h2 - fine).norm();
    CHECK(e1 / e2 > 12.0); // ~16 for exact order 4
    CHECK(e1 / e2 < 20.0);
}

TEST_CASE("numerical blowup reports the failure time") {
    MatrixPath M;
    M.dim = 1;
    M.eval = [](double t) {
        Eigen::MatrixXd m(1, 1);
        m(0, 0) = t < 0.5 ? 1.0 : std::numeric_limits<double>::quiet_NaN();
        return m;
    };
    CHECK_THROWS_AS(matode::matrix_exponent_ode(M, 1.0, 1e-2), NumericalBlowup);
}

TEST_CASE("inhomogeneous: pure integral of a constant forcing") {
    MatrixPath M = MatrixPath::constant(Eigen::MatrixXd::Zero(2, 2));
    const Eigen::VectorXd z = matode::solve_inhomogeneous(
        M, [](double) { return Eigen::Vector2d(1.0, 0.0); }, 1.0, 1e-3, Eigen::Vector2d::Zero());
    CHECK((z - Eigen::Vector2d(1.0, 0.0)).norm() < 1e-13);
}

TEST_CASE("inhomogeneous: constant coefficients match the matrix-exponential formula") {
    Eigen::MatrixXd m(2, 2);
    m << 0.3, 0.7, -0.2, 0.5;
    const Eigen::Vector2d v(0.4, -1.1), z0(1.0, 2.0);
    const Eigen::VectorXd z =
        matode::solve_inhomogeneous(MatrixPath::constant(m), [&](double) { return v; }, 1.0, 1e-3, z0);
    const Eigen::MatrixXd etm = (m * 1.0).exp();
    const Eigen::VectorXd expect =
        etm * z0 + m.inverse() * (etm - Eigen::MatrixXd::Identity(2, 2)) * v;
    CHECK((z - expect).norm() < 1e-10);
}

TEST_CASE("inhomogeneous: agrees with the explicit Duhamel quadrature") {
    MatrixPath M;
    M.dim = 2;
    M.eval = [](double t) {
        Eigen::MatrixXd m(2, 2);
        m << std::sin(t), 0.5, -0.3, std::cos(2 * t);
        return m;
    };
    auto v = [](double t) { return Eigen::Vector2d(std::cos(t), t); };
    const Eigen::Vector2d z0(0.2, -0.4);
    const Eigen::VectorXd direct = matode::solve_inhomogeneous(M, v, 1.0, 1e-3, z0);

    // z(T) = int_0^T E(T-s; N_s) v(s) ds + E(T; M) z0 by composite Simpson
    const int n = 128;
    const double hq = 1.0 / n;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(2);
    for (int i = 0; i <= n; ++i) {
        const double s = i * hq;
        MatrixPath shifted;
        shifted.dim = 2;
        shifted.eval = [&M, s](double t) { return M.eval(s + t); };
        const Eigen::VectorXd term = matode::matrix_exponent_ode(shifted, 1.0 - s, 1e-3) * v(s);
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        acc += w * term;
    }
    acc *= hq / 3.0;
    acc += matode::matrix_exponent_ode(M, 1.0, 1e-3) * z0;
    CHECK((direct - acc).norm() < 1e-6);
}

TEST_CASE("second-order blocks: flat case") {
    const auto b = matode::second_order_blocks(MatrixPath::constant(Eigen::MatrixXd::Zero(3, 3)), 1.0);
    CHECK((b.A - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-13);
    CHECK((b.B - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-13);
    CHECK(b.C.norm() < 1e-13);
    CHECK((b.D - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-13);
}

TEST_CASE("second-order blocks: scalar analytic oracle for M = I") {
    const auto b = matode::second_order_blocks(MatrixPath::constant(Eigen::MatrixXd::Identity(2, 2)), 1.0);
    CHECK((b.A - std::cosh(1.0) * Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-10);
    CHECK((b.B - std::sinh(1.0) * Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-10);
    CHECK((b.C - std::sinh(1.0) * Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-10);
    CHECK((b.D - std::cosh(1.0) * Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-10);
}

TEST_CASE("block norms stay within the cosh/sinh envelopes on random paths") {
    RngStream rng(0xb10cULL);
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 2 + static_cast<int>(rng.below(2));
        Eigen::MatrixXd a(d, d), b(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                a(i, j) = 2.0 * rng.uniform() - 1.0;
                b(i, j) = 2.0 * rng.uniform() - 1.0;
            }
        const double target = 0.2 + 3.0 * rng.uniform();
        const double scale = target / (a.operatorNorm() + b.operatorNorm());
        a *= scale;
        b *= scale;
        const double w = 2.0 * M_PI * rng.uniform();
        MatrixPath M;
        M.dim = d;
        M.norm_bound = target;
        M.eval = [a, b, w](double t) { return std::cos(w * t) * a + std::sin(w * t) * b; };

        const auto grid = matode::uniform_grid(1.0, 5);
        const auto blocks = matode::second_order_blocks_grid(M, grid, 1e-3);
        const double sL = std::sqrt(target);
        const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
        for (std::size_t k = 1; k < grid.size(); ++k) {
            const double t = grid[k];
            const double tol = 1e-6;
            CHECK(blocks[k].A.operatorNorm() <= std::cosh(sL * t) + tol);
            CHECK(blocks[k].B.operatorNorm() <= std::sinh(sL * t) / sL + tol);
            CHECK(blocks[k].C.operatorNorm() <= sL * std::sinh(sL * t) + tol);
            CHECK(blocks[k].D.operatorNorm() <= std::cosh(sL * t) + tol);
            CHECK((blocks[k].A - I).operatorNorm() <= std::cosh(sL * t) - 1.0 + tol);
            CHECK((blocks[k].B - t * I).operatorNorm() <= std::sinh(sL * t) / sL - t + tol);
        }
    }
}
