#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace geomsde::matode {

// Time-dependent d x d matrix t -> M(t) on [0, t_max], with optional declared
// operator-norm bound L_M and Lipschitz constant L_M' of t -> M(t).
struct MatrixPath {
    int dim = 0;
    std::function<Eigen::MatrixXd(double)> eval;
    std::optional<double> norm_bound;
    std::optional<double> lipschitz_bound;

    static MatrixPath constant(Eigen::MatrixXd m);
};

// Solves Edot = M(t) E, E(0) = I up to time t with the classical one-step
// 4th-order method; the final partial step is shortened to land exactly on t.
// h <= 0 selects the default stepsize t * 1e-3 (at least 64 steps).
// Throws NumericalBlowup if any entry goes non-finite, naming the time.
Eigen::MatrixXd matrix_exponent_ode(const MatrixPath& M, double t, double h = 0.0);

// Solves zdot = M(t) z + v(t), z(0) = z0, by direct integration.
// Consistent with the Duhamel form z(t) = int_0^t E(t-s; N_s) v(s) ds + E(t; M) z0,
// which serves as the test oracle only.
Eigen::VectorXd solve_inhomogeneous(const MatrixPath& M,
                                    const std::function<Eigen::VectorXd(double)>& v, double t,
                                    double h, const Eigen::VectorXd& z0);

// The four d x d blocks of the 2d x 2d exponent of [[0, I], [M(t), 0]].
struct SecondOrderBlocks {
    Eigen::MatrixXd A, B, C, D;
};

SecondOrderBlocks second_order_blocks(const MatrixPath& M, double t, double h = 0.0);

// Blocks recorded at every grid time in a single pass. grid must be sorted,
// start at a value >= 0 and the solver lands exactly on each node.
std::vector<SecondOrderBlocks> second_order_blocks_grid(const MatrixPath& M,
                                                        const std::vector<double>& grid,
                                                        double h = 0.0);

// Fast path for constant M (curvature parallel along the geodesic): same
// integrator, M evaluated once. Used heavily by the trivialization ODEs.
std::vector<SecondOrderBlocks> second_order_blocks_grid_constant(const Eigen::MatrixXd& M,
                                                                 const std::vector<double>& grid,
                                                                 double h = 0.0);

inline std::vector<double> uniform_grid(double t, int nodes) {
    std::vector<double> g(nodes);
    for (int i = 0; i < nodes; ++i) g[i] = t * static_cast<double>(i) / (nodes - 1);
    return g;
}

} // namespace geomsde::matode
