#include "geomsde/matode.hpp"

#include <cmath>
#include <sstream>

#include "geomsde/errors.hpp"

namespace geomsde::matode {

namespace {

double default_step(double t, double h) {
    if (h > 0.0) return h;
    double d = t * 1e-3;
    if (t / d < 64.0) d = t / 64.0;
    return d;
}

[[noreturn]] void blowup(double time) {
    std::ostringstream os;
    os << "matrix ODE produced non-finite entries at t=" << time;
    throw NumericalBlowup(os.str());
}

// One RK4 sweep of Xdot = F(t, X) over [0, t] visiting sorted grid nodes.
// Record is called exactly when the current time equals a node.
template <typename State, typename Deriv, typename Record>
void rk4_sweep(State& x, double t, double h, const Deriv& f, const std::vector<double>& grid,
               const Record& record) {
    std::size_t gi = 0;
    double time = 0.0;
    auto emit = [&]() {
        while (gi < grid.size() && grid[gi] <= time + 1e-15 * std::max(1.0, t)) {
            record(gi, x);
            ++gi;
        }
    };
    emit();
    State k1 = x, k2 = x, k3 = x, k4 = x, tmp = x;
    while (time < t - 1e-15 * std::max(1.0, t)) {
        double step = std::min(h, t - time);
        if (gi < grid.size()) step = std::min(step, grid[gi] - time);
        f(time, x, k1);
        tmp = x + (step / 2) * k1;
        f(time + step / 2, tmp, k2);
        tmp = x + (step / 2) * k2;
        f(time + step / 2, tmp, k3);
        tmp = x + step * k3;
        f(time + step, tmp, k4);
        x += (step / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
        time += step;
        if (!x.allFinite()) blowup(time);
        emit();
    }
    while (gi < grid.size()) {
        record(gi, x);
        ++gi;
    }
}

} // namespace

MatrixPath MatrixPath::constant(Eigen::MatrixXd m) {
    MatrixPath p;
    p.dim = static_cast<int>(m.rows());
    p.norm_bound = m.operatorNorm();
    p.lipschitz_bound = 0.0;
    p.eval = [m = std::move(m)](double) { return m; };
    return p;
}

Eigen::MatrixXd matrix_exponent_ode(const MatrixPath& M, double t, double h) {
    const int d = M.dim;
    Eigen::MatrixXd E = Eigen::MatrixXd::Identity(d, d);
    if (t == 0.0) return E;
    const double step = default_step(t, h);
    rk4_sweep(
        E, t, step,
        [&](double s, const Eigen::MatrixXd& x, Eigen::MatrixXd& out) { out.noalias() = M.eval(s) * x; },
        {}, [](std::size_t, const Eigen::MatrixXd&) {});
    return E;
}

Eigen::VectorXd solve_inhomogeneous(const MatrixPath& M,
                                    const std::function<Eigen::VectorXd(double)>& v, double t,
                                    double h, const Eigen::VectorXd& z0) {
    Eigen::VectorXd z = z0;
    if (t == 0.0) return z;
    const double step = default_step(t, h);
    rk4_sweep(
        z, t, step,
        [&](double s, const Eigen::VectorXd& x, Eigen::VectorXd& out) {
            out.noalias() = M.eval(s) * x;
            out += v(s);
        },
        {}, [](std::size_t, const Eigen::VectorXd&) {});
    return z;
}

namespace {

// Integrates the stacked system blockwise: X' = Y, Y' = M(t) X with
// (X, Y) in R^{d x 2d} starting at ((I 0), (0 I)), so X = (A B), Y = (C D).
struct StackedState {
    Eigen::MatrixXd X, Y;
    StackedState operator+(const StackedState& o) const { return {X + o.X, Y + o.Y}; }
    StackedState& operator+=(const StackedState& o) {
        X += o.X;
        Y += o.Y;
        return *this;
    }
    friend StackedState operator*(double a, const StackedState& s) { return {a * s.X, a * s.Y}; }
    bool allFinite() const { return X.allFinite() && Y.allFinite(); }
};

SecondOrderBlocks split(const StackedState& s, int d) {
    return {s.X.leftCols(d), s.X.rightCols(d), s.Y.leftCols(d), s.Y.rightCols(d)};
}

template <typename EvalM>
std::vector<SecondOrderBlocks> stacked_sweep(int d, const EvalM& evalM, const std::vector<double>& grid,
                                             double t, double h) {
    StackedState s;
    s.X.setZero(d, 2 * d);
    s.Y.setZero(d, 2 * d);
    s.X.leftCols(d).setIdentity();
    s.Y.rightCols(d).setIdentity();
    std::vector<SecondOrderBlocks> out(grid.size());
    rk4_sweep(
        s, t, default_step(t, h),
        [&](double time, const StackedState& x, StackedState& k) {
            k.X = x.Y;
            k.Y.noalias() = evalM(time) * x.X;
        },
        grid, [&](std::size_t i, const StackedState& x) { out[i] = split(x, d); });
    return out;
}

} // namespace

SecondOrderBlocks second_order_blocks(const MatrixPath& M, double t, double h) {
    auto rec = stacked_sweep(M.dim, [&](double s) { return M.eval(s); }, {t}, t, h);
    return rec.front();
}

std::vector<SecondOrderBlocks> second_order_blocks_grid(const MatrixPath& M,
                                                        const std::vector<double>& grid, double h) {
    const double t = grid.empty() ? 0.0 : grid.back();
    return stacked_sweep(M.dim, [&](double s) { return M.eval(s); }, grid, t, h);
}

std::vector<SecondOrderBlocks> second_order_blocks_grid_constant(const Eigen::MatrixXd& M,
                                                                 const std::vector<double>& grid,
                                                                 double h) {
    const double t = grid.empty() ? 0.0 : grid.back();
    return stacked_sweep(static_cast<int>(M.rows()), [&](double) -> const Eigen::MatrixXd& { return M; },
                         grid, t, h);
}

} // namespace geomsde::matode
