#include "geomsde/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "geomsde/errors.hpp"

namespace geomsde::coupling {

namespace {

constexpr double kQuadTol = 1e-10;
constexpr int kTableNodes = 2049;

double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b, double fa,
                            double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
        return left + right + (left + right - whole) / 15.0;
    }
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol) {
    if (b <= a) return 0.0;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, 40);
}

} // namespace

double LyapunovParams::alpha() const {
    const double cap = radius > 0.0 ? 1.0 / (2.0 * radius * radius)
                                    : std::numeric_limits<double>::infinity();
    return std::min(m / 16.0, cap) * std::exp(-0.5 * L() * radius * radius);
}

double LyapunovParams::max_eps() const {
    const double Lv = L();
    double cap = 0.25;
    if (Lv > 0.0) cap = std::min(cap, 1.0 / (4.0 * std::sqrt(Lv)));
    if (Lv > 0.0 && radius > 0.0) cap = std::min(cap, 1.0 / (4.0 * Lv * radius));
    return cap;
}

void LyapunovParams::validate() const {
    if (eps < 0.0) throw PreconditionError("LyapunovParams: eps < 0");
    if (eps > 0.0 && eps > max_eps() * (1.0 + 1e-12))
        throw PreconditionError("LyapunovParams: eps exceeds the admissible smoothing bound");
    if (L() < 0.0) throw PreconditionError("LyapunovParams: q + L_Ric < 0");
    if (m > 0.0 && !(alpha() > 0.0)) throw PreconditionError("LyapunovParams: alpha must be positive");
}

double LyapunovFunction::mu(double r) const {
    if (r <= p_.radius) return 1.0;
    if (p_.eps > 0.0 && r < edge_) return 1.0 - (r - p_.radius) / p_.eps;
    return 0.0;
}

double LyapunovFunction::psi(double r) const {
    // int_0^r s mu(s) ds in closed form
    const double R = p_.radius, e = p_.eps;
    double I;
    if (r <= R) {
        I = 0.5 * r * r;
    } else {
        I = 0.5 * R * R;
        if (e > 0.0) {
            const double c = std::min(r, edge_);
            I += 0.5 * (c * c - R * R) -
                 ((c * c * c - R * R * R) / 3.0 - 0.5 * R * (c * c - R * R)) / e;
        }
    }
    return std::exp(-0.5 * p_.L() * I);
}

LyapunovFunction::LyapunovFunction(LyapunovParams p) : p_(p) {
    p_.validate();
    edge_ = p_.radius + p_.eps;
    grid_.resize(kTableNodes);
    psi_table_.assign(kTableNodes, 0.0);
    num_table_.assign(kTableNodes, 0.0);
    f_table_.assign(kTableNodes, 0.0);
    if (edge_ <= 0.0) { // mu vanishes identically: psi = 1, nu = 1, f(r) = r
        denom_ = 0.0;
        return;
    }
    for (int i = 0; i < kTableNodes; ++i) grid_[i] = edge_ * i / (kTableNodes - 1);

    auto psi_f = [this](double s) { return psi(s); };
    for (int i = 1; i < kTableNodes; ++i)
        psi_table_[i] =
            psi_table_[i - 1] + adaptive_simpson(psi_f, grid_[i - 1], grid_[i], kQuadTol);

    auto num_f = [this](double s) { return mu(s) * Psi(s) / psi(s); };
    for (int i = 1; i < kTableNodes; ++i)
        num_table_[i] =
            num_table_[i - 1] + adaptive_simpson(num_f, grid_[i - 1], grid_[i], kQuadTol);
    denom_ = num_table_.back();

    auto f_f = [this](double s) { return psi(s) * nu(s); };
    for (int i = 1; i < kTableNodes; ++i)
        f_table_[i] = f_table_[i - 1] + adaptive_simpson(f_f, grid_[i - 1], grid_[i], kQuadTol);
}

double LyapunovFunction::cumulative(const std::vector<double>& table, double r,
                                    const std::function<double(double)>& integrand) const {
    const double step = edge_ / (kTableNodes - 1);
    const int idx = std::min(kTableNodes - 1, static_cast<int>(r / step));
    return table[idx] + adaptive_simpson(integrand, grid_[idx], r, kQuadTol);
}

double LyapunovFunction::Psi(double r) const {
    if (edge_ <= 0.0) return r;
    if (r >= edge_) return psi_table_.back() + psi(edge_) * (r - edge_);
    return cumulative(psi_table_, r, [this](double s) { return psi(s); });
}

double LyapunovFunction::nu_numerator(double r) const {
    if (edge_ <= 0.0) return 0.0;
    if (r >= edge_) return denom_;
    return cumulative(num_table_, r, [this](double s) { return mu(s) * Psi(s) / psi(s); });
}

double LyapunovFunction::nu(double r) const {
    if (denom_ <= 0.0) return 1.0;
    return 1.0 - 0.5 * nu_numerator(r) / denom_;
}

double LyapunovFunction::f(double r) const {
    if (r < 0.0) return -f(-r); // odd extension, for finite differencing near 0
    if (edge_ <= 0.0 || denom_ <= 0.0) return r;
    if (r >= edge_) return f_table_.back() + 0.5 * psi(edge_) * (r - edge_);
    return cumulative(f_table_, r, [this](double s) { return psi(s) * nu(s); });
}

double LyapunovFunction::fprime(double r) const { return psi(r) * nu(r); }

double LyapunovFunction::fsecond(double r) const {
    if (denom_ <= 0.0) return 0.0;
    // psi' = -(L/2) r mu psi from the definition of psi
    return -0.5 * p_.L() * mu(r) * r * psi(r) * nu(r) - 0.5 * mu(r) * Psi(r) / denom_;
}

double lyapunov_f(double r, const LyapunovParams& p) { return LyapunovFunction(p).f(r); }

// ---------------------------------------------------------------------------

SyncStep synchronous_step(const Manifold& m, const CoupledState& s,
                          const walkers::DriftField& beta, double delta,
                          const Eigen::VectorXd& gaussian) {
    const double sq = std::sqrt(delta);
    const Frame Fy = m.transported_frame(s.Ex, s.x, s.y);
    const Tangent u{s.x, delta * beta.eval(s.x).v + sq * (s.Ex.vectors * gaussian)};
    const Tangent v{s.y, delta * beta.eval(s.y).v + sq * (Fy.vectors * gaussian)};
    const Point xn = m.exp(s.x, u);
    const Point yn = m.exp(s.y, v);

    SyncStep out;
    out.next = {xn, yn, m.transported_frame(s.Ex, s.x, xn), m.transported_frame(Fy, s.y, yn)};
    const double dist = m.distance(s.x, s.y);
    out.lhs_sq = std::pow(m.distance(xn, yn), 2);
    const Tangent gamma0 = m.log(s.x, s.y);
    const Eigen::VectorXd diff = m.transport(v, s.y, s.x).v - u.v;
    const double C = std::sqrt(m.curvature_bound()) * (m.norm(u) + m.norm(v));
    const double diff_sq = m.inner(s.x, diff, diff);
    out.rhs_sq = (1.0 + 4.0 * C * C * std::exp(4.0 * C)) * dist * dist +
                 32.0 * std::exp(C) * diff_sq + 2.0 * m.inner(s.x, gamma0.v, diff);
    return out;
}

ReflectStep reflection_step(const Manifold& m, const CoupledState& s,
                            const walkers::DriftField& beta, double delta, double eps_reflect,
                            const Eigen::VectorXd& gaussian) {
    if (eps_reflect <= 0.0) throw PreconditionError("reflection_step: eps_reflect must be > 0");
    const int d = m.dim();
    const double sq = std::sqrt(delta);
    const double dist = m.distance(s.x, s.y);

    ReflectStep out;
    out.reflected = dist > eps_reflect;
    Eigen::VectorXd nu = Eigen::VectorXd::Zero(d);
    if (out.reflected) {
        const Tangent gamma0 = m.log(s.x, s.y);
        nu = m.frame_coords(s.Ex, gamma0) / m.norm(gamma0);
    }

    // mirrored coordinates wrt F = Gamma(Ex); identical numbers wrt Ex
    const Eigen::VectorXd cF = gaussian - 2.0 * nu.dot(gaussian) * nu;
    const Frame F = m.transported_frame(s.Ex, s.x, s.y);
    Eigen::MatrixXd M(d, d);
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) M(a, b) = m.inner(s.y, F.vectors.col(a), s.Ey.vectors.col(b));
    out.y_coords = M.transpose() * cF;
    const Eigen::MatrixXd Q =
        M.transpose() * (Eigen::MatrixXd::Identity(d, d) - 2.0 * nu * nu.transpose());
    out.orthogonality_residual =
        (Q * Q.transpose() - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff();

    const Tangent u{s.x, delta * beta.eval(s.x).v + sq * (s.Ex.vectors * gaussian)};
    const Tangent v{s.y, delta * beta.eval(s.y).v + sq * (s.Ey.vectors * out.y_coords)};
    const Point xn = m.exp(s.x, u);
    const Point yn = m.exp(s.y, v);
    out.next = {xn, yn, m.transported_frame(s.Ex, s.x, xn), m.transported_frame(s.Ey, s.y, yn)};
    return out;
}

CoupledSeries coupled_run(const Manifold& m, const Point& x0, const Point& y0,
                          const walkers::DriftField& beta, double delta, int K, CouplingMode mode,
                          const LyapunovFunction& f, RngStream& rng, double eps_reflect) {
    if (eps_reflect <= 0.0) eps_reflect = default_eps_reflect(delta, m.dim());
    CoupledSeries out;
    CoupledState s{x0, y0, m.reference_frame(x0), m.reference_frame(y0)};
    out.dist.push_back(m.distance(x0, y0));
    out.lyap.push_back(f.f(out.dist.back()));
    for (int k = 0; k < K; ++k) {
        const Eigen::VectorXd g = rng.gaussian_vector(m.dim());
        try {
            if (mode == CouplingMode::sync) {
                s = synchronous_step(m, s, beta, delta, g).next;
            } else {
                s = reflection_step(m, s, beta, delta, eps_reflect, g).next;
            }
        } catch (const CutLocusError&) {
            out.aborted = true;
            break;
        }
        out.dist.push_back(m.distance(s.x, s.y));
        out.lyap.push_back(f.f(out.dist.back()));
    }
    return out;
}

double default_eps_reflect(double delta, int dim) {
    return 1e-3 * std::sqrt(delta * static_cast<double>(dim));
}

} // namespace geomsde::coupling
