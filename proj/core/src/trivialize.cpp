#include "geomsde/trivialize.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "geomsde/errors.hpp"

namespace geomsde::trivialize {

using geometry::Curvature;
using geometry::Frame;
using geometry::Manifold;
using geometry::Point;
using geometry::Tangent;

namespace {

constexpr int kNodes = 65;                 // Simpson grid for the F integral
constexpr double kInnerStep = 1.0 / 64.0;  // stepsize of the block ODE solves

void require_base(const Point& x, const Tangent& t, const char* what) {
    if ((x.x - t.base.x).cwiseAbs().maxCoeff() > 1e-9)
        throw PreconditionError(std::string(what) + ": tangent not based at x");
}

Eigen::MatrixXd m_from_curvature(const Curvature& R, const Eigen::VectorXd& u) {
    const int d = R.d;
    Eigen::MatrixXd M(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            double s = 0.0;
            for (int k = 0; k < d; ++k)
                for (int l = 0; l < d; ++l) s += R.r(i, j, k, l) * u[k] * u[l];
            M(i, j) = -s;
        }
    return M;
}

void p_into(const Curvature& R, const Eigen::VectorXd& u, const Eigen::VectorXd& J,
            const Eigen::VectorXd& K, Eigen::VectorXd& p) {
    const int d = R.d;
    for (int i = 0; i < d; ++i) {
        double s = 0.0;
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k)
                for (int l = 0; l < d; ++l) s += R.r(i, j, k, l) * J[j] * u[k] * K[l];
        p[i] = -2.0 * s;
    }
    if (!R.is_zero_derivative()) {
        for (int i = 0; i < d; ++i) {
            double s = 0.0;
            for (int a = 0; a < d; ++a)
                for (int j = 0; j < d; ++j)
                    for (int k = 0; k < d; ++k)
                        for (int l = 0; l < d; ++l) {
                            s += R.dr(a, i, j, k, l) * J[a] * J[j] * u[k] * u[l];
                            s += R.dr(a, i, j, k, l) * u[a] * J[j] * u[k] * J[l];
                        }
            p[i] -= s;
        }
    }
}

Eigen::VectorXd p_from_curvature(const Curvature& R, const Eigen::VectorXd& u,
                                 const Eigen::VectorXd& J, const Eigen::VectorXd& K) {
    Eigen::VectorXd p(R.d);
    p_into(R, u, J, K, p);
    return p;
}

// Precomputed data for one (manifold, base point, frame).
struct Context {
    const Manifold* m;
    Point x;
    Frame E;
    Curvature R;
    bool parallel;
    double L_R, L_R_prime, C_r;

    Context(const Manifold& man, const Point& base, const Frame& frame)
        : m(&man), x(base), E(frame), R(man.curvature_coords(base, frame)),
          parallel(man.parallel_curvature()), L_R(man.curvature_bound()),
          L_R_prime(man.curvature_deriv_bound()),
          C_r(geometry::CurvatureBounds::derive_radius(L_R, L_R_prime)) {}
};

// Curvature coordinates at gamma(t;u) wrt the transported frame; for parallel
// curvature this is the tensor at x.
Curvature curvature_at(const Context& c, const Eigen::VectorXd& u, double t) {
    if (c.parallel || t == 0.0) return c.R;
    const Point gt = c.m->exp(c.x, c.m->from_frame_coords(c.E, t * u));
    return c.m->curvature_coords(gt, c.m->transported_frame(c.E, c.x, gt));
}

// Nodes of the (B, D) half of the stacked exponent: X' = Y, Y' = M(s) X with
// X(0)=0, Y(0)=I. Preallocated RK4, exact landing on each node.
struct BDNodes {
    std::vector<Eigen::MatrixXd> B, D;
};

template <typename Mat, typename EvalM>
void solve_bd_typed(int d, const EvalM& M, double t, int nodes, BDNodes& out) {
    out.B.assign(nodes, Eigen::MatrixXd::Zero(d, d));
    out.D.assign(nodes, Eigen::MatrixXd::Identity(d, d));
    if (t == 0.0 || nodes <= 1) return;
    const double dn = t / (nodes - 1);
    const int sub = std::max(1, static_cast<int>(std::ceil(dn / kInnerStep)));
    const double h = dn / sub;

    Mat X = Mat::Zero(d, d);
    Mat Y = Mat::Identity(d, d);
    Mat k1x(d, d), k1y(d, d), k2x(d, d), k2y(d, d), k3x(d, d), k3y(d, d), k4x(d, d), k4y(d, d),
        tx(d, d);
    double s = 0.0;
    for (int n = 1; n < nodes; ++n) {
        for (int i = 0; i < sub; ++i) {
            k1x = Y;
            k1y.noalias() = M(s) * X;
            tx.noalias() = X + (h / 2) * k1x;
            k2x.noalias() = Y + (h / 2) * k1y;
            k2y.noalias() = M(s + h / 2) * tx;
            tx.noalias() = X + (h / 2) * k2x;
            k3x.noalias() = Y + (h / 2) * k2y;
            k3y.noalias() = M(s + h / 2) * tx;
            tx.noalias() = X + h * k3x;
            k4x.noalias() = Y + h * k3y;
            k4y.noalias() = M(s + h) * tx;
            X += (h / 6) * (k1x + 2 * k2x + 2 * k3x + k4x);
            Y += (h / 6) * (k1y + 2 * k2y + 2 * k3y + k4y);
            s += h;
        }
        if (!X.allFinite() || !Y.allFinite()) {
            std::ostringstream os;
            os << "Jacobi block ODE blew up at t=" << s;
            throw NumericalBlowup(os.str());
        }
        out.B[n] = X;
        out.D[n] = Y;
    }
}

template <typename EvalM>
BDNodes solve_bd(int d, const EvalM& M, double t, int nodes) {
    BDNodes out;
    if (d == 2) {
        solve_bd_typed<Eigen::Matrix2d>(d, M, t, nodes, out);
    } else if (d == 3) {
        solve_bd_typed<Eigen::Matrix3d>(d, M, t, nodes, out);
    } else {
        solve_bd_typed<Eigen::MatrixXd>(d, M, t, nodes, out);
    }
    return out;
}

BDNodes bd_nodes(const Context& c, const Eigen::VectorXd& u, double t, int nodes) {
    if (c.parallel) {
        const Eigen::MatrixXd M = m_from_curvature(c.R, u);
        return solve_bd(c.R.d, [&](double) -> const Eigen::MatrixXd& { return M; }, t, nodes);
    }
    return solve_bd(c.R.d, [&](double s) { return m_from_curvature(curvature_at(c, u, s), u); }, t,
                    nodes);
}

struct FWorkspace {
    Eigen::VectorXd J, K, p, acc;
    void resize(int d) {
        J.resize(d);
        K.resize(d);
        p.resize(d);
        acc.resize(d);
    }
};

Eigen::VectorXd forcing_F_impl(const Context& c, const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                               FWorkspace& ws) {
    const int d = c.R.d;
    const BDNodes bd = bd_nodes(c, u, 1.0, kNodes);
    const Eigen::MatrixXd& Bend = bd.B.back();
    {
        // Frobenius dominates the operator norm; fall back to the exact norm
        // only when the cheap bound cannot certify the margin.
        const Eigen::MatrixXd dev = Bend - Eigen::MatrixXd::Identity(d, d);
        if (dev.norm() >= 0.5 && dev.operatorNorm() >= 0.5)
            throw PreconditionError("forcing_F: invertibility margin of B(1;u) lost");
    }

    // int_0^1 Bbar(r;u) p(r;u,v) dr, composite Simpson on the 65-node grid.
    // With parallel curvature the shifted-path block Bbar(r) equals B(1-r).
    const double hq = 1.0 / (kNodes - 1);
    ws.resize(d);
    ws.acc.setZero();
    for (int i = 0; i < kNodes; ++i) {
        const double r = i * hq;
        ws.J.noalias() = bd.B[i] * v;
        ws.K.noalias() = bd.D[i] * v;
        const double w = (i == 0 || i == kNodes - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        if (c.parallel) {
            p_into(c.R, u, ws.J, ws.K, ws.p);
            ws.acc.noalias() += w * (bd.B[kNodes - 1 - i] * ws.p);
        } else {
            p_into(curvature_at(c, u, r), u, ws.J, ws.K, ws.p);
            auto shifted = solve_bd(
                d, [&](double s) { return m_from_curvature(curvature_at(c, u, r + s), u); }, 1.0 - r,
                2);
            ws.acc.noalias() += w * (shifted.B.back() * ws.p);
        }
    }
    ws.acc *= hq / 3.0;
    return -Bend.partialPivLu().solve(ws.acc);
}

Eigen::VectorXd forcing_F_impl(const Context& c, const Eigen::VectorXd& u,
                               const Eigen::VectorXd& v) {
    FWorkspace ws;
    return forcing_F_impl(c, u, v, ws);
}

} // namespace

Eigen::MatrixXd curvature_matrix(const Manifold& m, const Point& x, const Frame& E,
                                 const Eigen::VectorXd& u_coords) {
    return m_from_curvature(m.curvature_coords(x, E), u_coords);
}

matode::MatrixPath curvature_path(const Manifold& m, const Point& x, const Frame& E,
                                  const Eigen::VectorXd& u_coords) {
    matode::MatrixPath path;
    path.dim = m.dim();
    path.norm_bound = m.curvature_bound() * u_coords.squaredNorm();
    if (m.parallel_curvature()) path.lipschitz_bound = 0.0;
    Context c(m, x, E);
    path.eval = [c, u_coords](double t) {
        return m_from_curvature(curvature_at(c, u_coords, t), u_coords);
    };
    return path;
}

JacobiState jacobi_coords(const Manifold& m, const Point& x, const Frame& E, const Tangent& u,
                          const Tangent& v, double t) {
    require_base(x, u, "jacobi_coords");
    require_base(x, v, "jacobi_coords");
    Context c(m, x, E);
    const Eigen::VectorXd uc = m.frame_coords(E, u);
    const Eigen::VectorXd vc = m.frame_coords(E, v);
    const BDNodes bd = bd_nodes(c, uc, t, 2);
    return {bd.B.back() * vc, bd.D.back() * vc, t};
}

Eigen::MatrixXd tensor_G(const Manifold& m, const Point& x, const Frame& E, const Tangent& u) {
    require_base(x, u, "tensor_G");
    Context c(m, x, E);
    const Eigen::VectorXd uc = m.frame_coords(E, u);
    if (uc.norm() > c.C_r * (1.0 + 1e-12))
        throw PreconditionError("tensor_G: |u| exceeds the trivialization radius");
    return bd_nodes(c, uc, 1.0, 2).B.back();
}

Eigen::VectorXd forcing_p(const Manifold& m, const Point& x, const Frame& E, const Tangent& u,
                          const Tangent& v, double t) {
    require_base(x, u, "forcing_p");
    require_base(x, v, "forcing_p");
    Context c(m, x, E);
    const Eigen::VectorXd uc = m.frame_coords(E, u);
    const Eigen::VectorXd vc = m.frame_coords(E, v);
    const BDNodes bd = bd_nodes(c, uc, t, 2);
    return p_from_curvature(curvature_at(c, uc, t), uc, bd.B.back() * vc, bd.D.back() * vc);
}

Eigen::VectorXd forcing_F(const Manifold& m, const Point& x, const Frame& E, const Tangent& u,
                          const Tangent& v) {
    require_base(x, u, "forcing_F");
    require_base(x, v, "forcing_F");
    Context c(m, x, E);
    const Eigen::VectorXd uc = m.frame_coords(E, u);
    if (c.L_R * uc.squaredNorm() > 0.25)
        throw PreconditionError("forcing_F: L_R |u|^2 > 1/4");
    return forcing_F_impl(c, uc, m.frame_coords(E, v));
}

TrivializationCurve trivialized_geodesic(const Manifold& m, const Point& x, const Frame& E,
                                         const Tangent& u, const Tangent& v, double h) {
    require_base(x, u, "trivialized_geodesic");
    require_base(x, v, "trivialized_geodesic");
    Context c(m, x, E);
    const Eigen::VectorXd uc = m.frame_coords(E, u);
    const Eigen::VectorXd vc = m.frame_coords(E, v);
    if (uc.norm() > c.C_r * (1.0 + 1e-12) || vc.norm() > c.C_r * (1.0 + 1e-12))
        throw PreconditionError("trivialized_geodesic: initial data exceeds the trivialization radius");

    const int steps = std::max(1, static_cast<int>(std::ceil(1.0 / h)));
    const double dt = 1.0 / steps;
    TrivializationCurve out;
    out.x = x;
    out.u = uc;
    out.v = vc;
    out.s.reserve(steps + 1);
    out.a.reserve(steps + 1);
    out.a_dot.reserve(steps + 1);

    Eigen::VectorXd a = uc, ad = vc;
    out.s.push_back(0.0);
    out.a.push_back(a);
    out.a_dot.push_back(ad);
    FWorkspace ws;
    auto F = [&](const Eigen::VectorXd& aa, const Eigen::VectorXd& dd) {
        return forcing_F_impl(c, aa, dd, ws);
    };
    for (int k = 0; k < steps; ++k) {
        const Eigen::VectorXd k1a = ad, k1d = F(a, ad);
        const Eigen::VectorXd k2a = ad + 0.5 * dt * k1d, k2d = F(a + 0.5 * dt * k1a, k2a);
        const Eigen::VectorXd k3a = ad + 0.5 * dt * k2d, k3d = F(a + 0.5 * dt * k2a, k3a);
        const Eigen::VectorXd k4a = ad + dt * k3d, k4d = F(a + dt * k3a, k4a);
        a += (dt / 6.0) * (k1a + 2 * k2a + 2 * k3a + k4a);
        ad += (dt / 6.0) * (k1d + 2 * k2d + 2 * k3d + k4d);
        if (!a.allFinite() || !ad.allFinite()) {
            std::ostringstream os;
            os << "trivialized geodesic blew up at s=" << (k + 1) * dt;
            throw NumericalBlowup(os.str());
        }
        out.s.push_back((k + 1) * dt);
        out.a.push_back(a);
        out.a_dot.push_back(ad);
    }
    return out;
}

double closure_gap(const Manifold& m, const Point& x, const Frame& E, const Tangent& u,
                   const Tangent& v, double h) {
    const TrivializationCurve curve = trivialized_geodesic(m, x, E, u, v, h);
    const Point lhs = m.exp(x, m.from_frame_coords(E, curve.a.back()));
    const Eigen::MatrixXd G = tensor_G(m, x, E, u);
    const Point xp = m.exp(x, u);
    const Tangent gv = m.from_frame_coords(E, G * curve.v);
    const Point rhs = m.exp(xp, m.transport(gv, x, xp));
    return m.distance(lhs, rhs);
}

DistortionCheck triangle_distortion_check(const Manifold& m, const Point& x, const Tangent& u,
                                          const Tangent& v) {
    require_base(x, u, "triangle_distortion_check");
    require_base(x, v, "triangle_distortion_check");
    const Frame E = m.reference_frame(x);
    const double nu = m.norm(u), nv = m.norm(v);
    const double C_r = m.curvature_bounds().C_r;
    if (nu > C_r * (1.0 + 1e-12) || nv > C_r * (1.0 + 1e-12))
        throw PreconditionError("triangle_distortion_check: radius violated");

    const Eigen::MatrixXd G = tensor_G(m, x, E, u);
    const Point xp = m.exp(x, u);
    const Tangent gv = m.from_frame_coords(E, G * m.frame_coords(E, v));
    const Point a = m.exp(x, {x, u.v + v.v});
    const Point b = m.exp(xp, m.transport(gv, x, xp));

    DistortionCheck out;
    out.lhs = m.distance(a, b);
    const double n = nu + nv;
    out.rhs = 4096.0 * (m.curvature_deriv_bound() * n * n + m.curvature_bound() * n) * nv * nv;
    return out;
}

} // namespace geomsde::trivialize
