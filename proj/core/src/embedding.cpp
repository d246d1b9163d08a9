#include "geomsde/embedding.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "geomsde/errors.hpp"

namespace geomsde::embedding {

Eigen::MatrixXd MetricField::g(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd a = A(x);
    return a.inverse();
}

DiagExpMetric::DiagExpMetric(int d, Eigen::VectorXd a, double box) : d_(d), a_(std::move(a)) {
    const double amax = a_.cwiseAbs().maxCoeff();
    lambda_ = std::exp(-amax * box);
    big_ = std::exp(amax * box);
    lipschitz_ = amax * big_;
}

DiagExpMetric::DiagExpMetric(int d, double box)
    : DiagExpMetric(d, Eigen::VectorXd::Unit(d, 0), box) {}

Eigen::MatrixXd DiagExpMetric::A(const Eigen::VectorXd& x) const {
    return (a_.array() * x.array()).exp().matrix().asDiagonal();
}

Eigen::MatrixXd DiagExpMetric::g(const Eigen::VectorXd& x) const {
    return (-a_.array() * x.array()).exp().matrix().asDiagonal();
}

Eigen::MatrixXd DiagExpMetric::dg(const Eigen::VectorXd& x, int i) const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d_, d_);
    out(i, i) = -a_[i] * std::exp(-a_[i] * x[i]);
    return out;
}

Eigen::VectorXd ChristoffelData::phi_quad(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(d);
    for (int k = 0; k < d; ++k) out[k] = v.dot(Gamma[k] * v);
    return out;
}

ChristoffelData christoffel(const MetricField& metric, const Eigen::VectorXd& x) {
    const int d = metric.dim();
    const Eigen::MatrixXd a = metric.A(x);
    std::vector<Eigen::MatrixXd> dgs(d);
    for (int i = 0; i < d; ++i) dgs[i] = metric.dg(x, i);

    ChristoffelData out;
    out.d = d;
    out.Gamma.assign(d, Eigen::MatrixXd::Zero(d, d));
    for (int k = 0; k < d; ++k)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j <= i; ++j) {
                double s = 0.0;
                for (int l = 0; l < d; ++l)
                    s += a(k, l) * (dgs[i](j, l) + dgs[j](i, l) - dgs[l](i, j));
                out.Gamma[k](i, j) = 0.5 * s;
                out.Gamma[k](j, i) = 0.5 * s;
            }
    out.phi.resize(d);
    for (int k = 0; k < d; ++k) out.phi[k] = (a * out.Gamma[k]).trace();
    return out;
}

Eigen::VectorXd phi_trace(const MetricField& metric, const Eigen::VectorXd& x) {
    return christoffel(metric, x).phi;
}

Eigen::VectorXd phi_quad(const MetricField& metric, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& v) {
    return christoffel(metric, x).phi_quad(v);
}

GeodesicSolve pullback_exp(const MetricField& metric, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& v, double h) {
    const int steps = std::max(1, static_cast<int>(std::ceil(1.0 / h)));
    const double dt = 1.0 / steps;
    Eigen::VectorXd p = x, w = v;
    const double speed0 = std::sqrt(std::max(1e-300, v.dot(metric.g(x) * v)));
    double drift = 0.0;

    auto acc = [&](const Eigen::VectorXd& q, const Eigen::VectorXd& u) -> Eigen::VectorXd {
        return -phi_quad(metric, q, u);
    };
    for (int s = 0; s < steps; ++s) {
        const Eigen::VectorXd k1p = w, k1w = acc(p, w);
        const Eigen::VectorXd k2p = w + 0.5 * dt * k1w, k2w = acc(p + 0.5 * dt * k1p, k2p);
        const Eigen::VectorXd k3p = w + 0.5 * dt * k2w, k3w = acc(p + 0.5 * dt * k2p, k3p);
        const Eigen::VectorXd k4p = w + dt * k3w, k4w = acc(p + dt * k3p, k4p);
        p += (dt / 6.0) * (k1p + 2 * k2p + 2 * k3p + k4p);
        w += (dt / 6.0) * (k1w + 2 * k2w + 2 * k3w + k4w);
        if (!p.allFinite() || !w.allFinite()) {
            std::ostringstream os;
            os << "pullback geodesic blew up at t=" << (s + 1) * dt;
            throw NumericalBlowup(os.str());
        }
        const double speed = std::sqrt(std::max(0.0, w.dot(metric.g(p) * w)));
        drift = std::max(drift, std::abs(speed - speed0) / speed0);
    }
    return {p, w, speed0, drift};
}

CorrectedStep corrected_step(const MetricField& metric, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& beta, const Eigen::VectorXd& xi, double delta,
                             double h) {
    const ChristoffelData ch = christoffel(metric, x);
    const double sq = std::sqrt(delta);
    const Eigen::VectorXd step = delta * beta + sq * xi + 0.5 * delta * ch.phi;
    CorrectedStep out;
    out.manifold_point = pullback_exp(metric, x, step, h).endpoint;
    out.euclidean_point = x + delta * beta + sq * xi;
    out.residual_raw = (out.manifold_point - out.euclidean_point).norm();
    out.residual_corrected = (out.manifold_point - out.euclidean_point +
                              0.5 * ch.phi_quad(sq * xi) - 0.5 * delta * ch.phi)
                                 .norm();
    return out;
}

double laplace_beltrami_residual(const MetricField& metric, const ScalarField& f,
                                 const Eigen::VectorXd& x, PhiSign sign, double fd_step) {
    const int d = metric.dim();
    const ChristoffelData ch = christoffel(metric, x);
    const Eigen::VectorXd grad = f.gradient(x);
    const Eigen::MatrixXd hess = f.hessian(x);
    const double phidot = ch.phi.dot(grad);
    const double coord = (metric.A(x) * hess).trace() + (sign == PhiSign::canonical ? -phidot : phidot);

    auto flux = [&](const Eigen::VectorXd& q) -> Eigen::VectorXd {
        const Eigen::MatrixXd gq = metric.g(q);
        const double root = std::sqrt(gq.determinant());
        return root * (metric.A(q) * f.gradient(q));
    };
    double div = 0.0;
    for (int i = 0; i < d; ++i) {
        Eigen::VectorXd xp = x, xm = x;
        xp[i] += fd_step;
        xm[i] -= fd_step;
        div += (flux(xp)[i] - flux(xm)[i]) / (2.0 * fd_step);
    }
    div /= std::sqrt(metric.g(x).determinant());
    return std::abs(coord - div);
}

WalkPairResult euclidean_walk_pair(const MetricField& metric, const Eigen::VectorXd& x0,
                                   const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& beta,
                                   double delta, int K, RngStream& rng, double h) {
    const int d = metric.dim();
    Eigen::VectorXd xk = x0, zk = x0;
    const double sq = std::sqrt(delta);
    for (int k = 0; k < K; ++k) {
        const Eigen::VectorXd n = rng.gaussian_vector(d);
        const Eigen::VectorXd xi_x = Eigen::LLT<Eigen::MatrixXd>(metric.A(xk)).matrixL() * n;
        const Eigen::VectorXd xi_z = Eigen::LLT<Eigen::MatrixXd>(metric.A(zk)).matrixL() * n;
        const Eigen::VectorXd phik = phi_trace(metric, xk);
        xk = pullback_exp(metric, xk, delta * beta(xk) + sq * xi_x + 0.5 * delta * phik, h).endpoint;
        zk = zk + delta * beta(zk) + sq * xi_z;
    }
    return {xk, zk, (xk - zk).squaredNorm()};
}

std::pair<double, double> distance_bounds(const MetricField& metric, const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& y) {
    const double n = (x - y).norm();
    return {n / std::sqrt(metric.L_A()), n / std::sqrt(metric.lambda_A())};
}

geometry::Point PullbackManifold::exp(const geometry::Point& x, const geometry::Tangent& v) const {
    check_base(x, v);
    return {pullback_exp(*metric_, x.x, v.v, h_).endpoint};
}

geometry::Tangent PullbackManifold::log(const geometry::Point&, const geometry::Point&) const {
    throw UnsupportedOperation("pullback manifold does not provide log (geodesic BVP out of scope)");
}

double PullbackManifold::distance(const geometry::Point&, const geometry::Point&) const {
    throw UnsupportedOperation(
        "pullback manifold provides only chart-norm distance bounds (embedding::distance_bounds)");
}

geometry::Tangent PullbackManifold::transport(const geometry::Tangent&, const geometry::Point&,
                                              const geometry::Point&) const {
    throw UnsupportedOperation("pullback manifold does not provide closed-form transport");
}

geometry::Frame PullbackManifold::reference_frame(const geometry::Point& x) const {
    // columns of chol(A) are g-orthonormal
    Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(metric_->A(x.x)).matrixL();
    return {x, L};
}

geometry::Curvature PullbackManifold::curvature_coords(const geometry::Point&,
                                                       const geometry::Frame&) const {
    throw UnsupportedOperation("pullback manifold does not expose curvature coordinates");
}

} // namespace geomsde::embedding
