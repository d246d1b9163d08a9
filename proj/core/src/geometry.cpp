#include "geomsde/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "geomsde/errors.hpp"

namespace geomsde::geometry {

namespace {
constexpr double kBaseTol = 1e-9;
constexpr double kZeroTangent = 1e-15;
} // namespace

double CurvatureBounds::derive_radius(double L_R, double L_R_prime) {
    const double inf = std::numeric_limits<double>::infinity();
    const double a = L_R_prime > 0.0 ? std::pow(L_R_prime, -1.0 / 3.0) : inf;
    const double b = L_R > 0.0 ? 1.0 / (8.0 * std::sqrt(L_R)) : inf;
    return std::min(a, b) / 16.0;
}

CurvatureBounds CurvatureBounds::derive(double L_R, double L_R_prime, double L_R_double_prime,
                                        double L_Ric) {
    return {L_R, L_R_prime, L_R_double_prime, L_Ric, derive_radius(L_R, L_R_prime)};
}

bool Curvature::is_zero_derivative() const {
    for (double v : dR)
        if (v != 0.0) return false;
    return true;
}

double Manifold::norm(const Point& x, const Eigen::VectorXd& a) const {
    return std::sqrt(std::max(0.0, inner(x, a, a)));
}

CurvatureBounds Manifold::curvature_bounds() const {
    return CurvatureBounds::derive(curvature_bound(), curvature_deriv_bound(),
                                   curvature_second_deriv_bound(), ricci_lower_bound());
}

double Manifold::cut_locus_margin() const { return std::numeric_limits<double>::infinity(); }

Frame Manifold::transported_frame(const Frame& E, const Point& x, const Point& y) const {
    Frame out;
    out.base = y;
    out.vectors.resize(ambient_dim(), E.dim());
    for (int j = 0; j < E.dim(); ++j)
        out.vectors.col(j) = transport({E.base, E.vectors.col(j)}, x, y).v;
    return out;
}

Eigen::VectorXd Manifold::frame_coords(const Frame& E, const Tangent& v) const {
    Eigen::VectorXd c(E.dim());
    for (int j = 0; j < E.dim(); ++j) c[j] = inner(E.base, E.vectors.col(j), v.v);
    return c;
}

Tangent Manifold::from_frame_coords(const Frame& E, const Eigen::VectorXd& c) const {
    return {E.base, E.vectors * c};
}

double Manifold::frame_gram_residual(const Frame& E) const {
    const int d = E.dim();
    Eigen::MatrixXd G(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) G(i, j) = inner(E.base, E.vectors.col(i), E.vectors.col(j));
    return (G - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff();
}

void Manifold::check_base(const Point& x, const Tangent& v) const {
    if ((x.x - v.base.x).cwiseAbs().maxCoeff() > kBaseTol)
        throw PreconditionError("tangent base point does not match exp base point");
}

// ---------------------------------------------------------------------------
// Euclidean space

Point EuclideanSpace::exp(const Point& x, const Tangent& v) const {
    check_base(x, v);
    return {x.x + v.v};
}

Tangent EuclideanSpace::log(const Point& x, const Point& y) const { return {x, y.x - x.x}; }

double EuclideanSpace::distance(const Point& x, const Point& y) const { return (y.x - x.x).norm(); }

Tangent EuclideanSpace::transport(const Tangent& v, const Point&, const Point& y) const {
    return {y, v.v};
}

Frame EuclideanSpace::reference_frame(const Point& x) const {
    return {x, Eigen::MatrixXd::Identity(d_, d_)};
}

Curvature EuclideanSpace::curvature_coords(const Point&, const Frame&) const {
    return Curvature(d_);
}

// ---------------------------------------------------------------------------
// Constant-curvature helpers

namespace {

// R(u,v)w = K (<v,w> u - <u,w> v) in any orthonormal frame, nabla R = 0.
Curvature constant_curvature_coords(int d, double K) {
    Curvature c(d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            // r(i,j,k,l) = K (delta_{kl} delta_{ij} - delta_{jl} delta_{ik})
            for (int k = 0; k < d; ++k) c.r(i, j, k, k) += K * (i == j ? 1.0 : 0.0);
            c.r(i, j, i, j) -= K;
        }
    return c;
}

// Deterministic orthonormal tangent frame: Gram-Schmidt of the ambient basis
// against the normal direction, under the manifold inner product.
Frame tangent_frame_gram_schmidt(const Manifold& m, const Point& x,
                                 const Eigen::VectorXd& normal_dir) {
    const int n = m.ambient_dim();
    const int d = m.dim();
    Frame F;
    F.base = x;
    F.vectors.resize(n, d);
    int col = 0;
    const double nn = m.inner(x, normal_dir, normal_dir);
    for (int j = 0; j < n && col < d; ++j) {
        Eigen::VectorXd cand = Eigen::VectorXd::Unit(n, j);
        cand -= normal_dir * (m.inner(x, normal_dir, cand) / nn);
        for (int k = 0; k < col; ++k)
            cand -= F.vectors.col(k) * m.inner(x, F.vectors.col(k), cand);
        const double len = std::sqrt(std::max(0.0, m.inner(x, cand, cand)));
        if (len < 1e-8) continue;
        F.vectors.col(col++) = cand / len;
    }
    if (col != d) throw NumericalBlowup("failed to build orthonormal frame");
    return F;
}

} // namespace

// ---------------------------------------------------------------------------
// Sphere

Point Sphere::base_point() const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(d_ + 1);
    x[d_] = radius_;
    return {x};
}

Point Sphere::project(Point p) const {
    p.x *= radius_ / p.x.norm();
    return p;
}

double Sphere::constraint_residual(const Point& p) const { return std::abs(p.x.norm() - radius_); }

Point Sphere::exp(const Point& x, const Tangent& v) const {
    check_base(x, v);
    const double n = v.v.norm();
    if (n < kZeroTangent) return x;
    const double theta = n / radius_;
    Point y{std::cos(theta) * x.x + (radius_ * std::sin(theta) / n) * v.v};
    return project(y);
}

double Sphere::distance(const Point& x, const Point& y) const {
    // chord form 2R asin(|x-y| / 2R): well conditioned for nearby points,
    // unlike acos of the normalized dot product
    const double half_chord = 0.5 * (x.x - y.x).norm() / radius_;
    if (half_chord >= 1.0) return M_PI * radius_;
    return 2.0 * radius_ * std::asin(half_chord);
}

Tangent Sphere::log(const Point& x, const Point& y) const {
    const double dist = distance(x, y);
    if (dist > cut_locus_margin()) {
        std::ostringstream os;
        os << "sphere log beyond cut-locus margin: d=" << dist;
        throw CutLocusError(os.str());
    }
    if (dist < kZeroTangent) return zero_tangent(x);
    Eigen::VectorXd perp = y.x - (x.x.dot(y.x) / (radius_ * radius_)) * x.x;
    return {x, (dist / perp.norm()) * perp};
}

Tangent Sphere::transport(const Tangent& v, const Point& x, const Point& y) const {
    check_base(x, v);
    const Tangent u = log(x, y);
    const double n = u.v.norm();
    if (n < kZeroTangent) return {y, v.v};
    const double theta = n / radius_;
    const Eigen::VectorXd e = u.v / n;
    const double a = e.dot(v.v);
    Eigen::VectorXd out =
        v.v - a * e + a * (std::cos(theta) * e - (std::sin(theta) / radius_) * x.x);
    return {y, out};
}

Frame Sphere::reference_frame(const Point& x) const {
    return tangent_frame_gram_schmidt(*this, x, x.x);
}

Curvature Sphere::curvature_coords(const Point&, const Frame&) const {
    return constant_curvature_coords(d_, 1.0 / (radius_ * radius_));
}

// ---------------------------------------------------------------------------
// Hyperboloid

double Hyperboloid::minkowski(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    return a.head(d_).dot(b.head(d_)) - a[d_] * b[d_];
}

Point Hyperboloid::base_point() const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(d_ + 1);
    x[d_] = radius_;
    return {x};
}

Point Hyperboloid::project(Point p) const {
    const double q = -minkowski(p.x, p.x);
    if (q <= 0.0) throw NumericalBlowup("hyperboloid point left the upper sheet");
    p.x *= radius_ / std::sqrt(q);
    return p;
}

double Hyperboloid::constraint_residual(const Point& p) const {
    return std::abs(minkowski(p.x, p.x) + radius_ * radius_);
}

Point Hyperboloid::exp(const Point& x, const Tangent& v) const {
    check_base(x, v);
    const double n = std::sqrt(std::max(0.0, minkowski(v.v, v.v)));
    if (n < kZeroTangent) return x;
    const double theta = n / radius_;
    Point y{std::cosh(theta) * x.x + (radius_ * std::sinh(theta) / n) * v.v};
    return project(y);
}

double Hyperboloid::distance(const Point& x, const Point& y) const {
    // Minkowski chord form 2R asinh(q / 2R) with q^2 = <x-y, x-y>_M, stable
    // for nearby points
    const Eigen::VectorXd diff = x.x - y.x;
    const double q_sq = std::max(0.0, minkowski(diff, diff));
    return 2.0 * radius_ * std::asinh(0.5 * std::sqrt(q_sq) / radius_);
}

Tangent Hyperboloid::log(const Point& x, const Point& y) const {
    const double dist = distance(x, y);
    if (dist < kZeroTangent) return zero_tangent(x);
    const double c = -minkowski(x.x, y.x) / (radius_ * radius_);
    Eigen::VectorXd perp = y.x - c * x.x;
    const double pn = std::sqrt(std::max(kZeroTangent, minkowski(perp, perp)));
    return {x, (dist / pn) * perp};
}

Tangent Hyperboloid::transport(const Tangent& v, const Point& x, const Point& y) const {
    check_base(x, v);
    const Tangent u = log(x, y);
    const double n = std::sqrt(std::max(0.0, minkowski(u.v, u.v)));
    if (n < kZeroTangent) return {y, v.v};
    const double theta = n / radius_;
    const Eigen::VectorXd e = u.v / n;
    const double a = minkowski(e, v.v);
    Eigen::VectorXd out =
        v.v - a * e + a * (std::cosh(theta) * e + (std::sinh(theta) / radius_) * x.x);
    return {y, out};
}

Frame Hyperboloid::reference_frame(const Point& x) const {
    return tangent_frame_gram_schmidt(*this, x, x.x);
}

Curvature Hyperboloid::curvature_coords(const Point&, const Frame&) const {
    return constant_curvature_coords(d_, -1.0 / (radius_ * radius_));
}

// ---------------------------------------------------------------------------

std::unique_ptr<Manifold> make_manifold(const std::string& kind, int dim, double scale) {
    if (kind == "euclidean") return std::make_unique<EuclideanSpace>(dim);
    if (kind == "sphere") return std::make_unique<Sphere>(dim, scale);
    if (kind == "hyperboloid") return std::make_unique<Hyperboloid>(dim, scale);
    throw PreconditionError("unknown manifold kind: " + kind);
}

} // namespace geomsde::geometry
