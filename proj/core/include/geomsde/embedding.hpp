#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "geomsde/geometry.hpp"
#include "geomsde/rng.hpp"

// The Euclidean-chart manifold (R^d, g = A^{-1}).
//
// Sign conventions pinned by the generator identity (see
// laplace_beltrami_residual and its tests):
//   geodesics:        x'' = -phi(x, x')
//   Laplace-Beltrami: Delta f = tr(A hess f) - <phi, grad f>   (canonical)
//   chart SDE drift:  beta - phi/2, diffusion A^{1/2}
//   corrected step:   Exp_x(delta beta + sqrt(delta) xi + (delta/2) phi)
namespace geomsde::embedding {

// Symmetric positive A(x) with analytic partials of g = A^{-1}, plus declared
// eigenvalue bounds lambda_A, L_A and Lipschitz constant L_A' (valid on the
// experiment region).
class MetricField {
public:
    virtual ~MetricField() = default;
    virtual int dim() const = 0;
    virtual Eigen::MatrixXd A(const Eigen::VectorXd& x) const = 0;
    virtual Eigen::MatrixXd g(const Eigen::VectorXd& x) const;
    // partial of g wrt coordinate i
    virtual Eigen::MatrixXd dg(const Eigen::VectorXd& x, int i) const = 0;
    virtual double lambda_A() const = 0;
    virtual double L_A() const = 0;
    virtual double L_A_prime() const = 0;
};

class IdentityMetric final : public MetricField {
public:
    explicit IdentityMetric(int d) : d_(d) {}
    int dim() const override { return d_; }
    Eigen::MatrixXd A(const Eigen::VectorXd&) const override {
        return Eigen::MatrixXd::Identity(d_, d_);
    }
    Eigen::MatrixXd dg(const Eigen::VectorXd&, int) const override {
        return Eigen::MatrixXd::Zero(d_, d_);
    }
    double lambda_A() const override { return 1.0; }
    double L_A() const override { return 1.0; }
    double L_A_prime() const override { return 0.0; }

private:
    int d_;
};

// A(x) = diag(exp(a_i x_i)); bounds declared over the box |x_i| <= box.
class DiagExpMetric final : public MetricField {
public:
    DiagExpMetric(int d, Eigen::VectorXd a, double box = 2.0);
    explicit DiagExpMetric(int d, double box = 2.0);
    int dim() const override { return d_; }
    Eigen::MatrixXd A(const Eigen::VectorXd& x) const override;
    Eigen::MatrixXd g(const Eigen::VectorXd& x) const override;
    Eigen::MatrixXd dg(const Eigen::VectorXd& x, int i) const override;
    double lambda_A() const override { return lambda_; }
    double L_A() const override { return big_; }
    double L_A_prime() const override { return lipschitz_; }
    const Eigen::VectorXd& weights() const { return a_; }

private:
    int d_;
    Eigen::VectorXd a_;
    double lambda_, big_, lipschitz_;
};

// Gamma^k_{ij} = (1/2) sum_l A_{kl} (d_i g_{jl} + d_j g_{il} - d_l g_{ij}),
// phi_k = tr(A Gamma^k), phi(x,v)_k = v^T Gamma^k v.
struct ChristoffelData {
    int d = 0;
    std::vector<Eigen::MatrixXd> Gamma;
    Eigen::VectorXd phi;
    double L_phi = 0.0;
    double L_phi_prime = 0.0;

    Eigen::VectorXd phi_quad(const Eigen::VectorXd& v) const;
};

ChristoffelData christoffel(const MetricField& metric, const Eigen::VectorXd& x);

Eigen::VectorXd phi_trace(const MetricField& metric, const Eigen::VectorXd& x);
Eigen::VectorXd phi_quad(const MetricField& metric, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& v);

// Geodesic endpoint at unit time from x with initial velocity v, integrating
// x'' = -phi(x, x') with the classical 4th-order one-step method.
struct GeodesicSolve {
    Eigen::VectorXd endpoint;
    Eigen::VectorXd end_velocity;
    double g_length = 0.0;
    double speed_drift = 0.0; // max relative drift of the g-speed
};
GeodesicSolve pullback_exp(const MetricField& metric, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& v, double h = 1e-2);

struct CorrectedStep {
    Eigen::VectorXd manifold_point;  // Exp_x(delta beta + sqrt(delta) xi + (delta/2) phi)
    Eigen::VectorXd euclidean_point; // x + delta beta + sqrt(delta) xi
    double residual_raw = 0.0;       // |x' - xt'|
    double residual_corrected = 0.0; // |x' - xt' + phi(x, sqrt(delta) xi)/2 - (delta/2) phi(x)|
};
CorrectedStep corrected_step(const MetricField& metric, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& beta, const Eigen::VectorXd& xi, double delta,
                             double h = 1e-2);

enum class PhiSign { canonical, flipped };

// Scalar field with analytic gradient and Hessian (chart derivatives).
struct ScalarField {
    std::function<double(const Eigen::VectorXd&)> value;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hessian;
};

// |coordinate form - divergence form| of the Laplace-Beltrami operator at x.
// The divergence form (1/sqrt(det g)) d_i (sqrt(det g) A_{ij} d_j f) is
// evaluated by central finite differences and is the independent oracle that
// pins the sign of phi.
double laplace_beltrami_residual(const MetricField& metric, const ScalarField& f,
                                 const Eigen::VectorXd& x, PhiSign sign = PhiSign::canonical,
                                 double fd_step = 1e-4);

// K steps of the phi-corrected manifold walk and the plain Euclidean walk on
// shared noise xi_k(x) = chol(A(x)) n_k.
struct WalkPairResult {
    Eigen::VectorXd manifold_end;
    Eigen::VectorXd euclidean_end;
    double gap_sq = 0.0; // |x_K - z_K|^2
};
WalkPairResult euclidean_walk_pair(const MetricField& metric, const Eigen::VectorXd& x0,
                                   const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& beta,
                                   double delta, int K, RngStream& rng, double h = 1e-2);

// Chart-norm sandwich for the pullback distance (used as bounds only; the
// geodesic BVP is not provided): |x-y| / sqrt(L_A) <= d(x,y) <= |x-y| / sqrt(lambda_A).
std::pair<double, double> distance_bounds(const MetricField& metric, const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& y);

// geometry::Manifold adapter. Exp integrates the geodesic equation; Log,
// transport, distance and curvature coordinates are not available on this
// instance and throw UnsupportedOperation.
class PullbackManifold final : public geometry::Manifold {
public:
    explicit PullbackManifold(std::shared_ptr<const MetricField> metric, double h = 1e-2)
        : metric_(std::move(metric)), h_(h) {}
    std::string name() const override { return "pullback"; }
    int dim() const override { return metric_->dim(); }
    int ambient_dim() const override { return metric_->dim(); }
    double inner(const geometry::Point& x, const Eigen::VectorXd& a,
                 const Eigen::VectorXd& b) const override {
        return a.dot(metric_->g(x.x) * b);
    }
    geometry::Point exp(const geometry::Point& x, const geometry::Tangent& v) const override;
    geometry::Tangent log(const geometry::Point& x, const geometry::Point& y) const override;
    double distance(const geometry::Point& x, const geometry::Point& y) const override;
    geometry::Tangent transport(const geometry::Tangent& v, const geometry::Point& x,
                                const geometry::Point& y) const override;
    geometry::Frame reference_frame(const geometry::Point& x) const override;
    geometry::Curvature curvature_coords(const geometry::Point& x,
                                         const geometry::Frame& E) const override;
    geometry::Point origin() const override {
        return {Eigen::VectorXd::Zero(metric_->dim())};
    }
    double curvature_bound() const override { return 0.0; }
    bool parallel_curvature() const override { return false; }
    const MetricField& metric() const { return *metric_; }

private:
    std::shared_ptr<const MetricField> metric_;
    double h_;
};

} // namespace geomsde::embedding
