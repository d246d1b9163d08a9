#pragma once

#include <memory>
#include <vector>

#include <Eigen/Core>

#include "geomsde/geometry.hpp"
#include "geomsde/rng.hpp"
#include "geomsde/walkers.hpp"

// Synchronous and reflection (Kendall-Cranston) couplings between two
// discretized trajectories, and the smoothed Lyapunov function certifying
// contraction.
namespace geomsde::coupling {

using geometry::Frame;
using geometry::Manifold;
using geometry::Point;
using geometry::Tangent;

struct LyapunovParams {
    double m = 0.0;     // dissipativity strength
    double q = 0.0;     // near-field expansion
    double radius = 0.0; // dissipativity radius R
    double L_Ric = 0.0;
    double eps = 0.0; // smoothing; 0 allowed

    double L() const { return q + L_Ric; }
    // alpha = min{m/16, 1/(2 R^2)} exp(-(q+L_Ric) R^2 / 2)
    double alpha() const;
    // admissible smoothing: eps <= min{1/4, 1/(4 sqrt(L)), 1/(4 L R)}
    double max_eps() const;
    void validate() const;
};

// f_eps(r) = int_0^r psi_eps nu_eps, built from
//   mu_eps: linear cutoff of [0, R] over [R, R+eps]
//   psi_eps(r) = exp(-(L/2) int_0^r s mu_eps(s) ds)   (closed form)
//   Psi_eps(r) = int_0^r psi_eps
//   nu_eps(r) = 1 - (1/2) int_0^r mu Psi/psi / int_0^inf mu Psi/psi
// The improper denominator integral is truncated at R+eps where mu vanishes.
// Quadrature: adaptive Simpson, absolute tolerance 1e-10, accumulated on a
// fixed node table so evaluation is const and thread-safe.
class LyapunovFunction {
public:
    explicit LyapunovFunction(LyapunovParams p);

    const LyapunovParams& params() const { return p_; }
    double f(double r) const;
    double fprime(double r) const; // psi * nu (analytic)
    double fsecond(double r) const;
    double psi(double r) const;
    double Psi(double r) const;
    double mu(double r) const;
    double nu(double r) const;
    double denominator() const { return denom_; }

private:
    double cumulative(const std::vector<double>& table, double r,
                      const std::function<double(double)>& integrand) const;
    double nu_numerator(double r) const;

    LyapunovParams p_;
    double edge_;  // R + eps
    double denom_; // int_0^{R+eps} mu Psi / psi
    std::vector<double> grid_;
    std::vector<double> psi_table_;   // cumulative Psi at grid nodes
    std::vector<double> num_table_;   // cumulative mu Psi / psi
    std::vector<double> f_table_;     // cumulative psi nu
};

double lyapunov_f(double r, const LyapunovParams& p);

struct CoupledState {
    Point x, y;
    Frame Ex, Ey;
};

struct SyncStep {
    CoupledState next;
    double lhs_sq = 0.0; // d(x', y')^2
    double rhs_sq = 0.0; // per-step bound with C = sqrt(L_R)(|u| + |v|)
};

// Both points step with the same frame coordinates; the y-frame is the
// geodesic transport of the x-frame. The per-step distance inequality
// d(x',y')^2 <= (1 + 4C^2 e^{4C}) d^2 + 32 e^C |v(0)-u(0)|^2 + 2 <gamma'(0), v(0)-u(0)>
// is exposed through lhs_sq / rhs_sq.
SyncStep synchronous_step(const Manifold& m, const CoupledState& s,
                          const walkers::DriftField& beta, double delta,
                          const Eigen::VectorXd& gaussian);

struct ReflectStep {
    CoupledState next;
    bool reflected = false;
    double orthogonality_residual = 0.0; // |Q Q^T - I| of the coordinate map
    Eigen::VectorXd y_coords;            // y-side increment coordinates wrt Ey
};

// Kendall-Cranston: transport the x-frame to y along the connecting geodesic,
// mirror the shared increment across the unit geodesic direction, express it
// in the y-frame. Reflection is disabled (nu := 0) once d(x,y) <= eps_reflect.
ReflectStep reflection_step(const Manifold& m, const CoupledState& s,
                            const walkers::DriftField& beta, double delta, double eps_reflect,
                            const Eigen::VectorXd& gaussian);

enum class CouplingMode { sync, reflect };

struct CoupledSeries {
    std::vector<double> dist;  // d_k, k = 0..K
    std::vector<double> lyap;  // f(d_k)
    bool aborted = false;
};

CoupledSeries coupled_run(const Manifold& m, const Point& x0, const Point& y0,
                          const walkers::DriftField& beta, double delta, int K, CouplingMode mode,
                          const LyapunovFunction& f, RngStream& rng, double eps_reflect = 0.0);

// default eps_reflect = 1e-3 sqrt(delta d)
double default_eps_reflect(double delta, int dim);

} // namespace geomsde::coupling
