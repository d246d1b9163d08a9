#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "geomsde/geometry.hpp"
#include "geomsde/matode.hpp"

// Jacobi coordinate ODEs along gamma(t;u) = Exp_x(t u), the end-value tensor
// G(u), the forcing terms p and F, and the tangent-space geodesic curve
// a(s;u,v) with a'' = F(a, a').
//
// All coordinates are taken wrt the parallel frame E(t;u) obtained by
// transporting E along gamma; at t=0 this is E itself.
namespace geomsde::trivialize {

struct JacobiState {
    Eigen::VectorXd J, K; // coords wrt E(t;u)
    double t = 0.0;
};

struct TrivializationCurve {
    std::vector<double> s;
    std::vector<Eigen::VectorXd> a;     // coords wrt E
    std::vector<Eigen::VectorXd> a_dot; // coords wrt E
    geometry::Point x;
    Eigen::VectorXd u, v; // initial data, coords wrt E
};

// M_{ij}(t;u) = -sum_{k,l} R^i_{jkl}(t;u) u_k u_l at gamma(t;u); constant in t
// whenever the manifold has parallel curvature.
Eigen::MatrixXd curvature_matrix(const geometry::Manifold& m, const geometry::Point& x,
                                 const geometry::Frame& E, const Eigen::VectorXd& u_coords);
matode::MatrixPath curvature_path(const geometry::Manifold& m, const geometry::Point& x,
                                  const geometry::Frame& E, const Eigen::VectorXd& u_coords);

// Coordinates of the Jacobi field J(t;u,v) with J(0)=0, D_t J(0)=v and of its
// covariant derivative, via the stacked matrix ODE blocks.
JacobiState jacobi_coords(const geometry::Manifold& m, const geometry::Point& x,
                          const geometry::Frame& E, const geometry::Tangent& u,
                          const geometry::Tangent& v, double t);

// G(u) v = J(1;u,v) in coordinates; ||G(u) - I|| <= (1/3) L_R ||u||^2 within
// the trivialization radius.
Eigen::MatrixXd tensor_G(const geometry::Manifold& m, const geometry::Point& x,
                         const geometry::Frame& E, const geometry::Tangent& u);

// p = -(nabla_J R)(J, gamma') gamma' - (nabla_gamma' R)(J, gamma') J - 2 R(J, gamma') K,
// coordinates wrt E(t;u).
Eigen::VectorXd forcing_p(const geometry::Manifold& m, const geometry::Point& x,
                          const geometry::Frame& E, const geometry::Tangent& u,
                          const geometry::Tangent& v, double t);

// F(u,v) = -B(1;u)^{-1} int_0^1 Bbar(r;u) p(r;u,v) dr, composite Simpson on 65
// nodes. Throws PreconditionError when the invertibility margin is lost
// (||B(1;u) - I|| >= 1/2).
Eigen::VectorXd forcing_F(const geometry::Manifold& m, const geometry::Point& x,
                          const geometry::Frame& E, const geometry::Tangent& u,
                          const geometry::Tangent& v);

// Integrates a'' = F(a, a'), a(0)=u, a'(0)=v over s in [0,1]; F is
// re-evaluated at every integrator stage.
TrivializationCurve trivialized_geodesic(const geometry::Manifold& m, const geometry::Point& x,
                                         const geometry::Frame& E, const geometry::Tangent& u,
                                         const geometry::Tangent& v, double h = 1e-3);

// d(Exp_x(a(1)), Exp_{x'}(Gamma G(u) v)) with x' = Exp_x(u); the closure gap
// that vanishes for the exact curve.
double closure_gap(const geometry::Manifold& m, const geometry::Point& x,
                   const geometry::Frame& E, const geometry::Tangent& u,
                   const geometry::Tangent& v, double h = 1e-3);

struct DistortionCheck {
    double lhs = 0.0; // d(Exp_x(u+v), Exp_{x'}(Gamma G(u) v))
    double rhs = 0.0; // 2^12 (L_R' (|u|+|v|)^2 + L_R (|u|+|v|)) |v|^2
};
DistortionCheck triangle_distortion_check(const geometry::Manifold& m, const geometry::Point& x,
                                          const geometry::Tangent& u, const geometry::Tangent& v);

} // namespace geomsde::trivialize
