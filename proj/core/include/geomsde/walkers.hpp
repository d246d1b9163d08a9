#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "geomsde/brownian.hpp"
#include "geomsde/geometry.hpp"
#include "geomsde/rng.hpp"

// Discrete processes: geometric Euler-Murayama on the dyadic tower, the
// coupled refinement pair, the deep-refinement reference SDE, the
// non-Gaussian walk and its tangent-space companion.
namespace geomsde::walkers {

using geometry::Frame;
using geometry::Manifold;
using geometry::Point;
using geometry::Tangent;

struct DriftField {
    std::function<Tangent(const Point&)> eval;
    std::optional<double> L_beta;  // sup-norm bound, when declared
    double L_beta_prime = 0.0;     // Lipschitz constant

    struct Dissipativity {
        double m = 0.0, q = 0.0, radius = 0.0;
        Point x_star;
    };
    std::optional<Dissipativity> dissipativity;
};

DriftField zero_drift(const Manifold& m);

// beta(x) = strength * Log_x(x_star); dissipative toward x_star by
// construction on the supported manifolds.
DriftField log_drift(const Manifold& m, const Point& x_star, double strength, double q = 0.0,
                     double radius = 0.0);

struct Trajectory {
    std::vector<double> times;
    std::vector<Point> points;
    std::vector<Frame> frames;
    std::string kind;
    int level = 0;
    std::uint64_t seed = 0;
    bool aborted = false;

    const Point& endpoint() const { return points.back(); }
    std::size_t steps() const { return points.empty() ? 0 : points.size() - 1; }
};

// The inductive construction of levels 0..level on one Brownian path: level 0
// is a single exponential step over [0, T]; level i+1 couples to level i with
// the two frame rules (odd step rolls the own frame, even step transports the
// parent frame).
std::vector<Trajectory> dyadic_tower(const Manifold& m, const Point& x0, const Frame& E0,
                                     const DriftField& beta, const brownian::BrownianPath& path,
                                     int level);

Trajectory euler_murayama(const Manifold& m, const Point& x0, const Frame& E0,
                          const DriftField& beta, const brownian::BrownianPath& path, int level);

std::pair<Trajectory, Trajectory> refine_pair(const Manifold& m, const Point& x0, const Frame& E0,
                                              const DriftField& beta,
                                              const brownian::BrownianPath& path, int level);

// Deep dyadic refinement standing in for the exact SDE (default level 12).
Trajectory reference_sde(const Manifold& m, const Point& x0, const Frame& E0,
                         const DriftField& beta, const brownian::BrownianPath& path,
                         int deep_level = 12);

// Geodesic interpolation of a level-i trajectory at a time t that is dyadic at
// fine_level >= i.
Point interpolate(const Manifold& m, const Trajectory& traj, const DriftField& beta,
                  const brownian::BrownianPath& path, int fine_level, std::uint64_t fine_index);

// A realized random vector field: coordinates drawn per step, evaluated at any
// x through the radial frame transported from the anchor (the anchor's
// neighborhood is the field's domain).
class NoiseField {
public:
    NoiseField(const Manifold& m, Point anchor, brownian::NoiseModel model);
    Eigen::VectorXd draw(RngStream& rng) const { return model_.sample_coords(rng); }
    Tangent eval(const Eigen::VectorXd& coords, const Point& x) const;
    const brownian::NoiseModel& model() const { return model_; }
    const Frame& anchor_frame() const { return E0_; }

private:
    const Manifold* m_;
    Point anchor_;
    Frame E0_;
    brownian::NoiseModel model_;
};

// y_{k+1} = Exp_{y_k}(delta beta(y_k) + sqrt(delta) xi_k(y_k)); frames roll
// along each step's own geodesic. Steps that leave the cut-locus margin abort
// the replica (flagged, counted by the experiment layer).
Trajectory nongaussian_walk(const Manifold& m, const Point& y0, const DriftField& beta,
                            const brownian::NoiseModel& noise, double delta, int K,
                            RngStream& rng);

struct TangentWalk {
    std::vector<Eigen::VectorXd> z; // tangent records, coords wrt the anchor frame
    Trajectory retracted;           // ytilde_k = Exp_{y0}(z_k)
    bool aborted = false;
};

// z_{k+1} = z_k + delta beta(y0) + sqrt(delta) Gamma_{ytilde_k -> y0} xi_k(ytilde_k),
// transports along the radial geodesic; drift frozen at y0.
TangentWalk tangent_walk(const Manifold& m, const Point& y0, const Frame& E0,
                         const DriftField& beta, const brownian::NoiseModel& noise, double delta,
                         int K, RngStream& rng);

// Both walks on one shared noise-field realization per step.
struct CoupledWalks {
    Trajectory walk;
    TangentWalk tangent;
    bool aborted = false;
};
CoupledWalks coupled_nongaussian_tangent(const Manifold& m, const Point& y0, const Frame& E0,
                                         const DriftField& beta,
                                         const brownian::NoiseModel& noise, double delta, int K,
                                         RngStream& rng);

} // namespace geomsde::walkers
