#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "geomsde/geometry.hpp"
#include "geomsde/rng.hpp"

namespace geomsde::brownian {

// Dyadic tree of Gaussian increments over [0, T]. Level-i increments have
// variance delta^i = 2^{-i} T per coordinate, and the level-i increment over
// [k delta^i, (k+1) delta^i) equals the sum of its two level-(i+1) children
// exactly (bridge construction; coarse views are computed, never stored).
// Every increment is a pure function of (seed, level, index), so queries are
// thread-safe and independent of evaluation order.
class BrownianPath {
public:
    // precompute_level >= 0 materializes levels 0..precompute_level at
    // construction (identical values, O(1) queries); the path stays immutable.
    BrownianPath(double horizon, int max_level, int dim, std::uint64_t seed,
                 int precompute_level = -1)
        : T_(horizon), i_max_(max_level), d_(dim), seed_(seed) {
        if (precompute_level >= 0) build_table(std::min(precompute_level, i_max_));
    }

    double horizon() const { return T_; }
    int max_level() const { return i_max_; }
    int dim() const { return d_; }
    std::uint64_t seed() const { return seed_; }
    double delta(int level) const { return T_ * std::pow(2.0, -level); }

    // increment over [k delta^i, (k+1) delta^i)
    Eigen::VectorXd increment(int level, std::uint64_t index) const;

    // B(b delta^level) - B(a delta^level), summing level increments
    Eigen::VectorXd range_sum(int level, std::uint64_t a, std::uint64_t b) const;

private:
    double root_gaussian(int coord) const;
    double bridge_gaussian(int parent_level, std::uint64_t parent_index, int coord) const;
    void build_table(int level);

    double T_;
    int i_max_;
    int d_;
    std::uint64_t seed_;
    std::vector<std::vector<Eigen::VectorXd>> table_; // levels 0..precompute
};

enum class NoiseKind { gaussian, rademacher, scaled_sphere };

NoiseKind noise_kind_from_string(const std::string& s);

// Zero-mean identity-covariance increment law expressed in a frame, with an
// optional smooth position-dependent in-plane rotation (angle
// theta0 * sin(<x, w>) applied in frame coordinates (plane_p, plane_q)).
struct NoiseModel {
    NoiseKind kind = NoiseKind::gaussian;
    int dim = 0;
    double rotation_theta0 = 0.0;
    int plane_p = 0;
    int plane_q = 1;
    Eigen::VectorXd rotation_w; // ambient vector; size 0 disables the rotation

    double L_xi() const;
    Eigen::VectorXd sample_coords(RngStream& rng) const;
    Eigen::VectorXd rotate(const geometry::Point& x, Eigen::VectorXd coords) const;
};

// Tangent whose coordinates wrt E follow the model's law at x.
geometry::Tangent sample_noise(const NoiseModel& model, const geometry::Point& x,
                               const geometry::Frame& E, RngStream& rng);

} // namespace geomsde::brownian
