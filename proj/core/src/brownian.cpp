#include "geomsde/brownian.hpp"

#include <cmath>

#include "geomsde/errors.hpp"

namespace geomsde::brownian {

namespace {
constexpr std::uint64_t kRootTag = 0x724f4f54;   // root draws
constexpr std::uint64_t kBridgeTag = 0x62526447; // bridge midpoint draws
} // namespace

double BrownianPath::root_gaussian(int coord) const {
    return keyed_gaussian(derive_key(seed_, kRootTag, 1, static_cast<std::uint64_t>(coord)));
}

double BrownianPath::bridge_gaussian(int parent_level, std::uint64_t parent_index, int coord) const {
    // heap id uniquely identifies the (level, index) node
    const std::uint64_t node = (std::uint64_t{1} << parent_level) + parent_index;
    return keyed_gaussian(derive_key(seed_, kBridgeTag, node, static_cast<std::uint64_t>(coord)));
}

void BrownianPath::build_table(int level) {
    table_.resize(level + 1);
    Eigen::VectorXd root(d_);
    const double root_sd = std::sqrt(T_);
    for (int j = 0; j < d_; ++j) root[j] = root_sd * root_gaussian(j);
    table_[0] = {root};
    for (int lvl = 1; lvl <= level; ++lvl) {
        const std::uint64_t n = std::uint64_t{1} << lvl;
        table_[lvl].resize(n);
        const double z_sd = 0.5 * std::sqrt(delta(lvl - 1));
        for (std::uint64_t parent = 0; parent < n / 2; ++parent) {
            Eigen::VectorXd z(d_);
            for (int j = 0; j < d_; ++j) z[j] = z_sd * bridge_gaussian(lvl - 1, parent, j);
            table_[lvl][2 * parent] = 0.5 * table_[lvl - 1][parent] + z;
            table_[lvl][2 * parent + 1] = 0.5 * table_[lvl - 1][parent] - z;
        }
    }
}

Eigen::VectorXd BrownianPath::increment(int level, std::uint64_t index) const {
    if (level < 0 || level > i_max_ || index >= (std::uint64_t{1} << level))
        throw PreconditionError("BrownianPath::increment: level/index out of range");
    if (level < static_cast<int>(table_.size())) return table_[level][index];

    // Walk the dyadic tree from the root: child increments over half the
    // interval are W/2 + Z (left) and W/2 - Z (right) with Z ~ N(0, delta/4 I),
    // so parents equal the sum of their children exactly.
    Eigen::VectorXd w(d_);
    const double root_sd = std::sqrt(T_);
    for (int j = 0; j < d_; ++j) w[j] = root_sd * root_gaussian(j);
    for (int lvl = 1; lvl <= level; ++lvl) {
        const std::uint64_t k = index >> (level - lvl);
        const std::uint64_t parent = k >> 1;
        const double z_sd = 0.5 * std::sqrt(delta(lvl - 1));
        const double sign = (k & 1) == 0 ? 1.0 : -1.0;
        for (int j = 0; j < d_; ++j)
            w[j] = 0.5 * w[j] + sign * z_sd * bridge_gaussian(lvl - 1, parent, j);
    }
    return w;
}

Eigen::VectorXd BrownianPath::range_sum(int level, std::uint64_t a, std::uint64_t b) const {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(d_);
    for (std::uint64_t k = a; k < b; ++k) acc += increment(level, k);
    return acc;
}

NoiseKind noise_kind_from_string(const std::string& s) {
    if (s == "gaussian") return NoiseKind::gaussian;
    if (s == "rademacher") return NoiseKind::rademacher;
    if (s == "scaled-sphere" || s == "scaled_sphere") return NoiseKind::scaled_sphere;
    throw PreconditionError("unknown noise kind: " + s);
}

double NoiseModel::L_xi() const {
    if (kind == NoiseKind::gaussian) return std::numeric_limits<double>::infinity();
    return std::sqrt(static_cast<double>(dim));
}

Eigen::VectorXd NoiseModel::sample_coords(RngStream& rng) const {
    Eigen::VectorXd c(dim);
    switch (kind) {
    case NoiseKind::gaussian:
        for (int i = 0; i < dim; ++i) c[i] = rng.gaussian();
        break;
    case NoiseKind::rademacher:
        for (int i = 0; i < dim; ++i) c[i] = rng.uniform() <= 0.5 ? 1.0 : -1.0;
        break;
    case NoiseKind::scaled_sphere: {
        double n = 0.0;
        do {
            for (int i = 0; i < dim; ++i) c[i] = rng.gaussian();
            n = c.norm();
        } while (n < 1e-12);
        c *= std::sqrt(static_cast<double>(dim)) / n;
        break;
    }
    }
    return c;
}

Eigen::VectorXd NoiseModel::rotate(const geometry::Point& x, Eigen::VectorXd coords) const {
    if (rotation_theta0 == 0.0 || rotation_w.size() == 0) return coords;
    const int n = static_cast<int>(std::min<Eigen::Index>(rotation_w.size(), x.x.size()));
    const double angle = rotation_theta0 * std::sin(rotation_w.head(n).dot(x.x.head(n)));
    const double cp = coords[plane_p], cq = coords[plane_q];
    coords[plane_p] = std::cos(angle) * cp - std::sin(angle) * cq;
    coords[plane_q] = std::sin(angle) * cp + std::cos(angle) * cq;
    return coords;
}

geometry::Tangent sample_noise(const NoiseModel& model, const geometry::Point& x,
                               const geometry::Frame& E, RngStream& rng) {
    const Eigen::VectorXd c = model.rotate(x, model.sample_coords(rng));
    return {E.base, E.vectors * c};
}

} // namespace geomsde::brownian
