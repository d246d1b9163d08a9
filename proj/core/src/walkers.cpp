#include "geomsde/walkers.hpp"

#include <cmath>

#include "geomsde/errors.hpp"

namespace geomsde::walkers {

DriftField zero_drift(const Manifold& m) {
    DriftField f;
    const int n = m.ambient_dim();
    f.eval = [n](const Point& x) -> Tangent { return {x, Eigen::VectorXd::Zero(n)}; };
    f.L_beta = 0.0;
    f.L_beta_prime = 0.0;
    return f;
}

DriftField log_drift(const Manifold& m, const Point& x_star, double strength, double q,
                     double radius) {
    DriftField f;
    f.eval = [mp = &m, x_star, strength](const Point& x) -> Tangent {
        Tangent u = mp->log(x, x_star);
        u.v *= strength;
        return u;
    };
    f.L_beta_prime = strength;
    f.dissipativity = DriftField::Dissipativity{strength, q, radius, x_star};
    return f;
}

namespace {

Tangent step_tangent(const Manifold& m, const DriftField& beta, const Point& x, const Frame& E,
                     double dt, const Eigen::VectorXd& incr) {
    Tangent drift = beta.eval(x);
    return {x, dt * drift.v + E.vectors * incr};
}

} // namespace

std::vector<Trajectory> dyadic_tower(const Manifold& m, const Point& x0, const Frame& E0,
                                     const DriftField& beta, const brownian::BrownianPath& path,
                                     int level) {
    if (level > path.max_level())
        throw PreconditionError("dyadic_tower: level exceeds the path's max_level");
    const double T = path.horizon();
    std::vector<Trajectory> tower;
    tower.reserve(level + 1);

    Trajectory base;
    base.kind = "euler-murayama";
    base.level = 0;
    base.seed = path.seed();
    base.times = {0.0, T};
    base.points = {x0};
    base.frames = {E0};
    const Point x1 = m.exp(x0, step_tangent(m, beta, x0, E0, T, path.increment(0, 0)));
    base.points.push_back(x1);
    base.frames.push_back(m.transported_frame(E0, x0, x1));
    tower.push_back(std::move(base));

    for (int i = 1; i <= level; ++i) {
        const Trajectory& parent = tower.back();
        const double dt = path.delta(i);
        const std::uint64_t n = std::uint64_t{1} << i;
        Trajectory traj;
        traj.kind = "euler-murayama";
        traj.level = i;
        traj.seed = path.seed();
        traj.times.resize(n + 1);
        traj.points.reserve(n + 1);
        traj.frames.reserve(n + 1);
        traj.points.push_back(x0);
        traj.frames.push_back(E0);
        for (std::uint64_t k = 0; k < n; ++k) {
            traj.times[k] = k * dt;
            const Point& xk = traj.points.back();
            const Frame& Ek = traj.frames.back();
            const Point xn = m.exp(xk, step_tangent(m, beta, xk, Ek, dt, path.increment(i, k)));
            if ((k & 1) == 0) {
                // odd target index: roll the own frame along the step
                traj.frames.push_back(m.transported_frame(Ek, xk, xn));
            } else {
                // even target index 2j+2: transport the parent frame at j+1
                const std::uint64_t j = k >> 1;
                traj.frames.push_back(
                    m.transported_frame(parent.frames[j + 1], parent.points[j + 1], xn));
            }
            traj.points.push_back(xn);
        }
        traj.times[n] = T;
        tower.push_back(std::move(traj));
    }
    return tower;
}

Trajectory euler_murayama(const Manifold& m, const Point& x0, const Frame& E0,
                          const DriftField& beta, const brownian::BrownianPath& path, int level) {
    return std::move(dyadic_tower(m, x0, E0, beta, path, level).back());
}

std::pair<Trajectory, Trajectory> refine_pair(const Manifold& m, const Point& x0, const Frame& E0,
                                              const DriftField& beta,
                                              const brownian::BrownianPath& path, int level) {
    auto tower = dyadic_tower(m, x0, E0, beta, path, level + 1);
    return {std::move(tower[level]), std::move(tower[level + 1])};
}

Trajectory reference_sde(const Manifold& m, const Point& x0, const Frame& E0,
                         const DriftField& beta, const brownian::BrownianPath& path,
                         int deep_level) {
    Trajectory t = euler_murayama(m, x0, E0, beta, path, deep_level);
    t.kind = "reference";
    return t;
}

Point interpolate(const Manifold& m, const Trajectory& traj, const DriftField& beta,
                  const brownian::BrownianPath& path, int fine_level, std::uint64_t fine_index) {
    const int i = traj.level;
    if (fine_level < i) throw PreconditionError("interpolate: fine_level below trajectory level");
    const std::uint64_t stride = std::uint64_t{1} << (fine_level - i);
    const std::uint64_t k = fine_index / stride;
    if (fine_index % stride == 0) return traj.points[k];
    const double dt = path.delta(i);
    const double s = path.delta(fine_level) * static_cast<double>(fine_index % stride);
    const Eigen::VectorXd b = path.range_sum(fine_level, k * stride, fine_index);
    Tangent step = step_tangent(m, beta, traj.points[k], traj.frames[k], s, (s / dt) * b);
    return m.exp(traj.points[k], step);
}

NoiseField::NoiseField(const Manifold& m, Point anchor, brownian::NoiseModel model)
    : m_(&m), anchor_(std::move(anchor)), E0_(m.reference_frame(anchor_)), model_(std::move(model)) {}

Tangent NoiseField::eval(const Eigen::VectorXd& coords, const Point& x) const {
    const Frame Ex = m_->transported_frame(E0_, anchor_, x);
    return {x, Ex.vectors * model_.rotate(x, coords)};
}

Trajectory nongaussian_walk(const Manifold& m, const Point& y0, const DriftField& beta,
                            const brownian::NoiseModel& noise, double delta, int K,
                            RngStream& rng) {
    if (delta <= 0.0 || K < 1) throw PreconditionError("nongaussian_walk: need delta > 0, K >= 1");
    const NoiseField field(m, y0, noise);
    Trajectory traj;
    traj.kind = "nongaussian";
    traj.times.push_back(0.0);
    traj.points.push_back(y0);
    traj.frames.push_back(field.anchor_frame());
    const double sq = std::sqrt(delta);
    for (int k = 0; k < K; ++k) {
        const Point& yk = traj.points.back();
        const Frame& Ek = traj.frames.back();
        try {
            const Tangent xi = field.eval(field.draw(rng), yk);
            Tangent drift = beta.eval(yk);
            const Point yn = m.exp(yk, {yk, delta * drift.v + sq * xi.v});
            traj.frames.push_back(m.transported_frame(Ek, yk, yn));
            traj.points.push_back(yn);
            traj.times.push_back((k + 1) * delta);
        } catch (const CutLocusError&) {
            traj.aborted = true;
            break;
        }
    }
    return traj;
}

namespace {

struct TangentWalkDriver {
    const Manifold& m;
    const Point& y0;
    const Frame& E0;
    Eigen::VectorXd beta0; // frozen drift coords
    double delta, sq;
    double margin;

    TangentWalkDriver(const Manifold& man, const Point& y, const Frame& E, const DriftField& beta,
                      double d)
        : m(man), y0(y), E0(E), delta(d), sq(std::sqrt(d)) {
        beta0 = m.frame_coords(E0, beta.eval(y0));
        margin = m.cut_locus_margin();
    }

    // one update of z given the shared step coordinates; throws CutLocusError
    // when the radial radius is exceeded
    Eigen::VectorXd advance(const Eigen::VectorXd& z, const NoiseField& field,
                            const Eigen::VectorXd& coords, Point& ytilde_out) const {
        const Point ytilde = m.exp(y0, m.from_frame_coords(E0, z));
        const Tangent xi = field.eval(coords, ytilde);
        const Tangent back = m.transport(xi, ytilde, y0);
        Eigen::VectorXd zn = z + delta * beta0 + sq * m.frame_coords(E0, back);
        if (zn.norm() >= margin) throw CutLocusError("tangent walk left the radial injectivity ball");
        ytilde_out = ytilde;
        return zn;
    }
};

} // namespace

TangentWalk tangent_walk(const Manifold& m, const Point& y0, const Frame& E0,
                         const DriftField& beta, const brownian::NoiseModel& noise, double delta,
                         int K, RngStream& rng) {
    const NoiseField field(m, y0, noise);
    TangentWalkDriver drv(m, y0, E0, beta, delta);
    TangentWalk out;
    out.z.push_back(Eigen::VectorXd::Zero(m.dim()));
    out.retracted.kind = "tangent-walk";
    out.retracted.times.push_back(0.0);
    out.retracted.points.push_back(y0);
    out.retracted.frames.push_back(E0);
    for (int k = 0; k < K; ++k) {
        try {
            Point ytilde = y0;
            Eigen::VectorXd zn = drv.advance(out.z.back(), field, field.draw(rng), ytilde);
            out.z.push_back(zn);
            const Point yn = m.exp(y0, m.from_frame_coords(E0, zn));
            out.retracted.points.push_back(yn);
            out.retracted.times.push_back((k + 1) * delta);
            out.retracted.frames.push_back(m.transported_frame(E0, y0, yn));
        } catch (const CutLocusError&) {
            out.aborted = true;
            out.retracted.aborted = true;
            break;
        }
    }
    return out;
}

CoupledWalks coupled_nongaussian_tangent(const Manifold& m, const Point& y0, const Frame& E0,
                                         const DriftField& beta,
                                         const brownian::NoiseModel& noise, double delta, int K,
                                         RngStream& rng) {
    const NoiseField field(m, y0, noise);
    TangentWalkDriver drv(m, y0, E0, beta, delta);
    const double sq = std::sqrt(delta);

    CoupledWalks out;
    out.walk.kind = "nongaussian";
    out.walk.times.push_back(0.0);
    out.walk.points.push_back(y0);
    out.walk.frames.push_back(E0);
    out.tangent.z.push_back(Eigen::VectorXd::Zero(m.dim()));
    out.tangent.retracted.kind = "tangent-walk";
    out.tangent.retracted.times.push_back(0.0);
    out.tangent.retracted.points.push_back(y0);
    out.tangent.retracted.frames.push_back(E0);

    for (int k = 0; k < K; ++k) {
        const Eigen::VectorXd coords = field.draw(rng);
        try {
            const Point& yk = out.walk.points.back();
            const Tangent xi = field.eval(coords, yk);
            Tangent drift = beta.eval(yk);
            const Point yn = m.exp(yk, {yk, delta * drift.v + sq * xi.v});
            out.walk.frames.push_back(m.transported_frame(out.walk.frames.back(), yk, yn));
            out.walk.points.push_back(yn);
            out.walk.times.push_back((k + 1) * delta);

            Point ytilde = y0;
            Eigen::VectorXd zn = drv.advance(out.tangent.z.back(), field, coords, ytilde);
            out.tangent.z.push_back(zn);
            out.tangent.retracted.points.push_back(m.exp(y0, m.from_frame_coords(E0, zn)));
            out.tangent.retracted.times.push_back((k + 1) * delta);
            out.tangent.retracted.frames.push_back(E0); // frames unused downstream
        } catch (const CutLocusError&) {
            out.aborted = true;
            out.walk.aborted = true;
            out.tangent.aborted = true;
            break;
        }
    }
    return out;
}

} // namespace geomsde::walkers
