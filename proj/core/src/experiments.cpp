#include "geomsde/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <Eigen/Dense>

#include "geomsde/brownian.hpp"
#include "geomsde/coupling.hpp"
#include "geomsde/diagnostics.hpp"
#include "geomsde/embedding.hpp"
#include "geomsde/errors.hpp"
#include "geomsde/geometry.hpp"
#include "geomsde/matode.hpp"
#include "geomsde/trivialize.hpp"
#include "geomsde/walkers.hpp"

namespace geomsde::experiments {

namespace {

using config::Config;
using geometry::Frame;
using geometry::Manifold;
using geometry::Point;
using geometry::Tangent;

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

int default_workers() {
    const unsigned hc = std::thread::hardware_concurrency();
    return std::max(1, std::min(8, static_cast<int>(hc)));
}

AssertionResult make_assert(std::string name, double measured, double bound, std::string relation) {
    bool pass = false;
    if (relation == "<=") pass = measured <= bound;
    else if (relation == "<") pass = measured < bound;
    else if (relation == ">=") pass = measured >= bound;
    else if (relation == ">") pass = measured > bound;
    return {std::move(name), measured, bound, std::move(relation), pass};
}

void push_range_assert(std::vector<AssertionResult>& out, const std::string& name, double measured,
                       double lo, double hi) {
    out.push_back(make_assert(name + ".lo", measured, lo, ">="));
    out.push_back(make_assert(name + ".hi", measured, hi, "<="));
}

std::unique_ptr<Manifold> manifold_from(const Config& cfg) {
    return geometry::make_manifold(cfg.get_string("manifold.kind", "sphere"),
                                   cfg.get_int("manifold.dim", 2),
                                   cfg.get_double("manifold.scale", 1.0));
}

brownian::NoiseModel noise_from(const Config& cfg, int dim, const std::string& fallback_kind) {
    brownian::NoiseModel n;
    n.kind = brownian::noise_kind_from_string(cfg.get_string("noise.kind", fallback_kind));
    n.dim = dim;
    n.rotation_theta0 = cfg.get_double("noise.theta0", 0.0);
    n.plane_p = cfg.get_int("noise.plane_p", 0);
    n.plane_q = cfg.get_int("noise.plane_q", std::min(1, dim - 1));
    if (n.rotation_theta0 != 0.0) {
        n.rotation_w = Eigen::VectorXd::Zero(dim + 1);
        n.rotation_w[0] = 1.0;
    }
    return n;
}

Eigen::VectorXd ball_sample(RngStream& rng, int d, double radius) {
    Eigen::VectorXd g = rng.gaussian_vector(d);
    double n = g.norm();
    while (n < 1e-12) {
        g = rng.gaussian_vector(d);
        n = g.norm();
    }
    return (radius * std::pow(rng.uniform(), 1.0 / d) / n) * g;
}

Point offset_point(const Manifold& m, const Point& base, double dist, int axis) {
    const Frame E = m.reference_frame(base);
    return m.exp(base, m.from_frame_coords(E, dist * Eigen::VectorXd::Unit(m.dim(), axis)));
}

struct ReplicaAborts {
    std::atomic<int> count{0};
    double fraction(int n) const { return static_cast<double>(count.load()) / n; }
};

// ---------------------------------------------------------------------------
// rate-one-step: fitted T^(3/2) rate of d(one-step walk, deep refinement)

ExperimentResult run_rate_one_step(const Config& cfg) {
    auto m = manifold_from(cfg);
    const int d = m->dim();
    const std::uint64_t seed = cfg.get_u64("seed", 42);
    const int replicas = cfg.get_int("replicas", 2000);
    const int workers = cfg.get_int("workers", default_workers());
    const int ref_level = cfg.get_int("reference.level", 12);
    std::vector<double> Ts = cfg.get_double_list(
        "grid.T", {1.0 / 4, 1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64});
    std::sort(Ts.rbegin(), Ts.rend());

    const Point x_star = m->origin();
    const walkers::DriftField beta =
        walkers::log_drift(*m, x_star, cfg.get_double("drift.strength", 1.0));
    const Point x0 = offset_point(*m, x_star, cfg.get_double("start.distance", 0.5), 0);
    const Frame E0 = m->reference_frame(x0);

    ExperimentResult res;
    res.name = "rate-one-step";
    std::vector<diagnostics::RatePoint> pts;
    double worst_self_ratio = 0.0;
    for (std::size_t ti = 0; ti < Ts.size(); ++ti) {
        const double T = Ts[ti];
        std::vector<double> dist(replicas), self_dist(replicas);
        parallel_replicas(replicas, workers, [&](int r) {
            const brownian::BrownianPath path(T, ref_level, d, derive_key(seed, ti, r), ref_level);
            const auto tower = walkers::dyadic_tower(*m, x0, E0, beta, path, ref_level);
            dist[r] = m->distance(tower.front().endpoint(), tower.back().endpoint());
            self_dist[r] = m->distance(tower[ref_level - 1].endpoint(), tower.back().endpoint());
        });
        const auto ms = diagnostics::mean_se(dist);
        const auto ss = diagnostics::mean_se(self_dist);
        pts.push_back({T, ms.mean, ms.se});
        worst_self_ratio = std::max(worst_self_ratio, ss.mean / ms.mean);
        res.rows.push_back({res.name, m->name(), T, static_cast<std::uint64_t>(replicas), ms.mean,
                            ms.se, std::nullopt, true});
    }
    const auto fit = diagnostics::fit_rate(pts);
    res.rows.front().slope = fit.slope;
    push_range_assert(res.assertions, "one_step_rate.slope", fit.slope,
                      cfg.get_double("slope.lo", 1.3), cfg.get_double("slope.hi", 1.7));
    res.assertions.push_back(
        make_assert("reference.self_consistency_ratio", worst_self_ratio, 0.1, "<="));
    for (auto& row : res.rows) row.pass = res.all_pass();
    return res;
}

// ---------------------------------------------------------------------------
// refine: decay of E sup_t d(x^i, x^{i+1})^2 across dyadic levels

ExperimentResult run_refine(const Config& cfg) {
    auto m = manifold_from(cfg);
    const int d = m->dim();
    const std::uint64_t seed = cfg.get_u64("seed", 42);
    const int replicas = cfg.get_int("replicas", 2000);
    const int workers = cfg.get_int("workers", default_workers());
    const double T = cfg.get_double("T", 1.0 / 32);
    const int i_lo = cfg.get_int("level.lo", 3);
    const int i_hi = cfg.get_int("level.hi", 8);
    const int deep = cfg.get_int("reference.level", 12);

    const Point x_star = m->origin();
    const walkers::DriftField beta =
        walkers::log_drift(*m, x_star, cfg.get_double("drift.strength", 1.0));
    const Point x0 = offset_point(*m, x_star, cfg.get_double("start.distance", 0.5), 0);
    const Frame E0 = m->reference_frame(x0);

    const int n_levels = i_hi - i_lo + 1;
    std::vector<std::vector<double>> sup_sq(n_levels, std::vector<double>(replicas));
    std::vector<double> self_sq(replicas);
    parallel_replicas(replicas, workers, [&](int r) {
        const brownian::BrownianPath path(T, deep, d, derive_key(seed, 0x52, r), deep);
        const auto tower = walkers::dyadic_tower(*m, x0, E0, beta, path, deep);
        for (int i = i_lo; i <= i_hi; ++i) {
            const auto& fine = tower[i + 1];
            double worst = 0.0;
            const std::uint64_t nf = std::uint64_t{1} << (i + 1);
            for (std::uint64_t j = 0; j <= nf; ++j) {
                const Point coarse_pt =
                    (j % 2 == 0) ? tower[i].points[j / 2]
                                 : walkers::interpolate(*m, tower[i], beta, path, i + 1, j);
                worst = std::max(worst, std::pow(m->distance(coarse_pt, fine.points[j]), 2));
            }
            sup_sq[i - i_lo][r] = worst;
        }
        self_sq[r] =
            std::pow(m->distance(tower[deep - 1].endpoint(), tower[deep].endpoint()), 2);
    });

    ExperimentResult res;
    res.name = "refine";
    std::vector<diagnostics::RatePoint> pts;
    double mean_at_hi = 0.0;
    for (int i = i_lo; i <= i_hi; ++i) {
        const auto ms = diagnostics::mean_se(sup_sq[i - i_lo]);
        pts.push_back({std::pow(2.0, -i), ms.mean, ms.se});
        if (i == i_hi) mean_at_hi = ms.mean;
        res.rows.push_back({res.name, m->name(), static_cast<double>(i),
                            static_cast<std::uint64_t>(replicas), ms.mean, ms.se, std::nullopt,
                            true});
    }
    const auto fit = diagnostics::fit_rate(pts);
    const double slope_in_i = -fit.slope; // log2 E sup d^2 per level
    res.rows.front().slope = slope_in_i;
    push_range_assert(res.assertions, "refinement.slope", slope_in_i,
                      cfg.get_double("slope.lo", -1.4), cfg.get_double("slope.hi", -0.6));
    const auto self_ms = diagnostics::mean_se(self_sq);
    res.assertions.push_back(make_assert("refinement.deep_self_ratio",
                                         self_ms.mean / mean_at_hi, 0.1, "<="));
    for (auto& row : res.rows) row.pass = res.all_pass();
    return res;
}

// ---------------------------------------------------------------------------
// trivialize-check: closure of the tangent-space geodesic, G spectra, triangle
// distortion, and the stacked matrix-ODE block envelopes

struct ClosureStats {
    double max_gap = 0.0;
    double max_spec_dev = 0.0;
};

ClosureStats closure_sweep(const Manifold& m, int samples, int workers, std::uint64_t seed,
                           double h) {
    const int d = m.dim();
    const Point x0 = m.origin();
    const Frame E0 = m.reference_frame(x0);
    const double C_r = m.curvature_bounds().C_r;
    const double K = m.name() == "sphere" ? m.curvature_bound() : -m.curvature_bound();

    std::vector<double> gaps(samples), specs(samples);
    parallel_replicas(samples, workers, [&](int i) {
        RngStream rng = RngStream::substream(seed, i, 0x747256);
        const Eigen::VectorXd uc = ball_sample(rng, d, C_r);
        const Eigen::VectorXd vc = ball_sample(rng, d, C_r);
        const Tangent u = m.from_frame_coords(E0, uc);
        const Tangent v = m.from_frame_coords(E0, vc);
        gaps[i] = trivialize::closure_gap(m, x0, E0, u, v, h);

        const Eigen::MatrixXd G = trivialize::tensor_G(m, x0, E0, u);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (G + G.transpose()));
        const double r = uc.norm();
        const double lam = K > 0 ? std::sin(std::sqrt(K) * r) / (std::sqrt(K) * r)
                                 : std::sinh(std::sqrt(-K) * r) / (std::sqrt(-K) * r);
        std::vector<double> expected(d, lam);
        expected[d - 1] = 1.0; // radial eigenvalue
        std::sort(expected.begin(), expected.end());
        double dev = 0.0;
        for (int j = 0; j < d; ++j) dev = std::max(dev, std::abs(es.eigenvalues()[j] - expected[j]));
        specs[i] = dev;
    });
    ClosureStats st;
    for (int i = 0; i < samples; ++i) {
        st.max_gap = std::max(st.max_gap, gaps[i]);
        st.max_spec_dev = std::max(st.max_spec_dev, specs[i]);
    }
    return st;
}

ExperimentResult run_trivialize_check(const Config& cfg) {
    const std::uint64_t seed = cfg.get_u64("seed", 42);
    const int workers = cfg.get_int("workers", default_workers());
    const int closure_samples = cfg.get_int("closure.samples", 1000);
    const int distortion_samples = cfg.get_int("distortion.samples", 10000);
    const int matode_paths = cfg.get_int("matode.paths", 1000);
    const double h = cfg.get_double("h", 1e-3);

    ExperimentResult res;
    res.name = "trivialize-check";

    const geometry::Sphere sphere(2, 1.0);
    const geometry::Hyperboloid hyper(2, 1.0);
    for (const Manifold* m : {static_cast<const Manifold*>(&sphere),
                              static_cast<const Manifold*>(&hyper)}) {
        const auto st = closure_sweep(*m, closure_samples, workers, seed, h);
        res.rows.push_back({res.name, m->name(), h, static_cast<std::uint64_t>(closure_samples),
                            st.max_gap, 0.0, std::nullopt, true});
        res.assertions.push_back(
            make_assert("closure." + m->name() + ".max_gap", st.max_gap, 1e-6, "<"));
        res.assertions.push_back(
            make_assert("spectra." + m->name() + ".max_dev", st.max_spec_dev, 1e-6, "<"));
    }

    // triangle distortion on the sphere
    {
        const geometry::Sphere& m = sphere;
        const Point x0 = m.origin();
        const Frame E0 = m.reference_frame(x0);
        const double C_r = m.curvature_bounds().C_r;
        std::vector<double> excess(distortion_samples);
        std::vector<double> lhs_full(distortion_samples), lhs_half(distortion_samples);
        parallel_replicas(distortion_samples, workers, [&](int i) {
            RngStream rng = RngStream::substream(seed, i, 0x744413);
            const Tangent u = m.from_frame_coords(E0, ball_sample(rng, 2, C_r));
            const Eigen::VectorXd vc = ball_sample(rng, 2, C_r);
            const Tangent v = m.from_frame_coords(E0, vc);
            const auto full = trivialize::triangle_distortion_check(m, x0, u, v);
            const auto half =
                trivialize::triangle_distortion_check(m, x0, u, m.from_frame_coords(E0, 0.5 * vc));
            excess[i] = full.lhs - full.rhs;
            lhs_full[i] = full.lhs;
            lhs_half[i] = half.lhs;
        });
        const double max_excess = *std::max_element(excess.begin(), excess.end());
        const double mean_full = diagnostics::mean_se(lhs_full).mean;
        const double mean_half = diagnostics::mean_se(lhs_half).mean;
        const double ratio = mean_full / mean_half;
        res.rows.push_back({res.name, m.name(), C_r, static_cast<std::uint64_t>(distortion_samples),
                            mean_full, 0.0, ratio, true});
        res.assertions.push_back(make_assert("distortion.max_excess", max_excess, 0.0, "<="));
        push_range_assert(res.assertions, "distortion.halving_ratio", ratio,
                          cfg.get_double("ratio.lo", 3.5), cfg.get_double("ratio.hi", 4.5));
    }

    // matrix-ODE block envelopes on random bounded paths
    {
        const std::vector<double> ts = {0.25, 0.5, 0.75, 1.0};
        std::vector<double> worst(matode_paths);
        parallel_replicas(matode_paths, workers, [&](int i) {
            RngStream rng = RngStream::substream(seed, i, 0x6d4f44);
            const int dim = 2 + static_cast<int>(rng.below(2));
            const int terms = 3;
            std::vector<Eigen::MatrixXd> A(terms);
            std::vector<double> omega(terms), phase(terms);
            double norm_sum = 0.0;
            for (int j = 0; j < terms; ++j) {
                A[j] = Eigen::MatrixXd::NullaryExpr(dim, dim,
                                                    [&](Eigen::Index, Eigen::Index) {
                                                        return 2.0 * rng.uniform() - 1.0;
                                                    });
                omega[j] = 2.0 * M_PI * rng.uniform();
                phase[j] = 2.0 * M_PI * rng.uniform();
                norm_sum += A[j].operatorNorm();
            }
            const double L_target = 0.25 + 3.75 * rng.uniform();
            const double scale_f = L_target / norm_sum;
            double Lp = 0.0;
            for (int j = 0; j < terms; ++j) {
                A[j] *= scale_f;
                Lp += omega[j] * A[j].operatorNorm();
            }
            matode::MatrixPath path;
            path.dim = dim;
            path.norm_bound = L_target;
            path.lipschitz_bound = Lp;
            path.eval = [A, omega, phase, dim](double t) {
                Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dim, dim);
                for (std::size_t j = 0; j < A.size(); ++j)
                    M += std::sin(omega[j] * t + phase[j]) * A[j];
                return M;
            };
            const auto blocks = matode::second_order_blocks_grid(path, ts);
            const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(dim, dim);
            const Eigen::MatrixXd M0 = path.eval(0.0);
            const double L = L_target, sL = std::sqrt(L_target);
            double v = 0.0;
            for (std::size_t k = 0; k < ts.size(); ++k) {
                const double t = ts[k];
                const auto& b = blocks[k];
                v = std::max(v, b.A.operatorNorm() - std::cosh(sL * t));
                v = std::max(v, b.B.operatorNorm() - std::sinh(sL * t) / sL);
                v = std::max(v, b.C.operatorNorm() - sL * std::sinh(sL * t));
                v = std::max(v, b.D.operatorNorm() - std::cosh(sL * t));
                v = std::max(v, (b.A - I).operatorNorm() - (std::cosh(sL * t) - 1.0));
                v = std::max(v, (b.B - t * I).operatorNorm() - (std::sinh(sL * t) / sL - t));
                v = std::max(v, (b.C - t * M0).operatorNorm() -
                                    (Lp + 0.5 * L * L) / sL * std::sinh(sL * t));
            }
            worst[i] = v;
        });
        const double max_violation = *std::max_element(worst.begin(), worst.end());
        res.rows.push_back({res.name, "matrix-ode", 1.0, static_cast<std::uint64_t>(matode_paths),
                            max_violation, 0.0, std::nullopt, true});
        res.assertions.push_back(
            make_assert("matode.block_envelopes.max_violation", max_violation, 1e-6, "<="));
    }

    for (auto& row : res.rows) row.pass = res.all_pass();
    return res;
}

// ---------------------------------------------------------------------------
// coupling: reflection-coupled walkers contract the Lyapunov distance

ExperimentResult run_coupling(const Config& cfg) {
    auto m = manifold_from(cfg);
    const std::uint64_t seed = cfg.get_u64("seed", 42);
    const int replicas = cfg.get_int("replicas", 1000);
    const int workers = cfg.get_int("workers", default_workers());
    const double strength = cfg.get_double("drift.strength", 1.0);
    const double core = cfg.get_double("drift.core", 0.3);
    const double radius = cfg.get_double("drift.radius", 2.0 * core);
    const double delta = cfg.get_double("delta", 0.004);
    const int K = cfg.get_int("K", static_cast<int>(std::lround(4.0 / (strength * delta))));
    const int record_every = std::max(1, K / 20);
    // coalescence scale for the discrete reflection walk; the continuous-time
    // limit takes eps_reflect -> 0
    const double eps_reflect =
        cfg.get_double("eps_reflect", std::sqrt(delta * static_cast<double>(m->dim())));

    // Drift dissipative only beyond the core: beta = strength (1 - core/d) Log_x(x*)
    // outside, zero inside. Pairs inside the core see no contraction (q = 0),
    // which is the regime where the reflection coupling is load-bearing.
    const Point x_star = m->origin();
    walkers::DriftField beta;
    beta.eval = [mp = m.get(), x_star, strength, core](const Point& x) -> walkers::Tangent {
        const double dist = mp->distance(x, x_star);
        if (dist <= core) return mp->zero_tangent(x);
        walkers::Tangent u = mp->log(x, x_star);
        u.v *= strength * (1.0 - core / dist);
        return u;
    };
    beta.L_beta_prime = strength;
    beta.dissipativity = walkers::DriftField::Dissipativity{strength, 0.0, radius, x_star};
    const Point x0 = offset_point(*m, x_star, radius, 0);
    const Point y0 = offset_point(*m, x_star, -radius, 0);

    coupling::LyapunovParams params;
    params.m = strength;
    params.q = 0.0;
    params.radius = radius;
    params.L_Ric = m->ricci_lower_bound();
    params.eps = 0.0;
    const coupling::LyapunovFunction f(params);

    std::vector<int> marks;
    for (int k = 0; k <= K; k += record_every) marks.push_back(k);
    if (marks.back() != K) marks.push_back(K);

    std::vector<std::vector<double>> f_reflect(marks.size(), std::vector<double>(replicas));
    std::vector<double> f_sync_term(replicas);
    ReplicaAborts aborts;
    parallel_replicas(replicas, workers, [&](int r) {
        RngStream rng_r = RngStream::substream(seed, r, 0x726566);
        const auto series = coupling::coupled_run(*m, x0, y0, beta, delta, K,
                                                  coupling::CouplingMode::reflect, f, rng_r,
                                                  eps_reflect);
        RngStream rng_s = RngStream::substream(seed, r, 0x726566); // paired gaussians
        const auto sync = coupling::coupled_run(*m, x0, y0, beta, delta, K,
                                                coupling::CouplingMode::sync, f, rng_s,
                                                eps_reflect);
        if (series.aborted || sync.aborted) {
            aborts.count++;
            for (std::size_t j = 0; j < marks.size(); ++j) f_reflect[j][r] = f.f(0.0);
            f_sync_term[r] = f.f(0.0);
            return;
        }
        for (std::size_t j = 0; j < marks.size(); ++j) f_reflect[j][r] = series.lyap[marks[j]];
        f_sync_term[r] = sync.lyap.back();
    });

    ExperimentResult res;
    res.name = "coupling";
    res.abort_fraction = aborts.fraction(replicas);
    std::vector<diagnostics::MeanSE> stats(marks.size());
    for (std::size_t j = 0; j < marks.size(); ++j) {
        stats[j] = diagnostics::mean_se(f_reflect[j]);
        res.rows.push_back({res.name, m->name(), marks[j] * delta,
                            static_cast<std::uint64_t>(replicas), stats[j].mean, stats[j].se,
                            std::nullopt, true});
    }
    double worst_increase = -1e300;
    for (std::size_t j = 0; j + 1 < marks.size(); ++j) {
        const double band =
            3.0 * std::sqrt(stats[j].se * stats[j].se + stats[j + 1].se * stats[j + 1].se);
        worst_increase = std::max(worst_increase, stats[j + 1].mean - stats[j].mean - band);
    }
    res.assertions.push_back(make_assert("lyapunov_series.monotone_within_band", worst_increase,
                                         0.0, "<="));
    res.assertions.push_back(make_assert("lyapunov_series.terminal_ratio",
                                         stats.back().mean / stats.front().mean, 0.5, "<"));
    const auto sync_ms = diagnostics::mean_se(f_sync_term);
    res.rows.push_back({res.name, m->name(), K * delta, static_cast<std::uint64_t>(replicas),
                        sync_ms.mean, sync_ms.se, std::nullopt, true});
    res.assertions.push_back(make_assert(
        "reflect_vs_sync.terminal_gap",
        stats.back().mean - sync_ms.mean - 3.0 * std::sqrt(stats.back().se * stats.back().se +
                                                           sync_ms.se * sync_ms.se),
        0.0, "<="));
    res.assertions.push_back(make_assert("abort_fraction", res.abort_fraction, res.abort_limit, "<="));
    for (auto& row : res.rows) row.pass = res.all_pass();
    return res;
}

// ---------------------------------------------------------------------------
// clt: tangent-walk retraction rate and gaussianization of the endpoint law

ExperimentResult run_clt(const Config& cfg) {
    auto m = manifold_from(cfg);
    const int d = m->dim();
    const std::uint64_t seed = cfg.get_u64("seed", 42);
    const int workers = cfg.get_int("workers", default_workers());
    const int rate_replicas = cfg.get_int("rate.replicas", 1500);
    const int probe_replicas = cfg.get_int("probe.replicas", 4000);
    const brownian::NoiseModel noise = noise_from(cfg, d, "rademacher");

    const Point y0 = m->origin();
    const Frame E0 = m->reference_frame(y0);
    const walkers::DriftField beta = walkers::zero_drift(*m);

    ExperimentResult res;
    res.name = "clt";
    ReplicaAborts aborts;
    int total = 0;

    // retraction rate: E d(ytilde_K, y_K) ~ T^{3/2} with delta = T^3
    std::vector<double> Ts = cfg.get_double_list("grid.T", {0.25, 0.125, 0.0625, 0.03125});
    std::sort(Ts.rbegin(), Ts.rend());
    std::vector<diagnostics::RatePoint> pts;
    for (std::size_t ti = 0; ti < Ts.size(); ++ti) {
        const double T = Ts[ti];
        const double delta = T * T * T;
        const int K = static_cast<int>(std::lround(T / delta));
        std::vector<double> dist(rate_replicas, 0.0);
        std::vector<int> ok(rate_replicas, 0);
        parallel_replicas(rate_replicas, workers, [&](int r) {
            RngStream rng = RngStream::substream(seed, r, derive_key(0x636c74, ti));
            const auto pair =
                walkers::coupled_nongaussian_tangent(*m, y0, E0, beta, noise, delta, K, rng);
            if (pair.aborted) {
                aborts.count++;
                return;
            }
            ok[r] = 1;
            dist[r] = m->distance(pair.walk.endpoint(), pair.tangent.retracted.endpoint());
        });
        total += rate_replicas;
        std::vector<double> kept;
        for (int r = 0; r < rate_replicas; ++r)
            if (ok[r]) kept.push_back(dist[r]);
        const auto ms = diagnostics::mean_se(kept);
        pts.push_back({T, ms.mean, ms.se});
        res.rows.push_back({res.name, m->name(), T, kept.size(), ms.mean, ms.se, std::nullopt,
                            true});
    }
    const auto fit = diagnostics::fit_rate(pts);
    res.rows.front().slope = fit.slope;
    push_range_assert(res.assertions, "retraction_rate.slope", fit.slope,
                      cfg.get_double("slope.lo", 1.3), cfg.get_double("slope.hi", 1.7));

    // gaussianization: energy distance of z_K / sqrt(K delta) strictly
    // decreasing in K at fixed horizon
    const double T_fix = cfg.get_double("probe.T", 0.25);
    std::vector<int> Ks = cfg.get_int_list("grid.K", {4, 16, 64, 256});
    std::vector<double> energies;
    for (std::size_t ki = 0; ki < Ks.size(); ++ki) {
        const int K = Ks[ki];
        const double delta = T_fix / K;
        std::vector<Eigen::VectorXd> ends(probe_replicas);
        std::vector<int> ok(probe_replicas, 0);
        parallel_replicas(probe_replicas, workers, [&](int r) {
            // common random numbers across the K grid stabilize the ordering
            RngStream rng = RngStream::substream(seed, r, 0x7a4b);
            const auto walk = walkers::tangent_walk(*m, y0, E0, beta, noise, delta, K, rng);
            if (walk.aborted) {
                aborts.count++;
                return;
            }
            ok[r] = 1;
            ends[r] = walk.z.back();
        });
        total += probe_replicas;
        std::vector<Eigen::VectorXd> kept;
        for (int r = 0; r < probe_replicas; ++r)
            if (ok[r]) kept.push_back(ends[r]);
        const auto rep = diagnostics::clt_probe(kept, T_fix, derive_key(seed, 0x70726f62, ki));
        energies.push_back(rep.energy);
        res.rows.push_back({res.name, m->name(), static_cast<double>(K), kept.size(), rep.energy,
                            0.0, rep.cov_deviation, true});
    }
    double worst_step = -1e300;
    for (std::size_t j = 0; j + 1 < energies.size(); ++j)
        worst_step = std::max(worst_step, energies[j + 1] - energies[j]);
    res.assertions.push_back(make_assert("clt_probe.energy_strictly_decreasing", worst_step, 0.0,
                                         "<"));

    res.abort_fraction = aborts.fraction(total);
    res.assertions.push_back(make_assert("abort_fraction", res.abort_fraction, res.abort_limit, "<="));
    for (auto& row : res.rows) row.pass = res.all_pass();
    return res;
}

// ---------------------------------------------------------------------------
// embedding: corrected-step residual rates and the generator sign identity

ExperimentResult run_embedding(const Config& cfg) {
    const int d = cfg.get_int("metric.dim", 3);
    Eigen::VectorXd weights(d);
    {
        std::vector<double> w = cfg.get_double_list("metric.weights", {1.0, 0.6, 0.3});
        for (int i = 0; i < d; ++i) weights[i] = w[i % w.size()];
    }
    const embedding::DiagExpMetric metric(d, weights, cfg.get_double("metric.box", 2.0));
    const std::uint64_t seed = cfg.get_u64("seed", 42);
    const int replicas = cfg.get_int("replicas", 2000);
    const int workers = cfg.get_int("workers", default_workers());
    const double h = cfg.get_double("h", 1e-2);

    Eigen::VectorXd x0(d);
    {
        std::vector<double> x = cfg.get_double_list("x0", {0.2, -0.1, 0.3});
        for (int i = 0; i < d; ++i) x0[i] = x[i % x.size()];
    }
    const Eigen::VectorXd beta0 = -x0;
    const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(metric.A(x0)).matrixL();

    ExperimentResult res;
    res.name = "embedding";
    std::vector<double> deltas = cfg.get_double_list(
        "grid.delta", {1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256, 1.0 / 512});
    std::sort(deltas.rbegin(), deltas.rend());
    std::vector<diagnostics::RatePoint> raw_pts, corr_pts;
    for (std::size_t di = 0; di < deltas.size(); ++di) {
        const double delta = deltas[di];
        std::vector<double> r1(replicas), r2(replicas);
        parallel_replicas(replicas, workers, [&](int r) {
            RngStream rng = RngStream::substream(seed, r, derive_key(0x656d62, di));
            const Eigen::VectorXd xi = chol * rng.gaussian_vector(d);
            const auto step = embedding::corrected_step(metric, x0, beta0, xi, delta, h);
            r1[r] = step.residual_raw;
            r2[r] = step.residual_corrected;
        });
        const auto m1 = diagnostics::mean_se(r1);
        const auto m2 = diagnostics::mean_se(r2);
        raw_pts.push_back({delta, m1.mean, m1.se});
        corr_pts.push_back({delta, m2.mean, m2.se});
        res.rows.push_back({res.name, "pullback", delta, static_cast<std::uint64_t>(replicas),
                            m2.mean, m2.se, std::nullopt, true});
    }
    const auto raw_fit = diagnostics::fit_rate(raw_pts);
    const auto corr_fit = diagnostics::fit_rate(corr_pts);
    res.rows.front().slope = corr_fit.slope;
    res.assertions.push_back(
        make_assert("corrected_residual.slope", corr_fit.slope, cfg.get_double("slope.corrected", 1.4), ">="));
    res.assertions.push_back(
        make_assert("raw_residual.slope", raw_fit.slope, cfg.get_double("slope.raw", 0.9), ">="));

    // generator identity pins the sign of phi
    embedding::ScalarField f;
    f.value = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
    f.gradient = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(2.0 * x); };
    f.hessian = [d](const Eigen::VectorXd&) {
        return Eigen::MatrixXd(2.0 * Eigen::MatrixXd::Identity(d, d));
    };
    double canon = 0.0, flipped = 1e300;
    RngStream rng = RngStream::substream(seed, 0, 0x6c6270);
    for (int i = 0; i < 5; ++i) {
        Eigen::VectorXd x = x0;
        if (i > 0)
            for (int j = 0; j < d; ++j) x[j] = 0.8 * (2.0 * rng.uniform() - 1.0);
        canon = std::max(canon, embedding::laplace_beltrami_residual(metric, f, x,
                                                                    embedding::PhiSign::canonical));
        flipped = std::min(flipped, embedding::laplace_beltrami_residual(
                                        metric, f, x, embedding::PhiSign::flipped));
    }
    res.rows.push_back({res.name, "pullback", 0.0, 5, canon, 0.0, std::nullopt, true});
    res.assertions.push_back(make_assert("laplace_beltrami.canonical_residual", canon, 1e-5, "<"));
    res.assertions.push_back(make_assert("laplace_beltrami.flipped_residual", flipped, 1e-1, ">"));
    for (auto& row : res.rows) row.pass = res.all_pass();
    return res;
}

// ---------------------------------------------------------------------------
// lyapunov: numerical properties of the smoothed distance reweighting

ExperimentResult run_lyapunov(const Config& cfg) {
    coupling::LyapunovParams p;
    p.m = cfg.get_double("m", 1.0);
    p.q = cfg.get_double("q", 0.4);
    p.L_Ric = cfg.get_double("L_Ric", 0.0);
    p.radius = cfg.get_double("radius", 1.0);
    p.eps = cfg.get_double("eps", 0.2);
    const coupling::LyapunovFunction f(p);

    const int grid_n = cfg.get_int("grid.n", 1000);
    const double r_max = cfg.get_double("grid.r_max", 2.5 * p.radius);
    const double fd = cfg.get_double("fd.step", 3e-3);
    const double tol = cfg.get_double("tolerance", 1e-4);

    const double L = p.L();
    const double lo_band = 0.5 * std::exp(-0.5 * (1.0 + p.eps) * L * p.radius * p.radius);
    const double p4_coeff = std::exp(-0.5 * (1.0 + p.eps) * L * p.radius * p.radius) /
                            ((1.0 + p.eps) * (1.0 + p.eps) * p.radius * p.radius);

    double v1 = -1e300, v2 = -1e300, v3 = -1e300, v4 = -1e300, v4p = -1e300, fd_dev = 0.0;
    const double edge = p.radius + p.eps;
    for (int i = 1; i <= grid_n; ++i) {
        const double r = r_max * i / grid_n;
        const double fr = f.f(r);
        v1 = std::max({v1, lo_band - fr / r, fr / r - 1.0});
        // mu has kinks at R and R+eps where central differences of f'' break
        // down; the derivative checks step off that null set.
        if (std::abs(r - p.radius) < 2.0 * fd || std::abs(r - edge) < 2.0 * fd) continue;
        const double fp = (f.f(r + fd) - f.f(r - fd)) / (2.0 * fd);
        const double fpp = (f.f(r + fd) - 2.0 * fr + f.f(r - fd)) / (fd * fd);
        v2 = std::max({v2, lo_band - fp, fp - 1.0});
        v3 = std::max({v3, fpp, -4.0 * std::pow(L, 1.5) - fpp});
        if (r <= p.radius) {
            // The drift inequality in the form the psi definition satisfies:
            // 2 f'' + L r f' <= -2c f (the printed single-f'' variant is kept
            // as a supplementary check; it only holds on part of the range).
            v4 = std::max(v4, 2.0 * fpp + L * r * fp + 2.0 * p4_coeff * fr);
            v4p = std::max(v4p, fpp + L * r * fp + p4_coeff * fr);
        }
        fd_dev = std::max({fd_dev, std::abs(fp - f.fprime(r)), std::abs(fpp - f.fsecond(r))});
    }

    ExperimentResult res;
    res.name = "lyapunov";
    const double scale3 = std::max(1.0, 4.0 * std::pow(L, 1.5));
    res.rows.push_back({res.name, "-", p.eps, static_cast<std::uint64_t>(grid_n), v1, 0.0,
                        std::nullopt, true});
    res.assertions.push_back(make_assert("f.property1_band", v1, tol, "<="));
    res.assertions.push_back(make_assert("f.property2_derivative_band", v2, tol, "<="));
    res.assertions.push_back(make_assert("f.property3_concavity", v3, tol * scale3, "<="));
    res.assertions.push_back(make_assert("f.property4_drift_inequality", v4, tol, "<="));
    res.assertions.push_back(make_assert("f.property4_printed_form", v4p, tol, "<="));
    res.assertions.push_back(
        make_assert("f.finite_difference_agreement", fd_dev, 10.0 * tol, "<="));
    for (auto& row : res.rows) row.pass = res.all_pass();
    return res;
}

// ---------------------------------------------------------------------------
// tails: empirical exceedance against the declared-constant envelopes

ExperimentResult run_tails(const Config& cfg) {
    auto m = manifold_from(cfg);
    const int d = m->dim();
    const std::uint64_t seed = cfg.get_u64("seed", 42);
    const int replicas = cfg.get_int("replicas", 2000);
    const int workers = cfg.get_int("workers", default_workers());
    const double strength = cfg.get_double("drift.strength", 1.0);
    const double radius = cfg.get_double("drift.radius", M_PI / 8);
    const double L_R = m->curvature_bound();

    const Point x_star = m->origin();
    const walkers::DriftField beta = walkers::log_drift(*m, x_star, strength, 0.0, radius);
    const Point x0 = offset_point(*m, x_star, 2.0 * radius, 0);

    ExperimentResult res;
    res.name = "tails";
    ReplicaAborts aborts;
    int total = 0;

    struct Run {
        std::string label;
        brownian::NoiseKind kind;
        double delta;
        int K;
        bool dissipative;
    };
    const double delta_dis = cfg.get_double("delta", 1.0 / 256);
    const int K_dis = cfg.get_int("K", 512);
    const double delta_lip = cfg.get_double("lipschitz.delta", 1.0 / 1024);
    const int K_lip = cfg.get_int("lipschitz.K", 64);
    const std::vector<Run> runs = {
        {"gaussian-dissipative", brownian::NoiseKind::gaussian, delta_dis, K_dis, true},
        {"rademacher-dissipative", brownian::NoiseKind::rademacher, delta_dis, K_dis, true},
        {"rademacher-lipschitz", brownian::NoiseKind::rademacher, delta_lip, K_lip, false},
    };

    const walkers::DriftField zero = walkers::zero_drift(*m);
    for (std::size_t ri = 0; ri < runs.size(); ++ri) {
        const Run& run = runs[ri];
        brownian::NoiseModel noise;
        noise.kind = run.kind;
        noise.dim = d;
        const walkers::DriftField& drift = run.dissipative ? beta : zero;
        const Point start = run.dissipative ? x0 : x_star;
        const Point& center = run.dissipative ? x_star : start;

        const int marks = 8;
        std::vector<double> max_exc(replicas, 0.0);
        std::vector<std::vector<double>> d_sq(marks, std::vector<double>(replicas, 0.0));
        std::vector<int> ok(replicas, 0);
        parallel_replicas(replicas, workers, [&](int r) {
            RngStream rng = RngStream::substream(seed, r, derive_key(0x74616c, ri));
            const auto traj =
                walkers::nongaussian_walk(*m, start, drift, noise, run.delta, run.K, rng);
            if (traj.aborted) {
                aborts.count++;
                return;
            }
            ok[r] = 1;
            double mx = 0.0;
            for (std::size_t k = 0; k < traj.points.size(); ++k) {
                const double dist = m->distance(traj.points[k], center);
                mx = std::max(mx, dist);
                const std::size_t mark = k * marks / traj.points.size();
                d_sq[mark][r] = std::max(d_sq[mark][r], dist * dist);
            }
            max_exc[r] = mx;
        });
        total += replicas;
        std::vector<double> kept;
        for (int r = 0; r < replicas; ++r)
            if (ok[r]) kept.push_back(max_exc[r]);
        double rms = 0.0;
        for (double v : kept) rms += v * v;
        rms = std::sqrt(rms / kept.size());

        const double L_xi_sq = run.kind == brownian::NoiseKind::gaussian
                                   ? static_cast<double>(d)
                                   : static_cast<double>(d); // bounded kinds have |xi|^2 = d
        std::function<double(double)> envelope;
        if (run.dissipative) {
            // 32 K delta m exp(m R^2 / s + 2 L_R s / m - m r^2 / (32 s)), s = d or L_xi^2
            envelope = [=](double r) {
                return 32.0 * run.K * run.delta * strength *
                       std::exp(strength * radius * radius / L_xi_sq +
                                2.0 * L_R * L_xi_sq / strength -
                                strength * r * r / (32.0 * L_xi_sq));
            };
        } else {
            // exp((32 K^2 delta^2 L_beta^2 + 8 K delta L_xi^2 - t^2) / (128 K delta L_xi^2))
            envelope = [=](double t) {
                const double kd = run.K * run.delta;
                return std::exp((8.0 * kd * L_xi_sq - t * t) / (128.0 * kd * L_xi_sq));
            };
        }
        const std::vector<double> thresholds = {2.0 * rms, 3.0 * rms};
        const auto probes = diagnostics::tail_probe(kept, thresholds, envelope);
        for (const auto& pbt : probes) {
            const double se =
                std::sqrt(std::max(1e-12, pbt.empirical * (1.0 - pbt.empirical) / kept.size()));
            res.rows.push_back({res.name, run.label, pbt.threshold, kept.size(), pbt.empirical, se,
                                std::nullopt, pbt.ok});
            res.assertions.push_back(make_assert("tail." + run.label + (pbt.threshold > 2.5 * rms
                                                                            ? ".3rms"
                                                                            : ".2rms"),
                                                 pbt.empirical, pbt.envelope, "<="));
        }

        if (run.dissipative && run.kind == brownian::NoiseKind::gaussian) {
            // L2 envelope: exp(-k delta m) d0^2 + (1-(1-dm)^k)/(dm) (2048 d L_R Lb'^4 d^2 / m^5 + 4 d Lb' R^2)
            const double d0_sq = std::pow(m->distance(x0, x_star), 2);
            double worst = -1e300;
            for (int mark = 0; mark < marks; ++mark) {
                std::vector<double> vals;
                for (int r = 0; r < replicas; ++r)
                    if (ok[r]) vals.push_back(d_sq[mark][r]);
                const auto ms = diagnostics::mean_se(vals);
                const double k_eff = (mark + 1.0) / marks * run.K;
                const double rate = strength * run.delta;
                const double env =
                    std::exp(-k_eff * rate) * d0_sq +
                    (1.0 - std::pow(1.0 - rate, k_eff)) / rate *
                        (2048.0 * run.delta * L_R * std::pow(beta.L_beta_prime, 4) * d * d /
                             std::pow(strength, 5) +
                         4.0 * run.delta * beta.L_beta_prime * radius * radius);
                worst = std::max(worst, ms.mean - env);
                res.rows.push_back({res.name, "l2-envelope", k_eff * run.delta,
                                    vals.size(), ms.mean, ms.se, std::nullopt, true});
            }
            res.assertions.push_back(make_assert("l2_envelope.max_excess", worst, 0.0, "<="));
        }
    }

    res.abort_fraction = aborts.fraction(total);
    res.assertions.push_back(make_assert("abort_fraction", res.abort_fraction, res.abort_limit, "<="));
    for (auto& row : res.rows) row.pass = res.all_pass();
    return res;
}

} // namespace

// ---------------------------------------------------------------------------

bool ExperimentResult::all_pass() const {
    for (const auto& a : assertions)
        if (!a.pass) return false;
    return true;
}

const std::vector<ExperimentInfo>& catalog() {
    static const std::vector<ExperimentInfo> infos = {
        {"rate-one-step",
         "fits the T^(3/2) one-step discretization rate of geometric Euler-Murayama against the "
         "deep dyadic reference",
         "walkers",
         {{"manifold.kind", "sphere"}, {"manifold.dim", "2"}, {"manifold.scale", "1"},
          {"drift.strength", "1"}, {"start.distance", "0.5"}, {"grid.T", "2^-2,2^-3,2^-4,2^-5,2^-6"},
          {"reference.level", "12"}, {"replicas", "2000"}, {"slope.lo", "1.3"}, {"slope.hi", "1.7"}},
         run_rate_one_step},
        {"refine",
         "measures the 2^-i contraction of coupled adjacent dyadic refinements sharing one "
         "Brownian path",
         "walkers",
         {{"manifold.kind", "sphere"}, {"T", "2^-5"}, {"level.lo", "3"}, {"level.hi", "8"},
          {"reference.level", "12"}, {"replicas", "2000"}, {"slope.lo", "-1.4"},
          {"slope.hi", "-0.6"}},
         run_refine},
        {"trivialize-check",
         "verifies tangent-space geodesic closure, the Jacobi end-value tensor spectra, triangle "
         "distortion, and the stacked matrix-ODE block envelopes",
         "trivialize",
         {{"closure.samples", "1000"}, {"distortion.samples", "10000"}, {"matode.paths", "1000"},
          {"h", "1e-3"}, {"ratio.lo", "3.5"}, {"ratio.hi", "4.5"}},
         run_trivialize_check},
        {"coupling",
         "checks contraction of the Lyapunov-weighted distance under the reflection coupling "
         "with a dissipative drift",
         "coupling",
         {{"manifold.kind", "sphere"}, {"drift.strength", "1"}, {"drift.core", "0.3"},
          {"drift.radius", "0.6"}, {"delta", "0.004"}, {"replicas", "1000"}},
         run_coupling},
        {"clt",
         "fits the T^(3/2) tangent-walk retraction rate and checks gaussianization of the scaled "
         "endpoint law in K",
         "walkers",
         {{"manifold.kind", "sphere"}, {"noise.kind", "rademacher"},
          {"grid.T", "2^-2,2^-3,2^-4,2^-5"}, {"grid.K", "4,16,64,256"}, {"probe.T", "0.25"},
          {"rate.replicas", "1500"}, {"probe.replicas", "4000"}},
         run_clt},
        {"embedding",
         "verifies corrected-step residual rates on the pullback metric and pins the generator "
         "sign of the Christoffel traces",
         "embedding",
         {{"metric.dim", "3"}, {"metric.weights", "1,0.6,0.3"}, {"metric.box", "2"},
          {"grid.delta", "2^-5,2^-6,2^-7,2^-8,2^-9"}, {"replicas", "2000"},
          {"slope.corrected", "1.4"}, {"slope.raw", "0.9"}},
         run_embedding},
        {"lyapunov",
         "checks the four numerical properties of the smoothed Lyapunov distance reweighting on "
         "a dense grid",
         "coupling",
         {{"m", "1"}, {"q", "0.4"}, {"L_Ric", "0"}, {"radius", "1"}, {"eps", "0.2"},
          {"grid.n", "1000"}, {"tolerance", "1e-4"}},
         run_lyapunov},
        {"tails",
         "compares empirical max-excursion exceedance against the dissipative and Lipschitz "
         "subgaussian envelopes plus the L2 confinement bound",
         "diagnostics",
         {{"manifold.kind", "sphere"}, {"drift.strength", "1"},
          {"drift.radius", "0.39269908169872414"}, {"delta", "2^-8"}, {"K", "512"},
          {"lipschitz.delta", "2^-10"}, {"lipschitz.K", "64"}, {"replicas", "2000"}},
         run_tails},
    };
    return infos;
}

const ExperimentInfo* find_experiment(const std::string& name) {
    for (const auto& e : catalog())
        if (e.name == name) return &e;
    return nullptr;
}

ExperimentResult run_experiment(const Config& cfg) {
    const std::string name = cfg.require_string("experiment");
    const ExperimentInfo* info = find_experiment(name);
    if (!info) throw ConfigError("unknown experiment '" + name + "'");
    return info->run(cfg);
}

std::string render_csv(const ExperimentResult& r) {
    std::ostringstream os;
    os << "experiment,manifold,scale-parameter,replicate-count,mean,standard-error,slope,pass\n";
    for (const auto& row : r.rows) {
        os << row.experiment << ',' << row.manifold << ',' << fmt17(row.scale) << ','
           << row.replicates << ',' << fmt17(row.mean) << ',' << fmt17(row.se) << ',';
        if (row.slope) os << fmt17(*row.slope);
        os << ',' << (row.pass ? 1 : 0) << '\n';
    }
    return os.str();
}

std::string render_summary(const ExperimentResult& r) {
    std::ostringstream os;
    os << "experiment=" << r.name << '\n';
    os << "abort_fraction=" << fmt17(r.abort_fraction) << '\n';
    for (const auto& a : r.assertions) {
        os << "assert." << a.name << ".measured=" << fmt17(a.measured) << '\n';
        os << "assert." << a.name << ".bound=" << fmt17(a.bound) << '\n';
        os << "assert." << a.name << ".relation=" << a.relation << '\n';
        os << "assert." << a.name << ".verdict=" << (a.pass ? "pass" : "fail") << '\n';
    }
    os << "overall=" << (r.all_pass() ? "pass" : "fail") << '\n';
    return os.str();
}

std::string list_experiments_text() {
    std::ostringstream os;
    for (const auto& e : catalog()) {
        os << e.name << " [" << e.module << "]\n    " << e.description << "\n";
        for (const auto& kv : e.defaults) os << "    " << kv.first << " = " << kv.second << '\n';
    }
    return os.str();
}

int write_artifacts(const ExperimentResult& r, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream csv(out_dir + "/" + r.name + ".csv", std::ios::binary);
        csv << render_csv(r);
    }
    {
        std::ofstream sum(out_dir + "/" + r.name + ".summary", std::ios::binary);
        sum << render_summary(r);
    }
    if (r.abort_exceeded()) return 3;
    return r.all_pass() ? 0 : 1;
}

void parallel_replicas(int n, int workers, const std::function<void(int)>& body) {
    workers = std::max(1, std::min(workers, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
            } catch (...) {
                errors[w] = std::current_exception();
                next.store(n);
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace geomsde::experiments
