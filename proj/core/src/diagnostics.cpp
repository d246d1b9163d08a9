#include "geomsde/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "geomsde/errors.hpp"
#include "geomsde/rng.hpp"

namespace geomsde::diagnostics {

MeanSE mean_se(const std::vector<double>& xs) {
    MeanSE out;
    out.n = xs.size();
    if (xs.empty()) return out;
    out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    if (xs.size() < 2) return out;
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / (xs.size() - 1) / xs.size());
    return out;
}

RateFit fit_rate(std::vector<RatePoint> points) {
    if (points.size() < 3) throw PreconditionError("fit_rate: need at least 3 points");
    std::sort(points.begin(), points.end(),
              [](const RatePoint& a, const RatePoint& b) { return a.scale > b.scale; });
    for (std::size_t i = 1; i < points.size(); ++i)
        if (points[i].scale >= points[i - 1].scale)
            throw PreconditionError("fit_rate: scales must be strictly decreasing");
    const std::size_t n = points.size();
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(points[i].scale > 0.0) || !(points[i].mean > 0.0))
            throw PreconditionError("fit_rate: scales and means must be positive");
        lx[i] = std::log(points[i].scale);
        ly[i] = std::log(points[i].mean);
    }
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    RateFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ly[i] - fit.intercept - fit.slope * lx[i];
        rss += r * r;
    }
    const double dof = std::max<std::size_t>(1, n - 2);
    fit.slope_halfwidth = 3.0 * std::sqrt(rss / dof / sxx);
    fit.points = std::move(points);
    if (!std::isfinite(fit.slope)) throw PreconditionError("fit_rate: slope not finite");
    return fit;
}

namespace {

double sum_pair_norms(const std::vector<Eigen::VectorXd>& A, const std::vector<Eigen::VectorXd>& B) {
    double s = 0.0;
    for (const auto& a : A)
        for (const auto& b : B) s += (a - b).norm();
    return s;
}

double energy_from_indices(const std::vector<Eigen::VectorXd>& pool, const std::vector<int>& idx,
                           std::size_t n) {
    // statistic on pool[idx[0..n)] vs pool[idx[n..)]
    const std::size_t m = idx.size() - n;
    double cross = 0.0, wa = 0.0, wb = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = n; j < idx.size(); ++j) cross += (pool[idx[i]] - pool[idx[j]]).norm();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) wa += (pool[idx[i]] - pool[idx[j]]).norm();
    for (std::size_t i = n; i < idx.size(); ++i)
        for (std::size_t j = n; j < idx.size(); ++j) wb += (pool[idx[i]] - pool[idx[j]]).norm();
    return 2.0 * cross / (static_cast<double>(n) * m) - wa / (static_cast<double>(n) * n) -
           wb / (static_cast<double>(m) * m);
}

} // namespace

double energy_distance(const std::vector<Eigen::VectorXd>& A,
                       const std::vector<Eigen::VectorXd>& B) {
    if (A.empty() || B.empty()) throw PreconditionError("energy_distance: empty sample");
    const double n = static_cast<double>(A.size());
    const double m = static_cast<double>(B.size());
    return 2.0 * sum_pair_norms(A, B) / (n * m) - sum_pair_norms(A, A) / (n * n) -
           sum_pair_norms(B, B) / (m * m);
}

double energy_permutation_threshold(const std::vector<Eigen::VectorXd>& A,
                                    const std::vector<Eigen::VectorXd>& B, double quantile,
                                    int permutations, std::uint64_t seed) {
    std::vector<Eigen::VectorXd> pool = A;
    pool.insert(pool.end(), B.begin(), B.end());
    std::vector<int> idx(pool.size());
    std::iota(idx.begin(), idx.end(), 0);
    RngStream rng(derive_key(seed, 0x7065726dULL));
    std::vector<double> stats(permutations);
    for (int p = 0; p < permutations; ++p) {
        for (std::size_t i = idx.size() - 1; i > 0; --i)
            std::swap(idx[i], idx[rng.below(i + 1)]);
        stats[p] = energy_from_indices(pool, idx, A.size());
    }
    std::sort(stats.begin(), stats.end());
    const std::size_t k = std::min<std::size_t>(stats.size() - 1,
                                                static_cast<std::size_t>(quantile * stats.size()));
    return stats[k];
}

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace {

// Kummer 1F1(a; b; x) for a, b > 0, x >= 0 by the ascending series.
double kummer_1f1(double a, double b, double x) {
    double term = 1.0, sum = 1.0;
    for (int k = 0; k < 600; ++k) {
        term *= (a + k) / ((b + k) * (k + 1.0)) * x;
        sum += term;
        if (term < 1e-16 * sum) break;
    }
    return sum;
}

double mean_chi_norm(int d) { // E|G| for G ~ N(0, I_d)
    return std::sqrt(2.0) * std::tgamma(0.5 * (d + 1)) / std::tgamma(0.5 * d);
}

} // namespace

double expected_norm_to_gaussian(double c_norm, int d) {
    // E|c - G| = E|G| e^{-x} 1F1((d+1)/2; d/2; x), x = |c|^2 / 2
    const double x = 0.5 * c_norm * c_norm;
    return mean_chi_norm(d) * std::exp(-x) * kummer_1f1(0.5 * (d + 1), 0.5 * d, x);
}

double gaussian_energy_distance(const std::vector<Eigen::VectorXd>& samples) {
    if (samples.size() < 2) throw PreconditionError("gaussian_energy_distance: need >= 2 samples");
    const int d = static_cast<int>(samples.front().size());
    const std::size_t n = samples.size();
    double cross = 0.0;
    for (const auto& z : samples) cross += expected_norm_to_gaussian(z.norm(), d);
    cross /= static_cast<double>(n);
    double within = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) within += (samples[i] - samples[j]).norm();
    within *= 2.0 / (static_cast<double>(n) * (n - 1));
    const double ref = std::sqrt(2.0) * mean_chi_norm(d); // E|G - G'|
    return 2.0 * cross - ref - within;
}

double ks_statistic_normal(std::vector<double> samples) {
    if (samples.empty()) throw PreconditionError("ks_statistic_normal: empty sample");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double ks = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double cdf = standard_normal_cdf(samples[i]);
        ks = std::max(ks, std::abs(cdf - static_cast<double>(i) / n));
        ks = std::max(ks, std::abs(static_cast<double>(i + 1) / n - cdf));
    }
    return ks;
}

double ks_critical_1pct(std::size_t n) { return 1.6276 / std::sqrt(static_cast<double>(n)); }

double covariance_deviation(const std::vector<Eigen::VectorXd>& samples) {
    if (samples.empty()) throw PreconditionError("covariance_deviation: empty sample");
    const int d = static_cast<int>(samples.front().size());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (const auto& s : samples) mean += s;
    mean /= static_cast<double>(samples.size());
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (const auto& s : samples) {
        const Eigen::VectorXd c = s - mean;
        cov += c * c.transpose();
    }
    cov /= static_cast<double>(samples.size() - 1);
    return (cov - Eigen::MatrixXd::Identity(d, d)).operatorNorm();
}

CltReport clt_probe(const std::vector<Eigen::VectorXd>& endpoints, double K_delta,
                    std::uint64_t seed) {
    if (endpoints.empty()) throw PreconditionError("clt_probe: empty sample");
    const int d = static_cast<int>(endpoints.front().size());
    const double scale = 1.0 / std::sqrt(K_delta);
    std::vector<Eigen::VectorXd> scaled(endpoints.size());
    for (std::size_t i = 0; i < endpoints.size(); ++i) scaled[i] = scale * endpoints[i];

    CltReport rep;
    rep.energy = gaussian_energy_distance(scaled);

    // two-sample statistic and its permutation null on a bounded subsample
    const std::size_t sub = std::min<std::size_t>(scaled.size(), 300);
    std::vector<Eigen::VectorXd> part(scaled.begin(), scaled.begin() + sub);
    RngStream rng(derive_key(seed, 0x636c74ULL));
    std::vector<Eigen::VectorXd> ref(sub);
    for (auto& r : ref) r = rng.gaussian_vector(d);
    rep.energy_two_sample = energy_distance(part, ref);
    rep.energy_null = energy_permutation_threshold(part, ref, 0.99, 200, seed);
    rep.ks_critical = ks_critical_1pct(scaled.size());
    for (int j = 0; j < d; ++j) {
        std::vector<double> coord(scaled.size());
        for (std::size_t i = 0; i < scaled.size(); ++i) coord[i] = scaled[i][j];
        rep.max_ks = std::max(rep.max_ks, ks_statistic_normal(std::move(coord)));
    }
    rep.cov_deviation = covariance_deviation(scaled);
    return rep;
}

std::vector<TailPoint> tail_probe(const std::vector<double>& max_excursions,
                                  const std::vector<double>& thresholds,
                                  const std::function<double(double)>& envelope) {
    std::vector<TailPoint> out;
    out.reserve(thresholds.size());
    const double n = static_cast<double>(max_excursions.size());
    for (double t : thresholds) {
        TailPoint p;
        p.threshold = t;
        std::size_t count = 0;
        for (double x : max_excursions)
            if (x >= t) ++count;
        p.empirical = count / n;
        p.envelope = envelope(t);
        p.ok = p.empirical <= p.envelope;
        out.push_back(p);
    }
    return out;
}

} // namespace geomsde::diagnostics
