#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

namespace geomsde::diagnostics {

struct MeanSE {
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};
MeanSE mean_se(const std::vector<double>& xs);

struct RatePoint {
    double scale = 0.0;
    double mean = 0.0;
    double se = 0.0;
};

struct RateFit {
    std::vector<RatePoint> points; // scales strictly decreasing
    double slope = 0.0;
    double intercept = 0.0;
    double slope_halfwidth = 0.0; // 3 * OLS standard error of the slope
};

// Least squares on (log scale, log mean). Throws PreconditionError on fewer
// than 3 points or non-positive means.
RateFit fit_rate(std::vector<RatePoint> points);

// Two-sample energy statistic (V-statistic normalization, so identical
// multisets give exactly zero):
//   2/(nm) sum |a-b| - 1/n^2 sum |a-a'| - 1/m^2 sum |b-b'|
double energy_distance(const std::vector<Eigen::VectorXd>& A,
                       const std::vector<Eigen::VectorXd>& B);

// Permutation-null quantile of the energy statistic (fixed seed, 200
// permutations by default).
double energy_permutation_threshold(const std::vector<Eigen::VectorXd>& A,
                                    const std::vector<Eigen::VectorXd>& B, double quantile = 0.99,
                                    int permutations = 200, std::uint64_t seed = 0x9e3779b9);

// Energy distance of a sample to the standard Gaussian N(0, I_d) with the
// cross and reference terms in closed form (E|c - G| via Kummer's 1F1) and
// the unbiased within-sample U-statistic; zero in expectation iff the sample
// law is N(0, I_d).
double gaussian_energy_distance(const std::vector<Eigen::VectorXd>& samples);
// E |c - G| for G ~ N(0, I_d)
double expected_norm_to_gaussian(double c_norm, int d);

// One-sample Kolmogorov-Smirnov statistic against the standard normal CDF.
double ks_statistic_normal(std::vector<double> samples);
// Asymptotic 1% critical value 1.6276 / sqrt(n).
double ks_critical_1pct(std::size_t n);

double standard_normal_cdf(double x);

// Operator-norm deviation of the sample covariance from the identity.
double covariance_deviation(const std::vector<Eigen::VectorXd>& samples);

struct CltReport {
    double energy = 0.0;            // analytic-reference energy distance to N(0, I)
    double energy_two_sample = 0.0; // two-sample statistic vs a reference draw (subsampled)
    double energy_null = 0.0;       // permutation 99% threshold for the two-sample form
    double max_ks = 0.0;            // worst per-coordinate KS statistic
    double ks_critical = 0.0;
    double cov_deviation = 0.0;     // |cov - I|_2 of the scaled endpoints
};

// Compares tangent-walk endpoints z_K / sqrt(K delta) against a standard
// Gaussian reference sample of equal size (fixed seed).
CltReport clt_probe(const std::vector<Eigen::VectorXd>& endpoints, double K_delta,
                    std::uint64_t seed = 0x51u);

struct TailPoint {
    double threshold = 0.0;
    double empirical = 0.0; // fraction of replicas with max excursion >= threshold
    double envelope = 0.0;  // declared-constant bound evaluated at threshold
    bool ok = false;        // empirical <= envelope
};

// Empirical exceedance of max-excursion statistics against an analytic
// envelope evaluated at each threshold.
std::vector<TailPoint> tail_probe(const std::vector<double>& max_excursions,
                                  const std::vector<double>& thresholds,
                                  const std::function<double(double)>& envelope);

} // namespace geomsde::diagnostics
