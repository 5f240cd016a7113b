#pragma once

#include "ivkit/data_model.hpp"
#include "ivkit/interval_set.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ivkit {

/// 95% point of chi-squared(1), as conventionally rounded.
inline constexpr double kArCritical95 = 3.84;

/// How s2(b), the residual variance in the AR denominator, is formed.
enum class ArVariance {
    /// sum (u_i - ubar)^2 / N with u = Y - bX.
    demeaned,
    /// sum u_i^2 / N.
    uncentered,
};

/// Anderson-Rubin statistic for H0: beta1 = b with one instrument and no
/// covariates:
///   (N^{-1/2} sum (Z_i - zbar)(Y_i - b X_i))^2 / (N^{-1} sum (Z_i - zbar)^2 * s2(b))
double ar_statistic(const Dataset& d, double b, ArVariance variance = ArVariance::demeaned);

/// K-instrument form N * R^2 from regressing Y - bX on (1, Z); equals
/// ar_statistic when K = 1 and is asymptotically chi-squared(K) at the truth.
double ar_statistic_multi(const Dataset& d, double b);

/// 3.84 for one instrument, otherwise the 95% chi-squared(K) quantile.
double ar_critical_value(Index k_instruments);

enum class ArInversion {
    /// Closed form: AR(b) <= c is a quadratic inequality in b.
    analytic,
    /// Scan 10,001 points over location +- 50 scales and bisect each crossing.
    grid,
};

/// {b : AR(b) <= critical_value}. May be a bounded interval, two rays, the
/// whole line or empty.
IntervalSet ar_confidence_set(const Dataset& d, double critical_value = kArCritical95,
                              ArInversion method = ArInversion::analytic,
                              ArVariance variance = ArVariance::demeaned);

struct ArCurve {
    double critical_value = kArCritical95;
    std::vector<double> grid;
    std::vector<double> values;
};

ArCurve ar_curve(const Dataset& d, std::span<const double> grid, double critical_value = kArCritical95,
                 ArVariance variance = ArVariance::demeaned);

/// Linear IV Monte Carlo design: Z ~ N(0, I_K), X = Z pi + eta,
/// Y = beta1 X + eps, corr(eps, eta) = endogeneity, unit error variances,
/// pi_k = instrument_strength / sqrt(K).
struct McConfig {
    Index n = 500;
    Index k_instruments = 1;
    double beta1_true = 1.0;
    double instrument_strength = 0.5;
    double endogeneity = 0.5;
    Index replications = 1000;
    std::uint64_t master_seed = 20240101;
    bool retain_replications = false;

    void validate() const;
    /// Population concentration parameter n * pi'pi.
    double concentration() const { return static_cast<double>(n) * instrument_strength * instrument_strength; }
};

McConfig parse_mc_config(std::string_view text, std::string_view source = "<config>");
McConfig load_mc_config(const std::string& path);
std::string to_text(const McConfig& cfg);

/// One draw from the McConfig design with the given stream seed.
Dataset simulate_linear_iv(const McConfig& cfg, std::uint64_t seed);

struct EstimatorSummary {
    std::string name;
    /// NaN for the AR test, which has no point estimate.
    double median_estimate = 0.0;
    double median_bias = 0.0;
    /// Share of replications whose nominal-95% interval covers beta1_true.
    double coverage = 0.0;
    /// Share rejecting H0: beta1 = beta1_true (1 - coverage).
    double rejection_rate = 0.0;
    /// Share rejecting H0: beta1 = 0.
    double rejection_rate_zero = 0.0;
    Index failures = 0;
};

struct ReplicationRecord {
    Index index = 0;
    std::uint64_t seed = 0;
    double ols = 0.0, ols_se = 0.0;
    double tsls = 0.0, tsls_se = 0.0;
    double liml = 0.0, liml_se = 0.0;
    double kappa = 0.0;
    double ar_at_truth = 0.0;
    double ar_at_zero = 0.0;
};

struct McReport {
    McConfig config;
    double concentration = 0.0;
    double ar_critical_value = 0.0;
    /// ols, tsls, liml, ar, in that order.
    std::vector<EstimatorSummary> estimators;
    std::vector<ReplicationRecord> replications;

    const EstimatorSummary& summary(std::string_view name) const;
};

/// Runs cfg.replications draws. Replication r uses stream_seed(master_seed, r)
/// and results are reduced in index order, so the report is bit-identical for
/// any thread count.
McReport run_weak_iv_study(const McConfig& cfg, unsigned threads = 1);

}  // namespace ivkit
