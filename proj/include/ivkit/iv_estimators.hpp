#pragma once

#include "ivkit/data_model.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace ivkit {

enum class IvMethod { iv_ratio, ils, tsls, liml };

std::string_view to_string(IvMethod m);

/// Fit of Y = beta0 + beta1 X + beta2'V + e with X endogenous.
struct IvFit {
    double beta1 = 0.0;
    double beta0 = 0.0;
    VectorXd beta2;
    /// Aligned with (beta0, beta1, beta2...).
    VectorXd std_errors;
    /// k-class parameter; 1 for TSLS, the smallest generalized eigenvalue for LIML.
    double kappa = 1.0;
    IvMethod method = IvMethod::tsls;
    Index n = 0;
    /// Structural residual variance used in the standard errors.
    double sigma2 = 0.0;
    std::vector<std::string> warnings;

    double beta1_se() const { return std_errors(1); }
};

struct GroupMeans {
    std::array<double, 2> mean_y{};
    std::array<double, 2> mean_x{};
    std::array<Index, 2> arm_sizes{};
};

/// Arm means for a dataset whose single instrument is coded 0/1.
GroupMeans group_means(const Dataset& d);

/// (ybar_1 - ybar_0) / (xbar_1 - xbar_0).
double wald_from_means(const GroupMeans& g);

/// cov(Y,Z) / cov(X,Z); one instrument, no covariates.
IvFit iv_ratio(const Dataset& d);

/// Ratio of the instrument coefficients in the two reduced forms; one instrument.
IvFit ils(const Dataset& d);

/// Regress X on (1, Z, V), then Y on (1, Xhat, V).
IvFit tsls(const Dataset& d);

/// k-class estimator with k set to the smallest root of
/// det(W'M_V W - k W'M_{ZV} W) = 0, W = (Y, X).
IvFit liml(const Dataset& d);

/// General k-class estimate at a fixed k (k = 0 is OLS, k = 1 is TSLS).
IvFit k_class(const Dataset& d, double k);

/// Smallest generalized eigenvalue used by LIML.
double liml_kappa(const Dataset& d);

struct PerInstrumentEstimate {
    std::string instrument;
    /// Absent when the single-instrument first stage is degenerate.
    std::optional<double> estimate;
    double first_stage_coefficient = 0.0;
};

/// One just-identified estimate per instrument, each using that instrument
/// alone with all covariates. A dispersion diagnostic for over-identified models.
std::vector<PerInstrumentEstimate> per_instrument_estimates(const Dataset& d);

EstimateReport to_report(const IvFit& fit);

}  // namespace ivkit
