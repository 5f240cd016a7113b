#pragma once

#include "ivkit/data_model.hpp"

#include <string>
#include <utility>
#include <vector>

namespace ivkit {

/// Least-squares fit with homoscedastic covariance. Coefficients are ordered
/// intercept first (when present), then regressors in column order.
struct OlsFit {
    VectorXd coefficients;
    MatrixXd coef_cov;
    /// RSS / (n - p).
    double residual_variance = 0.0;
    Index n = 0;
    std::vector<std::string> regressor_names;
    VectorXd residuals;

    VectorXd std_errors() const { return coef_cov.diagonal().cwiseSqrt(); }
    VectorXd fitted(const VectorXd& y) const { return y - residuals; }
    /// Position of a named coefficient; throws if absent.
    Index index_of(const std::string& name) const;
    double coefficient(const std::string& name) const { return coefficients(index_of(name)); }
    double std_error(const std::string& name) const;
};

OlsFit ols(const VectorXd& y, const MatrixXd& regressors, bool include_intercept = true,
           std::vector<std::string> names = {});

/// Outcome and treatment each regressed on (1, Z, V). With one binary
/// instrument and no covariates the instrument coefficients are the two
/// intention-to-treat effects.
std::pair<OlsFit, OlsFit> reduced_forms(const Dataset& d);

}  // namespace ivkit
