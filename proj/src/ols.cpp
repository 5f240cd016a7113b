#include "ivkit/ols.hpp"

#include "ivkit/errors.hpp"
#include "ivkit/least_squares.hpp"

namespace ivkit {

Index OlsFit::index_of(const std::string& name) const {
    for (std::size_t j = 0; j < regressor_names.size(); ++j) {
        if (regressor_names[j] == name) return static_cast<Index>(j);
    }
    throw ValidationError("no coefficient named '" + name + "'");
}

double OlsFit::std_error(const std::string& name) const {
    const Index j = index_of(name);
    return std::sqrt(coef_cov(j, j));
}

OlsFit ols(const VectorXd& y, const MatrixXd& regressors, bool include_intercept,
           std::vector<std::string> names) {
    if (regressors.rows() != y.size()) {
        throw ValidationError("regressor rows (" + std::to_string(regressors.rows()) +
                              ") differ from outcome length (" + std::to_string(y.size()) + ")");
    }
    if (names.empty()) {
        for (Index j = 0; j < regressors.cols(); ++j) names.push_back("x" + std::to_string(j + 1));
    }
    if (static_cast<Index>(names.size()) != regressors.cols()) {
        throw ValidationError("regressor name count differs from regressor column count");
    }
    if (include_intercept) names.insert(names.begin(), "(intercept)");

    const MatrixXd design = design_matrix(include_intercept, {&regressors});
    const LeastSquares ls(design, names);

    OlsFit fit;
    fit.n = y.size();
    fit.regressor_names = std::move(names);
    fit.coefficients = ls.solve(y);
    fit.residuals = y - design * fit.coefficients;

    const Index p = design.cols();
    const double rss = fit.residuals.squaredNorm();
    const double scale = y.squaredNorm();
    fit.residual_variance = rss <= 1e-24 * scale ? 0.0 : rss / static_cast<double>(fit.n - p);
    fit.coef_cov = fit.residual_variance * ls.inverse_cross_product();
    return fit;
}

std::pair<OlsFit, OlsFit> reduced_forms(const Dataset& d) {
    const MatrixXd regressors = design_matrix(false, {&d.instruments(), &d.covariates()});
    std::vector<std::string> names = d.names().instruments;
    names.insert(names.end(), d.names().covariates.begin(), d.names().covariates.end());
    return {ols(d.outcome(), regressors, true, names), ols(d.treatment(), regressors, true, names)};
}

}  // namespace ivkit
