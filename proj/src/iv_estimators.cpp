#include "ivkit/iv_estimators.hpp"

#include "ivkit/errors.hpp"
#include "ivkit/least_squares.hpp"
#include "ivkit/ols.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace ivkit {

std::string_view to_string(IvMethod m) {
    switch (m) {
        case IvMethod::iv_ratio: return "iv_ratio";
        case IvMethod::ils: return "ils";
        case IvMethod::tsls: return "tsls";
        case IvMethod::liml: return "liml";
    }
    return "unknown";
}

namespace {

// Exact-degeneracy guard for a normalized first-stage association.
constexpr double kIrrelevanceTolerance = 1e-12;

MatrixXd exogenous_design(const Dataset& d) { return design_matrix(true, {&d.covariates()}); }

std::vector<std::string> exogenous_names(const Dataset& d) {
    std::vector<std::string> names{"(intercept)"};
    names.insert(names.end(), d.names().covariates.begin(), d.names().covariates.end());
    return names;
}

MatrixXd instrument_design(const Dataset& d) {
    return design_matrix(true, {&d.instruments(), &d.covariates()});
}

std::vector<std::string> instrument_names(const Dataset& d) {
    std::vector<std::string> names{"(intercept)"};
    names.insert(names.end(), d.names().instruments.begin(), d.names().instruments.end());
    names.insert(names.end(), d.names().covariates.begin(), d.names().covariates.end());
    return names;
}

// Standard errors from sigma2 * ((1, Xhat, V)'(1, Xhat, V))^{-1}, with sigma2
// taken from the structural residuals Y - b0 - b1 X - b2'V (actual X).
IvFit finish(const Dataset& d, double beta1, const VectorXd& exog_coef, const VectorXd& xhat,
             IvMethod method, double kappa) {
    const Index n = d.n();
    const Index l = d.num_covariates();
    IvFit fit;
    fit.method = method;
    fit.kappa = kappa;
    fit.n = n;
    fit.beta1 = beta1;
    fit.beta0 = exog_coef(0);
    fit.beta2 = exog_coef.tail(l);

    const VectorXd resid = d.outcome() - VectorXd::Constant(n, fit.beta0) - beta1 * d.treatment() -
                           d.covariates() * fit.beta2;
    const Index p = 2 + l;
    if (n <= p) throw RankDeficientError("too few observations for the structural equation", -1, "");
    fit.sigma2 = resid.squaredNorm() / static_cast<double>(n - p);

    const MatrixXd xhat_m = xhat;
    const MatrixXd design = design_matrix(true, {&xhat_m, &d.covariates()});
    std::vector<std::string> names{"(intercept)", "xhat"};
    names.insert(names.end(), d.names().covariates.begin(), d.names().covariates.end());
    try {
        const LeastSquares ls(design, names);
        fit.std_errors = (fit.sigma2 * ls.inverse_cross_product()).diagonal().cwiseSqrt();
    } catch (const RankDeficientError&) {
        throw IrrelevanceError("fitted treatment is collinear with the exogenous regressors", 0.0);
    }
    return fit;
}

// Normalized first-stage association |pi| * ||M_C z|| / ||M_C x||.
void check_relevance(double coefficient, double instrument_norm, double treatment_norm) {
    const double ratio = std::abs(coefficient) * instrument_norm;
    if (!(ratio > kIrrelevanceTolerance * treatment_norm)) {
        std::ostringstream os;
        os << "instrument is irrelevant: first-stage coefficient " << coefficient << " is degenerate";
        throw IrrelevanceError(os.str(), coefficient);
    }
}

void require_single_instrument(const Dataset& d, const char* who) {
    if (d.num_instruments() != 1) {
        throw ValidationError(std::string(who) + " needs exactly one instrument, got " +
                              std::to_string(d.num_instruments()));
    }
}

}  // namespace

GroupMeans group_means(const Dataset& d) {
    require_single_instrument(d, "group_means");
    GroupMeans g;
    std::array<double, 2> sy{}, sx{};
    for (Index i = 0; i < d.n(); ++i) {
        const double z = d.instruments()(i, 0);
        if (z != 0.0 && z != 1.0) {
            throw ValidationError("group means need a 0/1 instrument; row " + std::to_string(i + 1) +
                                  " has another value");
        }
        const int arm = z == 1.0 ? 1 : 0;
        sy[arm] += d.outcome()(i);
        sx[arm] += d.treatment()(i);
        ++g.arm_sizes[arm];
    }
    for (int a = 0; a < 2; ++a) {
        g.mean_y[a] = sy[a] / static_cast<double>(g.arm_sizes[a]);
        g.mean_x[a] = sx[a] / static_cast<double>(g.arm_sizes[a]);
    }
    return g;
}

double wald_from_means(const GroupMeans& g) {
    if (g.arm_sizes[0] <= 0 || g.arm_sizes[1] <= 0) throw ValidationError("group means need two non-empty arms");
    const double den = g.mean_x[1] - g.mean_x[0];
    if (den == 0.0) throw IrrelevanceError("treatment means are equal across arms", den);
    return (g.mean_y[1] - g.mean_y[0]) / den;
}

IvFit iv_ratio(const Dataset& d) {
    require_single_instrument(d, "iv_ratio");
    if (d.num_covariates() != 0) throw ValidationError("iv_ratio does not accept covariates");
    const double n = static_cast<double>(d.n());
    const VectorXd z = d.instruments().col(0);
    const VectorXd zc = z.array() - z.mean();
    const VectorXd yc = d.outcome().array() - d.outcome().mean();
    const VectorXd xc = d.treatment().array() - d.treatment().mean();
    const double cov_yz = yc.dot(zc) / n;
    const double cov_xz = xc.dot(zc) / n;
    const double sd_x = std::sqrt(xc.squaredNorm() / n);
    const double sd_z = std::sqrt(zc.squaredNorm() / n);
    if (!(std::abs(cov_xz) >= kIrrelevanceTolerance * sd_x * sd_z) || sd_x == 0.0) {
        std::ostringstream os;
        os << "instrument is irrelevant: cov(X, Z) = " << cov_xz;
        throw IrrelevanceError(os.str(), cov_xz);
    }
    const double beta1 = cov_yz / cov_xz;
    VectorXd exog(1);
    exog(0) = d.outcome().mean() - beta1 * d.treatment().mean();
    const VectorXd xhat = (d.treatment().mean() + (cov_xz / (sd_z * sd_z)) * zc.array()).matrix();
    return finish(d, beta1, exog, xhat, IvMethod::iv_ratio, 1.0);
}

IvFit ils(const Dataset& d) {
    require_single_instrument(d, "ils");
    const auto [outcome_rf, treatment_rf] = reduced_forms(d);
    const double pi11 = outcome_rf.coefficients(1);
    const double pi21 = treatment_rf.coefficients(1);

    const LeastSquares exog(exogenous_design(d), exogenous_names(d));
    const double z_norm = exog.residualize(VectorXd(d.instruments().col(0))).norm();
    const double x_norm = exog.residualize(d.treatment()).norm();
    check_relevance(pi21, z_norm, x_norm);

    const double beta1 = pi11 / pi21;
    // Intercept and covariate coefficients: pi_1j - beta1 * pi_2j for j != instrument.
    const Index l = d.num_covariates();
    VectorXd exog_coef(1 + l);
    exog_coef(0) = outcome_rf.coefficients(0) - beta1 * treatment_rf.coefficients(0);
    exog_coef.tail(l) = outcome_rf.coefficients.tail(l) - beta1 * treatment_rf.coefficients.tail(l);
    return finish(d, beta1, exog_coef, treatment_rf.fitted(d.treatment()), IvMethod::ils, 1.0);
}

IvFit tsls(const Dataset& d) {
    const MatrixXd first_regressors = design_matrix(false, {&d.instruments(), &d.covariates()});
    std::vector<std::string> first_names = instrument_names(d);
    first_names.erase(first_names.begin());
    const OlsFit first = ols(d.treatment(), first_regressors, true, first_names);
    const VectorXd xhat = first.fitted(d.treatment());

    const LeastSquares exog(exogenous_design(d), exogenous_names(d));
    const double explained = exog.residualize(xhat).norm();
    const double total = exog.residualize(d.treatment()).norm();
    if (!(explained > kRankTolerance * total)) {
        throw IrrelevanceError("instruments are jointly irrelevant: first-stage fitted values carry no "
                               "variation beyond the exogenous regressors",
                               explained * explained / static_cast<double>(d.n()));
    }

    const MatrixXd xhat_m = xhat;
    std::vector<std::string> second_names{"xhat"};
    second_names.insert(second_names.end(), d.names().covariates.begin(), d.names().covariates.end());
    const OlsFit second = ols(d.outcome(), design_matrix(false, {&xhat_m, &d.covariates()}), true, second_names);

    const Index l = d.num_covariates();
    VectorXd exog_coef(1 + l);
    exog_coef(0) = second.coefficients(0);
    exog_coef.tail(l) = second.coefficients.tail(l);
    return finish(d, second.coefficients(1), exog_coef, xhat, IvMethod::tsls, 1.0);
}

namespace {

struct KClassPieces {
    VectorXd x_exog_resid;  // M_C X
    VectorXd y_exog_resid;  // M_C Y
    VectorXd x_full_resid;  // M_F X
    VectorXd y_full_resid;  // M_F Y
};

KClassPieces k_class_pieces(const Dataset& d) {
    const LeastSquares exog(exogenous_design(d), exogenous_names(d));
    const LeastSquares full(instrument_design(d), instrument_names(d));
    MatrixXd w(d.n(), 2);
    w.col(0) = d.outcome();
    w.col(1) = d.treatment();
    const MatrixXd we = exog.residualize(w);
    const MatrixXd wf = full.residualize(w);
    return {we.col(1), we.col(0), wf.col(1), wf.col(0)};
}

IvFit k_class_from(const Dataset& d, const KClassPieces& pc, double k, IvMethod method) {
    const double xx = pc.x_exog_resid.squaredNorm();
    const double den = xx - k * pc.x_full_resid.squaredNorm();
    const double num = pc.x_exog_resid.dot(pc.y_exog_resid) - k * pc.x_full_resid.dot(pc.y_full_resid);
    if (!(std::abs(den) > kRankTolerance * xx)) {
        throw IrrelevanceError("k-class denominator is degenerate", den);
    }
    const double beta1 = num / den;
    const LeastSquares exog(exogenous_design(d), exogenous_names(d));
    const VectorXd exog_coef = exog.solve(VectorXd(d.outcome() - beta1 * d.treatment()));
    const VectorXd xhat = d.treatment() - pc.x_full_resid;
    return finish(d, beta1, exog_coef, xhat, method, k);
}

struct KappaResult {
    double kappa;
    bool degenerate;
};

KappaResult smallest_generalized_root(const KClassPieces& pc) {
    Eigen::Matrix2d a, b;
    a << pc.y_exog_resid.squaredNorm(), pc.y_exog_resid.dot(pc.x_exog_resid),
        pc.y_exog_resid.dot(pc.x_exog_resid), pc.x_exog_resid.squaredNorm();
    b << pc.y_full_resid.squaredNorm(), pc.y_full_resid.dot(pc.x_full_resid),
        pc.y_full_resid.dot(pc.x_full_resid), pc.x_full_resid.squaredNorm();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix2d> es(a, b, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
        throw EstimationError("LIML eigenvalue problem is singular: (Y, X) is perfectly fit by the instruments");
    }
    const auto& ev = es.eigenvalues();  // ascending
    const double lo = ev(0);
    const double hi = ev(1);
    return {lo, std::abs(hi - lo) <= 1e-10 * std::max(1.0, std::abs(lo))};
}

}  // namespace

double liml_kappa(const Dataset& d) { return smallest_generalized_root(k_class_pieces(d)).kappa; }

IvFit k_class(const Dataset& d, double k) {
    const auto pc = k_class_pieces(d);
    return k_class_from(d, pc, k, k == 1.0 ? IvMethod::tsls : IvMethod::liml);
}

IvFit liml(const Dataset& d) {
    const auto pc = k_class_pieces(d);
    const auto [kappa, degenerate] = smallest_generalized_root(pc);
    IvFit fit = k_class_from(d, pc, kappa, IvMethod::liml);
    if (degenerate) fit.warnings.push_back("two equal smallest generalized eigenvalues; smallest taken by value");
    return fit;
}

std::vector<PerInstrumentEstimate> per_instrument_estimates(const Dataset& d) {
    if (d.num_instruments() < 2) {
        throw ValidationError("per-instrument comparison needs at least two instruments");
    }
    // Joint first-stage design must be full rank (duplicated instruments fail here).
    const LeastSquares joint(instrument_design(d), instrument_names(d));
    const LeastSquares exog(exogenous_design(d), exogenous_names(d));
    const double x_norm = exog.residualize(d.treatment()).norm();

    std::vector<PerInstrumentEstimate> out;
    for (Index k = 0; k < d.num_instruments(); ++k) {
        const Dataset single = d.instrument_subset(k);
        const auto [outcome_rf, treatment_rf] = reduced_forms(single);
        PerInstrumentEstimate e;
        e.instrument = d.names().instruments[k];
        e.first_stage_coefficient = treatment_rf.coefficients(1);
        const double z_norm = exog.residualize(VectorXd(d.instruments().col(k))).norm();
        if (std::abs(e.first_stage_coefficient) * z_norm > kIrrelevanceTolerance * x_norm) {
            e.estimate = outcome_rf.coefficients(1) / e.first_stage_coefficient;
        }
        out.push_back(std::move(e));
    }
    return out;
}

EstimateReport to_report(const IvFit& fit) {
    EstimateReport r;
    switch (fit.method) {
        case IvMethod::iv_ratio: r.estimand = Estimand::iv; break;
        case IvMethod::ils: r.estimand = Estimand::ils; break;
        case IvMethod::tsls: r.estimand = Estimand::tsls; break;
        case IvMethod::liml: r.estimand = Estimand::liml; break;
    }
    r.point = fit.beta1;
    r.std_error = fit.beta1_se();
    r.n_used = fit.n;
    r.details["beta0"] = fit.beta0;
    r.details["kappa"] = fit.kappa;
    r.details["sigma2"] = fit.sigma2;
    for (Index j = 0; j < fit.beta2.size(); ++j) r.details["beta2_" + std::to_string(j + 1)] = fit.beta2(j);
    return r;
}

}  // namespace ivkit
