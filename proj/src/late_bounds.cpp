#include "ivkit/late_bounds.hpp"

#include "ivkit/errors.hpp"

#include <cmath>

namespace ivkit {

namespace {

double binomial_var(double p, double n) { return p * (1.0 - p) / n; }

// share * E[Y | cell], where cell may be empty. An empty cell is only
// admissible when its share is exactly zero.
double weighted_conditional(double share, std::uint64_t numerator, std::uint64_t denominator,
                            const char* what) {
    if (denominator == 0) {
        if (share == 0.0) return 0.0;
        throw EstimationError(std::string("natural bound undefined: empty conditioning cell for ") + what);
    }
    return share * static_cast<double>(numerator) / static_cast<double>(denominator);
}

}  // namespace

ComplianceShares compliance_shares(const BinaryIVTable& t) {
    const double n0 = static_cast<double>(t.arm_size(0));
    const double n1 = static_cast<double>(t.arm_size(1));
    ComplianceShares s;
    s.pi_a = t.mean_treatment(0);
    s.pi_n = 1.0 - t.mean_treatment(1);
    s.pi_c = 1.0 - s.pi_a - s.pi_n;
    s.se_a = std::sqrt(binomial_var(s.pi_a, n0));
    s.se_n = std::sqrt(binomial_var(s.pi_n, n1));
    s.se_c = std::sqrt(s.se_a * s.se_a + s.se_n * s.se_n);
    s.monotonicity_violation = s.pi_c < 0.0;
    return s;
}

IttEffects itt_effects(const BinaryIVTable& t) {
    const double n0 = static_cast<double>(t.arm_size(0));
    const double n1 = static_cast<double>(t.arm_size(1));
    const double py0 = t.mean_outcome(0), py1 = t.mean_outcome(1);
    const double px0 = t.mean_treatment(0), px1 = t.mean_treatment(1);
    IttEffects e;
    e.itt_y = py1 - py0;
    e.se_y = std::sqrt(binomial_var(py1, n1) + binomial_var(py0, n0));
    e.itt_x = px1 - px0;
    e.se_x = std::sqrt(binomial_var(px1, n1) + binomial_var(px0, n0));
    return e;
}

EstimateReport late(const BinaryIVTable& t) {
    const IttEffects itt = itt_effects(t);
    if (!(itt.itt_x > 0.0)) {
        throw MonotonicityError("complier share is not positive (ITT_X = " + std::to_string(itt.itt_x) +
                                "); the local average treatment effect is not identified");
    }
    const double ratio = itt.itt_y / itt.itt_x;

    // Within-arm covariance of the sample means of Y and X.
    double cov = 0.0;
    for (int z = 0; z < 2; ++z) {
        const double nz = static_cast<double>(t.arm_size(z));
        cov += (t.prob(1, 1, z) - t.mean_outcome(z) * t.mean_treatment(z)) / nz;
    }
    const double var = (itt.se_y * itt.se_y - 2.0 * ratio * cov + ratio * ratio * itt.se_x * itt.se_x) /
                       (itt.itt_x * itt.itt_x);

    EstimateReport r;
    r.estimand = Estimand::late;
    r.point = ratio;
    r.std_error = std::sqrt(std::max(var, 0.0));
    r.n_used = static_cast<Index>(t.total());
    r.details["itt_y"] = itt.itt_y;
    r.details["itt_x"] = itt.itt_x;
    r.details["itt_y_se"] = itt.se_y;
    r.details["itt_x_se"] = itt.se_x;
    return r;
}

double late_with_defiers(double pi_c, double pi_d, double effect_c, double effect_d) {
    const double diff = pi_c - pi_d;
    if (diff == 0.0) throw EstimationError("complier and defier shares are equal; the IV estimand is undefined");
    return pi_c / diff * effect_c - pi_d / diff * effect_d;
}

bool InequalityReport::any_violated() const noexcept {
    for (const auto& r : records)
        if (r.violated) return true;
    return false;
}

const InequalityRecord& InequalityReport::at(int y, int x) const {
    for (const auto& r : records)
        if (r.y == y && r.x == x) return r;
    throw ValidationError("no inequality record for the requested cell");
}

InequalityReport exclusion_tests(const BinaryIVTable& t) {
    InequalityReport rep;
    std::size_t i = 0;
    for (int x = 0; x < 2; ++x) {
        for (int y = 0; y < 2; ++y) {
            InequalityRecord& r = rep.records[i++];
            r.y = y;
            r.x = x;
            // Never-takers are seen alone in (X=0, Z=1); always-takers in (X=1, Z=0).
            r.lhs = x == 0 ? t.prob(y, 0, 1) : t.prob(y, 1, 0);
            r.rhs = x == 0 ? t.prob(y, 0, 0) : t.prob(y, 1, 1);
            r.slack = r.rhs - r.lhs;
            r.violated = r.slack < 0.0;
        }
    }
    return rep;
}

IntervalSet natural_bounds(const BinaryIVTable& t) {
    const double itt_y = t.mean_outcome(1) - t.mean_outcome(0);
    const double share_x0_z1 = 1.0 - t.mean_treatment(1);
    const double share_x1_z0 = t.mean_treatment(0);
    const std::uint64_t n_x0_z1 = t.count(0, 0, 1) + t.count(1, 0, 1);
    const std::uint64_t n_x1_z0 = t.count(0, 1, 0) + t.count(1, 1, 0);

    const double never_y1 = weighted_conditional(share_x0_z1, t.count(1, 0, 1), n_x0_z1, "Z=1, X=0");
    const double never_y0 = weighted_conditional(share_x0_z1, t.count(0, 0, 1), n_x0_z1, "Z=1, X=0");
    const double always_y1 = weighted_conditional(share_x1_z0, t.count(1, 1, 0), n_x1_z0, "Z=0, X=1");

    const double lower = -never_y1 + itt_y + (always_y1 - share_x1_z0);
    const double upper = never_y0 + itt_y + always_y1;
    return IntervalSet::closed(lower, upper);
}

}  // namespace ivkit
