#pragma once

#include "ivkit/data_model.hpp"
#include "ivkit/interval_set.hpp"

#include <array>

namespace ivkit {

/// Population shares of always-takers, never-takers and compliers implied by
/// random assignment and the absence of defiers.
struct ComplianceShares {
    double pi_a = 0.0;
    double pi_n = 0.0;
    /// 1 - pi_a - pi_n.
    double pi_c = 0.0;
    double se_a = 0.0;
    double se_n = 0.0;
    double se_c = 0.0;
    /// Set when pi_c < 0, i.e. take-up falls with the instrument.
    bool monotonicity_violation = false;
};

/// Intention-to-treat effects of the instrument on outcome and on treatment
/// receipt, with independent-binomial standard errors.
struct IttEffects {
    double itt_y = 0.0;
    double se_y = 0.0;
    double itt_x = 0.0;
    double se_x = 0.0;
};

ComplianceShares compliance_shares(const BinaryIVTable& t);
IttEffects itt_effects(const BinaryIVTable& t);

/// ITT_Y / ITT_X with a delta-method standard error that includes the
/// within-arm covariance of Y and X. Throws MonotonicityError if ITT_X <= 0.
EstimateReport late(const BinaryIVTable& t);

/// Estimand of the IV ratio when defiers exist:
/// pi_c/(pi_c - pi_d) * effect_c - pi_d/(pi_c - pi_d) * effect_d.
double late_with_defiers(double pi_c, double pi_d, double effect_c, double effect_d);

struct InequalityRecord {
    int y = 0;
    /// Treatment cell the restriction concerns: 0 bounds never-takers, 1 always-takers.
    int x = 0;
    double lhs = 0.0;
    double rhs = 0.0;
    /// rhs - lhs; negative means the restriction is violated.
    double slack = 0.0;
    bool violated = false;
};

/// The four restrictions implied by exclusion plus monotonicity:
///   P(Y=y, X=0 | Z=1) <= P(Y=y, X=0 | Z=0)
///   P(Y=y, X=1 | Z=0) <= P(Y=y, X=1 | Z=1)
/// ordered (y=0,x=0), (y=1,x=0), (y=0,x=1), (y=1,x=1).
struct InequalityReport {
    std::array<InequalityRecord, 4> records;

    bool any_violated() const noexcept;
    const InequalityRecord& at(int y, int x) const;
};

InequalityReport exclusion_tests(const BinaryIVTable& t);

/// Sharp bounds on E[Y(1) - Y(0)] for a binary outcome under random
/// assignment, exclusion and monotonicity. Width is always 1 - pi_c.
IntervalSet natural_bounds(const BinaryIVTable& t);

}  // namespace ivkit
