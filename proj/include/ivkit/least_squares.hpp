#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace ivkit {

/// Singular values below this fraction of the largest declare rank deficiency.
inline constexpr double kRankTolerance = 1e-10;

/// Householder QR of a fixed design matrix. Construction throws
/// RankDeficientError when the design does not have full column rank, naming
/// the first column that is (numerically) spanned by the columns before it.
class LeastSquares {
  public:
    explicit LeastSquares(const Eigen::MatrixXd& design, const std::vector<std::string>& column_names = {});

    Eigen::Index rows() const noexcept { return qr_.rows(); }
    Eigen::Index cols() const noexcept { return qr_.cols(); }

    /// Least-squares coefficients for each column of rhs.
    Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;
    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

    /// Residuals M w = w - X (X'X)^{-1} X' w.
    Eigen::MatrixXd residualize(const Eigen::MatrixXd& w) const;
    Eigen::VectorXd residualize(const Eigen::VectorXd& w) const;

    /// (X'X)^{-1}, formed from the triangular factor.
    Eigen::MatrixXd inverse_cross_product() const;

  private:
    Eigen::HouseholderQR<Eigen::MatrixXd> qr_;
};

/// Column-bind helper: [1 | blocks...] when with_intercept is set.
Eigen::MatrixXd design_matrix(bool with_intercept, std::initializer_list<const Eigen::MatrixXd*> blocks);

}  // namespace ivkit
