#include "ivkit/least_squares.hpp"

#include "ivkit/errors.hpp"

#include <Eigen/SVD>

namespace ivkit {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

Eigen::VectorXd singular_values(const Eigen::Ref<const MatrixXd>& upper) {
    const MatrixXd r = upper.triangularView<Eigen::Upper>();
    return Eigen::JacobiSVD<MatrixXd>(r).singularValues();
}

}  // namespace

LeastSquares::LeastSquares(const MatrixXd& design, const std::vector<std::string>& column_names) {
    const Index n = design.rows();
    const Index p = design.cols();
    if (p == 0) throw ValidationError("design matrix has no columns");
    if (n <= p) {
        throw RankDeficientError("need more observations (" + std::to_string(n) + ") than coefficients (" +
                                     std::to_string(p) + ")",
                                 -1, "");
    }
    qr_.compute(design);

    const MatrixXd& packed = qr_.matrixQR();
    const VectorXd sv = singular_values(packed.topRows(p));
    const double largest = sv(0);
    if (largest > 0.0 && sv(p - 1) >= kRankTolerance * largest) return;

    // The leading j x j block of R is the triangular factor of the first j
    // columns, so the first block that loses rank names the offending column.
    Index bad = 0;
    for (Index j = 1; j <= p; ++j) {
        const VectorXd s = singular_values(packed.topLeftCorner(j, j));
        if (s(0) == 0.0 || s(j - 1) < kRankTolerance * s(0) || s(j - 1) < kRankTolerance * largest) {
            bad = j - 1;
            break;
        }
    }
    const std::string name = bad < static_cast<Index>(column_names.size()) ? column_names[bad] : "";
    std::string msg = "rank-deficient design: column " + std::to_string(bad);
    if (!name.empty()) msg += " ('" + name + "')";
    msg += " is linearly dependent on the preceding columns";
    throw RankDeficientError(msg, bad, name);
}

MatrixXd LeastSquares::solve(const MatrixXd& rhs) const {
    const Index p = cols();
    const MatrixXd qtb = qr_.householderQ().adjoint() * rhs;
    return qr_.matrixQR().topLeftCorner(p, p).triangularView<Eigen::Upper>().solve(qtb.topRows(p));
}

VectorXd LeastSquares::solve(const VectorXd& rhs) const {
    return solve(MatrixXd(rhs)).col(0);
}

MatrixXd LeastSquares::residualize(const MatrixXd& w) const {
    MatrixXd t = qr_.householderQ().adjoint() * w;
    t.topRows(cols()).setZero();
    return qr_.householderQ() * t;
}

VectorXd LeastSquares::residualize(const VectorXd& w) const {
    return residualize(MatrixXd(w)).col(0);
}

MatrixXd LeastSquares::inverse_cross_product() const {
    const Index p = cols();
    const MatrixXd rinv = qr_.matrixQR()
                              .topLeftCorner(p, p)
                              .triangularView<Eigen::Upper>()
                              .solve(MatrixXd::Identity(p, p));
    MatrixXd out = rinv * rinv.transpose();
    return (out + out.transpose()) / 2.0;
}

MatrixXd design_matrix(bool with_intercept, std::initializer_list<const MatrixXd*> blocks) {
    Index n = -1;
    Index cols = with_intercept ? 1 : 0;
    for (const auto* b : blocks) {
        if (n < 0) n = b->rows();
        cols += b->cols();
    }
    if (n < 0) throw ValidationError("design matrix needs at least one block");
    MatrixXd out(n, cols);
    Index c = 0;
    if (with_intercept) out.col(c++).setOnes();
    for (const auto* b : blocks) {
        out.middleCols(c, b->cols()) = *b;
        c += b->cols();
    }
    return out;
}

}  // namespace ivkit
