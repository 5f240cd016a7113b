#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ivkit {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct ColumnNames {
    std::string outcome = "y";
    std::string treatment = "x";
    std::vector<std::string> instruments;
    std::vector<std::string> covariates;
};

/// Rectangular observational data with fixed column roles: outcome Y,
/// a single endogenous treatment X, K >= 1 instruments Z and L >= 0
/// exogenous covariates V. Immutable once constructed; every entry is finite
/// and no instrument column is constant.
class Dataset {
  public:
    Dataset(VectorXd outcome, VectorXd treatment, MatrixXd instruments,
            MatrixXd covariates, ColumnNames names = {});
    Dataset(VectorXd outcome, VectorXd treatment, MatrixXd instruments, ColumnNames names = {});

    Index n() const noexcept { return outcome_.size(); }
    Index num_instruments() const noexcept { return instruments_.cols(); }
    Index num_covariates() const noexcept { return covariates_.cols(); }

    const VectorXd& outcome() const noexcept { return outcome_; }
    const VectorXd& treatment() const noexcept { return treatment_; }
    const MatrixXd& instruments() const noexcept { return instruments_; }
    const MatrixXd& covariates() const noexcept { return covariates_; }
    const ColumnNames& names() const noexcept { return names_; }

    Dataset with_outcome(VectorXd outcome) const;
    Dataset with_treatment(VectorXd treatment) const;
    Dataset with_instruments(MatrixXd instruments, std::vector<std::string> names = {}) const;
    /// Keep only instrument column k (covariates unchanged).
    Dataset instrument_subset(Index k) const;

  private:
    VectorXd outcome_;
    VectorXd treatment_;
    MatrixXd instruments_;
    MatrixXd covariates_;
    ColumnNames names_;
};

/// Column-role mapping for CSV ingestion. Roles are never inferred from
/// header names.
struct ColumnRoles {
    std::string outcome;
    std::string treatment;
    std::vector<std::string> instruments;
    std::vector<std::string> covariates;
    /// Optional per-column token recoding, e.g. {"vaccine": {"yes": 1, "no": 0}}.
    std::map<std::string, std::map<std::string, double>> recode;
};

Dataset load_csv(const std::filesystem::path& path, const ColumnRoles& roles);
Dataset read_csv(std::istream& in, const ColumnRoles& roles, std::string_view source = "<stream>");
void write_csv(const Dataset& d, std::ostream& out);
void write_csv(const Dataset& d, const std::filesystem::path& path);

/// 2x2x2 table of counts N[y][x][z] for binary outcome, treatment and instrument.
class BinaryIVTable {
  public:
    using Counts = std::array<std::array<std::array<std::uint64_t, 2>, 2>, 2>;

    explicit BinaryIVTable(const Counts& counts);

    std::uint64_t count(int y, int x, int z) const { return counts_.at(y).at(x).at(z); }
    const Counts& counts() const noexcept { return counts_; }
    std::uint64_t total() const noexcept;
    std::uint64_t arm_size(int z) const;

    /// P(Y=y, X=x | Z=z).
    double prob(int y, int x, int z) const;
    /// P(Y=1 | Z=z).
    double mean_outcome(int z) const;
    /// P(X=1 | Z=z).
    double mean_treatment(int z) const;

    /// Relabels the outcome y <-> 1 - y.
    BinaryIVTable flip_outcome() const;

    friend bool operator==(const BinaryIVTable&, const BinaryIVTable&) = default;

  private:
    Counts counts_;
};

/// Counts from McDonald, Hiu and Tierney's influenza vaccination letter
/// experiment (N = 2861).
BinaryIVTable flu_table();

/// Cross-tabulates a dataset with binary outcome, treatment and a single binary instrument.
BinaryIVTable table_from_dataset(const Dataset& d);

/// One row per counted unit, ordered by (y, x, z).
Dataset expand_table(const BinaryIVTable& t);

enum class Estimand { ols_slope, itt_outcome, itt_treatment, iv, ils, tsls, liml, late, wald };

std::string_view to_string(Estimand e);

struct EstimateReport {
    Estimand estimand;
    double point = 0.0;
    std::optional<double> std_error;
    Index n_used = 0;
    std::map<std::string, double> details;
};

}  // namespace ivkit
