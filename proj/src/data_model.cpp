#include "ivkit/data_model.hpp"

#include "ivkit/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace ivkit {

namespace {

std::vector<std::string> default_names(const std::string& stem, Index count) {
    std::vector<std::string> out;
    for (Index k = 0; k < count; ++k) out.push_back(count == 1 ? stem : stem + std::to_string(k + 1));
    return out;
}

void check_finite(const Eigen::Ref<const MatrixXd>& m, const std::string& what) {
    for (Index j = 0; j < m.cols(); ++j) {
        for (Index i = 0; i < m.rows(); ++i) {
            if (!std::isfinite(m(i, j))) {
                throw ValidationError(what + ": non-finite value at row " + std::to_string(i + 1));
            }
        }
    }
}

}  // namespace

Dataset::Dataset(VectorXd outcome, VectorXd treatment, MatrixXd instruments, MatrixXd covariates,
                 ColumnNames names)
    : outcome_(std::move(outcome)),
      treatment_(std::move(treatment)),
      instruments_(std::move(instruments)),
      covariates_(std::move(covariates)),
      names_(std::move(names)) {
    const Index n = outcome_.size();
    if (n == 0) throw ValidationError("dataset has zero rows");
    if (treatment_.size() != n) throw ValidationError("treatment length differs from outcome length");
    if (instruments_.rows() != n) throw ValidationError("instrument rows differ from outcome length");
    if (instruments_.cols() < 1) throw ValidationError("at least one instrument column is required");
    if (covariates_.cols() == 0) covariates_.resize(n, 0);
    if (covariates_.rows() != n) throw ValidationError("covariate rows differ from outcome length");

    if (names_.instruments.empty()) names_.instruments = default_names("z", instruments_.cols());
    if (names_.covariates.empty()) names_.covariates = default_names("v", covariates_.cols());
    if (static_cast<Index>(names_.instruments.size()) != instruments_.cols()) {
        throw ValidationError("instrument name count differs from instrument column count");
    }
    if (static_cast<Index>(names_.covariates.size()) != covariates_.cols()) {
        throw ValidationError("covariate name count differs from covariate column count");
    }

    check_finite(outcome_, "outcome '" + names_.outcome + "'");
    check_finite(treatment_, "treatment '" + names_.treatment + "'");
    check_finite(instruments_, "instruments");
    check_finite(covariates_, "covariates");

    for (Index k = 0; k < instruments_.cols(); ++k) {
        const auto col = instruments_.col(k);
        if ((col.array() == col(0)).all()) {
            throw ValidationError("instrument '" + names_.instruments[k] + "' is constant");
        }
    }
}

Dataset::Dataset(VectorXd outcome, VectorXd treatment, MatrixXd instruments, ColumnNames names)
    : Dataset(std::move(outcome), std::move(treatment), std::move(instruments), MatrixXd(),
              std::move(names)) {}

Dataset Dataset::with_outcome(VectorXd outcome) const {
    return Dataset(std::move(outcome), treatment_, instruments_, covariates_, names_);
}

Dataset Dataset::with_treatment(VectorXd treatment) const {
    return Dataset(outcome_, std::move(treatment), instruments_, covariates_, names_);
}

Dataset Dataset::with_instruments(MatrixXd instruments, std::vector<std::string> names) const {
    ColumnNames nm = names_;
    nm.instruments = std::move(names);
    return Dataset(outcome_, treatment_, std::move(instruments), covariates_, std::move(nm));
}

Dataset Dataset::instrument_subset(Index k) const {
    if (k < 0 || k >= num_instruments()) throw ValidationError("instrument index out of range");
    return with_instruments(instruments_.col(k), {names_.instruments[k]});
}

// --- CSV -------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::optional<double> parse_number(std::string_view token) {
    token = trim(token);
    if (token.empty()) return std::nullopt;
    if (token.front() == '+') token.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

}  // namespace

Dataset read_csv(std::istream& in, const ColumnRoles& roles, std::string_view source) {
    if (roles.outcome.empty()) throw ValidationError("no outcome column assigned");
    if (roles.treatment.empty()) throw ValidationError("no treatment column assigned");
    if (roles.instruments.empty()) throw ValidationError("at least one instrument column must be assigned");

    std::string line;
    if (!std::getline(in, line)) throw ValidationError(std::string(source) + ": empty file");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    std::vector<std::string> header;
    for (auto& h : split_csv_line(line)) header.emplace_back(trim(h));

    auto column_index = [&](const std::string& name) -> std::size_t {
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (header[j] == name) return j;
        }
        throw ValidationError(std::string(source) + ": column '" + name + "' not found in header");
    };

    std::vector<std::string> role_columns;
    role_columns.push_back(roles.outcome);
    role_columns.push_back(roles.treatment);
    role_columns.insert(role_columns.end(), roles.instruments.begin(), roles.instruments.end());
    role_columns.insert(role_columns.end(), roles.covariates.begin(), roles.covariates.end());
    std::vector<std::size_t> idx;
    for (const auto& c : role_columns) idx.push_back(column_index(c));

    std::vector<std::vector<double>> values(role_columns.size());
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw ValidationError(std::string(source) + ": line " + std::to_string(line_no) + " has " +
                                  std::to_string(fields.size()) + " fields, header has " +
                                  std::to_string(header.size()));
        }
        for (std::size_t r = 0; r < role_columns.size(); ++r) {
            const std::string_view token = trim(fields[idx[r]]);
            std::optional<double> v;
            if (auto it = roles.recode.find(role_columns[r]); it != roles.recode.end()) {
                if (auto jt = it->second.find(std::string(token)); jt != it->second.end()) v = jt->second;
            }
            if (!v) v = parse_number(token);
            if (!v) {
                throw ValidationError(std::string(source) + ": unparseable value '" + std::string(token) +
                                      "' on line " + std::to_string(line_no) + ", column '" +
                                      role_columns[r] + "'");
            }
            values[r].push_back(*v);
        }
    }
    const Index n = static_cast<Index>(values[0].size());
    if (n == 0) throw ValidationError(std::string(source) + ": zero data rows");

    auto to_vec = [&](std::size_t r) { return Eigen::Map<const VectorXd>(values[r].data(), n).eval(); };
    const Index k = static_cast<Index>(roles.instruments.size());
    const Index l = static_cast<Index>(roles.covariates.size());
    MatrixXd z(n, k), v(n, l);
    for (Index j = 0; j < k; ++j) z.col(j) = to_vec(2 + j);
    for (Index j = 0; j < l; ++j) v.col(j) = to_vec(2 + k + j);

    ColumnNames names{roles.outcome, roles.treatment, roles.instruments, roles.covariates};
    return Dataset(to_vec(0), to_vec(1), std::move(z), std::move(v), std::move(names));
}

Dataset load_csv(const std::filesystem::path& path, const ColumnRoles& roles) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open file '" + path.string() + "'");
    return read_csv(in, roles, path.string());
}

void write_csv(const Dataset& d, std::ostream& out) {
    const auto& nm = d.names();
    out << nm.outcome << ',' << nm.treatment;
    for (const auto& s : nm.instruments) out << ',' << s;
    for (const auto& s : nm.covariates) out << ',' << s;
    out << '\n';
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (Index i = 0; i < d.n(); ++i) {
        out << d.outcome()(i) << ',' << d.treatment()(i);
        for (Index j = 0; j < d.num_instruments(); ++j) out << ',' << d.instruments()(i, j);
        for (Index j = 0; j < d.num_covariates(); ++j) out << ',' << d.covariates()(i, j);
        out << '\n';
    }
}

void write_csv(const Dataset& d, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write file '" + path.string() + "'");
    write_csv(d, out);
}

// --- binary table ----------------------------------------------------------

BinaryIVTable::BinaryIVTable(const Counts& counts) : counts_(counts) {
    if (arm_size(0) == 0 || arm_size(1) == 0) {
        throw ValidationError("binary table needs at least one unit in each instrument arm");
    }
}

std::uint64_t BinaryIVTable::total() const noexcept { return arm_size(0) + arm_size(1); }

std::uint64_t BinaryIVTable::arm_size(int z) const {
    std::uint64_t s = 0;
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x) s += counts_.at(y).at(x).at(z);
    return s;
}

double BinaryIVTable::prob(int y, int x, int z) const {
    return static_cast<double>(count(y, x, z)) / static_cast<double>(arm_size(z));
}

double BinaryIVTable::mean_outcome(int z) const {
    return static_cast<double>(count(1, 0, z) + count(1, 1, z)) / static_cast<double>(arm_size(z));
}

double BinaryIVTable::mean_treatment(int z) const {
    return static_cast<double>(count(0, 1, z) + count(1, 1, z)) / static_cast<double>(arm_size(z));
}

BinaryIVTable BinaryIVTable::flip_outcome() const {
    Counts c{};
    for (int x = 0; x < 2; ++x)
        for (int z = 0; z < 2; ++z) {
            c[0][x][z] = counts_[1][x][z];
            c[1][x][z] = counts_[0][x][z];
        }
    return BinaryIVTable(c);
}

BinaryIVTable flu_table() {
    BinaryIVTable::Counts c{};
    c[0][0][0] = 1027;
    c[0][0][1] = 935;
    c[0][1][0] = 233;
    c[0][1][1] = 422;
    c[1][0][0] = 99;
    c[1][0][1] = 84;
    c[1][1][0] = 30;
    c[1][1][1] = 31;
    return BinaryIVTable(c);
}

BinaryIVTable table_from_dataset(const Dataset& d) {
    if (d.num_instruments() != 1) {
        throw ValidationError("tabulation needs exactly one instrument, got " +
                              std::to_string(d.num_instruments()));
    }
    auto as_bit = [](double v, const std::string& col, Index row) -> int {
        if (v == 0.0) return 0;
        if (v == 1.0) return 1;
        std::ostringstream os;
        os << "non-binary value " << v << " in column '" << col << "' at row " << row + 1;
        throw ValidationError(os.str());
    };
    BinaryIVTable::Counts c{};
    const auto& nm = d.names();
    for (Index i = 0; i < d.n(); ++i) {
        const int y = as_bit(d.outcome()(i), nm.outcome, i);
        const int x = as_bit(d.treatment()(i), nm.treatment, i);
        const int z = as_bit(d.instruments()(i, 0), nm.instruments[0], i);
        ++c[y][x][z];
    }
    return BinaryIVTable(c);
}

Dataset expand_table(const BinaryIVTable& t) {
    const Index n = static_cast<Index>(t.total());
    VectorXd y(n), x(n);
    MatrixXd z(n, 1);
    Index i = 0;
    for (int yy = 0; yy < 2; ++yy)
        for (int xx = 0; xx < 2; ++xx)
            for (int zz = 0; zz < 2; ++zz)
                for (std::uint64_t c = 0; c < t.count(yy, xx, zz); ++c, ++i) {
                    y(i) = yy;
                    x(i) = xx;
                    z(i, 0) = zz;
                }
    return Dataset(std::move(y), std::move(x), std::move(z), ColumnNames{"y", "x", {"z"}, {}});
}

std::string_view to_string(Estimand e) {
    switch (e) {
        case Estimand::ols_slope: return "ols_slope";
        case Estimand::itt_outcome: return "itt_outcome";
        case Estimand::itt_treatment: return "itt_treatment";
        case Estimand::iv: return "iv";
        case Estimand::ils: return "ils";
        case Estimand::tsls: return "tsls";
        case Estimand::liml: return "liml";
        case Estimand::late: return "late";
        case Estimand::wald: return "wald";
    }
    return "unknown";
}

}  // namespace ivkit
