#include "helpers.hpp"

#include "ivkit/data_model.hpp"
#include "ivkit/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

using namespace ivkit;
using testing_support::data_path;

namespace {

ColumnRoles yxz() {
    ColumnRoles r;
    r.outcome = "y";
    r.treatment = "x";
    r.instruments = {"z"};
    return r;
}

Dataset parse(const std::string& text, const ColumnRoles& roles = yxz()) {
    std::istringstream in(text);
    return read_csv(in, roles, "test.csv");
}

BinaryIVTable random_table(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> cell(0, 40);
    BinaryIVTable::Counts c{};
    for (auto& a : c)
        for (auto& b : a)
            for (auto& v : b) v = static_cast<std::uint64_t>(cell(rng));
    for (int z = 0; z < 2; ++z) c[0][0][z] += 1;
    return BinaryIVTable(c);
}

}  // namespace

TEST_CASE("minimal CSV loads with roles") {
    const Dataset d = parse("y,x,z\n1,2,0\n2,3,1\n3,4,0\n4,5,1\n");
    CHECK(d.n() == 4);
    CHECK(d.num_instruments() == 1);
    CHECK(d.num_covariates() == 0);
    CHECK(d.outcome()(3) == 4.0);
    CHECK(d.treatment()(0) == 2.0);
    CHECK(d.names().instruments == std::vector<std::string>{"z"});
}

TEST_CASE("columns are selected by name, not position") {
    ColumnRoles r;
    r.outcome = "q";
    r.treatment = "p";
    r.instruments = {"w1", "w2"};
    r.covariates = {"c"};
    const Dataset d = parse("c,w2,p,unused,q,w1\n1,0,2,x,3,1\n2,1,3,y,5,0\n0,1,1,z,4,1\n5,0,2,w,1,1\n", r);
    CHECK(d.outcome()(1) == 5.0);
    CHECK(d.instruments()(0, 0) == 1.0);
    CHECK(d.instruments()(0, 1) == 0.0);
    CHECK(d.covariates()(3, 0) == 5.0);
}

TEST_CASE("non-numeric cell is rejected with its location") {
    try {
        parse("y,x,z\n1,2,0\n2,NA,1\n3,4,0\n");
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("NA") != std::string::npos);
        CHECK(msg.find("x") != std::string::npos);
        CHECK(msg.find("3") != std::string::npos);  // line 3 of the file
    }
}

TEST_CASE("constant instrument is a construction error") {
    CHECK_THROWS_AS(parse("y,x,z\n1,2,1\n2,3,1\n3,4,1\n"), ValidationError);
    CHECK_THROWS_AS(Dataset(Eigen::VectorXd::Ones(3), Eigen::VectorXd::LinSpaced(3, 0, 2), Eigen::MatrixXd::Zero(3, 1)),
                    ValidationError);
}

TEST_CASE("dataset construction validates shapes and values") {
    Eigen::VectorXd y(3), x(3);
    y << 1, 2, 3;
    x << 0, 1, 0;
    Eigen::MatrixXd z(3, 1);
    z << 0, 1, 1;
    CHECK_NOTHROW(Dataset(y, x, z));
    CHECK_THROWS_AS(Dataset(y, Eigen::VectorXd::Zero(2), z), ValidationError);
    CHECK_THROWS_AS(Dataset(y, x, Eigen::MatrixXd(3, 0)), ValidationError);
    Eigen::VectorXd bad = y;
    bad(1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(Dataset(bad, x, z), ValidationError);
    CHECK_THROWS_AS(Dataset(Eigen::VectorXd(0), Eigen::VectorXd(0), Eigen::MatrixXd(0, 1)), ValidationError);
}

TEST_CASE("missing column and ragged rows are rejected") {
    CHECK_THROWS_AS(parse("y,x\n1,2\n"), ValidationError);
    CHECK_THROWS_AS(parse("y,x,z\n1,2,0\n2,3\n"), ValidationError);
    CHECK_THROWS_AS(parse("y,x,z\n"), ValidationError);
}

TEST_CASE("recode maps tokens to numbers") {
    ColumnRoles r = yxz();
    r.recode["z"] = {{"yes", 1.0}, {"no", 0.0}};
    const Dataset d = parse("y,x,z\n1,2,yes\n2,3,no\n3,4,yes\n", r);
    CHECK(d.instruments()(1, 0) == 0.0);
    CHECK(d.instruments()(2, 0) == 1.0);
    // yes/no without a declared recode is not accepted.
    CHECK_THROWS_AS(parse("y,x,z\n1,2,yes\n2,3,no\n"), ValidationError);
}

TEST_CASE("quoted fields and CRLF line endings") {
    const Dataset d = parse("\"y\",\"x\",\"z\"\r\n\"1.5\",2,0\r\n2,3,1\r\n");
    CHECK(d.outcome()(0) == 1.5);
    CHECK(d.n() == 2);
}

TEST_CASE("committed fixtures load") {
    ColumnRoles r = yxz();
    r.instruments = {"z1", "z2", "z3"};
    const Dataset over = load_csv(data_path("overid40.csv"), r);
    CHECK(over.n() == 40);
    CHECK(over.num_instruments() == 3);
    const Dataset ar = load_csv(data_path("ar20.csv"), yxz());
    CHECK(ar.n() == 20);
    CHECK_THROWS_AS(load_csv(data_path("does_not_exist.csv"), yxz()), ValidationError);
}

TEST_CASE("CSV loading preserves row order under permutation") {
    std::mt19937_64 rng(3);
    const Dataset d = testing_support::random_iv(rng, 25, 2, 1);
    std::ostringstream os;
    write_csv(d, os);
    std::vector<std::string> lines;
    std::istringstream in(os.str());
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    std::vector<std::size_t> perm(lines.size() - 1);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::string text = lines[0] + "\n";
    for (auto p : perm) text += lines[p + 1] + "\n";

    ColumnRoles r;
    r.outcome = d.names().outcome;
    r.treatment = d.names().treatment;
    r.instruments = d.names().instruments;
    r.covariates = d.names().covariates;
    const Dataset back = parse(os.str(), r);
    const Dataset shuffled = parse(text, r);
    CHECK(back.outcome() == d.outcome());
    CHECK(back.instruments() == d.instruments());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        const auto src = static_cast<Eigen::Index>(perm[i]);
        const auto dst = static_cast<Eigen::Index>(i);
        CHECK(shuffled.outcome()(dst) == d.outcome()(src));
        CHECK(shuffled.treatment()(dst) == d.treatment()(src));
        CHECK(shuffled.covariates()(dst, 0) == d.covariates()(src, 0));
        CHECK(shuffled.instruments().row(dst) == d.instruments().row(src));
    }
}

TEST_CASE("flu table margins") {
    const BinaryIVTable t = flu_table();
    CHECK(t.total() == 2861);
    CHECK(t.arm_size(0) == 1389);
    CHECK(t.arm_size(1) == 1472);
    CHECK(t.count(0, 0, 0) == 1027);
    CHECK(t.count(1, 1, 1) == 31);
    for (int z = 0; z < 2; ++z) {
        double s = 0.0;
        for (int y = 0; y < 2; ++y)
            for (int x = 0; x < 2; ++x) s += t.prob(y, x, z);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("table needs both arms") {
    BinaryIVTable::Counts c{};
    c[0][0][0] = 5;
    CHECK_THROWS_AS(BinaryIVTable{c}, ValidationError);
}

TEST_CASE("tabulation of a small dataset") {
    Eigen::VectorXd y(3), x(3);
    Eigen::MatrixXd z(3, 1);
    y << 1, 0, 1;
    x << 1, 0, 0;
    z << 1, 0, 1;
    const BinaryIVTable t = table_from_dataset(Dataset(y, x, z));
    CHECK(t.count(1, 1, 1) == 1);
    CHECK(t.count(0, 0, 0) == 1);
    CHECK(t.count(1, 0, 1) == 1);
    CHECK(t.total() == 3);

    y(1) = 0.5;
    CHECK_THROWS_AS(table_from_dataset(Dataset(y, x, z)), ValidationError);
}

TEST_CASE("tabulation round trip") {
    CHECK(table_from_dataset(expand_table(flu_table())) == flu_table());
    CHECK(expand_table(flu_table()).n() == 2861);
    std::mt19937_64 rng(17);
    for (int rep = 0; rep < 50; ++rep) {
        const BinaryIVTable t = random_table(rng);
        CHECK(table_from_dataset(expand_table(t)) == t);
    }
}

TEST_CASE("flip_outcome swaps outcome labels") {
    const BinaryIVTable t = flu_table();
    const BinaryIVTable f = t.flip_outcome();
    CHECK(f.count(0, 1, 0) == t.count(1, 1, 0));
    CHECK(f.flip_outcome() == t);
}

TEST_CASE("estimand names") {
    CHECK(to_string(Estimand::late) == "late");
    CHECK(to_string(Estimand::ols_slope) == "ols_slope");
    CHECK(to_string(Estimand::tsls) == "tsls");
}
