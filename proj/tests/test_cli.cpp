#include "helpers.hpp"

#include "ivkit/cli.hpp"
#include "ivkit/data_model.hpp"
#include "ivkit/interval_set.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "ivkit");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = ivkit::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

json run_json(std::vector<std::string> args) {
    const Result r = run(std::move(args));
    REQUIRE_MESSAGE(r.code == 0, r.err);
    return json::parse(r.out);
}

fs::path scratch() {
    const fs::path dir = fs::temp_directory_path() / "ivkit_cli_tests";
    fs::create_directories(dir);
    return dir;
}

std::string write_text(const std::string& name, const std::string& text) {
    const fs::path p = scratch() / name;
    std::ofstream(p) << text;
    return p.string();
}

std::string flu_csv() {
    const fs::path p = scratch() / "flu.csv";
    ivkit::write_csv(ivkit::expand_table(ivkit::flu_table()), p);
    return p.string();
}

double num(const json& j) {
    if (j.is_string()) return j.get<std::string>() == "inf" ? ivkit::kInf : -ivkit::kInf;
    return j.get<double>();
}

}  // namespace

TEST_CASE("help and version exit cleanly") {
    CHECK(run({"--help"}).code == 0);
    CHECK(run({"estimate", "--help"}).code == 0);
    const Result v = run({"--version"});
    CHECK(v.code == 0);
    CHECK(v.out.find(ivkit::cli::kVersion) != std::string::npos);
}

TEST_CASE("usage errors exit 2 with a JSON message") {
    const Result r = run({"estimate"});
    CHECK(r.code == 2);
    CHECK(json::parse(r.err)["error"]["kind"] == "usage");
    CHECK(run({}).code == 2);
    CHECK(run({"estimate", flu_csv(), "--method", "gmm"}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
}

TEST_CASE("estimate on the flu data") {
    const std::string csv = flu_csv();
    const json iv = run_json({"estimate", "--method", "iv", csv});
    CHECK(iv["point"].get<double>() == doctest::Approx(-0.1245575).epsilon(1e-6));
    CHECK(iv["estimand"] == "iv");
    CHECK(iv["n"] == 2861);
    CHECK(iv["manifest"]["command"] == "estimate");
    CHECK(iv["manifest"]["input_sha256"].get<std::string>().size() == 64);

    const json t = run_json({"estimate", "--method", "tsls", csv});
    const json l = run_json({"estimate", "--method", "liml", csv});
    CHECK(std::abs(t["point"].get<double>() - l["point"].get<double>()) < 1e-12);
    CHECK(l["kappa"].get<double>() == doctest::Approx(1.0).epsilon(1e-10));

    const json o = run_json({"estimate", "--method", "ols", csv});
    CHECK(o["estimand"] == "ols_slope");
    CHECK(o["coefficients"].contains("x"));
}

TEST_CASE("estimate with several instruments reports per-instrument ratios") {
    const std::string csv = testing_support::data_path("overid40.csv");
    const json j = run_json({"estimate", "--method", "tsls", "--instruments", "z1,z2,z3", csv});
    REQUIRE(j["per_instrument"].size() == 3);
    CHECK(j["per_instrument"][0]["instrument"] == "z1");
    CHECK(j["std_error"].get<double>() > 0.0);
    const json l = run_json({"estimate", "--method", "liml", "--instruments", "z1,z2,z3", csv});
    CHECK(l["kappa"].get<double>() >= 1.0);
}

TEST_CASE("estimation failures exit 3") {
    const std::string csv = write_text("orth.csv", "y,x,z\n1,1,1\n2,-1,1\n3,1,-1\n4,-1,-1\n");
    const Result r = run({"estimate", "--method", "iv", csv});
    CHECK(r.code == 3);
    CHECK(json::parse(r.err)["error"]["kind"] == "instrument_irrelevance");

    const std::string dup = write_text("dup.csv", "y,x,a,b\n1,2,0,0\n2,3,1,1\n3,3,0,0\n4,5,1,1\n5,4,0,0\n");
    const Result d = run({"estimate", "--method", "tsls", "--instruments", "a,b", dup});
    CHECK(d.code == 3);
    CHECK(json::parse(d.err)["error"]["kind"] == "rank_deficient");
}

TEST_CASE("validation failures exit 2") {
    CHECK(run({"estimate", "--method", "iv", "/nonexistent.csv"}).code == 2);
    const std::string na = write_text("na.csv", "y,x,z\n1,NA,0\n2,3,1\n");
    const Result r = run({"estimate", "--method", "iv", na});
    CHECK(r.code == 2);
    CHECK(json::parse(r.err)["error"]["kind"] == "validation");
    const std::string constant = write_text("const.csv", "y,x,z\n1,2,1\n2,3,1\n");
    CHECK(run({"estimate", "--method", "iv", constant}).code == 2);
}

TEST_CASE("recode maps tokens") {
    const std::string csv = write_text("yes.csv", "y,x,z\n1,1,yes\n0,0,no\n1,1,yes\n0,1,no\n1,0,yes\n0,0,no\n");
    CHECK(run({"estimate", "--method", "iv", csv}).code == 2);
    const json j = run_json({"estimate", "--method", "iv", "--recode", "z:yes=1,no=0", csv});
    CHECK(j["n"] == 6);
}

TEST_CASE("late on the bundled table") {
    const json j = run_json({"late", "--builtin", "flu"});
    CHECK(j["shares"]["pi_a"].get<double>() == doctest::Approx(0.189).epsilon(2e-3));
    CHECK(j["late"].get<double>() == doctest::Approx(-0.1246).epsilon(1e-3));
    CHECK(num(j["bounds"][0]) == doctest::Approx(-0.2396).epsilon(1e-3));
    CHECK(num(j["bounds"][1]) == doctest::Approx(0.6420).epsilon(1e-3));
    int violated = 0;
    for (const auto& t : j["exclusion_tests"]) violated += t["violated"].get<bool>();
    CHECK(violated == 1);
    CHECK(j["any_violation"] == true);
    CHECK(j["manifest"]["input_sha256"].is_null());

    const json f = run_json({"late", flu_csv()});
    CHECK(f["late"] == j["late"]);
    CHECK(run({"late"}).code == 2);
    CHECK(run({"late", "--builtin", "fish"}).code == 2);
}

TEST_CASE("late on edge-case files") {
    const std::string perfect = write_text("perfect.csv", "y,x,z\n0,0,0\n1,0,0\n1,1,1\n0,1,1\n1,1,1\n");
    const json p = run_json({"late", perfect});
    CHECK(p["bounds_width"].get<double>() == doctest::Approx(0.0).epsilon(1e-12));

    const std::string defiers = write_text("defiers.csv", "y,x,z\n0,1,0\n1,1,0\n0,1,0\n1,0,1\n0,0,1\n1,0,1\n");
    const Result r = run({"late", defiers});
    CHECK(r.code == 0);
    const json d = json::parse(r.out);
    CHECK(d["monotonicity_violation"] == true);
    CHECK(d["late"].is_null());
    CHECK(d["late_error"].is_string());

    const std::string nonbinary = write_text("nonbinary.csv", "y,x,z\n0.5,1,0\n1,1,1\n");
    CHECK(run({"late", nonbinary}).code == 2);
}

TEST_CASE("ar confidence sets") {
    const std::string fixture = testing_support::data_path("ar20.csv");
    const json j = run_json({"ar", fixture});
    CHECK(j["confidence_set"].is_array());
    CHECK(j["ar_at_iv"].get<double>() < 1e-12);

    const json all = run_json({"ar", "--critical-value", "1e12", fixture});
    REQUIRE(all["confidence_set"].size() == 1);
    CHECK(all["confidence_set"][0][0] == "-inf");
    CHECK(all["confidence_set"][0][1] == "inf");
    CHECK(all["rendered"] == "(-inf, inf)");

    const json g = run_json({"ar", "--inversion", "grid", fixture});
    REQUIRE(g["confidence_set"].size() == j["confidence_set"].size());
    for (std::size_t i = 0; i < g["confidence_set"].size(); ++i)
        for (int k = 0; k < 2; ++k) {
            const double a = num(g["confidence_set"][i][k]), b = num(j["confidence_set"][i][k]);
            if (std::isfinite(a)) CHECK(std::abs(a - b) < 1e-6 * std::max(1.0, std::abs(b)));
        }
    CHECK(run({"ar", "--inversion", "bisect", fixture}).code == 2);
    CHECK(run({"ar", "--critical-value", "-1", fixture}).code == 2);
    CHECK(run_json({"ar", "--variance", "uncentered", fixture})["manifest"]["options"]["variance"] == "uncentered");
}

TEST_CASE("ar on strong and irrelevant instruments") {
    const fs::path dir = scratch();
    const std::string strong = (dir / "strong.csv").string();
    const std::string weak = (dir / "weak.csv").string();
    const std::string params = write_text("p.params", "gamma_s = -1.5\n");
    const std::string none = write_text("none.params", "gamma_s = 0\nsigma_s = 0.5\n");
    CHECK(run({"simulate", "market", "--params", params, "--n", "2000", "--seed", "1", "--z-law", "normal", "--out", strong}).code == 0);
    CHECK(run({"simulate", "market", "--params", none, "--n", "60", "--seed", "2", "--z-law", "normal", "--out", weak}).code == 0);
    const json s = run_json({"ar", "--outcome", "log_quantity", "--treatment", "log_price", strong});
    CHECK(s["bounded"] == true);
    CHECK(s["confidence_set"].size() == 1);
    const json w = run_json({"ar", "--outcome", "log_quantity", "--treatment", "log_price", weak});
    CHECK(w["bounded"] == false);
    CHECK(w["rendered"].get<std::string>().find("inf") != std::string::npos);
}

TEST_CASE("simulate market writes a CSV and is reproducible") {
    const fs::path dir = scratch();
    const std::string a = (dir / "m1.csv").string();
    const std::string b = (dir / "m2.csv").string();
    const std::string params = (fs::path(IVKIT_TEST_DATA).parent_path().parent_path() / "data" / "fish.params").string();
    const Result r1 = run({"simulate", "market", "--params", params, "--n", "111", "--seed", "7", "--out", a});
    const Result r2 = run({"simulate", "market", "--params", params, "--n", "111", "--seed", "7", "--out", b});
    REQUIRE(r1.code == 0);
    const json j = json::parse(r1.out);
    CHECK(j["t_count"] == 111);
    CHECK(j["manifest"]["seed"] == 7);
    std::ifstream fa(a), fb(b);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    const std::string text = sa.str();
    CHECK(text == sb.str());
    CHECK(std::count(text.begin(), text.end(), '\n') == 112);
    // Output differs only through the output path recorded in the summary.
    json j2 = json::parse(r2.out);
    j2["manifest"]["options"]["out"] = a;
    j2["output"] = a;
    CHECK(j2 == j);
    CHECK(run({"simulate", "market", "--n", "0", "--out", a}).code == 2);
    CHECK(run({"simulate", "market", "--n", "10", "--z-law", "uniform", "--out", a}).code == 2);
}

TEST_CASE("simulate weakiv is byte-identical across runs and thread counts") {
    const std::string cfg = write_text("small.cfg", "n = 80\nk_instruments = 4\ninstrument_strength = 0.2\nreplications = 25\nmaster_seed = 99\nretain_replications = true\n");
    const Result a = run({"simulate", "weakiv", "--config", cfg});
    const Result b = run({"simulate", "weakiv", "--config", cfg, "--threads", "3"});
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    const json j = json::parse(a.out);
    CHECK(j["manifest"]["seed"] == 99);
    CHECK(j["estimators"].size() == 4);
    CHECK(j["replications"].size() == 25);
    CHECK(run({"simulate", "weakiv", "--config", write_text("bad.cfg", "endogeneity = 2\n")}).code == 2);
}

TEST_CASE("reproduce prints a table and JSON") {
    const Result t = run({"reproduce"});
    CHECK(t.code == 0);
    CHECK(t.out.find("reference-only") != std::string::npos);
    CHECK(t.out.find("fish Wald") != std::string::npos);
    const json j = run_json({"reproduce", "--json"});
    bool saw_wald = false;
    for (const auto& row : j["rows"]) {
        const std::string q = row["quantity"];
        if (q.rfind("fish Wald", 0) == 0) {
            saw_wald = true;
            CHECK(row["status"] == "PASS");
        }
        if (q == "fish TSLS (stormy, mixed)") CHECK(row["status"] == "reference-only");
        if (q == "flu LATE" || q == "flu natural bound (lower)") CHECK(row["status"] == "PASS");
    }
    CHECK(saw_wald);
    CHECK(j.contains("all_pass"));
}
