#include "ivkit/cli.hpp"

#include "ivkit/data_model.hpp"
#include "ivkit/errors.hpp"
#include "ivkit/iv_estimators.hpp"
#include "ivkit/json_out.hpp"
#include "ivkit/late_bounds.hpp"
#include "ivkit/least_squares.hpp"
#include "ivkit/market_sim.hpp"
#include "ivkit/ols.hpp"
#include "ivkit/weak_iv.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

namespace ivkit::cli {

namespace {

using nlohmann::json;

std::string hex(const unsigned char* data, unsigned len) {
    std::ostringstream os;
    for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(data[i]);
    return os.str();
}

std::string sha256(std::string_view bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 digest failed");
    }
    return hex(md, len);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, ',')) {
        const auto b = cur.find_first_not_of(" \t");
        const auto e = cur.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
    }
    return out;
}

json manifest(const std::string& command, std::optional<std::string> digest, json options,
              std::optional<std::uint64_t> seed = std::nullopt) {
    json m;
    m["command"] = command;
    m["version"] = std::string(kVersion);
    m["input_sha256"] = digest ? json(*digest) : json(nullptr);
    m["options"] = std::move(options);
    m["seed"] = seed ? json(*seed) : json(nullptr);
    return m;
}

json interval_set_json(const IntervalSet& s) {
    json pairs = json::array();
    for (const auto& p : s.intervals()) pairs.push_back({json_number(p.lower), json_number(p.upper)});
    return pairs;
}

json interval_detail_json(const IntervalSet& s) {
    json arr = json::array();
    for (const auto& p : s.intervals()) {
        arr.push_back({{"lower", json_number(p.lower)},
                       {"upper", json_number(p.upper)},
                       {"lower_closed", p.lower_closed},
                       {"upper_closed", p.upper_closed}});
    }
    return arr;
}

json optional_number(const std::optional<double>& v) { return v ? json_number(*v) : json(nullptr); }

struct RoleArgs {
    std::string outcome = "y";
    std::string treatment = "x";
    std::string instruments = "z";
    std::string covariates;
    std::vector<std::string> recode;

    void attach(CLI::App* app, bool with_covariates) {
        app->add_option("--outcome", outcome, "Outcome column")->capture_default_str();
        app->add_option("--treatment", treatment, "Treatment (endogenous regressor) column")->capture_default_str();
        app->add_option("--instruments,--instrument", instruments, "Comma-separated instrument columns")
            ->capture_default_str();
        if (with_covariates) app->add_option("--covariates", covariates, "Comma-separated exogenous covariates");
        app->add_option("--recode", recode, "Token recoding, e.g. vaccine:yes=1,no=0 (repeatable)");
    }

    ColumnRoles roles() const {
        ColumnRoles r;
        r.outcome = outcome;
        r.treatment = treatment;
        r.instruments = split_list(instruments);
        r.covariates = split_list(covariates);
        for (const auto& spec : recode) {
            const auto colon = spec.find(':');
            if (colon == std::string::npos) throw ValidationError("recode spec '" + spec + "' needs column:token=value");
            auto& map = r.recode[spec.substr(0, colon)];
            for (const auto& item : split_list(spec.substr(colon + 1))) {
                const auto eq = item.find('=');
                if (eq == std::string::npos) throw ValidationError("recode item '" + item + "' needs token=value");
                try {
                    map[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
                } catch (const std::exception&) {
                    throw ValidationError("recode value in '" + item + "' is not a number");
                }
            }
        }
        return r;
    }

    json to_json() const {
        json j{{"outcome", outcome}, {"treatment", treatment}, {"instruments", split_list(instruments)}};
        j["covariates"] = split_list(covariates);
        j["recode"] = recode;
        return j;
    }
};

// --- estimate ----------------------------------------------------------------

struct EstimateArgs {
    std::string file;
    std::string method;
    RoleArgs roles;
};

json run_estimate(const EstimateArgs& a) {
    const std::string bytes = read_file(a.file);
    std::istringstream in(bytes);
    const Dataset d = read_csv(in, a.roles.roles(), a.file);

    json options = a.roles.to_json();
    options["method"] = a.method;
    options["file"] = a.file;

    json j;
    j["manifest"] = manifest("estimate", sha256(bytes), options);
    j["method"] = a.method;
    j["n"] = d.n();

    if (a.method == "ols") {
        std::vector<std::string> names{d.names().treatment};
        names.insert(names.end(), d.names().covariates.begin(), d.names().covariates.end());
        const MatrixXd treatment = d.treatment();
        const OlsFit f = ols(d.outcome(), design_matrix(false, {&treatment, &d.covariates()}), true, names);
        j["estimand"] = std::string(to_string(Estimand::ols_slope));
        j["point"] = json_number(f.coefficients(1));
        j["std_error"] = json_number(std::sqrt(f.coef_cov(1, 1)));
        j["coefficients"] = json::object();
        for (std::size_t k = 0; k < f.regressor_names.size(); ++k) {
            j["coefficients"][f.regressor_names[k]] = json_number(f.coefficients(static_cast<Index>(k)));
        }
        j["residual_variance"] = json_number(f.residual_variance);
        j["warnings"] = json::array();
        return j;
    }

    IvFit fit;
    if (a.method == "iv") fit = iv_ratio(d);
    else if (a.method == "ils") fit = ils(d);
    else if (a.method == "tsls") fit = tsls(d);
    else if (a.method == "liml") fit = liml(d);
    else throw ValidationError("unknown method '" + a.method + "'");

    const EstimateReport rep = to_report(fit);
    j["estimand"] = std::string(to_string(rep.estimand));
    j["point"] = json_number(rep.point);
    j["std_error"] = optional_number(rep.std_error);
    j["coefficients"] = {{"(intercept)", json_number(fit.beta0)}, {d.names().treatment, json_number(fit.beta1)}};
    for (Index k = 0; k < fit.beta2.size(); ++k) j["coefficients"][d.names().covariates[k]] = json_number(fit.beta2(k));
    j["sigma2"] = json_number(fit.sigma2);
    if (fit.method == IvMethod::tsls || fit.method == IvMethod::liml) j["kappa"] = json_number(fit.kappa);
    if (d.num_instruments() >= 2 && (fit.method == IvMethod::tsls || fit.method == IvMethod::liml)) {
        json per = json::array();
        for (const auto& e : per_instrument_estimates(d)) {
            per.push_back({{"instrument", e.instrument},
                           {"estimate", optional_number(e.estimate)},
                           {"first_stage_coefficient", json_number(e.first_stage_coefficient)}});
        }
        j["per_instrument"] = per;
    }
    j["warnings"] = fit.warnings;
    return j;
}

// --- late --------------------------------------------------------------------

struct LateArgs {
    std::string file;
    std::string builtin;
    RoleArgs roles;
};

json run_late(const LateArgs& a) {
    std::optional<std::string> digest;
    json options = a.roles.to_json();
    std::optional<BinaryIVTable> table;
    if (!a.builtin.empty()) {
        if (!a.file.empty()) throw ValidationError("give either a CSV file or --builtin, not both");
        if (a.builtin != "flu") throw ValidationError("unknown builtin dataset '" + a.builtin + "'");
        table = flu_table();
        options["builtin"] = a.builtin;
    } else {
        if (a.file.empty()) throw ValidationError("late needs a CSV file or --builtin flu");
        const std::string bytes = read_file(a.file);
        digest = sha256(bytes);
        std::istringstream in(bytes);
        table = table_from_dataset(read_csv(in, a.roles.roles(), a.file));
        options["file"] = a.file;
    }
    const BinaryIVTable& t = *table;

    json j;
    j["manifest"] = manifest("late", digest, options);
    json counts = json::array();
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x)
            for (int z = 0; z < 2; ++z) counts.push_back({{"y", y}, {"x", x}, {"z", z}, {"count", t.count(y, x, z)}});
    j["counts"] = counts;
    j["n"] = t.total();
    j["arm_sizes"] = {t.arm_size(0), t.arm_size(1)};

    const ComplianceShares s = compliance_shares(t);
    j["shares"] = {{"pi_a", json_number(s.pi_a)}, {"pi_n", json_number(s.pi_n)}, {"pi_c", json_number(s.pi_c)},
                   {"se_a", json_number(s.se_a)}, {"se_n", json_number(s.se_n)}, {"se_c", json_number(s.se_c)}};
    j["monotonicity_violation"] = s.monotonicity_violation;

    const IttEffects itt = itt_effects(t);
    j["itt_y"] = json_number(itt.itt_y);
    j["itt_y_se"] = json_number(itt.se_y);
    j["itt_x"] = json_number(itt.itt_x);
    j["itt_x_se"] = json_number(itt.se_x);

    j["late"] = nullptr;
    j["late_se"] = nullptr;
    j["late_error"] = nullptr;
    try {
        const EstimateReport r = late(t);
        j["late"] = json_number(r.point);
        j["late_se"] = optional_number(r.std_error);
    } catch (const MonotonicityError& e) {
        j["late_error"] = e.what();
    }

    const IntervalSet bounds = natural_bounds(t);
    const auto& b = bounds.intervals().front();
    j["bounds"] = {json_number(b.lower), json_number(b.upper)};
    j["bounds_width"] = json_number(b.upper - b.lower);

    json tests = json::array();
    const InequalityReport rep = exclusion_tests(t);
    for (const auto& r : rep.records) {
        tests.push_back({{"y", r.y},
                         {"x", r.x},
                         {"lhs", json_number(r.lhs)},
                         {"rhs", json_number(r.rhs)},
                         {"slack", json_number(r.slack)},
                         {"violated", r.violated}});
    }
    j["exclusion_tests"] = tests;
    j["any_violation"] = rep.any_violated();
    return j;
}

// --- ar ----------------------------------------------------------------------

struct ArArgs {
    std::string file;
    double critical_value = kArCritical95;
    std::string inversion = "analytic";
    std::string variance = "demeaned";
    RoleArgs roles;
};

json run_ar(const ArArgs& a) {
    const std::string bytes = read_file(a.file);
    std::istringstream in(bytes);
    const Dataset d = read_csv(in, a.roles.roles(), a.file);
    ArInversion method;
    if (a.inversion == "analytic") method = ArInversion::analytic;
    else if (a.inversion == "grid") method = ArInversion::grid;
    else throw ValidationError("inversion must be 'analytic' or 'grid'");
    ArVariance variance;
    if (a.variance == "demeaned") variance = ArVariance::demeaned;
    else if (a.variance == "uncentered") variance = ArVariance::uncentered;
    else throw ValidationError("variance must be 'demeaned' or 'uncentered'");

    json options = a.roles.to_json();
    options["file"] = a.file;
    options["critical_value"] = json_number(a.critical_value);
    options["inversion"] = a.inversion;
    options["variance"] = a.variance;

    const IntervalSet set = ar_confidence_set(d, a.critical_value, method, variance);
    json j;
    j["manifest"] = manifest("ar", sha256(bytes), options);
    j["n"] = d.n();
    j["critical_value"] = json_number(a.critical_value);
    j["confidence_set"] = interval_set_json(set);
    j["intervals"] = interval_detail_json(set);
    j["rendered"] = set.to_string();
    j["bounded"] = set.bounded();
    j["empty"] = set.empty();
    j["iv_estimate"] = nullptr;
    j["ar_at_iv"] = nullptr;
    try {
        const IvFit f = iv_ratio(d);
        j["iv_estimate"] = json_number(f.beta1);
        j["iv_std_error"] = json_number(f.beta1_se());
        j["ar_at_iv"] = json_number(ar_statistic(d, f.beta1, variance));
    } catch (const IrrelevanceError&) {
    }
    return j;
}

// --- simulate ----------------------------------------------------------------

struct SimMarketArgs {
    std::string params_file;
    Index n = 0;
    std::uint64_t seed = 1;
    std::string z_law = "bernoulli:" + std::to_string(32.0 / 111.0);
    std::string out;
};

json params_json(const MarketParams& p) {
    return {{"alpha_d", json_number(p.alpha_d)}, {"beta_d", json_number(p.beta_d)},
            {"alpha_s", json_number(p.alpha_s)}, {"beta_s", json_number(p.beta_s)},
            {"gamma_s", json_number(p.gamma_s)}, {"sigma_d", json_number(p.sigma_d)},
            {"sigma_s", json_number(p.sigma_s)}, {"rho", json_number(p.rho)}};
}

json run_simulate_market(const SimMarketArgs& a) {
    std::optional<std::string> digest;
    MarketParams p;
    if (!a.params_file.empty()) {
        const std::string bytes = read_file(a.params_file);
        digest = sha256(bytes);
        p = parse_market_params(bytes, a.params_file);
    }
    const ZLaw law = parse_z_law(a.z_law);
    const Dataset d = simulate_markets(p, a.n, law, a.seed);
    std::ostringstream csv;
    write_csv(d, csv);
    {
        std::ofstream f(a.out, std::ios::binary);
        if (!f) throw ValidationError("cannot write '" + a.out + "'");
        f << csv.str();
    }
    json options{{"params", a.params_file}, {"n", a.n}, {"z_law", to_string(law)}, {"out", a.out}};
    json j;
    j["manifest"] = manifest("simulate market", digest, options, a.seed);
    j["params"] = params_json(p);
    j["t_count"] = d.n();
    j["instrument_columns"] = d.names().instruments;
    j["output"] = a.out;
    j["output_sha256"] = sha256(csv.str());
    j["implied"] = {{"demand_slope", json_number(p.beta_d)},
                    {"price_shift_per_unit_z", json_number(-p.gamma_s / p.slope_gap())},
                    {"quantity_shift_per_unit_z", json_number(-p.gamma_s * p.beta_d / p.slope_gap())}};
    return j;
}

struct SimWeakArgs {
    std::string config;
    unsigned threads = 1;
};

json summary_json(const EstimatorSummary& s) {
    return {{"name", s.name},
            {"median_estimate", json_number(s.median_estimate)},
            {"median_bias", json_number(s.median_bias)},
            {"coverage", json_number(s.coverage)},
            {"rejection_rate", json_number(s.rejection_rate)},
            {"rejection_rate_zero", json_number(s.rejection_rate_zero)},
            {"failures", s.failures}};
}

json run_simulate_weakiv(const SimWeakArgs& a) {
    const std::string bytes = read_file(a.config);
    const McConfig cfg = parse_mc_config(bytes, a.config);
    const McReport rep = run_weak_iv_study(cfg, a.threads);
    json j;
    j["manifest"] = manifest("simulate weakiv", sha256(bytes), {{"config", a.config}}, cfg.master_seed);
    j["config"] = {{"n", cfg.n},
                   {"k_instruments", cfg.k_instruments},
                   {"beta1_true", json_number(cfg.beta1_true)},
                   {"instrument_strength", json_number(cfg.instrument_strength)},
                   {"endogeneity", json_number(cfg.endogeneity)},
                   {"replications", cfg.replications},
                   {"master_seed", cfg.master_seed},
                   {"retain_replications", cfg.retain_replications}};
    j["concentration"] = json_number(rep.concentration);
    j["ar_critical_value"] = json_number(rep.ar_critical_value);
    json est = json::array();
    for (const auto& s : rep.estimators) est.push_back(summary_json(s));
    j["estimators"] = est;
    json reps = json::array();
    for (const auto& r : rep.replications) {
        reps.push_back({{"index", r.index},
                        {"seed", r.seed},
                        {"ols", json_number(r.ols)},
                        {"ols_se", json_number(r.ols_se)},
                        {"tsls", json_number(r.tsls)},
                        {"tsls_se", json_number(r.tsls_se)},
                        {"liml", json_number(r.liml)},
                        {"liml_se", json_number(r.liml_se)},
                        {"kappa", json_number(r.kappa)},
                        {"ar_at_truth", json_number(r.ar_at_truth)},
                        {"ar_at_zero", json_number(r.ar_at_zero)}});
    }
    j["replications"] = reps;
    return j;
}

// --- reproduce ---------------------------------------------------------------

struct ReproRow {
    std::string quantity;
    double computed;
    std::optional<double> published;
    double tolerance;
    std::string status;  // PASS, FAIL, reference-only
    std::string note;
};

ReproRow check(std::string quantity, double computed, double published, double tolerance, std::string note = "") {
    const bool ok = std::abs(computed - published) <= tolerance;
    return {std::move(quantity), computed, published, tolerance, ok ? "PASS" : "FAIL", std::move(note)};
}

std::vector<ReproRow> reproduce_rows() {
    std::vector<ReproRow> rows;
    const BinaryIVTable flu = flu_table();
    // Printed values are rounded; a row passes when the computed value rounds to it.
    const ComplianceShares s = compliance_shares(flu);
    rows.push_back(check("flu pi_a (always-takers)", s.pi_a, 0.189, 0.0005));
    rows.push_back(check("flu pi_n (never-takers)", s.pi_n, 0.692, 0.0005));
    rows.push_back(check("flu pi_c (compliers)", s.pi_c, 0.119, 0.0005, "published value is 1 - 0.189 - 0.692"));

    const IttEffects itt = itt_effects(flu);
    rows.push_back(check("flu ITT_Y", itt.itt_y, -0.015, 0.0005));
    rows.push_back(check("flu ITT_Y s.e.", itt.se_y, 0.011, 0.0005, "independent binomial arms"));
    rows.push_back(check("flu ITT_X", itt.itt_x, 0.119, 0.0005, "equals pi_c"));
    rows.push_back(check("flu ITT_X s.e.", itt.se_x, 0.016, 0.0005, "independent binomial arms"));

    const EstimateReport l = late(flu);
    rows.push_back(check("flu LATE", l.point, -0.125, 0.0005));
    rows.push_back(check("flu LATE s.e.", *l.std_error, 0.090, 0.002, "delta method"));

    const IntervalSet bounds = natural_bounds(flu);
    const Interval b = bounds.intervals().front();
    rows.push_back(check("flu natural bound (lower)", b.lower, -0.24, 0.005));
    rows.push_back(check("flu natural bound (upper)", b.upper, 0.64, 0.005));

    const InequalityRecord ineq = exclusion_tests(flu).at(1, 1);
    rows.push_back(check("flu P(Y=1,X=1|Z=0)", ineq.lhs, 0.0216, 0.00005));
    rows.push_back(check("flu P(Y=1,X=1|Z=1)", ineq.rhs, 0.0211, 0.00005, "printed as 31/72; 31/1472 intended"));
    rows.push_back({"flu always-taker restriction violated", ineq.violated ? 1.0 : 0.0, 1.0, 0.0,
                    ineq.violated ? "PASS" : "FAIL", "slack " + std::to_string(ineq.slack)});

    GroupMeans fish;
    fish.mean_y = {8.63, 8.27};  // fair, stormy
    fish.mean_x = {-0.29, 0.04};
    fish.arm_sizes = {79, 32};
    rows.push_back(check("fish Wald demand slope (table means)", wald_from_means(fish), -1.08, 0.06,
                         "two-decimal table rounding"));

    const double nan = std::numeric_limits<double>::quiet_NaN();
    rows.push_back({"fish OLS slope", nan, -0.54, 0.0, "reference-only", "raw data unavailable"});
    rows.push_back({"fish TSLS (stormy, mixed)", nan, -1.014, 0.0, "reference-only", "raw data unavailable"});
    rows.push_back({"fish LIML (stormy, mixed)", nan, -1.016, 0.0, "reference-only", "raw data unavailable"});
    return rows;
}

json run_reproduce(bool as_json, std::ostream& out) {
    const auto rows = reproduce_rows();
    std::size_t passed = 0, failed = 0;
    for (const auto& r : rows) {
        if (r.status == "PASS") ++passed;
        if (r.status == "FAIL") ++failed;
    }
    if (!as_json) {
        out << std::left << std::setw(40) << "quantity" << std::right << std::setw(12) << "computed"
            << std::setw(10) << "published" << std::setw(10) << "tol" << "  " << std::left << std::setw(16)
            << "status" << "note\n";
        out << std::string(100, '-') << '\n';
        for (const auto& r : rows) {
            out << std::left << std::setw(40) << r.quantity << std::right << std::setw(12);
            if (std::isnan(r.computed)) out << "n/a";
            else out << std::fixed << std::setprecision(5) << r.computed;
            out << std::setw(10) << std::defaultfloat << std::setprecision(4) << *r.published << std::setw(10)
                << r.tolerance << "  " << std::left << std::setw(16) << r.status << r.note << '\n';
        }
        out << std::string(100, '-') << '\n';
        out << passed << " passed, " << failed << " failed, " << rows.size() - passed - failed
            << " reference-only\n";
        return nullptr;
    }
    json j;
    j["manifest"] = manifest("reproduce", std::nullopt, json::object());
    json arr = json::array();
    for (const auto& r : rows) {
        arr.push_back({{"quantity", r.quantity},
                       {"computed", json_number(r.computed)},
                       {"published", optional_number(r.published)},
                       {"tolerance", json_number(r.tolerance)},
                       {"status", r.status},
                       {"note", r.note}});
    }
    j["rows"] = arr;
    j["passed"] = passed;
    j["failed"] = failed;
    j["all_pass"] = failed == 0;
    return j;
}

json error_json(const std::string& kind, const std::string& message) {
    return {{"error", {{"kind", kind}, {"message", message}}}};
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"ivkit: instrumental-variables estimation, bounds and weak-instrument inference"};
    app.name("ivkit");
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    std::function<void()> action;
    auto emit = [&](const json& j) { out << dump_json(j) << '\n'; };

    EstimateArgs est;
    auto* c_est = app.add_subcommand("estimate", "Point estimate and standard error for the treatment coefficient");
    c_est->add_option("file", est.file, "CSV file")->required();
    c_est->add_option("--method", est.method, "ols, iv, ils, tsls or liml")
        ->required()
        ->check(CLI::IsMember({"ols", "iv", "ils", "tsls", "liml"}));
    est.roles.attach(c_est, true);
    c_est->callback([&] { action = [&] { emit(run_estimate(est)); }; });

    LateArgs la;
    auto* c_late = app.add_subcommand("late", "Compliance shares, LATE, natural bounds and exclusion checks");
    c_late->add_option("file", la.file, "CSV file with binary outcome, treatment and instrument");
    c_late->add_option("--builtin", la.builtin, "Use a bundled table (flu)");
    la.roles.attach(c_late, false);
    c_late->callback([&] { action = [&] { emit(run_late(la)); }; });

    ArArgs ar;
    auto* c_ar = app.add_subcommand("ar", "Anderson-Rubin confidence set");
    c_ar->add_option("file", ar.file, "CSV file")->required();
    c_ar->add_option("--critical-value", ar.critical_value, "Critical value for AR(b)")->capture_default_str();
    c_ar->add_option("--inversion", ar.inversion, "analytic or grid")->capture_default_str();
    c_ar->add_option("--variance", ar.variance, "Residual variance in AR(b): demeaned or uncentered")
        ->capture_default_str();
    ar.roles.attach(c_ar, false);
    c_ar->callback([&] { action = [&] { emit(run_ar(ar)); }; });

    auto* c_sim = app.add_subcommand("simulate", "Simulate markets or run a weak-instrument study");
    c_sim->require_subcommand(1);
    SimMarketArgs sm;
    auto* c_market = c_sim->add_subcommand("market", "Write simulated market data to CSV");
    c_market->add_option("--params", sm.params_file, "key = value parameter file");
    c_market->add_option("--n", sm.n, "Number of markets")->required();
    c_market->add_option("--seed", sm.seed, "Random seed")->capture_default_str();
    c_market->add_option("--z-law", sm.z_law, "bernoulli:q, normal or weather[:stormy,mixed,fair]")
        ->capture_default_str();
    c_market->add_option("--out", sm.out, "Output CSV path")->required();
    c_market->callback([&] { action = [&] { emit(run_simulate_market(sm)); }; });

    SimWeakArgs sw;
    auto* c_weak = c_sim->add_subcommand("weakiv", "Monte Carlo study of OLS, TSLS, LIML and AR");
    c_weak->add_option("--config", sw.config, "key = value study configuration")->required();
    c_weak->add_option("--threads", sw.threads, "Worker threads (results do not depend on this)")
        ->capture_default_str();
    c_weak->callback([&] { action = [&] { emit(run_simulate_weakiv(sw)); }; });

    bool repro_json = false;
    auto* c_repro = app.add_subcommand("reproduce", "Recompute the published influenza and fish numbers");
    c_repro->add_flag("--json", repro_json, "Emit JSON instead of a table");
    c_repro->callback([&] {
        action = [&] {
            const json j = run_reproduce(repro_json, out);
            if (repro_json) emit(j);
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            app.exit(e, out, err);
            return kExitOk;
        }
        err << dump_json(error_json("usage", e.what()), 0) << '\n';
        return kExitValidation;
    }

    try {
        if (action) action();
        return kExitOk;
    } catch (const RankDeficientError& e) {
        json j = error_json(e.kind(), e.what());
        j["error"]["column"] = e.column();
        j["error"]["column_name"] = e.column_name();
        err << dump_json(j, 0) << '\n';
        return kExitEstimation;
    } catch (const IrrelevanceError& e) {
        json j = error_json(e.kind(), e.what());
        j["error"]["denominator"] = json_number(e.denominator());
        err << dump_json(j, 0) << '\n';
        return kExitEstimation;
    } catch (const EstimationError& e) {
        err << dump_json(error_json(e.kind(), e.what()), 0) << '\n';
        return kExitEstimation;
    } catch (const ValidationError& e) {
        err << dump_json(error_json(e.kind(), e.what()), 0) << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        err << dump_json(error_json("internal", e.what()), 0) << '\n';
        return 1;
    }
}

}  // namespace ivkit::cli
