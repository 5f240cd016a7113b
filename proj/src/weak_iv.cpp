#include "ivkit/weak_iv.hpp"

#include "ivkit/errors.hpp"
#include "ivkit/iv_estimators.hpp"
#include "ivkit/kv_config.hpp"
#include "ivkit/least_squares.hpp"
#include "ivkit/ols.hpp"
#include "ivkit/seeding.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

namespace ivkit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_simple_design(const Dataset& d) {
    if (d.num_instruments() != 1 || d.num_covariates() != 0) {
        throw ValidationError("Anderson-Rubin inference needs exactly one instrument and no covariates");
    }
    if (d.n() < 3) throw ValidationError("Anderson-Rubin inference needs at least 3 observations");
}

// Centered cross-products; AR(b) = N (a1 - b a2)^2 / (szz * suu(b)).
struct ArMoments {
    double n = 0.0;
    double szz = 0.0;
    double a1 = 0.0;  // sum z~ y~
    double a2 = 0.0;  // sum z~ x~
    double syy = 0.0, sxy = 0.0, sxx = 0.0;

    double suu(double b) const { return syy - 2.0 * b * sxy + b * b * sxx; }

    double statistic(double b) const {
        const double num = (a1 - b * a2) * (a1 - b * a2);
        const double den = szz * suu(b);
        const double scale = syy + b * b * sxx;
        if (!(den > 1e-24 * szz * scale)) return num <= 1e-20 * szz * scale ? 0.0 : kInf;
        return n * num / den;
    }
};

ArMoments ar_moments(const Dataset& d, ArVariance variance) {
    ArMoments m;
    m.n = static_cast<double>(d.n());
    const VectorXd z = d.instruments().col(0).array() - d.instruments().col(0).mean();
    const bool demean = variance == ArVariance::demeaned;
    const VectorXd y = d.outcome().array() - (demean ? d.outcome().mean() : 0.0);
    const VectorXd x = d.treatment().array() - (demean ? d.treatment().mean() : 0.0);
    m.szz = z.squaredNorm();
    m.a1 = z.dot(y);
    m.a2 = z.dot(x);
    m.syy = y.squaredNorm();
    m.sxy = x.dot(y);
    m.sxx = x.squaredNorm();
    return m;
}

// Roots of A b^2 + B b + C = 0 with disc >= 0, ascending.
std::pair<double, double> quadratic_roots(double a, double b, double c) {
    const double disc = std::max(b * b - 4.0 * a * c, 0.0);
    const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
    double r1 = q / a;
    double r2 = q != 0.0 ? c / q : r1;
    if (r1 > r2) std::swap(r1, r2);
    return {r1, r2};
}

IntervalSet invert_analytic(const ArMoments& m, double c) {
    // N (a1 - b a2)^2 - c szz suu(b) <= 0
    const double qa = m.n * m.a2 * m.a2 - c * m.szz * m.sxx;
    const double qb = -2.0 * (m.n * m.a1 * m.a2 - c * m.szz * m.sxy);
    const double qc = m.n * m.a1 * m.a1 - c * m.szz * m.syy;
    const double a_scale = m.n * m.a2 * m.a2 + c * m.szz * m.sxx;

    if (std::abs(qa) <= 1e-12 * a_scale) {
        if (qb > 0.0) return IntervalSet({Interval{-kInf, -qc / qb, false, true}});
        if (qb < 0.0) return IntervalSet({Interval{-qc / qb, kInf, true, false}});
        return qc <= 0.0 ? IntervalSet::whole_line() : IntervalSet();
    }
    const double disc = qb * qb - 4.0 * qa * qc;
    if (qa > 0.0) {
        if (disc < 0.0) return IntervalSet();
        const auto [r1, r2] = quadratic_roots(qa, qb, qc);
        return IntervalSet::closed(r1, r2);
    }
    if (disc <= 0.0) return IntervalSet::whole_line();
    const auto [r1, r2] = quadratic_roots(qa, qb, qc);
    return IntervalSet({Interval{-kInf, r1, false, true}, Interval{r2, kInf, true, false}});
}

IntervalSet invert_grid(const ArMoments& m, double c) {
    double location = 0.0;
    double scale = 0.0;
    if (m.a2 != 0.0 && std::abs(m.a2) > 1e-12 * std::sqrt(m.szz * m.sxx)) {
        location = m.a1 / m.a2;
        const double s2 = m.suu(location) / m.n;
        scale = std::sqrt(s2 * m.szz) / std::abs(m.a2);
    }
    if (!(scale > 0.0) || !std::isfinite(scale)) scale = m.sxx > 0.0 ? std::sqrt(m.syy / m.sxx) : 1.0;
    scale = std::max(scale, 1e-8 * std::max(1.0, std::abs(location)));

    // Grid uniform in angle, b = location + scale * tan(t), so the whole line is scanned.
    constexpr int kPoints = 20001;
    const double half_pi = std::acos(0.0);
    auto to_b = [&](double t) { return location + scale * std::tan(t); };
    auto at = [&](int i) { return -half_pi + half_pi * 2.0 * (i + 1) / (kPoints + 1); };
    auto inside = [&](double t) { return m.statistic(to_b(t)) <= c; };
    // Limit of the statistic as |b| grows.
    const bool inside_at_infinity = m.n * m.a2 * m.a2 <= c * m.szz * m.sxx;

    auto refine = [&](double in_t, double out_t) {
        for (int it = 0; it < 200; ++it) {
            const double in_b = to_b(in_t), out_b = to_b(out_t);
            if (std::abs(out_b - in_b) <= 1e-10 * std::max(1.0, std::abs(in_b))) break;
            const double mid = 0.5 * (in_t + out_t);
            if (mid == in_t || mid == out_t) break;
            (inside(mid) ? in_t : out_t) = mid;
        }
        return 0.5 * (to_b(in_t) + to_b(out_t));
    };

    std::vector<Interval> pieces;
    bool prev = inside_at_infinity;
    double prev_t = -half_pi;
    double start = -kInf;
    for (int i = 0; i < kPoints; ++i) {
        const double t = at(i);
        const bool cur = inside(t);
        if (cur && !prev) start = i == 0 ? to_b(t) : refine(t, prev_t);
        if (!cur && prev) pieces.push_back(Interval{start, i == 0 ? to_b(t) : refine(prev_t, t), std::isfinite(start), true});
        prev = cur;
        prev_t = t;
    }
    if (prev) {
        pieces.push_back(inside_at_infinity ? Interval{start, kInf, std::isfinite(start), false}
                                            : Interval{start, to_b(prev_t), std::isfinite(start), true});
    } else if (inside_at_infinity) {
        pieces.push_back(Interval{to_b(prev_t), kInf, true, false});
    }
    return IntervalSet(std::move(pieces));
}

double median(std::vector<double> v) {
    std::erase_if(v, [](double x) { return std::isnan(x); });
    if (v.empty()) return kNaN;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

}  // namespace

double ar_statistic(const Dataset& d, double b, ArVariance variance) {
    require_simple_design(d);
    const double n = static_cast<double>(d.n());
    const VectorXd z = d.instruments().col(0).array() - d.instruments().col(0).mean();
    const VectorXd u = d.outcome() - b * d.treatment();
    const VectorXd uc = u.array() - (variance == ArVariance::demeaned ? u.mean() : 0.0);
    const double num = z.dot(u) * z.dot(u) / n;
    const double szz = z.squaredNorm() / n;
    const double s2 = uc.squaredNorm() / n;
    const double scale = (d.outcome().squaredNorm() + b * b * d.treatment().squaredNorm()) / n;
    if (!(s2 > 1e-24 * scale)) {
        if (num <= 1e-20 * szz * scale) return 0.0;
        throw EstimationError("AR statistic undefined: zero residual variance with nonzero numerator");
    }
    return num / (szz * s2);
}

double ar_statistic_multi(const Dataset& d, double b) {
    if (d.num_covariates() != 0) throw ValidationError("multi-instrument AR statistic does not accept covariates");
    const VectorXd u = d.outcome() - b * d.treatment();
    const VectorXd uc = u.array() - u.mean();
    const double tss = uc.squaredNorm();
    const LeastSquares ls(design_matrix(true, {&d.instruments()}), {});
    const double rss = ls.residualize(u).squaredNorm();
    if (!(tss > 0.0)) return 0.0;
    return static_cast<double>(d.n()) * std::max(0.0, 1.0 - rss / tss);
}

double ar_critical_value(Index k_instruments) {
    if (k_instruments < 1) throw ValidationError("need at least one instrument");
    if (k_instruments == 1) return kArCritical95;
    const boost::math::chi_squared dist(static_cast<double>(k_instruments));
    return boost::math::quantile(dist, 0.95);
}

IntervalSet ar_confidence_set(const Dataset& d, double critical_value, ArInversion method, ArVariance variance) {
    require_simple_design(d);
    if (std::isnan(critical_value) || critical_value < 0.0) {
        throw ValidationError("critical value must be a nonnegative number");
    }
    if (std::isinf(critical_value)) return IntervalSet::whole_line();
    const ArMoments m = ar_moments(d, variance);
    return method == ArInversion::analytic ? invert_analytic(m, critical_value) : invert_grid(m, critical_value);
}

ArCurve ar_curve(const Dataset& d, std::span<const double> grid, double critical_value, ArVariance variance) {
    require_simple_design(d);
    ArCurve c;
    c.critical_value = critical_value;
    c.grid.assign(grid.begin(), grid.end());
    c.values.reserve(grid.size());
    for (const double b : grid) c.values.push_back(ar_statistic(d, b, variance));
    return c;
}

// --- Monte Carlo -------------------------------------------------------------

void McConfig::validate() const {
    if (n < 4) throw ValidationError("n must be at least 4");
    if (k_instruments < 1) throw ValidationError("k_instruments must be at least 1");
    if (n <= k_instruments + 2) throw ValidationError("n must exceed k_instruments + 2");
    if (!(endogeneity > -1.0 && endogeneity < 1.0)) throw ValidationError("endogeneity must lie in (-1, 1)");
    if (replications < 1) throw ValidationError("replications must be at least 1");
    if (!std::isfinite(beta1_true) || !std::isfinite(instrument_strength)) {
        throw ValidationError("beta1_true and instrument_strength must be finite");
    }
}

McConfig parse_mc_config(std::string_view text, std::string_view source) {
    const auto kv = KeyValueConfig::parse(text, source);
    kv.require_known({"n", "k_instruments", "beta1_true", "instrument_strength", "endogeneity", "replications",
                      "master_seed", "retain_replications"});
    McConfig cfg;
    cfg.n = kv.get_int("n", cfg.n);
    cfg.k_instruments = kv.get_int("k_instruments", cfg.k_instruments);
    cfg.beta1_true = kv.get_double("beta1_true", cfg.beta1_true);
    cfg.instrument_strength = kv.get_double("instrument_strength", cfg.instrument_strength);
    cfg.endogeneity = kv.get_double("endogeneity", cfg.endogeneity);
    cfg.replications = kv.get_int("replications", cfg.replications);
    cfg.master_seed = kv.get_uint64("master_seed", cfg.master_seed);
    cfg.retain_replications = kv.get_bool("retain_replications", cfg.retain_replications);
    cfg.validate();
    return cfg;
}

McConfig load_mc_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_mc_config(ss.str(), path);
}

std::string to_text(const McConfig& cfg) {
    std::ostringstream os;
    os.precision(17);
    os << "n = " << cfg.n << '\n'
       << "k_instruments = " << cfg.k_instruments << '\n'
       << "beta1_true = " << cfg.beta1_true << '\n'
       << "instrument_strength = " << cfg.instrument_strength << '\n'
       << "endogeneity = " << cfg.endogeneity << '\n'
       << "replications = " << cfg.replications << '\n'
       << "master_seed = " << cfg.master_seed << '\n'
       << "retain_replications = " << (cfg.retain_replications ? "true" : "false") << '\n';
    return os.str();
}

Dataset simulate_linear_iv(const McConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Index n = cfg.n;
    const Index k = cfg.k_instruments;
    const double pi = cfg.instrument_strength / std::sqrt(static_cast<double>(k));
    const double rho = cfg.endogeneity;
    const double rho_c = std::sqrt(1.0 - rho * rho);

    MatrixXd z(n, k);
    VectorXd x(n), y(n);
    for (Index i = 0; i < n; ++i) {
        double index = 0.0;
        for (Index j = 0; j < k; ++j) {
            z(i, j) = normal(rng);
            index += z(i, j);
        }
        const double eps = normal(rng);
        const double eta = rho * eps + rho_c * normal(rng);
        x(i) = pi * index + eta;
        y(i) = cfg.beta1_true * x(i) + eps;
    }
    return Dataset(std::move(y), std::move(x), std::move(z));
}

namespace {

ReplicationRecord run_replication(const McConfig& cfg, Index r) {
    ReplicationRecord rec;
    rec.index = r;
    rec.seed = stream_seed(cfg.master_seed, static_cast<std::uint64_t>(r));
    rec.ols = rec.ols_se = rec.tsls = rec.tsls_se = rec.liml = rec.liml_se = rec.kappa = kNaN;
    rec.ar_at_truth = rec.ar_at_zero = kNaN;

    const Dataset d = simulate_linear_iv(cfg, rec.seed);
    try {
        const OlsFit f = ols(d.outcome(), d.treatment(), true);
        rec.ols = f.coefficients(1);
        rec.ols_se = std::sqrt(f.coef_cov(1, 1));
    } catch (const EstimationError&) {
    }
    try {
        const IvFit f = tsls(d);
        rec.tsls = f.beta1;
        rec.tsls_se = f.beta1_se();
    } catch (const EstimationError&) {
    }
    try {
        const IvFit f = liml(d);
        rec.liml = f.beta1;
        rec.liml_se = f.beta1_se();
        rec.kappa = f.kappa;
    } catch (const EstimationError&) {
    }
    try {
        rec.ar_at_truth = ar_statistic_multi(d, cfg.beta1_true);
        rec.ar_at_zero = ar_statistic_multi(d, 0.0);
    } catch (const EstimationError&) {
    }
    return rec;
}

EstimatorSummary summarize_point(const std::string& name, const std::vector<ReplicationRecord>& recs,
                                 double ReplicationRecord::*est, double ReplicationRecord::*se, double truth) {
    constexpr double z95 = 1.959963984540054;
    EstimatorSummary s;
    s.name = name;
    std::vector<double> values;
    Index ok = 0, cover = 0, reject_zero = 0;
    for (const auto& r : recs) {
        const double b = r.*est;
        const double e = r.*se;
        if (std::isnan(b) || std::isnan(e)) {
            ++s.failures;
            continue;
        }
        values.push_back(b);
        ++ok;
        if (std::abs(b - truth) <= z95 * e) ++cover;
        if (std::abs(b) > z95 * e) ++reject_zero;
    }
    s.median_estimate = median(values);
    s.median_bias = s.median_estimate - truth;
    s.coverage = ok > 0 ? static_cast<double>(cover) / static_cast<double>(ok) : kNaN;
    s.rejection_rate = ok > 0 ? 1.0 - s.coverage : kNaN;
    s.rejection_rate_zero = ok > 0 ? static_cast<double>(reject_zero) / static_cast<double>(ok) : kNaN;
    return s;
}

EstimatorSummary summarize_ar(const std::vector<ReplicationRecord>& recs, double crit) {
    EstimatorSummary s;
    s.name = "ar";
    s.median_estimate = kNaN;
    s.median_bias = kNaN;
    Index ok = 0, cover = 0, reject_zero = 0;
    for (const auto& r : recs) {
        if (std::isnan(r.ar_at_truth)) {
            ++s.failures;
            continue;
        }
        ++ok;
        if (r.ar_at_truth <= crit) ++cover;
        if (r.ar_at_zero > crit) ++reject_zero;
    }
    s.coverage = ok > 0 ? static_cast<double>(cover) / static_cast<double>(ok) : kNaN;
    s.rejection_rate = ok > 0 ? 1.0 - s.coverage : kNaN;
    s.rejection_rate_zero = ok > 0 ? static_cast<double>(reject_zero) / static_cast<double>(ok) : kNaN;
    return s;
}

}  // namespace

const EstimatorSummary& McReport::summary(std::string_view name) const {
    for (const auto& s : estimators)
        if (s.name == name) return s;
    throw ValidationError("no estimator summary named '" + std::string(name) + "'");
}

McReport run_weak_iv_study(const McConfig& cfg, unsigned threads) {
    cfg.validate();
    const Index reps = cfg.replications;
    std::vector<ReplicationRecord> recs(static_cast<std::size_t>(reps));

    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(reps)));
    if (threads == 1) {
        for (Index r = 0; r < reps; ++r) recs[r] = run_replication(cfg, r);
    } else {
        std::vector<std::exception_ptr> errors(threads);
        {
            std::vector<std::jthread> pool;
            for (unsigned t = 0; t < threads; ++t) {
                pool.emplace_back([&, t] {
                    try {
                        for (Index r = t; r < reps; r += threads) recs[r] = run_replication(cfg, r);
                    } catch (...) {
                        errors[t] = std::current_exception();
                    }
                });
            }
        }
        for (const auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    McReport rep;
    rep.config = cfg;
    rep.concentration = cfg.concentration();
    rep.ar_critical_value = ar_critical_value(cfg.k_instruments);
    const double truth = cfg.beta1_true;
    rep.estimators.push_back(summarize_point("ols", recs, &ReplicationRecord::ols, &ReplicationRecord::ols_se, truth));
    rep.estimators.push_back(
        summarize_point("tsls", recs, &ReplicationRecord::tsls, &ReplicationRecord::tsls_se, truth));
    rep.estimators.push_back(
        summarize_point("liml", recs, &ReplicationRecord::liml, &ReplicationRecord::liml_se, truth));
    rep.estimators.push_back(summarize_ar(recs, rep.ar_critical_value));
    if (cfg.retain_replications) rep.replications = std::move(recs);
    return rep;
}

}  // namespace ivkit
