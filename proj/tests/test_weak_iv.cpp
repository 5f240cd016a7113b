#include "helpers.hpp"

#include "ivkit/errors.hpp"
#include "ivkit/iv_estimators.hpp"
#include "ivkit/weak_iv.hpp"

#include <doctest.h>

#include <random>

using namespace ivkit;
using doctest::Approx;
using testing_support::random_iv;

namespace {

Dataset fixture() {
    ColumnRoles r;
    r.outcome = "y";
    r.treatment = "x";
    r.instruments = {"z"};
    return load_csv(testing_support::data_path("ar20.csv"), r);
}

// The displayed statistic evaluated term by term with plain loops.
double ar_oracle(const Dataset& d, double b) {
    const auto n = static_cast<double>(d.n());
    double zbar = 0.0, ubar = 0.0;
    for (Eigen::Index i = 0; i < d.n(); ++i) {
        zbar += d.instruments()(i, 0) / n;
        ubar += (d.outcome()(i) - b * d.treatment()(i)) / n;
    }
    double cross = 0.0, zz = 0.0, uu = 0.0;
    for (Eigen::Index i = 0; i < d.n(); ++i) {
        const double zc = d.instruments()(i, 0) - zbar;
        const double u = d.outcome()(i) - b * d.treatment()(i);
        cross += zc * u;
        zz += zc * zc;
        uu += (u - ubar) * (u - ubar);
    }
    const double num = (cross / std::sqrt(n)) * (cross / std::sqrt(n));
    return num / ((zz / n) * (uu / n));
}

Dataset weak_draw(std::uint64_t seed, Eigen::Index n, double strength) {
    McConfig cfg;
    cfg.n = n;
    cfg.instrument_strength = strength;
    cfg.endogeneity = 0.7;
    return simulate_linear_iv(cfg, seed);
}

void check_sets_agree(const IntervalSet& a, const IntervalSet& b) {
    INFO("analytic " << a.to_string() << " grid " << b.to_string());
    REQUIRE(a.intervals().size() == b.intervals().size());
    for (std::size_t i = 0; i < a.intervals().size(); ++i) {
        const auto& p = a.intervals()[i];
        const auto& q = b.intervals()[i];
        if (std::isinf(p.lower)) {
            CHECK(p.lower == q.lower);
        } else {
            CHECK(std::abs(p.lower - q.lower) < 1e-6 * std::max(1.0, std::abs(p.lower)));
        }
        if (std::isinf(p.upper)) {
            CHECK(p.upper == q.upper);
        } else {
            CHECK(std::abs(p.upper - q.upper) < 1e-6 * std::max(1.0, std::abs(p.upper)));
        }
    }
}

}  // namespace

TEST_CASE("AR statistic matches the arithmetic oracle on the fixture") {
    const Dataset d = fixture();
    CHECK(ar_statistic(d, 0.0) == Approx(ar_oracle(d, 0.0)).epsilon(1e-12));
    for (const double b : {-3.0, -0.5, 0.25, 2.0}) CHECK(ar_statistic(d, b) == Approx(ar_oracle(d, b)).epsilon(1e-12));
    CHECK(ar_statistic_multi(d, -0.5) == Approx(ar_statistic(d, -0.5)).epsilon(1e-10));
}

TEST_CASE("AR vanishes at the ratio estimate and on exact fits") {
    const Dataset d = fixture();
    const double b = iv_ratio(d).beta1;
    CHECK(ar_statistic(d, b) < 1e-20);
    CHECK(ar_confidence_set(d).contains(b));

    const Dataset exact = d.with_outcome(1.7 * d.treatment());
    CHECK(ar_statistic(exact, 1.7) == 0.0);
}

TEST_CASE("AR is nonnegative") {
    std::mt19937_64 rng(3);
    const Dataset d = random_iv(rng, 40, 1, 0, 0.1);
    std::vector<double> grid;
    for (int i = -200; i <= 200; ++i) grid.push_back(i * 0.1);
    const ArCurve c = ar_curve(d, grid);
    CHECK(c.critical_value == kArCritical95);
    for (const double v : c.values) CHECK(v >= 0.0);
}

TEST_CASE("design requirements") {
    std::mt19937_64 rng(4);
    CHECK_THROWS_AS(ar_statistic(random_iv(rng, 30, 2), 0.0), ValidationError);
    CHECK_THROWS_AS(ar_confidence_set(random_iv(rng, 30, 1, 1)), ValidationError);
    const Dataset d = random_iv(rng, 30, 1);
    CHECK_THROWS_AS(ar_confidence_set(d, -1.0), ValidationError);
    CHECK_THROWS_AS(ar_confidence_set(d, std::nan("")), ValidationError);
}

TEST_CASE("vacuous and huge critical values give the whole line") {
    const Dataset d = fixture();
    CHECK(ar_confidence_set(d, kInf).is_whole_line());
    CHECK(ar_confidence_set(d, 1e12).is_whole_line());
    CHECK(ar_confidence_set(d, 1e12, ArInversion::grid).is_whole_line());
}

TEST_CASE("strong instrument gives a bounded set near the Wald interval") {
    const Dataset d = weak_draw(11, 10000, 1.0);
    const IntervalSet s = ar_confidence_set(d);
    REQUIRE(s.intervals().size() == 1);
    CHECK(s.bounded());
    CHECK(s.contains(1.0));
    const IvFit f = iv_ratio(d);
    const auto& p = s.intervals().front();
    const double half = 1.959963984540054 * f.beta1_se();
    CHECK(std::abs(p.lower - (f.beta1 - half)) < 0.1 * half);
    CHECK(std::abs(p.upper - (f.beta1 + half)) < 0.1 * half);
}

TEST_CASE("irrelevant instrument gives an unbounded set") {
    int unbounded = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const IntervalSet s = ar_confidence_set(weak_draw(seed, 100, 0.0));
        unbounded += !s.bounded();
        check_sets_agree(s, ar_confidence_set(weak_draw(seed, 100, 0.0), kArCritical95, ArInversion::grid));
    }
    // Nominal 95% of draws fail to reject irrelevance, giving rays or the whole line.
    CHECK(unbounded >= 15);
}

TEST_CASE("analytic and grid inversion agree") {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        for (const double s : {0.05, 0.2, 1.0}) {
            const Dataset d = weak_draw(seed, 80, s);
            INFO("seed " << seed << " strength " << s);
            check_sets_agree(ar_confidence_set(d, kArCritical95, ArInversion::analytic),
                             ar_confidence_set(d, kArCritical95, ArInversion::grid));
            check_sets_agree(ar_confidence_set(d, 6.63, ArInversion::analytic, ArVariance::uncentered),
                             ar_confidence_set(d, 6.63, ArInversion::grid, ArVariance::uncentered));
        }
    }
}

TEST_CASE("finite endpoints sit on the critical value") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Dataset d = weak_draw(seed, 60, 0.3);
        for (const auto variance : {ArVariance::demeaned, ArVariance::uncentered}) {
            const IntervalSet set = ar_confidence_set(d, kArCritical95, ArInversion::analytic, variance);
            for (const auto& p : set.intervals()) {
                if (std::isfinite(p.lower)) CHECK(ar_statistic(d, p.lower, variance) == Approx(kArCritical95).epsilon(1e-8));
                if (std::isfinite(p.upper)) CHECK(ar_statistic(d, p.upper, variance) == Approx(kArCritical95).epsilon(1e-8));
            }
        }
    }
}

TEST_CASE("uncentered variance is never smaller") {
    const Dataset d = fixture();
    for (const double b : {-1.0, 0.0, 3.0}) CHECK(ar_statistic(d, b, ArVariance::uncentered) <= ar_statistic(d, b) + 1e-12);
}

TEST_CASE("scaling the outcome scales the confidence set") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Dataset d = weak_draw(seed, 50, 0.4);
        for (const double c : {0.5, 3.0}) {
            const Dataset dc = d.with_outcome(c * d.outcome());
            CHECK(ar_statistic(dc, c * 0.7) == Approx(ar_statistic(d, 0.7)).epsilon(1e-10));
            const IntervalSet s = ar_confidence_set(d);
            const IntervalSet sc = ar_confidence_set(dc);
            REQUIRE(s.intervals().size() == sc.intervals().size());
            for (std::size_t i = 0; i < s.intervals().size(); ++i) {
                const auto& p = s.intervals()[i];
                const auto& q = sc.intervals()[i];
                if (std::isfinite(p.lower)) CHECK(q.lower == Approx(c * p.lower).epsilon(1e-9));
                if (std::isfinite(p.upper)) CHECK(q.upper == Approx(c * p.upper).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("critical values") {
    CHECK(ar_critical_value(1) == 3.84);
    CHECK(ar_critical_value(2) == Approx(5.991465).epsilon(1e-6));
    CHECK(ar_critical_value(20) == Approx(31.410433).epsilon(1e-6));
    CHECK_THROWS_AS(ar_critical_value(0), ValidationError);
}

TEST_CASE("Monte Carlo configuration") {
    const McConfig cfg = parse_mc_config("n = 100\nk_instruments = 3\nendogeneity = -0.2\nreplications = 7\nmaster_seed = 5\n");
    CHECK(cfg.n == 100);
    CHECK(cfg.k_instruments == 3);
    CHECK(cfg.endogeneity == -0.2);
    CHECK(cfg.beta1_true == 1.0);
    const McConfig back = parse_mc_config(to_text(cfg));
    CHECK(back.n == cfg.n);
    CHECK(back.endogeneity == cfg.endogeneity);
    CHECK(back.master_seed == cfg.master_seed);
    CHECK_THROWS_AS(parse_mc_config("endogeneity = 1\n"), ValidationError);
    CHECK_THROWS_AS(parse_mc_config("replications = 0\n"), ValidationError);
    CHECK_THROWS_AS(parse_mc_config("bogus = 3\n"), ValidationError);
    CHECK_THROWS_AS(load_mc_config("/nonexistent/file.cfg"), ValidationError);
    CHECK(cfg.concentration() == Approx(100 * 0.25));
}

TEST_CASE("simulated design has the intended structure") {
    McConfig cfg;
    cfg.n = 50000;
    cfg.k_instruments = 4;
    cfg.instrument_strength = 0.8;
    cfg.endogeneity = 0.5;
    const Dataset d = simulate_linear_iv(cfg, 9);
    CHECK(d.num_instruments() == 4);
    const IvFit f = tsls(d);
    CHECK(std::abs(f.beta1 - 1.0) < 4 * f.beta1_se());
    CHECK(simulate_linear_iv(cfg, 9).outcome() == d.outcome());
}

TEST_CASE("study is identical for any thread count") {
    McConfig cfg;
    cfg.n = 60;
    cfg.k_instruments = 3;
    cfg.instrument_strength = 0.3;
    cfg.replications = 37;
    cfg.retain_replications = true;
    const McReport a = run_weak_iv_study(cfg, 1);
    const McReport b = run_weak_iv_study(cfg, 4);
    REQUIRE(a.replications.size() == 37);
    for (std::size_t i = 0; i < a.replications.size(); ++i) {
        CHECK(a.replications[i].tsls == b.replications[i].tsls);
        CHECK(a.replications[i].ar_at_truth == b.replications[i].ar_at_truth);
        CHECK(a.replications[i].seed == b.replications[i].seed);
    }
    for (std::size_t i = 0; i < a.estimators.size(); ++i) {
        const double ma = a.estimators[i].median_estimate, mb = b.estimators[i].median_estimate;
        CHECK((ma == mb || (std::isnan(ma) && std::isnan(mb))));
        CHECK(a.estimators[i].coverage == b.estimators[i].coverage);
        CHECK(a.estimators[i].coverage >= 0.0);
        CHECK(a.estimators[i].coverage <= 1.0);
    }
    CHECK(a.summary("liml").name == "liml");
    CHECK_THROWS_AS(a.summary("gmm"), ValidationError);
    cfg.master_seed += 1;
    CHECK(run_weak_iv_study(cfg).replications[0].tsls != a.replications[0].tsls);
}
