#include "ivkit/market_sim.hpp"

#include "ivkit/errors.hpp"
#include "ivkit/kv_config.hpp"

#include <charconv>
#include <fstream>
#include <cmath>
#include <random>
#include <sstream>

namespace ivkit {

void MarketParams::validate() const {
    for (double v : {alpha_d, beta_d, alpha_s, beta_s, gamma_s, sigma_d, sigma_s, rho}) {
        if (!std::isfinite(v)) throw ValidationError("market parameters must be finite");
    }
    if (!(beta_d < 0.0)) throw ValidationError("demand elasticity beta_d must be negative");
    if (!(beta_s > 0.0)) throw ValidationError("supply elasticity beta_s must be positive");
    if (sigma_d < 0.0 || sigma_s < 0.0) throw ValidationError("shock standard deviations must be nonnegative");
    if (std::abs(rho) > 1.0) throw ValidationError("shock correlation rho must lie in [-1, 1]");
}

MarketParams parse_market_params(std::string_view text, std::string_view source) {
    const auto kv = KeyValueConfig::parse(text, source);
    kv.require_known({"alpha_d", "beta_d", "alpha_s", "beta_s", "gamma_s", "sigma_d", "sigma_s", "rho"});
    MarketParams p;
    p.alpha_d = kv.get_double("alpha_d", p.alpha_d);
    p.beta_d = kv.get_double("beta_d", p.beta_d);
    p.alpha_s = kv.get_double("alpha_s", p.alpha_s);
    p.beta_s = kv.get_double("beta_s", p.beta_s);
    p.gamma_s = kv.get_double("gamma_s", p.gamma_s);
    p.sigma_d = kv.get_double("sigma_d", p.sigma_d);
    p.sigma_s = kv.get_double("sigma_s", p.sigma_s);
    p.rho = kv.get_double("rho", p.rho);
    p.validate();
    return p;
}

MarketParams load_market_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open parameter file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_market_params(ss.str(), path);
}

std::string to_text(const MarketParams& p) {
    std::ostringstream os;
    os.precision(17);
    os << "alpha_d = " << p.alpha_d << "\nbeta_d = " << p.beta_d << "\nalpha_s = " << p.alpha_s
       << "\nbeta_s = " << p.beta_s << "\ngamma_s = " << p.gamma_s << "\nsigma_d = " << p.sigma_d
       << "\nsigma_s = " << p.sigma_s << "\nrho = " << p.rho << '\n';
    return os.str();
}

double demand_log_quantity(const MarketParams& p, double log_price, double eps_d) {
    return p.alpha_d + p.beta_d * log_price + eps_d;
}

double supply_log_quantity(const MarketParams& p, double log_price, double eps_s, double z) {
    return p.alpha_s + p.beta_s * log_price + p.gamma_s * z + eps_s;
}

MarketDraw equilibrium(const MarketParams& p, double eps_d, double eps_s, double z) {
    const double gap = p.slope_gap();
    MarketDraw m;
    m.instrument = z;
    m.eps_d = eps_d;
    m.eps_s = eps_s;
    m.log_price = (p.alpha_d - p.alpha_s) / gap + (eps_d - eps_s) / gap - p.gamma_s * z / gap;
    m.log_quantity = (p.beta_s * p.alpha_d - p.beta_d * p.alpha_s) / gap +
                     (p.beta_s * eps_d - p.beta_d * eps_s) / gap - p.gamma_s * p.beta_d * z / gap;
    return m;
}

ZLaw ZLaw::bernoulli(double q) {
    ZLaw l;
    l.kind = Kind::bernoulli;
    l.q = q;
    l.validate();
    return l;
}

ZLaw ZLaw::standard_normal() {
    ZLaw l;
    l.kind = Kind::standard_normal;
    return l;
}

ZLaw ZLaw::weather(std::array<double, 3> shares) {
    ZLaw l;
    l.kind = Kind::weather;
    l.weather_shares = shares;
    l.validate();
    return l;
}

void ZLaw::validate() const {
    if (kind == Kind::bernoulli && !(q > 0.0 && q < 1.0)) {
        throw ValidationError("bernoulli instrument probability must lie in (0, 1)");
    }
    if (kind == Kind::weather) {
        double total = 0.0;
        for (double s : weather_shares) {
            if (!(s >= 0.0) || !std::isfinite(s)) throw ValidationError("weather shares must be nonnegative");
            total += s;
        }
        if (!(total > 0.0)) throw ValidationError("weather shares must not all be zero");
    }
}

ZLaw parse_z_law(std::string_view spec) {
    auto number = [&](std::string_view s) {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) {
            throw ValidationError("invalid instrument law '" + std::string(spec) + "'");
        }
        return v;
    };
    const auto colon = spec.find(':');
    const std::string_view head = spec.substr(0, colon);
    const std::string_view tail = colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);
    if (head == "normal") {
        if (!tail.empty()) throw ValidationError("normal instrument law takes no argument");
        return ZLaw::standard_normal();
    }
    if (head == "bernoulli") {
        if (tail.empty()) throw ValidationError("bernoulli instrument law needs a probability, e.g. bernoulli:0.3");
        return ZLaw::bernoulli(number(tail));
    }
    if (head == "weather") {
        if (tail.empty()) return ZLaw::weather();
        std::array<double, 3> shares{};
        std::size_t start = 0;
        for (int i = 0; i < 3; ++i) {
            const auto comma = tail.find(',', start);
            if ((i < 2) == (comma == std::string_view::npos)) {
                throw ValidationError("weather law needs three shares: weather:stormy,mixed,fair");
            }
            shares[i] = number(tail.substr(start, comma == std::string_view::npos ? tail.npos : comma - start));
            start = comma + 1;
        }
        return ZLaw::weather(shares);
    }
    throw ValidationError("unknown instrument law '" + std::string(spec) + "'");
}

std::string to_string(const ZLaw& law) {
    std::ostringstream os;
    os.precision(17);
    switch (law.kind) {
        case ZLaw::Kind::bernoulli: os << "bernoulli:" << law.q; break;
        case ZLaw::Kind::standard_normal: os << "normal"; break;
        case ZLaw::Kind::weather:
            os << "weather:" << law.weather_shares[0] << ',' << law.weather_shares[1] << ','
               << law.weather_shares[2];
            break;
    }
    return os.str();
}

Dataset simulate_markets(const MarketParams& p, Index t_count, const ZLaw& law, std::uint64_t seed) {
    p.validate();
    law.validate();
    if (t_count < 1) throw ValidationError("t_count must be at least 1");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double rho_c = std::sqrt(std::max(0.0, 1.0 - p.rho * p.rho));
    const double share_total = law.weather_shares[0] + law.weather_shares[1] + law.weather_shares[2];

    const bool weather = law.kind == ZLaw::Kind::weather;
    VectorXd lq(t_count), lp(t_count);
    MatrixXd z(t_count, weather ? 2 : 1);
    for (Index t = 0; t < t_count; ++t) {
        const double e1 = normal(rng);
        const double e2 = normal(rng);
        const double eps_d = p.sigma_d * e1;
        const double eps_s = p.sigma_s * (p.rho * e1 + rho_c * e2);
        double shift = 0.0;
        switch (law.kind) {
            case ZLaw::Kind::bernoulli:
                shift = unif(rng) < law.q ? 1.0 : 0.0;
                z(t, 0) = shift;
                break;
            case ZLaw::Kind::standard_normal:
                shift = normal(rng);
                z(t, 0) = shift;
                break;
            case ZLaw::Kind::weather: {
                const double u = unif(rng) * share_total;
                const int state = u < law.weather_shares[0] ? 0
                                  : u < law.weather_shares[0] + law.weather_shares[1] ? 1
                                                                                       : 2;
                shift = kWeatherShift[state];
                z(t, 0) = state == 1 ? 1.0 : 0.0;
                z(t, 1) = state == 0 ? 1.0 : 0.0;
                break;
            }
        }
        const MarketDraw m = equilibrium(p, eps_d, eps_s, shift);
        lq(t) = m.log_quantity;
        lp(t) = m.log_price;
    }
    ColumnNames names{"log_quantity", "log_price", {}, {}};
    names.instruments = weather ? std::vector<std::string>{"mixed", "stormy"} : std::vector<std::string>{"z"};
    return Dataset(std::move(lq), std::move(lp), std::move(z), std::move(names));
}

double working_slope(const MarketParams& p) {
    const double sd = p.sigma_d, ss = p.sigma_s;
    const double den = ss * ss + sd * sd - 2.0 * p.rho * sd * ss;
    if (!(den > 0.0)) throw EstimationError("equilibrium log price has zero variance; the regression slope is undefined");
    return (p.beta_s * sd * sd + p.beta_d * ss * ss - p.rho * sd * ss * (p.beta_d + p.beta_s)) / den;
}

TaxOutcome tax_counterfactual(const MarketParams& p, double r, double eps_d, double eps_s) {
    p.validate();
    if (!(r >= 0.0) || !std::isfinite(r)) throw ValidationError("tax rate must be a nonnegative number");
    const double gap = p.slope_gap();
    const double log_tax = std::log1p(r);
    TaxOutcome o;
    o.log_price_net = (p.alpha_d - p.alpha_s) / gap + p.beta_d * log_tax / gap + (eps_d - eps_s) / gap;
    o.log_price_gross = o.log_price_net + log_tax;
    o.effect_on_log_quantity = p.beta_s * p.beta_d * log_tax / gap;
    o.log_quantity = (p.beta_s * p.alpha_d - p.beta_d * p.alpha_s) / gap + o.effect_on_log_quantity +
                     (p.beta_s * eps_d - p.beta_d * eps_s) / gap;
    return o;
}

}  // namespace ivkit
