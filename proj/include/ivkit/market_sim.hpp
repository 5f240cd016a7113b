#pragma once

#include "ivkit/data_model.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace ivkit {

/// Log-linear market:
///   demand  ln Q = alpha_d + beta_d ln P + eps_d
///   supply  ln Q = alpha_s + beta_s ln P + gamma_s z + eps_s
/// with (eps_d, eps_s) jointly normal, sds sigma_d, sigma_s, correlation rho,
/// independent of the supply shifter z.
struct MarketParams {
    double alpha_d = 8.5;
    double beta_d = -1.0;
    double alpha_s = 8.7;
    double beta_s = 1.0;
    double gamma_s = -0.7;
    double sigma_d = 0.5;
    double sigma_s = 0.5;
    double rho = 0.0;

    /// beta_d < 0 < beta_s, sigmas >= 0, |rho| <= 1.
    void validate() const;
    double slope_gap() const noexcept { return beta_s - beta_d; }
};

MarketParams parse_market_params(std::string_view text, std::string_view source = "<params>");
MarketParams load_market_params(const std::string& path);
std::string to_text(const MarketParams& p);

struct MarketDraw {
    double log_price = 0.0;
    double log_quantity = 0.0;
    double instrument = 0.0;
    double eps_d = 0.0;
    double eps_s = 0.0;
};

double demand_log_quantity(const MarketParams& p, double log_price, double eps_d);
double supply_log_quantity(const MarketParams& p, double log_price, double eps_s, double z);

/// Market-clearing log price and log quantity.
MarketDraw equilibrium(const MarketParams& p, double eps_d, double eps_s, double z);

/// Distribution of the supply shifter.
struct ZLaw {
    enum class Kind { bernoulli, standard_normal, weather };
    Kind kind = Kind::bernoulli;
    /// P(z = 1) for bernoulli.
    double q = 32.0 / 111.0;
    /// Shares of (stormy, mixed, fair) for weather.
    std::array<double, 3> weather_shares{32.0 / 111.0, 34.0 / 111.0, 45.0 / 111.0};

    static ZLaw bernoulli(double q);
    static ZLaw standard_normal();
    static ZLaw weather(std::array<double, 3> shares = {32.0 / 111.0, 34.0 / 111.0, 45.0 / 111.0});
    void validate() const;
};

/// Parses "bernoulli:0.3", "normal" or "weather[:stormy,mixed,fair]".
ZLaw parse_z_law(std::string_view spec);
std::string to_string(const ZLaw& law);

/// Shifter value entering supply for each weather state: stormy 1, mixed 0.5, fair 0.
inline constexpr std::array<double, 3> kWeatherShift{1.0, 0.5, 0.0};

/// Simulates t_count independent markets. Outcome is log quantity, treatment
/// log price. Bernoulli and normal laws give one instrument column "z"; the
/// weather law gives indicator columns "mixed" and "stormy" (fair is baseline).
Dataset simulate_markets(const MarketParams& p, Index t_count, const ZLaw& law, std::uint64_t seed);

/// Population slope of ln Q on ln P when gamma_s = 0:
///   (beta_s sd^2 + beta_d ss^2 - rho sd ss (beta_d + beta_s)) / (ss^2 + sd^2 - 2 rho sd ss).
double working_slope(const MarketParams& p);

struct TaxOutcome {
    /// Price sellers receive.
    double log_price_net = 0.0;
    /// Price buyers pay, log_price_net + ln(1 + r).
    double log_price_gross = 0.0;
    double log_quantity = 0.0;
    /// beta_s beta_d ln(1 + r) / (beta_s - beta_d); identical in every market.
    double effect_on_log_quantity = 0.0;
};

/// Equilibrium under an ad valorem tax r paid by buyers (z = 0).
TaxOutcome tax_counterfactual(const MarketParams& p, double r, double eps_d, double eps_s);

}  // namespace ivkit
