#pragma once

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <cstdint>
#include <limits>

#include "ambivol/error.hpp"

namespace ambivol {

enum class OptionType { call, put };

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

// Black formula on a forward F with discount factor D and total stdev w = sigma sqrt(tau).
inline double black_price(double F, double K, double D, double w, OptionType type = OptionType::call) {
  if (!(F > 0.0) || !(K > 0.0) || !(D > 0.0) || !(w >= 0.0)) throw InvalidArgument("black_price: bad inputs");
  double call;
  if (w == 0.0) {
    call = D * std::max(F - K, 0.0);
  } else {
    const double d1 = (std::log(F / K) + 0.5 * w * w) / w;
    call = D * (F * norm_cdf(d1) - K * norm_cdf(d1 - w));
  }
  return type == OptionType::call ? call : call - D * (F - K);
}

// European option on a non-dividend stock.
inline double bs_closed_form(double S, double K, double r, double sigma, double tau,
                             OptionType type = OptionType::call) {
  if (!(S > 0.0) || !(K > 0.0) || !(sigma > 0.0) || !(tau > 0.0) || !std::isfinite(r)) {
    throw InvalidArgument("bs_closed_form needs S, K, sigma, tau > 0");
  }
  const double D = std::exp(-r * tau);
  return black_price(S / D, K, D, sigma * std::sqrt(tau), type);
}

// Volatility that reproduces `price` in the Black formula.
inline double black_implied_vol(double price, double F, double K, double D, double tau,
                                OptionType type = OptionType::call) {
  if (!(tau > 0.0)) throw InvalidArgument("implied vol needs tau > 0");
  const double intrinsic = black_price(F, K, D, 0.0, type);
  const double cap = type == OptionType::call ? D * F : D * K;
  if (!(price > intrinsic) || !(price < cap)) {
    throw NumericalError("option price outside the no-arbitrage band; cannot invert");
  }
  auto g = [&](double s) { return black_price(F, K, D, s * std::sqrt(tau), type) - price; };
  double lo = 1e-10, hi = 1.0;
  while (g(hi) < 0.0) {
    hi *= 2.0;
    if (hi > 1e3) throw NumericalError("implied vol bracketing failed");
  }
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(g, lo, hi, boost::math::tools::eps_tolerance<double>(50), iters);
  return 0.5 * (r.first + r.second);
}

inline double bs_implied_vol(double price, double S, double K, double r, double tau,
                             OptionType type = OptionType::call) {
  const double D = std::exp(-r * tau);
  return black_implied_vol(price, S / D, K, D, tau, type);
}

}  // namespace ambivol
