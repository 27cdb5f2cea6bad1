#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ambivol/core/io.hpp"
#include "ambivol/core/volatility_set.hpp"
#include "ambivol/equilibrium/endowment.hpp"
#include "ambivol/equilibrium/supergradient.hpp"
#include "ambivol/error.hpp"
#include "ambivol/lattice/aggregator.hpp"
#include "ambivol/lattice/lattice.hpp"
#include "ambivol/lattice/utility.hpp"
#include "ambivol/pde/black_scholes.hpp"
#include "ambivol/pricing/market.hpp"

namespace ambivol {

// Worst-case volatility of the endowment economy on the lattice interval.
inline double equilibrium_sigma(const TrinomialLattice& lat, const Endowment& e, const Aggregator& agg) {
  e.check();
  if (e.dimension() != 1) throw InvalidArgument("lattice equilibrium is one-dimensional");
  return worst_case_sigma(VolatilitySet::interval(lat.sigma_lo(), lat.sigma_hi()), e.s_e, agg.alpha())(0, 0);
}

// Dividend on the lattice: flow delta(k, j) at layers < n, lump delta_T at layer n.
// A DividendStream is evaluated with PathPoint.prices = (e(k, j)).
inline NodeFunction lattice_dividend(const TrinomialLattice& lat, const Endowment& e, const DividendStream& div) {
  NodeFunction out(lat);
  const std::size_t n = lat.n_steps();
  for (std::size_t k = 0; k <= n; ++k) {
    const long kk = static_cast<long>(k);
    for (long j = -kk; j <= kk; ++j) {
      const double t = lat.time(k), x = lat.x(j);
      const PathPoint pt{k, t, Vector::Constant(1, x), Vector::Constant(1, e.at(t, x)), 0.0};
      const auto& f = k < n ? div.delta : div.delta_T;
      out.at(k, j) = f ? f(pt) : 0.0;
    }
  }
  return out;
}

struct EquilibriumPrice {
  NodeFunction price;  // S(k, j), including the flow over [t_k, t_k+1)
  double sigma_star = 0.0;
  DynamicMinimizerReport minimizer;
  SupergradientPath supergradient;

  double root() const { return price.root(); }
};

// S(n) = delta_T, S(k) = h delta(k) + E*[(pi^e(k+1) / pi^e(k)) S(k+1)], with the
// expectation under the constant sigma* prior. Refuses when sigma* is not a
// dynamic minimizer of the endowment.
inline EquilibriumPrice equilibrium_price(const TrinomialLattice& lat, const Endowment& e, const Aggregator& agg,
                                          const NodeFunction& dividend) {
  if (dividend.lattice().n_steps() != lat.n_steps() || dividend.lattice().h() != lat.h()) {
    throw InvalidArgument("dividend lives on a different lattice");
  }
  const double s_star = equilibrium_sigma(lat, e, agg);
  const ConsumptionPlan plan = e.plan(lat);
  auto check = dynamic_minimizer_check(lat, plan, agg, s_star);
  if (!check.passed) {
    std::vector<double>::const_iterator worst = std::max_element(check.max_gap.begin(), check.max_gap.end());
    throw InvalidArgument("sigma* = " + std::to_string(s_star) + " is not a dynamic minimizer of the endowment (gap " +
                          std::to_string(*worst) + " at layer " +
                          std::to_string(check.layers[static_cast<std::size_t>(worst - check.max_gap.begin())]) +
                          ")");
  }
  const UtilityResult util = solve_recursive_utility(lat, plan, agg, Direction::lower);
  SupergradientPath sg = supergradient(lat, plan, agg, util.value);
  const std::size_t n = lat.n_steps();
  const double p = lat.p_mid_for(s_star), h = lat.h();
  NodeFunction S(lat);
  const long nn = static_cast<long>(n);
  for (long j = -nn; j <= nn; ++j) S.at(n, j) = dividend.at(n, j);
  for (std::size_t k = n; k-- > 0;) {
    const long kk = static_cast<long>(k);
    for (long j = -kk; j <= kk; ++j) {
      const double pk = sg.pi_e.at(k, j);
      auto g = [&](long c) { return sg.pi_e.at(k + 1, c) / pk * S.at(k + 1, c); };
      S.at(k, j) = h * dividend.at(k, j) + expectation_one_step(g(j + 1), g(j), g(j - 1), p);
    }
  }
  return {std::move(S), s_star, std::move(check), std::move(sg)};
}

inline EquilibriumPrice equilibrium_price(const TrinomialLattice& lat, const Endowment& e, const Aggregator& agg,
                                          const DividendStream& div) {
  return equilibrium_price(lat, e, agg, lattice_dividend(lat, e, div));
}

// (r, eta) backed out of one lattice step of log pi^e under sigma*:
// eta = -v (L_up - L_down) / (2 step), r = -E*[L] / h - eta^2 / (2 v), v = sigma*^2.
struct RatePremium {
  NodeFunction r;    // layers < n
  NodeFunction eta;  // layers < n; also b - r for a unit loading s = 1
  double sigma_star = 0.0;
};

inline RatePremium identify_rates(const SupergradientPath& sg, double sigma_star) {
  const auto& lat = sg.pi_e.lattice();
  RatePremium out{NodeFunction(lat), NodeFunction(lat), sigma_star};
  const double p = lat.p_mid_for(sigma_star), h = lat.h(), v = sigma_star * sigma_star;
  for (std::size_t k = 0; k < lat.n_steps(); ++k) {
    const long kk = static_cast<long>(k);
    for (long j = -kk; j <= kk; ++j) {
      const double lp = std::log(sg.pi_e.at(k, j));
      const double Lu = std::log(sg.pi_e.at(k + 1, j + 1)) - lp;
      const double Lm = std::log(sg.pi_e.at(k + 1, j)) - lp;
      const double Ld = std::log(sg.pi_e.at(k + 1, j - 1)) - lp;
      const double eta = -v * (Lu - Ld) / (2.0 * lat.step());
      out.eta.at(k, j) = eta;
      out.r.at(k, j) = -expectation_one_step(Lu, Lm, Ld, p) / h - 0.5 * eta * eta / v;
    }
  }
  return out;
}

inline RatePremium equilibrium_rate_and_premium(const TrinomialLattice& lat, const Endowment& e,
                                                const Aggregator& agg) {
  const double s_star = equilibrium_sigma(lat, e, agg);
  const ConsumptionPlan plan = e.plan(lat);
  return identify_rates(supergradient(lat, plan, agg), s_star);
}

// A one-security market (s = 1, b = r + eta) reading the identified maps at
// the lattice node nearest to (t, x).
inline MarketSpec market_from_rates(const RatePremium& rp, double s0 = 1.0) {
  const auto& lat = rp.r.lattice();
  auto node = [lat](double t, const Vector& x) {
    const auto last = static_cast<double>(lat.n_steps() - 1);
    const auto k = static_cast<std::size_t>(std::clamp(std::floor(t / lat.h() + 1e-9), 0.0, last));
    const long kk = static_cast<long>(k);
    const long j = std::clamp(static_cast<long>(std::lround(x(0) / lat.step())), -kk, kk);
    return std::pair{k, j};
  };
  MarketSpec m;
  m.d = 1;
  m.gamma = VolatilitySet::interval(lat.sigma_lo(), lat.sigma_hi());
  m.s0 = Vector::Constant(1, s0);
  m.r = [rp, node](double t, const Vector& x) {
    const auto [k, j] = node(t, x);
    return rp.r.at(k, j);
  };
  m.b = [rp, node](double t, const Vector& x, const Matrix&) {
    const auto [k, j] = node(t, x);
    return Vector::Constant(1, rp.r.at(k, j) + rp.eta.at(k, j));
  };
  m.s = [](double, const Vector&) { return Matrix::Identity(1, 1); };
  return m;
}

struct ImpliedVol {
  double implied_vol = 0.0;
  double call_price = 0.0;
  double forward = 0.0;   // equilibrium forward of e_T
  double discount = 0.0;  // price of a unit paid at T
  double strike = 0.0;
};

// Black inversion of the equilibrium price of (e_T - strike)^+, against the
// equilibrium forward and discount factor. Without a strike the call is at the money.
inline ImpliedVol equilibrium_implied_vol(const TrinomialLattice& lat, const Endowment& e, const Aggregator& agg,
                                          std::optional<double> strike = std::nullopt) {
  const std::size_t n = lat.n_steps();
  const long nn = static_cast<long>(n);
  auto terminal = [&](auto&& f) {
    NodeFunction d(lat);
    for (long j = -nn; j <= nn; ++j) d.at(n, j) = f(e.at(lat.horizon(), lat.x(j)));
    return d;
  };
  ImpliedVol out;
  const auto unit = equilibrium_price(lat, e, agg, terminal([](double) { return 1.0; }));
  out.discount = unit.root();
  out.forward = equilibrium_price(lat, e, agg, terminal([](double x) { return x; })).root() / out.discount;
  out.strike = strike.value_or(out.forward);
  if (!(out.strike > 0.0)) throw InvalidArgument("strike must be positive");
  out.call_price =
      equilibrium_price(lat, e, agg, terminal([k = out.strike](double x) { return std::max(x - k, 0.0); })).root();
  out.implied_vol = black_implied_vol(out.call_price, out.forward, out.strike, out.discount, lat.horizon());
  return out;
}

struct EquilibriumReport {
  double sigma_star = 0.0;
  double alpha = 0.0;
  double implied_vol = 0.0;
  double implied_variance = 0.0;
  double realized_variance_min = 0.0;
  double realized_variance_max = 0.0;
  std::vector<double> scan_sigma;
  std::vector<double> scan_realized_variance;
  double tolerance = 0.0;
  bool dominance_holds = false;
  std::vector<double> times;
  std::vector<double> A;             // S^e(k, 0) / e(k, 0)
  double A_max_node_spread = 0.0;    // max over layers and nodes of |S^e / e - A_k| / A_k
  std::vector<double> riskless_rate;   // identified r at the central node, layers < n
  std::vector<double> excess_return;   // identified eta at the central node, layers < n
  double excess_return_formula = 0.0;  // ccapm_kp at sigma* with the lattice wealth volatility
  double wealth_volatility = 0.0;      // s^M at the root
  ImpliedVol option;
  DynamicMinimizerReport minimizer;
};

// Implied variance of the equilibrium call against realized variances
// sigma^2 s_e^2 over an n_scan-point grid of the lattice interval. For alpha < 0
// the implied variance must dominate every scan point and meet only the top
// one; alpha > 0 mirrors this at the bottom. The tolerance is a quarter of the
// scan spacing at the selected end, or 1% of the variance when Gamma is a point.
inline EquilibriumReport implied_vs_realized(const TrinomialLattice& lat, const Endowment& e, const Aggregator& agg,
                                             std::optional<double> strike = std::nullopt, std::size_t n_scan = 50) {
  if (n_scan < 2) throw InvalidArgument("realized-variance scan needs at least two points");
  EquilibriumReport rep;
  rep.alpha = agg.alpha();
  const double s = e.s_e(0);

  const auto endow = equilibrium_price(lat, e, agg, e.plan(lat));
  rep.sigma_star = endow.sigma_star;
  rep.minimizer = endow.minimizer;
  const std::size_t n = lat.n_steps();
  for (std::size_t k = 0; k <= n; ++k) {
    const long kk = static_cast<long>(k);
    const double t = lat.time(k);
    auto ratio = [&](long j) { return endow.price.at(k, j) / e.at(t, lat.x(j)); };
    const double a = ratio(0);
    rep.times.push_back(t);
    rep.A.push_back(a);
    for (long j = -kk; j <= kk; ++j) rep.A_max_node_spread = std::max(rep.A_max_node_spread, std::abs(ratio(j) - a) / a);
  }

  const RatePremium rp = identify_rates(endow.supergradient, rep.sigma_star);
  for (std::size_t k = 0; k < n; ++k) {
    rep.riskless_rate.push_back(rp.r.at(k, 0));
    rep.excess_return.push_back(rp.eta.at(k, 0));
  }
  const ConsumptionPlan plan = e.plan(lat);
  const NodeFunction V = recursive_utility(lat, plan, agg, Direction::lower);
  rep.wealth_volatility = wealth_volatility(V, agg, s).root();
  const Matrix one = Matrix::Identity(1, 1), sig = Matrix::Constant(1, 1, rep.sigma_star);
  rep.excess_return_formula = ccapm_kp(one, sig, agg, e.s_e, Vector::Constant(1, rep.wealth_volatility))(0);

  rep.option = equilibrium_implied_vol(lat, e, agg, strike);
  rep.implied_vol = rep.option.implied_vol;
  rep.implied_variance = rep.implied_vol * rep.implied_vol;

  const double lo = lat.sigma_lo(), hi = lat.sigma_hi();
  for (std::size_t i = 0; i < n_scan; ++i) {
    const double sg = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_scan - 1);
    rep.scan_sigma.push_back(sg);
    rep.scan_realized_variance.push_back(sg * sg * s * s);
  }
  const auto& rv = rep.scan_realized_variance;
  rep.realized_variance_min = rv.front();
  rep.realized_variance_max = rv.back();
  const bool top = rep.alpha < 0.0;
  rep.tolerance = 0.25 * (top ? rv[n_scan - 1] - rv[n_scan - 2] : rv[1] - rv[0]);
  if (lo == hi) rep.tolerance = 1e-2 * rv.front();

  bool ok = true;
  for (std::size_t i = 0; i < n_scan; ++i) {
    const bool extreme = top ? i == n_scan - 1 : i == 0;
    const double gap = top ? rep.implied_variance - rv[i] : rv[i] - rep.implied_variance;
    if (lo == hi || extreme) {
      ok = ok && std::abs(gap) <= rep.tolerance;
    } else {
      ok = ok && gap > rep.tolerance;
    }
  }
  rep.dominance_holds = ok;
  return rep;
}

inline void to_json(json& j, const DynamicMinimizerReport& r) {
  j = {{"passed", r.passed}, {"tolerance", r.tolerance}, {"root_gap", r.root_gap},
       {"layers", r.layers}, {"max_gap", r.max_gap}};
}

inline void to_json(json& j, const ImpliedVol& v) {
  j = {{"implied_vol", v.implied_vol}, {"call_price", v.call_price}, {"forward", v.forward},
       {"discount", v.discount},       {"strike", v.strike}};
}

inline void to_json(json& j, const EquilibriumReport& r) {
  j = {{"sigma_star", r.sigma_star},
       {"alpha", r.alpha},
       {"implied_vol", r.implied_vol},
       {"implied_variance", r.implied_variance},
       {"realized_variance_range", {r.realized_variance_min, r.realized_variance_max}},
       {"tolerance", r.tolerance},
       {"dominance_holds", r.dominance_holds},
       {"times", r.times},
       {"A", r.A},
       {"A_max_node_spread", r.A_max_node_spread},
       {"riskless_rate", r.riskless_rate},
       {"excess_return", r.excess_return},
       {"excess_return_formula", r.excess_return_formula},
       {"wealth_volatility", r.wealth_volatility},
       {"option", r.option},
       {"minimizer", r.minimizer}};
}

}  // namespace ambivol
