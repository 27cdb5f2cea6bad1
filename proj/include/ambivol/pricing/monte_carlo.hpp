#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ambivol/core/ambiguity.hpp"
#include "ambivol/core/io.hpp"
#include "ambivol/core/parallel.hpp"
#include "ambivol/core/scenario.hpp"
#include "ambivol/error.hpp"
#include "ambivol/pricing/market.hpp"
#include "ambivol/pricing/state_prices.hpp"

namespace ambivol {

struct ScenarioEstimate {
  std::size_t index = 0;
  double mean = 0.0;
  double std_error = 0.0;
  double max_abs_lambda = 0.0;
};

// Max / min over a finite family: an inner approximation of the hedging
// interval, up to Monte Carlo error.
struct HedgeBoundsResult {
  double upper_estimate = 0.0;
  double upper_std_error = 0.0;
  double lower_estimate = 0.0;
  double lower_std_error = 0.0;
  std::vector<ScenarioEstimate> per_scenario;
  std::vector<std::string> warnings;
};

struct BudgetCheckResult {
  double y0 = 0.0;
  std::vector<ScenarioEstimate> per_scenario;  // mean = expenditure estimate
  double max_abs_gap = 0.0;
  double max_gap_in_std_errors = 0.0;  // |mean - y0| / se; 0 where se = 0
};

// A plan financed by trading: phi is the strategy, net_consumption the flow
// c - e. The terminal lump c_T - e_T is whatever wealth remains.
struct FinancedPlan {
  StrategyMap phi;
  FlowMap net_consumption;
};

namespace detail {

inline void validate_family(const MarketSpec& m, const std::vector<ScenarioProcess>& family) {
  if (family.empty()) throw InvalidArgument("scenario family is empty");
  const auto spec = AmbiguitySpec::volatility_only(m.gamma);
  for (std::size_t i = 0; i < family.size(); ++i) {
    if (family[i].dimension() != m.d) throw InvalidScenario("scenario dimension differs from the market");
    const auto rep = validate(family[i], spec);
    if (!rep.ok) {
      throw InvalidScenario("scenario " + std::to_string(i) + " step " + std::to_string(rep.first_bad_step) + ": " +
                            rep.reason);
    }
  }
}

// int_0^T pi delta dt (trapezoid on the grid) + pi_T delta_T along one path.
inline double discounted_dividends(const MarketSpec& m, const DividendStream& div, const ScenarioProcess& sc,
                                   const SamplePath& path, const StatePricePath& sp) {
  const PricePath prices = security_price_path(m, sc, path);
  const std::size_t n = sc.steps();
  double total = 0.0;
  if (div.delta) {
    double prev = sp.pi[0] * div.delta(path_point(path, prices, 0));
    for (std::size_t k = 0; k < n; ++k) {
      // delta is a flow on [0, T); its value at T is the left limit
      const double cur = sp.pi[k + 1] * div.delta(path_point(path, prices, k + 1));
      total += 0.5 * (prev + cur) * sc.dt(k);
      prev = cur;
    }
  }
  if (div.delta_T) total += sp.pi[n] * div.delta_T(path_point(path, prices, n));
  if (!std::isfinite(total)) throw NumericalError("discounted dividend is not finite");
  return total;
}

}  // namespace detail

// Per-scenario E[int pi delta dt + pi_T delta_T]. Path i of every scenario is
// driven by the normals of stream (seed, i).
inline HedgeBoundsResult hedge_bounds_mc(const MarketSpec& m, const DividendStream& div,
                                         const std::vector<ScenarioProcess>& family, std::size_t n_paths,
                                         std::uint64_t seed, double lambda_warn = 1e3) {
  m.check();
  detail::validate_family(m, family);
  if (n_paths == 0) throw InvalidArgument("n_paths must be positive");
  HedgeBoundsResult res;
  for (std::size_t s = 0; s < family.size(); ++s) {
    const auto& sc = family[s];
    std::vector<double> value(n_paths), lam(n_paths);
    parallel_for(n_paths, [&](std::size_t i) {
      const auto z = path_normals(seed, i, sc.steps(), sc.dimension());
      const SamplePath path = path_from_normals(sc, z);
      const StatePricePath sp = state_price_path(m, sc, path);
      value[i] = detail::discounted_dividends(m, div, sc, path, sp);
      lam[i] = sp.max_abs_lambda;
    });
    const auto st = sample_stats(value);
    res.per_scenario.push_back({s, st.mean, st.std_error, *std::max_element(lam.begin(), lam.end())});
    if (res.per_scenario.back().max_abs_lambda > lambda_warn) {
      res.warnings.push_back("scenario " + std::to_string(s) + ": |v^-1 eta| reached " +
                             std::to_string(res.per_scenario.back().max_abs_lambda) + "; boundedness is doubtful");
    }
  }
  const auto hi = std::max_element(res.per_scenario.begin(), res.per_scenario.end(),
                                   [](const auto& a, const auto& b) { return a.mean < b.mean; });
  const auto lo = std::min_element(res.per_scenario.begin(), res.per_scenario.end(),
                                   [](const auto& a, const auto& b) { return a.mean < b.mean; });
  res.upper_estimate = hi->mean;
  res.upper_std_error = hi->std_error;
  res.lower_estimate = lo->mean;
  res.lower_std_error = lo->std_error;
  return res;
}

// Expenditure E[sum f_k (pi_k + pi_{k+1})/2 dt_k + pi_T Y_T] of a financed
// plan under each scenario, for comparison with y0. The flow is the one the
// wealth recursion charges, constant on each step.
inline BudgetCheckResult static_budget_check(const MarketSpec& m, const std::vector<ScenarioProcess>& family,
                                             const FinancedPlan& plan, double y0, std::size_t n_paths,
                                             std::uint64_t seed) {
  m.check();
  detail::validate_family(m, family);
  if (n_paths == 0) throw InvalidArgument("n_paths must be positive");
  BudgetCheckResult res;
  res.y0 = y0;
  for (std::size_t s = 0; s < family.size(); ++s) {
    const auto& sc = family[s];
    std::vector<double> value(n_paths);
    parallel_for(n_paths, [&](std::size_t i) {
      const auto z = path_normals(seed, i, sc.steps(), sc.dimension());
      const SamplePath path = path_from_normals(sc, z);
      const StatePricePath sp = state_price_path(m, sc, path);
      const WealthPath w = simulate_wealth(m, sc, path, plan.phi, plan.net_consumption, y0);
      double total = 0.0;
      for (std::size_t k = 0; k < sc.steps(); ++k) total += w.funding[k] * 0.5 * (sp.pi[k] + sp.pi[k + 1]) * sc.dt(k);
      value[i] = total + sp.pi.back() * w.Y.back();
    });
    const auto st = sample_stats(value);
    res.per_scenario.push_back({s, st.mean, st.std_error, 0.0});
    const double gap = std::abs(st.mean - y0);
    res.max_abs_gap = std::max(res.max_abs_gap, gap);
    if (st.std_error > 0.0) res.max_gap_in_std_errors = std::max(res.max_gap_in_std_errors, gap / st.std_error);
  }
  return res;
}

struct DriftShiftResult {
  SampleStats base;
  SampleStats shifted;
  double max_abs_path_diff = 0.0;  // largest per-path price difference
};

// Prices the dividend twice on shared normals: under (0, sigma), and under
// (mu, sigma) with everything driven by the shifted driver X - int mu dt.
inline DriftShiftResult drift_shift_reprice(const MarketSpec& m, const DividendStream& div,
                                            const ScenarioProcess& drifted, std::size_t n_paths, std::uint64_t seed) {
  m.check();
  if (n_paths == 0) throw InvalidArgument("n_paths must be positive");
  const ScenarioProcess base = without_drift(drifted);
  detail::validate_family(m, {base});
  std::vector<double> a(n_paths), b(n_paths);
  parallel_for(n_paths, [&](std::size_t i) {
    const auto z = path_normals(seed, i, base.steps(), base.dimension());
    const SamplePath p0 = path_from_normals(base, z);
    a[i] = detail::discounted_dividends(m, div, base, p0, state_price_path(m, base, p0));
    const SamplePath x = remove_drift(drifted, path_from_normals(drifted, z));
    b[i] = detail::discounted_dividends(m, div, base, x, state_price_path(m, base, x));
  });
  DriftShiftResult res{sample_stats(a), sample_stats(b), 0.0};
  for (std::size_t i = 0; i < n_paths; ++i) res.max_abs_path_diff = std::max(res.max_abs_path_diff, std::abs(a[i] - b[i]));
  return res;
}

inline void to_json(json& j, const ScenarioEstimate& e) {
  j = {{"scenario", e.index}, {"mean", e.mean}, {"std_error", e.std_error}, {"max_abs_lambda", e.max_abs_lambda}};
}

inline void to_json(json& j, const HedgeBoundsResult& r) {
  j = {{"upper", r.upper_estimate},
       {"upper_std_error", r.upper_std_error},
       {"lower", r.lower_estimate},
       {"lower_std_error", r.lower_std_error},
       {"per_scenario", r.per_scenario},
       {"warnings", r.warnings}};
}

inline void to_json(json& j, const BudgetCheckResult& r) {
  j = {{"y0", r.y0},
       {"per_scenario", r.per_scenario},
       {"max_abs_gap", r.max_abs_gap},
       {"max_gap_in_std_errors", r.max_gap_in_std_errors}};
}

}  // namespace ambivol
