#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ambivol/error.hpp"
#include "ambivol/lattice/aggregator.hpp"
#include "ambivol/lattice/lattice.hpp"
#include "ambivol/lattice/utility.hpp"

namespace ambivol {

// pi^e(k, j) = exp(h sum_{i<k} f_v) f_c(c, V) for k < n and exp(h sum f_v) u'(c_T)
// at layer n. The exponent is a path integral; it is node-indexed only when
// f_v is constant across each layer, which supergradient() checks.
struct SupergradientPath {
  NodeFunction pi_e;
  NodeFunction f_c;
  NodeFunction f_v;  // layers < n
  std::vector<double> log_discount;  // h sum_{i<k} f_v, per layer

  double terminal(long j) const { return pi_e.at(pi_e.lattice().n_steps(), j); }
  std::vector<double> times() const {
    std::vector<double> t(log_discount.size());
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = pi_e.lattice().time(k);
    return t;
  }
};

inline SupergradientPath supergradient(const TrinomialLattice& lat, const ConsumptionPlan& plan, const Aggregator& agg,
                                       const NodeFunction& V) {
  const std::size_t n = lat.n_steps();
  SupergradientPath sg{NodeFunction(lat), NodeFunction(lat), NodeFunction(lat), std::vector<double>(n + 1, 0.0)};
  for (std::size_t k = 0; k < n; ++k) {
    const long kk = static_cast<long>(k);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (long j = -kk; j <= kk; ++j) {
      const double c = plan.at(k, j), v = V.at(k, j);
      sg.f_c.at(k, j) = agg.f_c(c, v);
      const double fv = agg.f_v(c, v);
      sg.f_v.at(k, j) = fv;
      lo = std::min(lo, fv);
      hi = std::max(hi, fv);
    }
    if (hi - lo > 1e-9 * std::max(1.0, std::abs(hi))) {
      throw NumericalError("f_v varies across layer " + std::to_string(k) +
                           "; the supergradient is path dependent there (use pairing weights)");
    }
    sg.log_discount[k + 1] = sg.log_discount[k] + lat.h() * 0.5 * (lo + hi);
  }
  for (std::size_t k = 0; k <= n; ++k) {
    const long kk = static_cast<long>(k);
    const double disc = std::exp(sg.log_discount[k]);
    for (long j = -kk; j <= kk; ++j) {
      const double marginal = k < n ? sg.f_c.at(k, j) : agg.terminal_dc(plan.at(n, j));
      if (k == n) sg.f_c.at(k, j) = marginal;
      sg.pi_e.at(k, j) = disc * marginal;
      if (!(sg.pi_e.at(k, j) > 0.0)) throw DomainError("supergradient is not positive");
    }
  }
  return sg;
}

inline SupergradientPath supergradient(const TrinomialLattice& lat, const ConsumptionPlan& plan,
                                       const Aggregator& agg) {
  return supergradient(lat, plan, agg, recursive_utility(lat, plan, agg, Direction::lower));
}

enum class PairingMode {
  minimizer,  // the worst-case prior of the plan, node by node
  sup,        // sublinear expectation: sup over priors at every node
};

// Derivative weights of the discrete utility: with V = m + h f(c, V),
//   Q(k) = [h f_c d(k) + E[Q(k+1)]] / (1 - h f_v),  Q(n) = u'(c_T) d(n).
// Under the minimizer policy Q(0) is the exact directional derivative of V_0
// at the plan, whenever that policy is unique.
inline double pairing(const TrinomialLattice& lat, const ConsumptionPlan& plan, const Aggregator& agg,
                      const UtilityResult& util, const NodeFunction& direction, PairingMode mode) {
  const std::size_t n = lat.n_steps();
  const long nn = static_cast<long>(n);
  std::vector<double> next(TrinomialLattice::layer_size(n));
  for (long j = -nn; j <= nn; ++j) {
    next[static_cast<std::size_t>(j + nn)] = agg.terminal_dc(plan.at(n, j)) * direction.at(n, j);
  }
  const double h = lat.h(), lo = lat.p_mid_min(), hi = lat.p_mid_max();
  for (std::size_t k = n; k-- > 0;) {
    const long kk = static_cast<long>(k);
    std::vector<double> cur(TrinomialLattice::layer_size(k));
    for (long j = -kk; j <= kk; ++j) {
      const auto i = static_cast<std::size_t>(j + kk);
      const double cont = mode == PairingMode::minimizer
                              ? expectation_one_step(next[i + 2], next[i + 1], next[i], util.p_mid.at(k, j))
                              : optimize_one_step(next[i + 2], next[i + 1], next[i], lo, hi, Direction::upper).value;
      const double c = plan.at(k, j), v = util.value.at(k, j);
      cur[i] = (h * agg.f_c(c, v) * direction.at(k, j) + cont) / (1.0 - h * agg.f_v(c, v));
    }
    next = std::move(cur);
  }
  return next[0];
}

struct DynamicMinimizerReport {
  bool passed = false;
  double tolerance = 0.0;
  double root_gap = 0.0;
  std::vector<std::size_t> layers;
  std::vector<double> max_gap;  // per checked layer: max over nodes of |V_candidate - V_min|
};

// Compares the utility under the constant-sigma candidate prior with the
// minimized conditional utility at every node of the checked layers.
inline DynamicMinimizerReport dynamic_minimizer_check(const TrinomialLattice& lat, const ConsumptionPlan& plan,
                                                      const Aggregator& agg, double candidate_sigma,
                                                      std::vector<std::size_t> check_layers = {}) {
  const double p = lat.p_mid_for(candidate_sigma);
  const NodeFunction vmin = recursive_utility(lat, plan, agg, Direction::lower);
  const NodeFunction vcand = utility_under_policy(lat, plan, agg, [p](std::size_t, long) { return p; });
  if (check_layers.empty()) {
    for (std::size_t k = 0; k <= lat.n_steps(); ++k) check_layers.push_back(k);
  }
  DynamicMinimizerReport rep;
  rep.tolerance = 1e-8 * std::max(1.0, std::abs(vmin.root()));
  rep.root_gap = vcand.root() - vmin.root();
  double worst = 0.0;
  for (std::size_t k : check_layers) {
    if (k > lat.n_steps()) throw InvalidArgument("check layer beyond the horizon");
    const long kk = static_cast<long>(k);
    double g = 0.0;
    for (long j = -kk; j <= kk; ++j) g = std::max(g, std::abs(vcand.at(k, j) - vmin.at(k, j)));
    rep.layers.push_back(k);
    rep.max_gap.push_back(g);
    worst = std::max(worst, g);
  }
  rep.passed = worst < rep.tolerance;
  return rep;
}

// Loading Z in dV = ... + Z dB, from the up/down children: (V_up - V_down) / (2 step).
inline NodeFunction extract_z(const NodeFunction& V) {
  const auto& lat = V.lattice();
  NodeFunction z(lat);
  for (std::size_t k = 0; k < lat.n_steps(); ++k) {
    const long kk = static_cast<long>(k);
    for (long j = -kk; j <= kk; ++j) z.at(k, j) = (V.at(k + 1, j + 1) - V.at(k + 1, j - 1)) / (2.0 * lat.step());
  }
  return z;
}

// Wealth volatility from Z / (alpha V) = rho^{-1} [s_M + (rho - 1) s_e] (homogeneous KP utility).
inline NodeFunction wealth_volatility(const NodeFunction& V, const Aggregator& agg, double s_e) {
  const NodeFunction z = extract_z(V);
  const auto& lat = V.lattice();
  NodeFunction sM(lat);
  const double a = agg.alpha(), rho = agg.rho();
  for (std::size_t k = 0; k < lat.n_steps(); ++k) {
    const long kk = static_cast<long>(k);
    for (long j = -kk; j <= kk; ++j) sM.at(k, j) = rho * z.at(k, j) / (a * V.at(k, j)) - (rho - 1.0) * s_e;
  }
  return sM;
}

}  // namespace ambivol
