#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "ambivol/error.hpp"
#include "ambivol/lattice/aggregator.hpp"
#include "ambivol/lattice/lattice.hpp"

namespace ambivol {

// Consumption plans are node functions: layers 0..n-1 carry the flow rate
// c(k, j), layer n carries the terminal lump c_T.
using ConsumptionPlan = NodeFunction;

// Solves V = m + h f(c, V) for V.
inline double solve_utility_node(double m, double c, double h, const Aggregator& agg) {
  if (agg.kind() == Aggregator::Kind::standard) {
    return (m + h * agg.felicity().u(c)) / (1.0 + h * agg.beta());
  }
  double v = m;
  for (int it = 0; it < 100; ++it) {
    const double g = v - h * agg.f(c, v) - m;
    const double dg = 1.0 - h * agg.f_v(c, v);
    double dv = g / dg;
    // keep alpha * v > 0
    while (agg.alpha() * (v - dv) <= 0.0) dv *= 0.5;
    v -= dv;
    if (std::abs(dv) <= 1e-12 * std::max(1.0, std::abs(v))) return v;
  }
  throw NumericalError("recursive utility: per-node fixed point did not converge");
}

struct UtilityResult {
  NodeFunction value;
  NodeFunction p_mid;  // middle probability used at layers < n
};

namespace detail {

// rule(k, j, up, mid, down) -> OneStep
template <class Rule>
UtilityResult backward_utility(const TrinomialLattice& lat, const ConsumptionPlan& plan, const Aggregator& agg,
                               std::span<const double> terminal_values, Rule&& rule) {
  const std::size_t n = lat.n_steps();
  if (plan.lattice().n_steps() != n || plan.lattice().h() != lat.h()) {
    throw InvalidArgument("consumption plan lives on a different lattice");
  }
  if (terminal_values.size() != TrinomialLattice::layer_size(n)) {
    throw InvalidArgument("terminal utility layer has wrong size");
  }
  UtilityResult r{NodeFunction(lat), NodeFunction(lat)};
  auto last = r.value.layer(n);
  for (std::size_t i = 0; i < last.size(); ++i) {
    if (!std::isfinite(terminal_values[i])) throw NumericalError("terminal utility is not finite");
    last[i] = terminal_values[i];
  }
  const double h = lat.h();
  for (std::size_t k = n; k-- > 0;) {
    auto next = r.value.layer(k + 1);
    auto cur = r.value.layer(k);
    auto pol = r.p_mid.layer(k);
    const auto cons = plan.layer(k);
    const long kk = static_cast<long>(k);
    for (long j = -kk; j <= kk; ++j) {
      const auto i = static_cast<std::size_t>(j + kk);
      const OneStep s = rule(k, j, next[i + 2], next[i + 1], next[i]);
      cur[i] = solve_utility_node(s.value, cons[i], h, agg);
      pol[i] = s.p_mid;
    }
  }
  return r;
}

inline std::vector<double> terminal_utility(const ConsumptionPlan& plan, const Aggregator& agg) {
  const auto last = plan.layer(plan.lattice().n_steps());
  std::vector<double> out(last.size());
  for (std::size_t i = 0; i < last.size(); ++i) out[i] = agg.terminal(last[i]);
  return out;
}

}  // namespace detail

// V(k, j) = min (or max) over p of E_p[V(k+1, .)] + h f(c(k, j), V(k, j)),
// with the implicit f term solved exactly per node.
inline UtilityResult solve_recursive_utility(const TrinomialLattice& lat, const ConsumptionPlan& plan,
                                             const Aggregator& agg, Direction dir = Direction::lower) {
  const auto term = detail::terminal_utility(plan, agg);
  const double lo = lat.p_mid_min(), hi = lat.p_mid_max();
  return detail::backward_utility(lat, plan, agg, term, [&](std::size_t, long, double u, double m, double d) {
    return optimize_one_step(u, m, d, lo, hi, dir);
  });
}

inline NodeFunction recursive_utility(const TrinomialLattice& lat, const ConsumptionPlan& plan, const Aggregator& agg,
                                      Direction dir = Direction::lower) {
  return solve_recursive_utility(lat, plan, agg, dir).value;
}

// Continuation values given directly at layer n; the plan's layer n is ignored.
inline NodeFunction recursive_utility(const TrinomialLattice& lat, const ConsumptionPlan& plan, const Aggregator& agg,
                                      std::span<const double> continuation, Direction dir = Direction::lower) {
  const double lo = lat.p_mid_min(), hi = lat.p_mid_max();
  return detail::backward_utility(lat, plan, agg, continuation,
                                  [&](std::size_t, long, double u, double m, double d) {
                                    return optimize_one_step(u, m, d, lo, hi, dir);
                                  })
      .value;
}

// Utility of the plan under a single prior whose middle probability at (k, j) is policy(k, j).
template <class Policy>
NodeFunction utility_under_policy(const TrinomialLattice& lat, const ConsumptionPlan& plan, const Aggregator& agg,
                                  Policy&& policy) {
  const auto term = detail::terminal_utility(plan, agg);
  return detail::backward_utility(lat, plan, agg, term, [&](std::size_t k, long j, double u, double m, double d) {
    const double p = policy(k, j);
    return OneStep{expectation_one_step(u, m, d, p), p};
  }).value;
}

}  // namespace ambivol
