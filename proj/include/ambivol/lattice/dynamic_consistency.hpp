#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "ambivol/error.hpp"
#include "ambivol/lattice/aggregator.hpp"
#include "ambivol/lattice/lattice.hpp"
#include "ambivol/lattice/utility.hpp"

namespace ambivol {

// Piecewise-linear indicator of low realized variance: 1 at or below lo_sq,
// 0 from the midpoint (lo_sq + hi_sq)/2 on, linear in between.
inline double dc_bonus(double x, double lo_sq, double hi_sq) {
  const double mid = 0.5 * (lo_sq + hi_sq);
  if (x >= mid) return 0.0;
  if (x <= lo_sq) return 1.0;
  return 2.0 * x / (lo_sq - hi_sq) - (lo_sq + hi_sq) / (lo_sq - hi_sq);
}

struct DynamicConsistencyReport {
  double V0_e = 0.0;
  double V0_c = 0.0;
  double V0_gap = 0.0;  // V0_c - V0_e
  std::size_t tau_layer = 0;
  // gap V_tau(c) - V_tau(e) at the history whose middle-move share matches
  // the sigma_lo prior (m = round(p_mid_max * K) middle moves)
  std::size_t typical_middle_moves = 0;
  long typical_j = 0;
  double Vtau_gap_under_sigma_lo = 0.0;
  double Vtau_gap_all_middle = 0.0;  // at (K, j = 0, m = K)
  double phi_at_sigma_lo_sq = 0.0;
  double phi_at_midpoint = 0.0;
  double phi_at_sigma_hi_sq = 0.0;
  double tolerance = 0.0;
};

// Endowment e(k, x) = e0 exp(x); consumption c = e + phi(<B>_tau / tau) from
// layer K = tau / h on. The realized-variance proxy after K steps with m
// middle moves is step^2 (K - m) / (K h). The path dependence is carried by
// augmenting the state with m for layers below K.
inline DynamicConsistencyReport demo_dynamic_consistency(const TrinomialLattice& lat, double e0, double tau,
                                                         const Aggregator& agg) {
  if (!(e0 > 0.0)) throw InvalidArgument("endowment e0 must be positive");
  if (!(agg.alpha() < 0.0)) throw InvalidArgument("dynamic consistency demo needs alpha < 0");
  const std::size_t n = lat.n_steps();
  const double h = lat.h();
  const auto K = static_cast<std::size_t>(std::llround(tau / h));
  if (!(tau > 0.0) || K == 0 || K >= n) throw InvalidArgument("tau must fall strictly inside the horizon grid");

  const double lo_sq = lat.sigma_lo() * lat.sigma_lo();
  const double hi_sq = lat.sigma_hi() * lat.sigma_hi();
  const double s2 = lat.step() * lat.step();
  auto proxy = [&](std::size_t m) { return s2 * static_cast<double>(K - m) / (static_cast<double>(K) * h); };
  auto endow = [&](long j) { return e0 * std::exp(lat.x(j)); };

  DynamicConsistencyReport rep;
  rep.tau_layer = K;
  rep.phi_at_sigma_lo_sq = dc_bonus(lo_sq, lo_sq, hi_sq);
  rep.phi_at_midpoint = dc_bonus(0.5 * (lo_sq + hi_sq), lo_sq, hi_sq);
  rep.phi_at_sigma_hi_sq = dc_bonus(hi_sq, lo_sq, hi_sq);

  const ConsumptionPlan plan_e = NodeFunction::from(lat, [&](std::size_t, double x) { return e0 * std::exp(x); });
  const NodeFunction Ve = recursive_utility(lat, plan_e, agg, Direction::lower);
  rep.V0_e = Ve.root();

  const double p_lo = lat.p_mid_min(), p_hi = lat.p_mid_max();
  auto lower_step = [&](double up, double mid, double down) {
    return optimize_one_step(up, mid, down, p_lo, p_hi, Direction::lower).value;
  };

  // layer-K utility of c for every middle-move count m in [0, K]
  std::vector<std::vector<double>> at_tau(K + 1);
  for (std::size_t m = 0; m <= K; ++m) {
    const double bonus = dc_bonus(proxy(m), lo_sq, hi_sq);
    const long nn = static_cast<long>(n);
    std::vector<double> next(TrinomialLattice::layer_size(n));
    for (long j = -nn; j <= nn; ++j) next[static_cast<std::size_t>(j + nn)] = agg.terminal(endow(j) + bonus);
    for (std::size_t k = n; k-- > K;) {
      const long kk = static_cast<long>(k);
      std::vector<double> cur(TrinomialLattice::layer_size(k));
      for (long j = -kk; j <= kk; ++j) {
        const auto i = static_cast<std::size_t>(j + kk);
        cur[i] = solve_utility_node(lower_step(next[i + 2], next[i + 1], next[i]), endow(j) + bonus, h, agg);
      }
      next = std::move(cur);
    }
    at_tau[m] = std::move(next);
  }

  // the all-middle history sits at j = 0; the sigma_lo-typical one at the
  // smallest |j| with the right parity
  const auto m_typ = static_cast<std::size_t>(std::llround(p_hi * static_cast<double>(K)));
  const long j_typ = static_cast<long>((K - m_typ) % 2);
  const long KK = static_cast<long>(K);
  rep.typical_middle_moves = m_typ;
  rep.typical_j = j_typ;
  rep.Vtau_gap_under_sigma_lo = at_tau[m_typ][static_cast<std::size_t>(j_typ + KK)] - Ve.at(K, j_typ);
  rep.Vtau_gap_all_middle = at_tau[K][static_cast<std::size_t>(KK)] - Ve.at(K, 0);

  // augmented induction over (j, m) for layers below K; m <= k
  std::vector<std::vector<double>> next = std::move(at_tau);  // next[m][j + k + 1]
  for (std::size_t k = K; k-- > 0;) {
    const long kk = static_cast<long>(k);
    std::vector<std::vector<double>> cur(k + 1, std::vector<double>(TrinomialLattice::layer_size(k)));
    for (std::size_t m = 0; m <= k; ++m) {
      for (long j = -kk; j <= kk; ++j) {
        const auto i = static_cast<std::size_t>(j + kk);
        const double up = next[m][i + 2];
        const double down = next[m][i];
        const double mid = next[m + 1][i + 1];
        cur[m][i] = solve_utility_node(lower_step(up, mid, down), endow(j), h, agg);
      }
    }
    next = std::move(cur);
  }
  rep.V0_c = next[0][0];
  rep.V0_gap = rep.V0_c - rep.V0_e;
  rep.tolerance = 1e-9 * std::max(1.0, std::abs(rep.V0_e));
  return rep;
}

}  // namespace ambivol
