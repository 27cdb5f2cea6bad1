#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <ostream>
#include <span>
#include <vector>

#include "ambivol/error.hpp"

namespace ambivol {

enum class Direction {
  upper,  // sup over admissible middle probabilities
  lower,  // inf over admissible middle probabilities
};

// Recombining trinomial tree for a driftless state with ambiguous variance.
// Node (k, j), j in [-k, k], sits at x = j * step with step = step_sigma * sqrt(h).
// From each node the state moves +-step with probability (1 - p)/2 each and
// stays with probability p, so the one-step variance is (1 - p) step^2. The
// admissible p range [p_mid_min, p_mid_max] makes that variance range exactly
// [sigma_lo^2 h, sigma_hi^2 h]. With step_sigma = sigma_hi (the default)
// p_mid_min = 0; a larger step_sigma lets lattices with nested volatility
// intervals share one grid.
class TrinomialLattice {
 public:
  TrinomialLattice(double T, std::size_t n_steps, double sigma_lo, double sigma_hi, double step_sigma = 0.0)
      : n_(n_steps), lo_(sigma_lo), hi_(sigma_hi), step_sigma_(step_sigma > 0.0 ? step_sigma : sigma_hi) {
    if (!(T > 0.0) || n_steps == 0) throw InvalidArgument("lattice needs T > 0 and n_steps >= 1");
    if (!(sigma_lo > 0.0) || !(sigma_hi >= sigma_lo)) throw InvalidArgument("lattice needs 0 < sigma_lo <= sigma_hi");
    if (step_sigma_ < sigma_hi) throw InvalidArgument("lattice step volatility must be >= sigma_hi");
    h_ = T / static_cast<double>(n_steps);
    T_ = T;
  }

  double h() const noexcept { return h_; }
  double horizon() const noexcept { return T_; }
  std::size_t n_steps() const noexcept { return n_; }
  double sigma_lo() const noexcept { return lo_; }
  double sigma_hi() const noexcept { return hi_; }
  double step_sigma() const noexcept { return step_sigma_; }
  double step() const noexcept { return step_sigma_ * std::sqrt(h_); }
  double p_mid_min() const noexcept { return 1.0 - (hi_ * hi_) / (step_sigma_ * step_sigma_); }
  double p_mid_max() const noexcept { return 1.0 - (lo_ * lo_) / (step_sigma_ * step_sigma_); }

  // Middle probability that realizes one-step variance sigma^2 h.
  double p_mid_for(double sigma) const {
    if (sigma < lo_ * (1.0 - 1e-12) || sigma > hi_ * (1.0 + 1e-12)) {
      throw InvalidArgument("volatility outside the lattice interval");
    }
    return 1.0 - (sigma * sigma) / (step_sigma_ * step_sigma_);
  }

  double time(std::size_t k) const noexcept { return static_cast<double>(k) * h_; }
  double x(long j) const noexcept { return static_cast<double>(j) * step(); }
  static constexpr std::size_t layer_size(std::size_t k) noexcept { return 2 * k + 1; }
  static constexpr std::size_t offset(std::size_t k) noexcept { return k * k; }
  std::size_t node_count() const noexcept { return (n_ + 1) * (n_ + 1); }

  // Same geometry truncated after m steps.
  TrinomialLattice truncated(std::size_t m) const {
    if (m == 0 || m > n_) throw InvalidArgument("truncation layer out of range");
    return TrinomialLattice(h_ * static_cast<double>(m), m, lo_, hi_, step_sigma_);
  }

 private:
  std::size_t n_;
  double lo_, hi_, step_sigma_;
  double h_ = 0.0;
  double T_ = 0.0;
};

// Per-node values on a lattice (layers 0..n).
class NodeFunction {
 public:
  explicit NodeFunction(TrinomialLattice lattice, double fill = 0.0)
      : lattice_(lattice), values_(lattice.node_count(), fill) {}

  const TrinomialLattice& lattice() const noexcept { return lattice_; }
  double& at(std::size_t k, long j) { return values_[index(k, j)]; }
  double at(std::size_t k, long j) const { return values_[index(k, j)]; }
  double root() const { return values_[0]; }
  std::span<double> layer(std::size_t k) {
    return std::span<double>(values_).subspan(TrinomialLattice::offset(k), TrinomialLattice::layer_size(k));
  }
  std::span<const double> layer(std::size_t k) const {
    return std::span<const double>(values_).subspan(TrinomialLattice::offset(k), TrinomialLattice::layer_size(k));
  }
  std::span<const double> values() const noexcept { return values_; }

  // Fills every node from f(k, x).
  template <class F>
  static NodeFunction from(const TrinomialLattice& lat, F&& f) {
    NodeFunction out(lat);
    for (std::size_t k = 0; k <= lat.n_steps(); ++k) {
      const long kk = static_cast<long>(k);
      for (long j = -kk; j <= kk; ++j) out.at(k, j) = f(k, lat.x(j));
    }
    return out;
  }

 private:
  std::size_t index(std::size_t k, long j) const {
    return TrinomialLattice::offset(k) + static_cast<std::size_t>(j + static_cast<long>(k));
  }

  TrinomialLattice lattice_;
  std::vector<double> values_;
};

// Layers 0..m of f on the truncated lattice.
inline NodeFunction restrict_to(const NodeFunction& f, std::size_t m) {
  NodeFunction out(f.lattice().truncated(m));
  for (std::size_t k = 0; k <= m; ++k) {
    const auto src = f.layer(k);
    std::copy(src.begin(), src.end(), out.layer(k).begin());
  }
  return out;
}

// Columns: k, j, value
inline void write_node_csv(std::ostream& os, const NodeFunction& f) {
  const auto prec = os.precision(17);
  os << "k,j,value\n";
  for (std::size_t k = 0; k <= f.lattice().n_steps(); ++k) {
    const long kk = static_cast<long>(k);
    for (long j = -kk; j <= kk; ++j) os << k << ',' << j << ',' << f.at(k, j) << '\n';
  }
  os.precision(prec);
}

// Maximizes (or minimizes) (1 - p)/2 (up + down) + p mid over p in [p_lo, p_hi].
// The objective is linear in p: the optimum sits at an endpoint chosen by the
// sign of (up + down)/2 - mid.
struct OneStep {
  double value;
  double p_mid;
};

inline OneStep optimize_one_step(double up, double mid, double down, double p_lo, double p_hi, Direction dir) {
  const double avg = 0.5 * (up + down);
  const double convexity = avg - mid;  // d/dp of the objective is -convexity
  const bool take_low_p = (dir == Direction::upper) ? (convexity >= 0.0) : (convexity < 0.0);
  const double p = take_low_p ? p_lo : p_hi;
  return {(1.0 - p) * avg + p * mid, p};
}

inline double expectation_one_step(double up, double mid, double down, double p) {
  return (1.0 - p) * 0.5 * (up + down) + p * mid;
}

// Terminal layer values from a payoff map x -> xi(x).
template <class Payoff>
std::vector<double> terminal_layer(const TrinomialLattice& lat, Payoff&& payoff) {
  const long n = static_cast<long>(lat.n_steps());
  std::vector<double> out(TrinomialLattice::layer_size(lat.n_steps()));
  for (long j = -n; j <= n; ++j) out[static_cast<std::size_t>(j + n)] = payoff(lat.x(j));
  return out;
}

struct InductionResult {
  NodeFunction value;
  NodeFunction p_mid;  // optimizing middle probability at layers < n
};

// Full backward-induction table of the conditional sublinear expectation
// E[xi | node] = sup (or inf for Direction::lower) over per-node p_mid.
inline InductionResult solve_conditional(const TrinomialLattice& lat, std::span<const double> terminal,
                                         Direction dir = Direction::upper) {
  const std::size_t n = lat.n_steps();
  if (terminal.size() != TrinomialLattice::layer_size(n)) throw InvalidArgument("terminal layer has wrong size");
  InductionResult r{NodeFunction(lat), NodeFunction(lat)};
  auto last = r.value.layer(n);
  for (std::size_t i = 0; i < terminal.size(); ++i) {
    if (!std::isfinite(terminal[i])) throw InvalidArgument("terminal payoff is not finite");
    last[i] = terminal[i];
  }
  const double p_lo = lat.p_mid_min();
  const double p_hi = lat.p_mid_max();
  for (std::size_t k = n; k-- > 0;) {
    auto next = r.value.layer(k + 1);
    auto cur = r.value.layer(k);
    auto pol = r.p_mid.layer(k);
    for (std::size_t i = 0; i < cur.size(); ++i) {
      // node (k, j) has children at indices i, i+1, i+2 of layer k+1
      const OneStep s = optimize_one_step(next[i + 2], next[i + 1], next[i], p_lo, p_hi, dir);
      cur[i] = s.value;
      pol[i] = s.p_mid;
    }
  }
  return r;
}

inline NodeFunction conditional_g_expectation(const TrinomialLattice& lat, std::span<const double> terminal,
                                              Direction dir = Direction::upper) {
  return solve_conditional(lat, terminal, dir).value;
}

template <class Payoff>
  requires std::invocable<Payoff, double>
NodeFunction conditional_g_expectation(const TrinomialLattice& lat, Payoff&& payoff,
                                       Direction dir = Direction::upper) {
  const auto term = terminal_layer(lat, payoff);
  return conditional_g_expectation(lat, std::span<const double>(term), dir);
}

// Sublinear expectation of the terminal payoff: sup over admissible p_mid.
inline double g_expectation(const TrinomialLattice& lat, std::span<const double> terminal) {
  return conditional_g_expectation(lat, terminal, Direction::upper).root();
}

template <class Payoff>
  requires std::invocable<Payoff, double>
double g_expectation(const TrinomialLattice& lat, Payoff&& payoff) {
  const auto term = terminal_layer(lat, payoff);
  return g_expectation(lat, std::span<const double>(term));
}

// inf over priors: -E[-xi]
inline double lower_expectation(const TrinomialLattice& lat, std::span<const double> terminal) {
  std::vector<double> neg(terminal.begin(), terminal.end());
  for (double& v : neg) v = -v;
  return -g_expectation(lat, std::span<const double>(neg));
}

template <class Payoff>
  requires std::invocable<Payoff, double>
double lower_expectation(const TrinomialLattice& lat, Payoff&& payoff) {
  const auto term = terminal_layer(lat, payoff);
  return lower_expectation(lat, std::span<const double>(term));
}

// Linear expectation when the middle probability at each node is fixed by policy(k, j).
template <class Policy>
NodeFunction expectation_under_policy(const TrinomialLattice& lat, std::span<const double> terminal,
                                      Policy&& policy) {
  const std::size_t n = lat.n_steps();
  if (terminal.size() != TrinomialLattice::layer_size(n)) throw InvalidArgument("terminal layer has wrong size");
  NodeFunction v(lat);
  auto last = v.layer(n);
  std::copy(terminal.begin(), terminal.end(), last.begin());
  for (std::size_t k = n; k-- > 0;) {
    auto next = v.layer(k + 1);
    auto cur = v.layer(k);
    const long kk = static_cast<long>(k);
    for (long j = -kk; j <= kk; ++j) {
      const auto i = static_cast<std::size_t>(j + kk);
      cur[i] = expectation_one_step(next[i + 2], next[i + 1], next[i], policy(k, j));
    }
  }
  return v;
}

}  // namespace ambivol
