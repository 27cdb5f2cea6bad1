#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "ambivol/core/volatility_set.hpp"
#include "ambivol/error.hpp"

namespace ambivol {

enum class HedgeDirection { superhedge, subhedge };

enum class TimeScheme {
  crank_nicolson,  // with a fully implicit start-up
  implicit,
  explicit_euler,
};

struct BSBProblem {
  std::function<double(double)> payoff;
  double s0 = 100.0;
  double s_min = 0.0;  // 0 selects s0 exp(-4 sigma_hi sqrt(T))
  double s_max = 0.0;  // 0 selects s0 exp(+4 sigma_hi sqrt(T))
  double r = 0.0;
  VolatilitySet gamma = VolatilitySet::interval(0.2, 0.2);
  double T = 1.0;
  std::size_t n_space = 400;
  std::size_t n_time = 400;
  TimeScheme scheme = TimeScheme::crank_nicolson;

  std::pair<double, double> domain() const {
    const double w = 4.0 * gamma.sigma_hi() * std::sqrt(T);
    return {s_min > 0.0 ? s_min : s0 * std::exp(-w), s_max > 0.0 ? s_max : s0 * std::exp(w)};
  }

  void check() const {
    if (!payoff) throw InvalidArgument("BSB problem needs a payoff");
    if (gamma.kind() != VolatilitySet::Kind::interval) throw InvalidArgument("BSB solves 1-d interval volatility only");
    if (!(T > 0.0) || !std::isfinite(r) || !(s0 > 0.0)) throw InvalidArgument("BSB problem needs T > 0, s0 > 0, finite r");
    if (n_space < 3 || n_time < 3) throw InvalidArgument("BSB grid sizes must be at least 3");
    const auto [lo, hi] = domain();
    if (!(lo > 0.0) || !(lo < hi)) throw InvalidArgument("BSB domain needs 0 < s_min < s_max");
  }
};

// Solved value grid. Node i of row k sits at spot forwards[i] e^{-r (T - t_k)},
// so each row is a log-shifted copy of the terminal (forward) grid. Row k of
// `values` is time times[k]; times ascend from 0 to T.
struct PriceSurface {
  std::vector<double> times;
  std::vector<double> forwards;
  std::vector<double> values;
  std::vector<double> chosen_sigma_sq;  // selected sigma^2 per grid point
  double r = 0.0;
  HedgeDirection direction = HedgeDirection::superhedge;

  std::size_t n_spots() const noexcept { return forwards.size(); }
  double value(std::size_t k, std::size_t i) const { return values[k * forwards.size() + i]; }
  double sigma_sq(std::size_t k, std::size_t i) const { return chosen_sigma_sq[k * forwards.size() + i]; }
  double spot(std::size_t k, std::size_t i) const {
    return forwards[i] * std::exp(-r * (times.back() - times[k]));
  }

  // Bilinear in (t, log S).
  double value_at(double t, double S) const {
    if (t < times.front() - 1e-12 || t > times.back() + 1e-12 || !(S > 0.0)) {
      throw InvalidArgument("point outside the price surface grid");
    }
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const auto k = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - times.begin(), 1, times.size() - 1)) - 1;
    const double wt = std::clamp((t - times[k]) / (times[k + 1] - times[k]), 0.0, 1.0);
    auto row = [&](std::size_t kk) {
      const double x = std::log(S) + r * (times.back() - times[kk]);
      const double x0 = std::log(forwards.front()), x1 = std::log(forwards.back());
      if (x < x0 - 1e-12 || x > x1 + 1e-12) throw InvalidArgument("point outside the price surface grid");
      const auto jt = std::upper_bound(forwards.begin(), forwards.end(), std::exp(x));
      const auto i = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(jt - forwards.begin(), 1, forwards.size() - 1)) - 1;
      const double a = std::log(forwards[i]), b = std::log(forwards[i + 1]);
      const double ws = std::clamp((x - a) / (b - a), 0.0, 1.0);
      return (1 - ws) * value(kk, i) + ws * value(kk, i + 1);
    };
    return (1 - wt) * row(k) + wt * row(k + 1);
  }
};

namespace detail {

// Solves a tridiagonal system in place (Thomas algorithm); sub[0], sup[n-1] unused.
inline void solve_tridiagonal(std::vector<double>& sub, std::vector<double>& diag, std::vector<double>& sup,
                              std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double m = sub[i] / diag[i - 1];
    diag[i] -= m * sup[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  rhs[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
}

// In forward terms u = e^{r tau} c, F = S e^{r tau} the equation loses its
// first-order and discount terms: u_tau = 1/2 s2 F^2 u_FF. L is the three-point
// version on the (log-spaced) forward grid, exact on linear functions; it is
// zero at both ends, where Gamma = 0 leaves u constant in time.
class BSBOperator {
 public:
  explicit BSBOperator(const std::vector<double>& forwards) : S_(forwards) {}

  // Row coefficients (lower, centre, upper) of L at node i for variance s2.
  std::array<double, 3> row(std::size_t i, double s2) const {
    if (i == 0 || i + 1 == S_.size()) return {0.0, 0.0, 0.0};
    const auto w = weights(i);
    const double half = 0.5 * s2 * S_[i] * S_[i];
    return {half * w[0], half * w[1], half * w[2]};
  }

  // Discrete S^2 c_SS at node i (zero at the ends).
  double gamma(const std::vector<double>& c, std::size_t i) const {
    if (i == 0 || i + 1 == S_.size()) return 0.0;
    const auto w = weights(i);
    return S_[i] * S_[i] * (w[0] * c[i - 1] + w[1] * c[i] + w[2] * c[i + 1]);
  }

  // Gamma values below this are round-off of a locally linear solution.
  double gamma_noise(const std::vector<double>& c, std::size_t i) const {
    if (i == 0 || i + 1 == S_.size()) return 0.0;
    const auto w = weights(i);
    return 1e-10 * S_[i] * S_[i] *
           (std::abs(w[0] * c[i - 1]) + std::abs(w[1] * c[i]) + std::abs(w[2] * c[i + 1]));
  }

  std::size_t size() const noexcept { return S_.size(); }

 private:
  std::array<double, 3> weights(std::size_t i) const {
    const double hm = S_[i] - S_[i - 1], hp = S_[i + 1] - S_[i], hs = hm + hp;
    return {2.0 / (hm * hs), -2.0 / (hm * hp), 2.0 / (hp * hs)};
  }

  const std::vector<double>& S_;
};

// sigma^2 maximizing (superhedge) or minimizing (subhedge) 1/2 sigma^2 Gamma.
// Where Gamma is within round-off of zero the policy in `s2` is kept, or set
// as if Gamma = 0+ when keep = false.
inline void select_policy(const BSBOperator& op, const std::vector<double>& c, HedgeDirection dir, double lo2,
                          double hi2, std::vector<double>& s2, bool keep = false) {
  const bool super = dir == HedgeDirection::superhedge;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double g = op.gamma(c, i);
    if (std::abs(g) <= op.gamma_noise(c, i)) {
      if (!keep) s2[i] = super ? hi2 : lo2;
      continue;
    }
    s2[i] = (g > 0.0) == super ? hi2 : lo2;
  }
}

// One theta step c_old (time t + dt) -> c_new (time t); s2_new receives the implicit policy.
inline void theta_step(const BSBOperator& op, const std::vector<double>& c_old, std::vector<double>& c_new,
                       std::vector<double>& s2_new, double dt, double theta, HedgeDirection dir, double lo2,
                       double hi2) {
  const std::size_t n = op.size();
  std::vector<double> s2_old(n);
  select_policy(op, c_old, dir, lo2, hi2, s2_old);
  std::vector<double> explicit_rhs(c_old);
  if (theta < 1.0) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto a = op.row(i, s2_old[i]);
      double lc = a[1] * c_old[i];
      if (i > 0) lc += a[0] * c_old[i - 1];
      if (i + 1 < n) lc += a[2] * c_old[i + 1];
      explicit_rhs[i] += (1.0 - theta) * dt * lc;
    }
  }
  if (theta == 0.0) {
    c_new = std::move(explicit_rhs);
    select_policy(op, c_new, dir, lo2, hi2, s2_new);
    return;
  }
  // policy iteration on the implicit part
  s2_new = s2_old;
  std::vector<double> sub(n), diag(n), sup(n), rhs(n), next_policy(n);
  for (int it = 0; it < 50; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto a = op.row(i, s2_new[i]);
      sub[i] = -theta * dt * a[0];
      diag[i] = 1.0 - theta * dt * a[1];
      sup[i] = -theta * dt * a[2];
    }
    rhs = explicit_rhs;
    solve_tridiagonal(sub, diag, sup, rhs);
    // policy flips that no longer move the solution are round-off ties
    double change = 0.0, scale = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      change = std::max(change, std::abs(rhs[i] - c_new[i]));
      scale = std::max(scale, std::abs(rhs[i]));
    }
    c_new = rhs;
    next_policy = s2_new;
    select_policy(op, c_new, dir, lo2, hi2, next_policy, true);
    if (next_policy == s2_new || (it > 0 && change <= 1e-13 * scale)) return;
    s2_new = next_policy;
  }
  throw NumericalError("BSB policy iteration did not settle");
}

}  // namespace detail

inline PriceSurface solve_bsb(const BSBProblem& pb, HedgeDirection dir) {
  pb.check();
  const auto [s_lo, s_hi] = pb.domain();
  const std::size_t N = pb.n_space;  // intervals
  const double x0 = std::log(s_lo), dx = (std::log(s_hi) - x0) / static_cast<double>(N);
  const double dt = pb.T / static_cast<double>(pb.n_time);
  const double lo2 = pb.gamma.sigma_lo() * pb.gamma.sigma_lo();
  const double hi2 = pb.gamma.sigma_hi() * pb.gamma.sigma_hi();

  if (pb.scheme == TimeScheme::explicit_euler) {
    const double rate = hi2 / (dx * dx);
    if (dt * rate > 1.0) {
      const auto need = static_cast<std::size_t>(std::ceil(pb.T * rate * 1.05));
      throw ConfigurationError("explicit BSB scheme violates the CFL bound; use n_time >= " + std::to_string(need));
    }
  }

  PriceSurface s;
  s.direction = dir;
  s.r = pb.r;
  const double grow = std::exp(pb.r * pb.T);
  s.forwards.resize(N + 1);
  for (std::size_t i = 0; i <= N; ++i) s.forwards[i] = grow * std::exp(x0 + dx * static_cast<double>(i));
  s.times.resize(pb.n_time + 1);
  for (std::size_t k = 0; k <= pb.n_time; ++k) s.times[k] = dt * static_cast<double>(k);
  s.times.back() = pb.T;
  s.values.assign((pb.n_time + 1) * (N + 1), 0.0);
  s.chosen_sigma_sq.assign(s.values.size(), 0.0);

  const detail::BSBOperator op(s.forwards);
  std::vector<double> c(N + 1), c_new(N + 1), s2(N + 1);
  for (std::size_t i = 0; i <= N; ++i) {
    c[i] = pb.payoff(s.forwards[i]);
    if (!std::isfinite(c[i])) throw InvalidArgument("payoff is not finite on the grid");
  }
  detail::select_policy(op, c, dir, lo2, hi2, s2);
  // c holds forward values u; rows store spot values
  auto store = [&](std::size_t k) {
    const double disc = std::exp(-pb.r * (pb.T - s.times[k]));
    std::transform(c.begin(), c.end(), s.values.begin() + static_cast<std::ptrdiff_t>(k * (N + 1)),
                   [disc](double u) { return disc * u; });
    std::copy(s2.begin(), s2.end(), s.chosen_sigma_sq.begin() + static_cast<std::ptrdiff_t>(k * (N + 1)));
  };
  store(pb.n_time);

  for (std::size_t step = 0; step < pb.n_time; ++step) {
    const std::size_t k = pb.n_time - step - 1;
    switch (pb.scheme) {
      case TimeScheme::explicit_euler:
        detail::theta_step(op, c, c_new, s2, dt, 0.0, dir, lo2, hi2);
        c.swap(c_new);
        break;
      case TimeScheme::implicit:
        detail::theta_step(op, c, c_new, s2, dt, 1.0, dir, lo2, hi2);
        c.swap(c_new);
        break;
      case TimeScheme::crank_nicolson:
        if (step < 2) {
          // damp the payoff kink with two implicit half steps
          for (int half = 0; half < 2; ++half) {
            detail::theta_step(op, c, c_new, s2, 0.5 * dt, 1.0, dir, lo2, hi2);
            c.swap(c_new);
          }
        } else {
          detail::theta_step(op, c, c_new, s2, dt, 0.5, dir, lo2, hi2);
          c.swap(c_new);
        }
        break;
    }
    store(k);
  }
  return s;
}

struct HedgeInterval {
  double super = 0.0;
  double sub = 0.0;
  double t = 0.0;
  double S = 0.0;
};

inline HedgeInterval hedge_interval(const BSBProblem& pb, double S, double t = 0.0) {
  const auto up = solve_bsb(pb, HedgeDirection::superhedge);
  const auto dn = solve_bsb(pb, HedgeDirection::subhedge);
  return {up.value_at(t, S), dn.value_at(t, S), t, S};
}

// Columns: t, S, value, chosen_sigma
inline void write_surface_csv(std::ostream& os, const PriceSurface& s) {
  const auto prec = os.precision(17);
  os << "t,S,value,chosen_sigma\n";
  for (std::size_t k = 0; k < s.times.size(); ++k)
    for (std::size_t i = 0; i < s.n_spots(); ++i)
      os << s.times[k] << ',' << s.spot(k, i) << ',' << s.value(k, i) << ',' << std::sqrt(s.sigma_sq(k, i)) << '\n';
  os.precision(prec);
}

// Independent engine for the same prices: a recombining trinomial tree for
// S_k = s0 e^{r t_k} u^j with u = e^{sigma_hi sqrt(h)}. Under a prior with
// middle probability p the up/down probabilities (1 - p)(1 - d)/(u - d) and
// (1 - p)(u - 1)/(u - d) keep e^{-rt} S a martingale; sup (inf) over
// p in [0, 1 - sigma_lo^2 / sigma_hi^2] per node.
inline double trinomial_hedge_price(const BSBProblem& pb, std::size_t n_steps, HedgeDirection dir) {
  pb.check();
  const double h = pb.T / static_cast<double>(n_steps);
  const double hi = pb.gamma.sigma_hi(), lo = pb.gamma.sigma_lo();
  const double u = std::exp(hi * std::sqrt(h)), d = 1.0 / u;
  const double qu = (1.0 - d) / (u - d), qd = (u - 1.0) / (u - d);
  const double p_min = 0.0, p_max = 1.0 - (lo * lo) / (hi * hi);
  const double disc = std::exp(-pb.r * h);
  const long n = static_cast<long>(n_steps);
  std::vector<double> v(static_cast<std::size_t>(2 * n + 1));
  const double fwd = pb.s0 * std::exp(pb.r * pb.T);
  for (long j = -n; j <= n; ++j) v[static_cast<std::size_t>(j + n)] = pb.payoff(fwd * std::pow(u, static_cast<double>(j)));
  for (long k = n - 1; k >= 0; --k) {
    for (long j = -k; j <= k; ++j) {
      const auto i = static_cast<std::size_t>(j + k);
      const double spread = qu * v[i + 2] + qd * v[i];
      const double mid = v[i + 1];
      const double a = spread + p_min * (mid - spread);
      const double b = spread + p_max * (mid - spread);
      v[i] = disc * (dir == HedgeDirection::superhedge ? std::max(a, b) : std::min(a, b));
    }
  }
  return v[0];
}

}  // namespace ambivol
