#pragma once

#include <cmath>
#include <functional>
#include <limits>

#include "ambivol/core/volatility_set.hpp"
#include "ambivol/error.hpp"
#include "ambivol/lattice/aggregator.hpp"
#include "ambivol/lattice/lattice.hpp"
#include "ambivol/lattice/utility.hpp"

namespace ambivol {

// log e_t = log e0 + M(t) + s_e^T B_t (log_linear), or e_t = e0 (1 + M(t) + s_e^T B_t),
// with M(t) the integrated drift int_0^t mu_e.
struct Endowment {
  double e0 = 1.0;
  Vector s_e = Vector::Constant(1, 0.15);
  std::function<double(double t)> drift_integral;  // M(t); empty means zero
  bool log_linear = true;

  void check() const {
    if (!(e0 > 0.0) || !std::isfinite(e0)) throw InvalidArgument("endowment e0 must be positive");
    if (s_e.size() < 1 || !s_e.allFinite()) throw InvalidArgument("endowment loading s_e must be finite");
  }

  int dimension() const noexcept { return static_cast<int>(s_e.size()); }

  // e at time t for a scalar driver state x (1-d).
  double at(double t, double x) const {
    const double drift = drift_integral ? drift_integral(t) : 0.0;
    const double e = log_linear ? e0 * std::exp(s_e(0) * x + drift) : e0 * (1.0 + s_e(0) * x + drift);
    if (!(e > 0.0)) throw DomainError("endowment is not positive on the lattice");
    return e;
  }

  ConsumptionPlan plan(const TrinomialLattice& lat) const {
    check();
    if (dimension() != 1) throw InvalidArgument("lattice endowment plans are one-dimensional");
    return NodeFunction::from(lat, [&](std::size_t k, double x) { return at(lat.time(k), x); });
  }
};

// Trace-extremizing volatility: the max of tr(sigma sigma^T s_e s_e^T) for
// alpha < 0 and the min for alpha > 0, over the extreme points of Gamma.
inline Matrix worst_case_sigma(const VolatilitySet& gamma, const Vector& s_e, double alpha) {
  if (alpha == 0.0 || !std::isfinite(alpha)) throw InvalidArgument("worst-case volatility needs alpha != 0");
  if (s_e.size() != gamma.dimension()) throw InvalidArgument("s_e dimension differs from Gamma");
  Matrix best;
  double best_val = alpha < 0.0 ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
  for (const auto& c : gamma.extreme_points()) {
    const double v = (s_e.transpose() * c * c.transpose() * s_e)(0, 0);
    if ((alpha < 0.0 && v > best_val) || (alpha > 0.0 && v < best_val)) {
      best_val = v;
      best = c;
    }
  }
  return best;
}

// b - r 1 = -(e u''(e) / u'(e)) s sigma sigma^T s_e
inline Vector ccapm_standard(double e, const Matrix& s, const Matrix& sigma, const Felicity& u, const Vector& s_e) {
  const double uc = u.du(e);
  if (uc == 0.0 || !std::isfinite(uc)) throw DomainError("ccapm needs u'(e) != 0");
  return -(e * u.d2u(e) / uc) * (s * sigma * sigma.transpose() * s_e);
}

// b - r 1 = rho^{-1} [alpha (1 - rho) s sigma sigma^T s_e + (rho - alpha) s sigma sigma^T s_M]
inline Vector ccapm_kp(const Matrix& s, const Matrix& sigma, const Aggregator& agg, const Vector& s_e,
                       const Vector& s_M) {
  const double rho = agg.rho(), alpha = agg.alpha();
  if (rho == 0.0) throw InvalidArgument("ccapm_kp needs rho != 0");
  const Matrix cov = s * sigma * sigma.transpose();
  return (alpha * (1.0 - rho) * (cov * s_e) + (rho - alpha) * (cov * s_M)) / rho;
}

// Drift ambiguity only: b - r 1 = -(e u''/u') s s_e + s mu_star
inline Vector ccapm_drift(double e, const Matrix& s, const Felicity& u, const Vector& s_e, const Vector& mu_star) {
  const Matrix id = Matrix::Identity(s_e.size(), s_e.size());
  return ccapm_standard(e, s, id, u, s_e) + s * mu_star;
}

}  // namespace ambivol
