#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>

#include "ambivol/core/volatility_set.hpp"
#include "ambivol/error.hpp"

namespace ambivol {

// Returns dR = b dt + s dB. r and s see (t, x) with x the driver state; b
// may also depend on the volatility density v of the prior being evaluated.
struct MarketSpec {
  int d = 1;
  VolatilitySet gamma = VolatilitySet::interval(0.2, 0.2);
  Vector s0 = Vector::Constant(1, 100.0);  // initial security prices
  std::function<double(double t, const Vector& x)> r;
  std::function<Vector(double t, const Vector& x, const Matrix& v)> b;
  std::function<Matrix(double t, const Vector& x)> s;

  void check() const {
    if (d < 1 || gamma.dimension() != d || s0.size() != d) throw InvalidArgument("market dimensions disagree");
    if (!r || !b || !s) throw InvalidArgument("market needs r, b and s maps");
    if (!((s0.array() > 0.0).all())) throw InvalidArgument("initial security prices must be positive");
  }
};

// r constant, s = 1 and b_t = r + b_coef v_t, so that eta_t = b_coef v_t.
inline MarketSpec example_market(double r, double b_coef, VolatilitySet gamma, double s0 = 100.0) {
  MarketSpec m;
  m.d = 1;
  m.gamma = std::move(gamma);
  m.s0 = Vector::Constant(1, s0);
  m.r = [r](double, const Vector&) { return r; };
  m.b = [r, b_coef](double, const Vector&, const Matrix& v) { return Vector::Constant(1, r + b_coef * v(0, 0)); };
  m.s = [](double, const Vector&) { return Matrix::Identity(1, 1); };
  return m;
}

// eta = s^{-1} (b - r 1)
inline Vector market_price_of_uncertainty(const MarketSpec& m, double t, const Vector& x, const Matrix& v) {
  const Matrix s = m.s(t, x);
  const Vector excess = m.b(t, x, v) - Vector::Constant(m.d, m.r(t, x));
  Eigen::FullPivLU<Matrix> lu(s);
  if (!lu.isInvertible()) throw SingularMatrix("volatility loading s is singular");
  return lu.solve(excess);
}

// Everything a dividend or strategy map may look at on step k of a path.
struct PathPoint {
  std::size_t k = 0;
  double t = 0.0;
  Vector x;       // driver state
  Vector prices;  // security prices
  double wealth = 0.0;
};

struct DividendStream {
  std::function<double(const PathPoint&)> delta;    // flow for t < T; empty means none
  std::function<double(const PathPoint&)> delta_T;  // terminal lump
};

// Terminal-only claim on the first security.
inline DividendStream european(std::function<double(double)> payoff) {
  DividendStream d;
  d.delta_T = [p = std::move(payoff)](const PathPoint& pt) { return p(pt.prices(0)); };
  return d;
}

}  // namespace ambivol
