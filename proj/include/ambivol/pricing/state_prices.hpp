#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <vector>

#include "ambivol/core/scenario.hpp"
#include "ambivol/error.hpp"
#include "ambivol/pricing/market.hpp"

namespace ambivol {

struct StatePricePath {
  std::vector<double> times;
  std::vector<double> pi;
  std::vector<double> log_pi;
  ScenarioProcess scenario;
  double max_abs_lambda = 0.0;  // largest |v^{-1} eta| seen on the path
};

struct PricePath {
  std::vector<double> times;
  std::vector<Vector> prices;
};

struct WealthPath {
  std::vector<double> times;
  std::vector<double> Y;
  std::vector<Vector> phi;       // one per step
  std::vector<double> funding;   // one per step
};

namespace detail {

inline void check_path(const ScenarioProcess& sc, const SamplePath& path) {
  if (path.points() != sc.times.size() || path.dimension != sc.dimension()) {
    throw InvalidArgument("path does not match the scenario grid");
  }
}

inline Matrix inverse_density(const Matrix& v) {
  Eigen::LDLT<Matrix> ldlt(v);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 1e-300).all()) {
    throw SingularMatrix("volatility density v is singular");
  }
  return ldlt.solve(Matrix::Identity(v.rows(), v.cols()));
}

}  // namespace detail

// log pi_{k+1} = log pi_k - r dt - lambda^T dB - 1/2 lambda^T v lambda dt with
// lambda = v^{-1} eta and v the scenario density on the step.
inline StatePricePath state_price_path(const MarketSpec& m, const ScenarioProcess& sc, const SamplePath& path) {
  detail::check_path(sc, path);
  const std::size_t n = sc.steps();
  StatePricePath out;
  out.times = sc.times;
  out.scenario = sc;
  out.log_pi.assign(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = sc.times[k], dt = sc.dt(k);
    const Vector x = path.state_vector(k);
    const Matrix v = sc.density(k);
    const Vector eta = market_price_of_uncertainty(m, t, x, v);
    const Vector lambda = detail::inverse_density(v) * eta;
    out.max_abs_lambda = std::max(out.max_abs_lambda, lambda.cwiseAbs().maxCoeff());
    out.log_pi[k + 1] = out.log_pi[k] - m.r(t, x) * dt - lambda.dot(path.increment(k)) -
                        0.5 * lambda.dot(v * lambda) * dt;
  }
  out.pi.resize(n + 1);
  for (std::size_t k = 0; k <= n; ++k) out.pi[k] = std::exp(out.log_pi[k]);
  return out;
}

// Log-Euler prices: log S_i += (b_i - 1/2 (s v s^T)_ii) dt + (s dB)_i.
inline PricePath security_price_path(const MarketSpec& m, const ScenarioProcess& sc, const SamplePath& path) {
  detail::check_path(sc, path);
  const std::size_t n = sc.steps();
  PricePath out;
  out.times = sc.times;
  out.prices.reserve(n + 1);
  Vector logS = m.s0.array().log().matrix();
  out.prices.push_back(m.s0);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = sc.times[k], dt = sc.dt(k);
    const Vector x = path.state_vector(k);
    const Matrix v = sc.density(k);
    const Matrix s = m.s(t, x);
    const Vector drift = m.b(t, x, v) - 0.5 * (s * v * s.transpose()).diagonal();
    logS += drift * dt + s * path.increment(k);
    out.prices.push_back(logS.array().exp().matrix());
  }
  return out;
}

inline PathPoint path_point(const SamplePath& path, const PricePath& prices, std::size_t k, double wealth = 0.0) {
  return {k, path.times[k], path.state_vector(k), prices.prices[k], wealth};
}

// phi = s^T (holdings .* prices): the driver loading of a position in shares.
inline Vector phi_from_holdings(const MarketSpec& m, double t, const Vector& x, const Vector& holdings,
                                const Vector& prices) {
  return m.s(t, x).transpose() * holdings.cwiseProduct(prices);
}

using StrategyMap = std::function<Vector(const PathPoint&)>;
using FlowMap = std::function<double(const PathPoint&)>;

// Explicit Euler: Y_{k+1} = Y_k + (r Y_k + eta^T phi_k - f_k) dt + phi_k^T dB_k.
inline WealthPath simulate_wealth(const MarketSpec& m, const ScenarioProcess& sc, const SamplePath& path,
                                  const StrategyMap& phi, const FlowMap& funding, double y0,
                                  const PricePath* prices = nullptr) {
  detail::check_path(sc, path);
  PricePath own;
  if (!prices) {
    own = security_price_path(m, sc, path);
    prices = &own;
  }
  const std::size_t n = sc.steps();
  WealthPath w;
  w.times = sc.times;
  w.Y.assign(n + 1, 0.0);
  w.Y[0] = y0;
  w.phi.reserve(n);
  w.funding.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const PathPoint pt = path_point(path, *prices, k, w.Y[k]);
    const Vector ph = phi ? phi(pt) : Vector::Zero(sc.dimension());
    const double f = funding ? funding(pt) : 0.0;
    if (!ph.allFinite() || !std::isfinite(f)) throw NumericalError("strategy or funding is not finite");
    const double dt = sc.dt(k);
    const Vector eta = market_price_of_uncertainty(m, pt.t, pt.x, sc.density(k));
    w.Y[k + 1] = w.Y[k] + (m.r(pt.t, pt.x) * w.Y[k] + eta.dot(ph) - f) * dt + ph.dot(path.increment(k));
    w.phi.push_back(ph);
    w.funding.push_back(f);
  }
  return w;
}

// Driver path with the scenario drift removed: X_k - sum_{j<k} mu_j dt_j.
inline SamplePath remove_drift(const ScenarioProcess& sc, const SamplePath& path) {
  detail::check_path(sc, path);
  SamplePath out = path;
  const auto d = static_cast<std::size_t>(path.dimension);
  Vector acc = Vector::Zero(path.dimension);
  for (std::size_t k = 0; k < sc.steps(); ++k) {
    acc += sc.mu[k] * sc.dt(k);
    for (std::size_t i = 0; i < d; ++i) out.values[(k + 1) * d + i] -= acc(static_cast<Eigen::Index>(i));
  }
  return out;
}

// The same scenario with the drift set to zero.
inline ScenarioProcess without_drift(ScenarioProcess sc) {
  for (auto& m : sc.mu) m.setZero();
  return sc;
}

}  // namespace ambivol
