#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "ambivol/core/parallel.hpp"
#include "ambivol/core/rng.hpp"
#include "ambivol/core/volatility_set.hpp"
#include "ambivol/error.hpp"

namespace ambivol {

inline std::vector<double> uniform_grid(double T, std::size_t n_steps) {
  if (!(T > 0.0) || n_steps == 0) throw InvalidArgument("uniform grid needs T > 0 and n_steps >= 1");
  std::vector<double> t(n_steps + 1);
  for (std::size_t k = 0; k <= n_steps; ++k) t[k] = T * static_cast<double>(k) / static_cast<double>(n_steps);
  t[n_steps] = T;
  return t;
}

inline void check_time_grid(std::span<const double> times) {
  if (times.size() < 2) throw InvalidArgument("time grid needs at least two points");
  if (times.front() != 0.0) throw InvalidArgument("time grid must start at 0");
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1]) || !std::isfinite(times[k])) {
      throw InvalidArgument("time grid must be finite and strictly increasing");
    }
  }
}

// One admissible hypothesis theta = (mu, sigma), constant on each step
// [t_k, t_{k+1}).
struct ScenarioProcess {
  std::vector<double> times;
  std::vector<Vector> mu;
  std::vector<Matrix> sigma;

  std::size_t steps() const noexcept { return times.empty() ? 0 : times.size() - 1; }
  int dimension() const noexcept { return sigma.empty() ? 1 : static_cast<int>(sigma.front().rows()); }
  double horizon() const { return times.back(); }
  double dt(std::size_t k) const { return times[k + 1] - times[k]; }

  // v_k = sigma_k sigma_k^T
  Matrix density(std::size_t k) const { return sigma[k] * sigma[k].transpose(); }

  // Structural check: grid, lengths, shapes and finiteness.
  void check() const {
    check_time_grid(times);
    if (mu.size() != steps() || sigma.size() != steps()) {
      throw InvalidScenario("scenario mu/sigma length must equal the number of steps");
    }
    const auto d = sigma.front().rows();
    for (std::size_t k = 0; k < steps(); ++k) {
      if (sigma[k].rows() != d || sigma[k].cols() != d || mu[k].size() != d) {
        throw InvalidScenario("scenario has inconsistent dimensions");
      }
      if (!sigma[k].allFinite() || !mu[k].allFinite()) throw InvalidScenario("scenario has non-finite values");
    }
  }

  static ScenarioProcess scalar(std::vector<double> times, std::span<const double> mu,
                                std::span<const double> sigma) {
    ScenarioProcess s;
    s.times = std::move(times);
    for (double m : mu) s.mu.push_back(Vector::Constant(1, m));
    for (double v : sigma) s.sigma.push_back(Matrix::Constant(1, 1, v));
    s.check();
    return s;
  }

  static ScenarioProcess constant(double T, std::size_t n_steps, double mu, double sigma) {
    std::vector<double> m(n_steps, mu), v(n_steps, sigma);
    return scalar(uniform_grid(T, n_steps), m, v);
  }

  static ScenarioProcess constant(double T, std::size_t n_steps, const Vector& mu, const Matrix& sigma) {
    ScenarioProcess s;
    s.times = uniform_grid(T, n_steps);
    s.mu.assign(n_steps, mu);
    s.sigma.assign(n_steps, sigma);
    s.check();
    return s;
  }
};

// A sampled trajectory X_{t_k} in R^d, stored row-major (one row per time).
struct SamplePath {
  std::vector<double> times;
  std::vector<double> values;
  int dimension = 1;
  std::uint64_t seed = 0;

  std::size_t points() const noexcept { return times.size(); }
  std::span<const double> state(std::size_t k) const {
    return std::span<const double>(values).subspan(k * static_cast<std::size_t>(dimension),
                                                   static_cast<std::size_t>(dimension));
  }
  Eigen::Map<const Vector> state_vector(std::size_t k) const {
    return Eigen::Map<const Vector>(values.data() + k * static_cast<std::size_t>(dimension), dimension);
  }
  Vector increment(std::size_t k) const { return state_vector(k + 1) - state_vector(k); }
  double scalar(std::size_t k) const { return values[k * static_cast<std::size_t>(dimension)]; }
};

// Cumulative <B>_{t_k} and per-step densities v_k.
struct QuadraticVariation {
  std::vector<double> times;
  std::vector<Matrix> qv;       // size = points
  std::vector<Matrix> density;  // size = points - 1
};

// Standard normal increments for one path: z[k*d + i], independent of other paths.
inline std::vector<double> path_normals(std::uint64_t master_seed, std::uint64_t path_index,
                                        std::size_t steps, int d) {
  auto eng = stream_engine(master_seed, path_index);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> z(steps * static_cast<std::size_t>(d));
  for (double& v : z) v = normal(eng);
  return z;
}

// Euler path dX = mu dt + sigma dW driven by the given standard normals.
inline SamplePath path_from_normals(const ScenarioProcess& spec, std::span<const double> z,
                                    std::uint64_t seed = 0) {
  const int d = spec.dimension();
  const auto n = spec.steps();
  SamplePath p;
  p.times = spec.times;
  p.dimension = d;
  p.seed = seed;
  p.values.assign((n + 1) * static_cast<std::size_t>(d), 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double dt = spec.dt(k);
    const Eigen::Map<const Vector> zk(z.data() + k * static_cast<std::size_t>(d), d);
    const Vector dx = spec.mu[k] * dt + spec.sigma[k] * zk * std::sqrt(dt);
    for (int i = 0; i < d; ++i) {
      const auto at = (k + 1) * static_cast<std::size_t>(d) + static_cast<std::size_t>(i);
      p.values[at] = p.values[at - static_cast<std::size_t>(d)] + dx(i);
      if (!std::isfinite(p.values[at])) throw InvalidScenario("simulated path became non-finite");
    }
  }
  return p;
}

// n_paths independent Euler paths. Path k uses normals drawn from stream
// (seed, k) only, so it is reproducible whatever n_paths or the thread count.
inline std::vector<SamplePath> simulate_scenario(const ScenarioProcess& spec, std::size_t n_paths,
                                                 std::uint64_t seed) {
  if (n_paths == 0) throw InvalidArgument("n_paths must be positive");
  spec.check();
  std::vector<SamplePath> out(n_paths);
  parallel_for(n_paths, [&](std::size_t k) {
    const auto z = path_normals(seed, k, spec.steps(), spec.dimension());
    out[k] = path_from_normals(spec, z, splitmix64(seed ^ splitmix64(k)));
  });
  return out;
}

inline QuadraticVariation realized_qv(const SamplePath& path) {
  if (path.points() < 2) throw InvalidArgument("realized_qv needs at least two points");
  const int d = path.dimension;
  QuadraticVariation q;
  q.times = path.times;
  q.qv.reserve(path.points());
  q.density.reserve(path.points() - 1);
  Matrix acc = Matrix::Zero(d, d);
  q.qv.push_back(acc);
  for (std::size_t k = 0; k + 1 < path.points(); ++k) {
    const Vector dx = path.increment(k);
    const Matrix outer = dx * dx.transpose();
    acc += outer;
    q.qv.push_back(acc);
    q.density.push_back(outer / (path.times[k + 1] - path.times[k]));
  }
  return q;
}

// Checks sigma_lo^2 t - tol <= <B>_t <= sigma_hi^2 t + tol at every grid time
// (trace form with the candidate extremes in d > 1).
inline bool qv_within_bounds(const QuadraticVariation& qv, const VolatilitySet& gamma, double tol) {
  const auto [lo, hi] = gamma.trace_range();
  for (std::size_t k = 0; k < qv.times.size(); ++k) {
    const double t = qv.times[k];
    const double v = qv.qv[k].trace();
    if (v < lo * t - tol || v > hi * t + tol) return false;
  }
  return true;
}

}  // namespace ambivol
