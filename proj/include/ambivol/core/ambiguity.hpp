#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ambivol/core/scenario.hpp"
#include "ambivol/core/volatility_set.hpp"
#include "ambivol/error.hpp"

namespace ambivol {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x, double tol = 1e-12) const { return x >= lo - tol && x <= hi + tol; }
};

// Linked drift/volatility family: mu = mu_min + z, sigma^2 = sigma_min_sq + 2 z / gamma,
// 0 <= z <= z_bar.
struct JointParams {
  double mu_min = 0.0;
  double sigma_min_sq = 1.0;
  double gamma = 1.0;
  double z_bar = 0.0;

  void check() const {
    if (!(sigma_min_sq > 0.0) || !(gamma > 0.0) || !(z_bar >= 0.0) || !std::isfinite(mu_min)) {
      throw InvalidArgument("joint params need sigma_min_sq > 0, gamma > 0, z_bar >= 0");
    }
  }
  double mu(double z) const { return mu_min + z; }
  double sigma_sq(double z) const { return sigma_min_sq + 2.0 * z / gamma; }
};

// State-dependent set-valued maps evaluated on the grid: (step, t, x) -> set.
using DriftSetMap = std::function<Interval(std::size_t step, double t, std::span<const double> x)>;
using VolSetMap = std::function<VolatilitySet(std::size_t step, double t, std::span<const double> x)>;

struct AmbiguitySpec {
  DriftSetMap drift_set;
  VolSetMap vol_set;
  std::optional<JointParams> joint_params;

  static AmbiguitySpec volatility_only(VolatilitySet gamma) {
    return constant(Interval{0.0, 0.0}, std::move(gamma));
  }

  static AmbiguitySpec constant(Interval drift, VolatilitySet gamma) {
    AmbiguitySpec a;
    a.drift_set = [drift](std::size_t, double, std::span<const double>) { return drift; };
    a.vol_set = [g = std::move(gamma)](std::size_t, double, std::span<const double>) { return g; };
    return a;
  }

  static AmbiguitySpec joint(const JointParams& p) {
    p.check();
    AmbiguitySpec a;
    a.drift_set = [p](std::size_t, double, std::span<const double>) {
      return Interval{p.mu(0.0), p.mu(p.z_bar)};
    };
    a.vol_set = [p](std::size_t, double, std::span<const double>) {
      return VolatilitySet::interval(std::sqrt(p.sigma_sq(0.0)), std::sqrt(p.sigma_sq(p.z_bar)));
    };
    a.joint_params = p;
    return a;
  }
};

// Scenario generated by the linked family from a sequence of z_k in [0, z_bar].
inline ScenarioProcess scenario_from_joint(const JointParams& p, std::vector<double> times,
                                           std::span<const double> z) {
  p.check();
  std::vector<double> mu, sigma;
  for (double zk : z) {
    if (zk < 0.0 || zk > p.z_bar) throw InvalidArgument("joint z outside [0, z_bar]");
    mu.push_back(p.mu(zk));
    sigma.push_back(std::sqrt(p.sigma_sq(zk)));
  }
  return ScenarioProcess::scalar(std::move(times), mu, sigma);
}

struct ValidationReport {
  bool ok = true;
  std::size_t first_bad_step = 0;
  std::string reason;
};

// Checks every (mu_k, sigma_k) against the spec. State-dependent sets are
// evaluated at the path state when a path is given, else at the origin.
inline ValidationReport validate(const ScenarioProcess& s, const AmbiguitySpec& spec,
                                 const SamplePath* path = nullptr, double tol = 1e-10) {
  ValidationReport rep;
  auto fail = [&](std::size_t k, std::string why) {
    rep.ok = false;
    rep.first_bad_step = k;
    rep.reason = std::move(why);
    return rep;
  };
  try {
    s.check();
  } catch (const Error& e) {
    return fail(0, e.what());
  }
  const int d = s.dimension();
  std::vector<double> origin(static_cast<std::size_t>(d), 0.0);
  for (std::size_t k = 0; k < s.steps(); ++k) {
    const std::span<const double> x = path ? path->state(k) : std::span<const double>(origin);
    const double t = s.times[k];
    if (spec.drift_set) {
      const Interval drift = spec.drift_set(k, t, x);
      for (int i = 0; i < d; ++i) {
        if (!drift.contains(s.mu[k](i), tol)) return fail(k, "drift outside drift set");
      }
    }
    if (spec.vol_set) {
      const VolatilitySet g = spec.vol_set(k, t, x);
      if (!g.contains(s.sigma[k], std::max(tol, 1e-8))) return fail(k, "volatility outside volatility set");
    }
    if (spec.joint_params) {
      const auto& p = *spec.joint_params;
      const double z = s.mu[k](0) - p.mu_min;
      const double sig2 = s.sigma[k](0, 0) * s.sigma[k](0, 0);
      if (z < -tol || z > p.z_bar + tol || std::abs(sig2 - p.sigma_sq(z)) > 1e-9 * std::max(1.0, sig2)) {
        return fail(k, "drift/volatility pair violates the joint link");
      }
    }
  }
  return rep;
}

// A scalar volatility trajectory on a grid.
struct VolatilityPath {
  std::vector<double> times;
  std::vector<double> sigma;  // one value per step
};

// Pointwise min/max envelope of two candidate volatility trajectories;
// drift is known to be zero.
inline AmbiguitySpec robustify(const VolatilityPath& vol1, const VolatilityPath& vol2) {
  if (vol1.times != vol2.times) throw InvalidArgument("robustify: mismatched time grids");
  if (vol1.sigma.size() != vol2.sigma.size() || vol1.sigma.size() + 1 != vol1.times.size()) {
    throw InvalidArgument("robustify: volatility sequences must have one value per step");
  }
  std::vector<Interval> env(vol1.sigma.size());
  for (std::size_t k = 0; k < env.size(); ++k) {
    env[k] = {std::min(vol1.sigma[k], vol2.sigma[k]), std::max(vol1.sigma[k], vol2.sigma[k])};
    if (!(env[k].lo > 0.0) || !std::isfinite(env[k].hi)) {
      throw InvalidArgument("robustify: volatilities must be positive and finite");
    }
  }
  AmbiguitySpec a;
  a.drift_set = [](std::size_t, double, std::span<const double>) { return Interval{0.0, 0.0}; };
  a.vol_set = [env = std::move(env)](std::size_t step, double, std::span<const double>) {
    if (step >= env.size()) throw InvalidArgument("robustified set queried past the grid");
    return VolatilitySet::interval(env[step].lo, env[step].hi);
  };
  return a;
}

}  // namespace ambivol
