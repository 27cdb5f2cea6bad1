#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <numeric>
#include <sstream>

#include "ambivol/core/ambiguity.hpp"
#include "ambivol/core/io.hpp"
#include "ambivol/core/scenario.hpp"
#include "ambivol/core/volatility_set.hpp"

using namespace ambivol;

namespace {

double terminal_qv(const SamplePath& p) { return realized_qv(p).qv.back()(0, 0); }

}  // namespace

TEST(VolatilitySet, IntervalValidation) {
  EXPECT_THROW(VolatilitySet::interval(0.0, 1.0), InvalidArgument);
  EXPECT_THROW(VolatilitySet::interval(0.5, 0.4), InvalidArgument);
  const auto g = VolatilitySet::interval(std::sqrt(0.8), 1.0);
  EXPECT_TRUE(g.contains(0.95));
  EXPECT_FALSE(g.contains(0.5));
  EXPECT_FALSE(g.degenerate());
  EXPECT_TRUE(VolatilitySet::interval(0.2, 0.2).degenerate());
}

TEST(VolatilitySet, MatrixFamilyMembership) {
  Matrix a = Matrix::Identity(2, 2) * 0.1;
  std::vector<Matrix> c{Matrix::Identity(2, 2), Matrix(Eigen::DiagonalMatrix<double, 2>(2.0, 0.5))};
  const auto g = VolatilitySet::matrix_family(c, a);
  EXPECT_EQ(g.dimension(), 2);
  EXPECT_TRUE(g.contains(c[0]));
  EXPECT_TRUE(g.contains(Matrix(0.5 * (c[0] + c[1]))));
  EXPECT_FALSE(g.contains(Matrix(Matrix::Identity(2, 2) * 3.0)));
  // a candidate violating sigma sigma^T >= a_hat is rejected at construction
  std::vector<Matrix> bad{Matrix::Identity(2, 2) * 0.1};
  EXPECT_THROW(VolatilitySet::matrix_family(bad, a), InvalidArgument);
  EXPECT_THROW(VolatilitySet::matrix_family({}, a), InvalidArgument);

  Vector se(2);
  se << 1.0, 0.0;
  const auto [lo, hi] = g.trace_range(se);
  EXPECT_DOUBLE_EQ(lo, 1.0);
  EXPECT_DOUBLE_EQ(hi, 4.0);
}

TEST(Simulate, DegenerateDiffusionIsZero) {
  const auto spec = ScenarioProcess::constant(1.0, 50, 0.0, 0.0);
  for (const auto& p : simulate_scenario(spec, 7, 123)) {
    for (double v : p.values) EXPECT_EQ(v, 0.0);
  }
}

TEST(Simulate, DeterministicDrift) {
  const auto spec = ScenarioProcess::constant(1.0, 100, 0.05, 0.0);
  const auto p = simulate_scenario(spec, 1, 9).front();
  EXPECT_NEAR(p.values.back(), 0.05, 1e-14);
  EXPECT_EQ(p.values.front(), 0.0);
}

TEST(Simulate, NonFiniteScenarioRejected) {
  auto spec = ScenarioProcess::constant(1.0, 10, 0.0, 0.2);
  spec.sigma[3](0, 0) = std::nan("");
  EXPECT_THROW(simulate_scenario(spec, 1, 1), InvalidScenario);
}

TEST(Simulate, PathIndependentOfPathCountAndThreads) {
  const auto spec = ScenarioProcess::constant(1.0, 200, 0.01, 0.3);
  ::setenv("AMBIVOL_THREADS", "1", 1);
  const auto a = simulate_scenario(spec, 5, 77);
  ::setenv("AMBIVOL_THREADS", "4", 1);
  const auto b = simulate_scenario(spec, 40, 77);
  ::unsetenv("AMBIVOL_THREADS");
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k].values, b[k].values);
  EXPECT_NE(a[0].values, a[1].values);
}

TEST(RealizedQV, SigmaPointNineInsideBand) {
  const auto spec = ScenarioProcess::constant(1.0, 10000, 0.0, 0.9);
  const auto p = simulate_scenario(spec, 1, 2024).front();
  const double qv = terminal_qv(p);
  // sd of qv_T is sigma^2 sqrt(2/n) = 0.0115
  EXPECT_GE(qv, 0.80);
  EXPECT_LE(qv, 1.00);
  EXPECT_NEAR(qv, 0.81, 0.03);
  EXPECT_TRUE(qv_within_bounds(realized_qv(p), VolatilitySet::interval(std::sqrt(0.8), 1.0), 0.05));
}

TEST(RealizedQV, UnitSigma) {
  const auto spec = ScenarioProcess::constant(1.0, 10000, 0.0, 1.0);
  const auto p = simulate_scenario(spec, 1, 5).front();
  EXPECT_LT(std::abs(terminal_qv(p) - 1.0), 0.05);
}

TEST(RealizedQV, ZeroPath) {
  const auto p = simulate_scenario(ScenarioProcess::constant(1.0, 20, 0.0, 0.0), 1, 0).front();
  for (const auto& m : realized_qv(p).qv) EXPECT_EQ(m(0, 0), 0.0);
}

TEST(RealizedQV, EndpointScenariosSeparate) {
  const double lo = std::sqrt(0.8), hi = 1.0;
  const auto pl = simulate_scenario(ScenarioProcess::constant(1.0, 10000, 0.0, lo), 10, 3);
  const auto ph = simulate_scenario(ScenarioProcess::constant(1.0, 10000, 0.0, hi), 10, 4);
  double max_lo = 0.0, min_hi = 1e9;
  for (const auto& p : pl) max_lo = std::max(max_lo, terminal_qv(p));
  for (const auto& p : ph) min_hi = std::min(min_hi, terminal_qv(p));
  EXPECT_LT(max_lo, 0.9);
  EXPECT_GT(min_hi, 0.9);
}

TEST(RealizedQV, SeedAverageConverges) {
  const auto spec = ScenarioProcess::constant(1.0, 10000, 0.0, 0.5);
  double sum = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) sum += terminal_qv(simulate_scenario(spec, 1, 1000 + s).front());
  EXPECT_NEAR(sum / 20.0, 0.25, 0.02 * 0.25);
}

TEST(RealizedQV, AdditiveOverConcatenation) {
  const auto spec = ScenarioProcess::constant(1.0, 300, 0.0, 0.4);
  const auto p = simulate_scenario(spec, 1, 8).front();
  const auto q = realized_qv(p);
  const std::size_t m = 120;
  SamplePath head;
  head.times.assign(p.times.begin(), p.times.begin() + m + 1);
  head.values.assign(p.values.begin(), p.values.begin() + m + 1);
  double tail = 0.0;
  for (std::size_t k = m; k < 300; ++k) tail += p.increment(k)(0) * p.increment(k)(0);
  EXPECT_NEAR(realized_qv(head).qv.back()(0, 0) + tail, q.qv.back()(0, 0), 1e-13);
  for (std::size_t k = 1; k < q.qv.size(); ++k) EXPECT_GE(q.qv[k](0, 0), q.qv[k - 1](0, 0));
  for (const auto& v : q.density) EXPECT_GE(v(0, 0), 0.0);
}

TEST(QVBounds, Examples) {
  const auto g = VolatilitySet::interval(std::sqrt(0.8), 1.0);
  QuadraticVariation q;
  q.times = uniform_grid(1.0, 10);
  for (double t : q.times) q.qv.push_back(Matrix::Constant(1, 1, 0.9 * t));
  EXPECT_TRUE(qv_within_bounds(q, g, 0.0));
  for (auto& m : q.qv) m.setZero();
  EXPECT_FALSE(qv_within_bounds(q, g, 0.5 * 0.8 * 0.1));
}

TEST(Robustify, ConstantAndComponentwise) {
  const auto t2 = uniform_grid(1.0, 2);
  const auto a = robustify({t2, {0.2, 0.2}}, {t2, {0.2, 0.2}});
  const std::vector<double> x{0.0};
  EXPECT_TRUE(a.vol_set(0, 0.0, x).degenerate());
  EXPECT_DOUBLE_EQ(a.vol_set(1, 0.5, x).sigma_lo(), 0.2);

  const auto b = robustify({t2, {0.1, 0.3}}, {t2, {0.2, 0.2}});
  EXPECT_DOUBLE_EQ(b.vol_set(0, 0.0, x).sigma_lo(), 0.1);
  EXPECT_DOUBLE_EQ(b.vol_set(0, 0.0, x).sigma_hi(), 0.2);
  EXPECT_DOUBLE_EQ(b.vol_set(1, 0.5, x).sigma_lo(), 0.2);
  EXPECT_DOUBLE_EQ(b.vol_set(1, 0.5, x).sigma_hi(), 0.3);
  const auto d = b.drift_set(0, 0.0, x);
  EXPECT_EQ(d.lo, 0.0);
  EXPECT_EQ(d.hi, 0.0);

  EXPECT_THROW(robustify({t2, {0.1, 0.2}}, {uniform_grid(2.0, 2), {0.1, 0.2}}), InvalidArgument);
}

TEST(Robustify, StochasticVolatilityEnvelope) {
  // a mean-reverting log-vol path and a square-root variance path
  const std::size_t n = 500;
  const auto t = uniform_grid(1.0, n);
  auto eng = stream_engine(42, 0);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> s1(n), s2(n);
  double lv = std::log(0.2), var = 0.04;
  const double h = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    s1[k] = std::exp(lv);
    s2[k] = std::sqrt(var);
    lv += 2.0 * (std::log(0.2) - lv) * h + 0.5 * std::sqrt(h) * z(eng);
    var = std::max(1e-4, var + 3.0 * (0.04 - var) * h + 0.3 * std::sqrt(var * h) * z(eng));
  }
  const auto spec = robustify({t, s1}, {t, s2});
  const std::vector<double> zero(n, 0.0);
  const auto sc1 = ScenarioProcess::scalar(t, zero, s1);
  const auto sc2 = ScenarioProcess::scalar(t, zero, s2);
  EXPECT_TRUE(validate(sc1, spec).ok);
  EXPECT_TRUE(validate(sc2, spec).ok);
  auto sc3 = sc1;
  sc3.sigma[10](0, 0) = std::max(s1[10], s2[10]) + 0.01;
  const auto rep = validate(sc3, spec);
  EXPECT_FALSE(rep.ok);
  EXPECT_EQ(rep.first_bad_step, 10u);
}

TEST(Ambiguity, JointScenarioValidates) {
  JointParams p{0.01, 0.04, 4.0, 0.05};
  const auto spec = AmbiguitySpec::joint(p);
  const auto t = uniform_grid(1.0, 8);
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto eng = stream_engine(s, 1);
    std::uniform_real_distribution<double> u(0.0, p.z_bar);
    std::vector<double> z(8);
    for (double& v : z) v = u(eng);
    EXPECT_TRUE(validate(scenario_from_joint(p, t, z), spec).ok);
  }
  // breaking the link is caught even though both values are inside their intervals
  auto sc = scenario_from_joint(p, t, std::vector<double>(8, 0.0));
  sc.sigma[2](0, 0) = std::sqrt(p.sigma_sq(p.z_bar));
  EXPECT_FALSE(validate(sc, spec).ok);
}

TEST(Ambiguity, StateDependentBoundsEvaluatedAlongPath) {
  AmbiguitySpec a;
  a.drift_set = [](std::size_t, double, std::span<const double>) { return Interval{0.0, 0.0}; };
  a.vol_set = [](std::size_t, double, std::span<const double> x) {
    return x[0] >= 0.0 ? VolatilitySet::interval(0.1, 0.2) : VolatilitySet::interval(0.3, 0.4);
  };
  const auto sc = ScenarioProcess::constant(1.0, 4, 0.0, 0.15);
  SamplePath p;
  p.times = sc.times;
  p.values = {0.0, 0.1, -0.1, 0.2, 0.0};
  const auto rep = validate(sc, a, &p);
  EXPECT_FALSE(rep.ok);
  EXPECT_EQ(rep.first_bad_step, 2u);
  EXPECT_TRUE(validate(sc, a).ok);
}

TEST(IO, ScenarioJsonRoundTrip) {
  const auto j = json::parse(R"({"T": 2.0, "n_steps": 4, "mu": 0.01, "sigma": [0.1, 0.2, 0.3, 0.2]})");
  const auto s = scenario_from_json(j);
  EXPECT_EQ(s.steps(), 4u);
  EXPECT_DOUBLE_EQ(s.sigma[2](0, 0), 0.3);
  EXPECT_DOUBLE_EQ(s.horizon(), 2.0);
  EXPECT_THROW(scenario_from_json(json::parse(R"({"T": 1, "n_steps": 2, "mu": 0, "sigma": 0.1, "vol": 2})")),
               InvalidArgument);
  const auto m = scenario_from_json(
      json::parse(R"({"T": 1, "n_steps": 3, "dimension": 2, "mu": [0, 0], "sigma": {"matrix": [[1, 0], [0, 2]]}})"));
  EXPECT_DOUBLE_EQ(m.density(1)(1, 1), 4.0);
}

TEST(IO, CsvColumns) {
  const auto p = simulate_scenario(ScenarioProcess::constant(1.0, 3, 0.0, 0.2), 1, 1).front();
  std::ostringstream a, b;
  write_path_csv(a, p);
  write_qv_csv(b, realized_qv(p));
  EXPECT_EQ(a.str().substr(0, 6), "t,x_1\n");
  EXPECT_EQ(b.str().substr(0, 12), "t,qv_11,v_11");
  const std::string rows = a.str();
  EXPECT_EQ(std::count(rows.begin(), rows.end(), '\n'), 5);
}
