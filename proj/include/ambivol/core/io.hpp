#pragma once

#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

#include "ambivol/core/scenario.hpp"
#include "ambivol/error.hpp"

namespace ambivol {

using json = nlohmann::json;

// Full round-trip precision for numeric table output.
inline void set_csv_precision(std::ostream& os) { os << std::setprecision(17); }

// Columns: t, x_1..x_d
inline void write_path_csv(std::ostream& os, const SamplePath& p) {
  set_csv_precision(os);
  os << "t";
  for (int i = 0; i < p.dimension; ++i) os << ",x_" << (i + 1);
  os << '\n';
  for (std::size_t k = 0; k < p.points(); ++k) {
    os << p.times[k];
    for (double v : p.state(k)) os << ',' << v;
    os << '\n';
  }
}

// Columns: t, qv_ij (row-major), v_ij (density of the step starting at t; empty on the last row)
inline void write_qv_csv(std::ostream& os, const QuadraticVariation& q) {
  set_csv_precision(os);
  const auto d = q.qv.front().rows();
  os << "t";
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) os << ",qv_" << (i + 1) << (j + 1);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) os << ",v_" << (i + 1) << (j + 1);
  os << '\n';
  for (std::size_t k = 0; k < q.times.size(); ++k) {
    os << q.times[k];
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) os << ',' << q.qv[k](i, j);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) {
        os << ',';
        if (k < q.density.size()) os << q.density[k](i, j);
      }
    os << '\n';
  }
}

namespace detail {

inline void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, const char* what) {
  if (!j.is_object()) throw InvalidArgument(std::string(what) + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw InvalidArgument(std::string("unknown key '") + key + "' in " + what);
  }
}

inline Matrix matrix_from_json(const json& j, int d) {
  if (j.is_number()) {
    if (d != 1) throw InvalidArgument("scalar sigma given for a multi-dimensional scenario");
    return Matrix::Constant(1, 1, j.get<double>());
  }
  if (!j.is_array() || static_cast<int>(j.size()) != d) throw InvalidArgument("sigma matrix has wrong shape");
  Matrix m(d, d);
  for (int r = 0; r < d; ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != d) throw InvalidArgument("sigma matrix has wrong shape");
    for (int c = 0; c < d; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

inline Vector vector_from_json(const json& j, int d) {
  if (j.is_number()) return Vector::Constant(d, j.get<double>());
  if (!j.is_array() || static_cast<int>(j.size()) != d) throw InvalidArgument("mu vector has wrong shape");
  Vector v(d);
  for (int i = 0; i < d; ++i) v(i) = j[i].get<double>();
  return v;
}

}  // namespace detail

// Scenario document:
//   { "T": 1.0, "n_steps": 100, "dimension": 1,  (or "times": [...])
//     "mu":    number | [per-step values],
//     "sigma": number | [per-step values] | {"matrix": [[...]]} | {"matrices": [[[...]]...]} }
inline ScenarioProcess scenario_from_json(const json& j) {
  detail::reject_unknown_keys(j, {"T", "n_steps", "times", "dimension", "mu", "sigma"}, "scenario");
  const int d = j.value("dimension", 1);
  if (d < 1) throw InvalidArgument("scenario dimension must be positive");
  ScenarioProcess s;
  if (j.contains("times")) {
    if (j.contains("T") || j.contains("n_steps")) throw InvalidArgument("give either times or T/n_steps");
    s.times = j.at("times").get<std::vector<double>>();
  } else {
    s.times = uniform_grid(j.at("T").get<double>(), j.at("n_steps").get<std::size_t>());
  }
  const std::size_t n = s.times.size() - 1;

  const json& mu = j.at("mu");
  if (mu.is_array() && d == 1) {
    if (mu.size() != n) throw InvalidArgument("mu has wrong length");
    for (const auto& m : mu) s.mu.push_back(Vector::Constant(1, m.get<double>()));
  } else if (mu.is_array() && mu.size() == n && mu[0].is_array()) {
    for (const auto& m : mu) s.mu.push_back(detail::vector_from_json(m, d));
  } else {
    s.mu.assign(n, detail::vector_from_json(mu, d));
  }

  const json& sigma = j.at("sigma");
  if (sigma.is_object()) {
    detail::reject_unknown_keys(sigma, {"matrix", "matrices"}, "sigma");
    if (sigma.contains("matrix")) {
      s.sigma.assign(n, detail::matrix_from_json(sigma.at("matrix"), d));
    } else {
      const auto& ms = sigma.at("matrices");
      if (ms.size() != n) throw InvalidArgument("sigma matrices have wrong length");
      for (const auto& m : ms) s.sigma.push_back(detail::matrix_from_json(m, d));
    }
  } else if (sigma.is_array()) {
    if (d != 1 || sigma.size() != n) throw InvalidArgument("per-step scalar sigma needs d = 1 and one value per step");
    for (const auto& v : sigma) s.sigma.push_back(Matrix::Constant(1, 1, v.get<double>()));
  } else {
    s.sigma.assign(n, detail::matrix_from_json(sigma, d));
  }
  s.check();
  return s;
}

inline ScenarioProcess load_scenario(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw InvalidArgument("cannot open scenario file " + file);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidArgument("scenario file " + file + ": " + e.what());
  }
  return scenario_from_json(j);
}

}  // namespace ambivol
