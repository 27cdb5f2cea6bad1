#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "ambivol/error.hpp"

namespace ambivol {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// The set Gamma of admissible volatilities: an interval [sigma_lo, sigma_hi]
// in one dimension, or the convex hull of a finite family of d x d matrices.
class VolatilitySet {
 public:
  enum class Kind { interval, matrix_family };

  static VolatilitySet interval(double sigma_lo, double sigma_hi) {
    if (!(sigma_lo > 0.0) || !(sigma_hi >= sigma_lo) || !std::isfinite(sigma_hi)) {
      throw InvalidArgument("volatility interval requires 0 < sigma_lo <= sigma_hi");
    }
    VolatilitySet g;
    g.kind_ = Kind::interval;
    g.lo_ = sigma_lo;
    g.hi_ = sigma_hi;
    g.dim_ = 1;
    g.a_hat_ = Matrix::Constant(1, 1, sigma_lo * sigma_lo);
    return g;
  }

  // Every candidate must satisfy sigma sigma^T >= a_hat (a_hat positive definite).
  static VolatilitySet matrix_family(std::vector<Matrix> candidates, Matrix a_hat) {
    if (candidates.empty()) throw InvalidArgument("matrix-family volatility set needs candidates");
    const auto d = candidates.front().rows();
    if (a_hat.rows() != d || a_hat.cols() != d) throw InvalidArgument("a_hat has wrong shape");
    Eigen::SelfAdjointEigenSolver<Matrix> es_a(a_hat);
    if (es_a.eigenvalues().minCoeff() <= 0.0) throw InvalidArgument("a_hat must be positive definite");
    for (const auto& c : candidates) {
      if (c.rows() != d || c.cols() != d) throw InvalidArgument("candidate has wrong shape");
      if (!c.allFinite()) throw InvalidArgument("candidate is not finite");
      if (!dominates(c * c.transpose(), a_hat)) {
        throw InvalidArgument("candidate violates sigma sigma^T >= a_hat");
      }
    }
    VolatilitySet g;
    g.kind_ = Kind::matrix_family;
    g.dim_ = static_cast<int>(d);
    g.candidates_ = std::move(candidates);
    g.a_hat_ = std::move(a_hat);
    g.lo_ = std::numeric_limits<double>::quiet_NaN();
    g.hi_ = std::numeric_limits<double>::quiet_NaN();
    return g;
  }

  Kind kind() const noexcept { return kind_; }
  int dimension() const noexcept { return dim_; }
  double sigma_lo() const { return require_interval().lo_; }
  double sigma_hi() const { return require_interval().hi_; }
  const Matrix& a_hat() const noexcept { return a_hat_; }
  bool degenerate() const { return kind_ == Kind::interval && lo_ == hi_; }

  // Extreme points: interval endpoints as 1x1 matrices, or the candidates.
  std::vector<Matrix> extreme_points() const {
    if (kind_ == Kind::interval) {
      return {Matrix::Constant(1, 1, lo_), Matrix::Constant(1, 1, hi_)};
    }
    return candidates_;
  }

  bool contains(double sigma, double tol = 1e-12) const {
    if (kind_ != Kind::interval) return contains(Matrix::Constant(1, 1, sigma), tol);
    return sigma >= lo_ - tol && sigma <= hi_ + tol;
  }

  bool contains(const Matrix& sigma, double tol = 1e-8) const {
    if (sigma.rows() != dim_ || sigma.cols() != dim_ || !sigma.allFinite()) return false;
    if (kind_ == Kind::interval) return contains(sigma(0, 0), tol);
    if (!dominates(sigma * sigma.transpose(), a_hat_, tol)) return false;
    return hull_residual(sigma) <= tol;
  }

  // Range of tr(sigma sigma^T a a^T) over Gamma, attained at extreme points.
  std::pair<double, double> trace_range(const Vector& a) const {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& c : extreme_points()) {
      const double v = (a.transpose() * c * c.transpose() * a)(0, 0);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return {lo, hi};
  }

  // Range of tr(sigma sigma^T) over Gamma.
  std::pair<double, double> trace_range() const {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& c : extreme_points()) {
      const double v = (c * c.transpose()).trace();
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return {lo, hi};
  }

 private:
  const VolatilitySet& require_interval() const {
    if (kind_ != Kind::interval) throw InvalidArgument("sigma bounds are defined for interval sets only");
    return *this;
  }

  static bool dominates(const Matrix& v, const Matrix& a, double tol = 1e-12) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(v - a);
    return es.eigenvalues().minCoeff() >= -tol;
  }

  // Distance from sigma to the convex hull of the candidates (Frobenius),
  // by projected gradient on the simplex of convex weights.
  double hull_residual(const Matrix& sigma) const {
    const auto m = candidates_.size();
    const auto n = sigma.size();
    Matrix basis(n, static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
      basis.col(static_cast<Eigen::Index>(i)) = candidates_[i].reshaped();
    }
    const Vector target = sigma.reshaped();
    const Matrix gram = basis.transpose() * basis;
    const double lip = std::max(gram.norm(), 1e-300);
    Vector w = Vector::Constant(static_cast<Eigen::Index>(m), 1.0 / static_cast<double>(m));
    for (int it = 0; it < 20000; ++it) {
      const Vector grad = basis.transpose() * (basis * w - target);
      Vector next = project_simplex(w - grad / lip);
      const double moved = (next - w).norm();
      w = std::move(next);
      if (moved < 1e-14) break;
    }
    return (basis * w - target).norm();
  }

  static Vector project_simplex(const Vector& y) {
    std::vector<double> u(y.data(), y.data() + y.size());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumsum = 0.0;
    double theta = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      cumsum += u[i];
      const double t = (cumsum - 1.0) / static_cast<double>(i + 1);
      if (u[i] - t > 0.0) theta = t;
    }
    return (y.array() - theta).max(0.0).matrix();
  }

  Kind kind_ = Kind::interval;
  double lo_ = 1.0;
  double hi_ = 1.0;
  int dim_ = 1;
  std::vector<Matrix> candidates_;
  Matrix a_hat_;
};

}  // namespace ambivol
