#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "ambivol/error.hpp"

namespace ambivol {

// Felicity u with first and second derivatives.
struct Felicity {
  std::function<double(double)> u;
  std::function<double(double)> du;
  std::function<double(double)> d2u;
  double alpha = 1.0;  // power exponent when power(), 1 for linear()

  // u(c) = c^alpha / alpha, alpha != 0, alpha <= 1.
  static Felicity power(double alpha) {
    if (alpha == 0.0 || alpha > 1.0) throw InvalidArgument("power felicity needs alpha != 0 and alpha <= 1");
    auto check = [alpha](double c) {
      if (!(c > 0.0) && (alpha < 0.0 || c < 0.0)) throw DomainError("consumption outside the felicity domain");
    };
    Felicity f;
    f.alpha = alpha;
    f.u = [alpha, check](double c) {
      check(c);
      return std::pow(c, alpha) / alpha;
    };
    f.du = [alpha, check](double c) {
      check(c);
      return std::pow(c, alpha - 1.0);
    };
    f.d2u = [alpha, check](double c) {
      check(c);
      return (alpha - 1.0) * std::pow(c, alpha - 2.0);
    };
    return f;
  }

  static Felicity linear() {
    Felicity f;
    f.alpha = 1.0;
    f.u = [](double c) { return c; };
    f.du = [](double) { return 1.0; };
    f.d2u = [](double) { return 0.0; };
    return f;
  }
};

// Generator f(c, v) of recursive utility.
//   standard:      f = u(c) - beta v
//   kreps-porteus: f = (c^rho - beta (alpha v)^(rho/alpha)) / (rho (alpha v)^((rho - alpha)/alpha)),
//                  terminal felicity u(c) = c^alpha / alpha
class Aggregator {
 public:
  enum class Kind { standard, kreps_porteus };

  static Aggregator standard(double beta, Felicity u) {
    if (!(beta >= 0.0)) throw InvalidArgument("discount beta must be nonnegative");
    Aggregator a;
    a.kind_ = Kind::standard;
    a.beta_ = beta;
    a.alpha_ = u.alpha;
    a.rho_ = u.alpha;
    a.u_ = std::move(u);
    return a;
  }

  static Aggregator standard_power(double beta, double alpha) { return standard(beta, Felicity::power(alpha)); }

  static Aggregator kreps_porteus(double beta, double alpha, double rho) {
    if (!(beta >= 0.0)) throw InvalidArgument("discount beta must be nonnegative");
    if (rho == 0.0 || rho > 1.0) throw InvalidArgument("kreps-porteus needs rho != 0 and rho <= 1");
    Aggregator a;
    a.kind_ = Kind::kreps_porteus;
    a.beta_ = beta;
    a.alpha_ = alpha;
    a.rho_ = rho;
    a.u_ = Felicity::power(alpha);
    return a;
  }

  Kind kind() const noexcept { return kind_; }
  double beta() const noexcept { return beta_; }
  double alpha() const noexcept { return alpha_; }
  double rho() const noexcept { return rho_; }
  const Felicity& felicity() const noexcept { return u_; }

  double terminal(double c) const { return u_.u(c); }
  double terminal_dc(double c) const { return u_.du(c); }

  double f(double c, double v) const {
    if (kind_ == Kind::standard) return u_.u(c) - beta_ * v;
    const double w = kp_w(v);
    return (std::pow(c, rho_) * std::pow(w, (alpha_ - rho_) / alpha_) - beta_ * w) / rho_;
  }

  double f_c(double c, double v) const {
    if (kind_ == Kind::standard) return u_.du(c);
    check_c(c);
    return std::pow(c, rho_ - 1.0) * std::pow(kp_w(v), (alpha_ - rho_) / alpha_);
  }

  double f_v(double c, double v) const {
    if (kind_ == Kind::standard) return -beta_;
    const double w = kp_w(v);
    return ((alpha_ - rho_) * std::pow(c, rho_) * std::pow(w, -rho_ / alpha_) - alpha_ * beta_) / rho_;
  }

  double f_cc(double c, double v) const {
    if (kind_ == Kind::standard) return u_.d2u(c);
    check_c(c);
    return (rho_ - 1.0) * std::pow(c, rho_ - 2.0) * std::pow(kp_w(v), (alpha_ - rho_) / alpha_);
  }

  double f_cv(double c, double v) const {
    if (kind_ == Kind::standard) return 0.0;
    check_c(c);
    return (alpha_ - rho_) * std::pow(c, rho_ - 1.0) * std::pow(kp_w(v), -rho_ / alpha_);
  }

 private:
  double kp_w(double v) const {
    const double w = alpha_ * v;
    if (!(w > 0.0)) throw DomainError("kreps-porteus aggregator needs alpha * v > 0");
    return w;
  }
  void check_c(double c) const {
    if (!(c > 0.0)) throw DomainError("consumption must be positive");
  }

  Kind kind_ = Kind::standard;
  double beta_ = 0.0;
  double alpha_ = 1.0;
  double rho_ = 1.0;
  Felicity u_ = Felicity::linear();
};

}  // namespace ambivol
