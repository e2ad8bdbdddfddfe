#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace chemotaxis_lab {

enum class RegularizationKind { Identity, Logarithmic, Rational };

inline std::string to_string(RegularizationKind kind) {
  switch (kind) {
    case RegularizationKind::Identity: return "identity";
    case RegularizationKind::Logarithmic: return "logarithmic";
    case RegularizationKind::Rational: return "rational";
  }
  return "unknown";
}

template <typename Scalar>
struct RatioBounds {
  Scalar first;   // s F'(s)^2 / F(s), in (0, 1]
  Scalar second;  // s^3 (F'(s) F''(s))^2 / F(s), in [0, 4]
};

/// Saturating nonlinearity applied to the population densities.
///
///   Identity      F(s) = s
///   Logarithmic   F(s) = ln(1 + eps s) / eps
///   Rational      F(s) = s / (1 + eps s)
///
/// Both non-identity variants satisfy F(0) = 0, 0 < F' <= 1, s F' <= 1/eps
/// and 0 <= -s F'' <= 2, and tend to the identity as eps -> 0.
template <typename Scalar>
class Regularization {
 public:
  Regularization() = default;

  static Regularization identity() { return Regularization(); }
  static Regularization logarithmic(Scalar eps) { return Regularization(RegularizationKind::Logarithmic, eps); }
  static Regularization rational(Scalar eps) { return Regularization(RegularizationKind::Rational, eps); }

  Regularization(RegularizationKind kind, Scalar eps) : kind_(kind), eps_(eps) {
    if (kind != RegularizationKind::Identity && !(eps > Scalar(0) && eps < Scalar(1)))
      throw std::invalid_argument("regularization epsilon must lie in (0, 1)");
    if (kind == RegularizationKind::Identity) eps_ = Scalar(0);
  }

  RegularizationKind kind() const { return kind_; }
  Scalar epsilon() const { return eps_; }
  bool is_identity() const { return kind_ == RegularizationKind::Identity; }

  Scalar value(Scalar s) const {
    check(s);
    switch (kind_) {
      case RegularizationKind::Identity: return s;
      // log1p keeps F(s) <= s intact in floating point
      case RegularizationKind::Logarithmic: return std::min(s, std::log1p(eps_ * s) / eps_);
      case RegularizationKind::Rational: return s / (Scalar(1) + eps_ * s);
    }
    return s;
  }

  Scalar prime(Scalar s) const {
    check(s);
    const Scalar q = Scalar(1) + eps_ * s;
    switch (kind_) {
      case RegularizationKind::Identity: return Scalar(1);
      case RegularizationKind::Logarithmic: return Scalar(1) / q;
      case RegularizationKind::Rational: return Scalar(1) / (q * q);
    }
    return Scalar(1);
  }

  Scalar second(Scalar s) const {
    check(s);
    const Scalar q = Scalar(1) + eps_ * s;
    switch (kind_) {
      case RegularizationKind::Identity: return Scalar(0);
      case RegularizationKind::Logarithmic: return -eps_ / (q * q);
      case RegularizationKind::Rational: return Scalar(-2) * eps_ / (q * q * q);
    }
    return Scalar(0);
  }

  /// Closed forms of the two ratios; the Logarithmic forms are written in
  /// x = eps s so that s -> 0 does not cancel catastrophically.
  RatioBounds<Scalar> ratios(Scalar s) const {
    if (!(s > Scalar(0))) throw std::domain_error("ratio bounds need s > 0");
    if (is_identity()) throw std::invalid_argument("ratio bounds are undefined for the identity variant");
    const Scalar x = eps_ * s;
    const Scalar q = Scalar(1) + x;
    if (kind_ == RegularizationKind::Logarithmic) {
      const Scalar l = std::log1p(x);
      const Scalar q2 = q * q;
      return {x / (q2 * l), x * x * x / (q2 * q2 * q2 * l)};
    }
    const Scalar q3 = q * q * q;
    return {Scalar(1) / q3, Scalar(4) * x * x / (q3 * q3 * q3)};
  }

  template <typename Derived>
  auto value(const Eigen::ArrayBase<Derived>& s) const {
    return s.unaryExpr([this](Scalar x) { return value(x); });
  }

  template <typename Derived>
  auto prime(const Eigen::ArrayBase<Derived>& s) const {
    return s.unaryExpr([this](Scalar x) { return prime(x); });
  }

 private:
  static void check(Scalar s) {
    if (s < Scalar(0)) throw std::domain_error("regularization evaluated at negative argument");
  }

  RegularizationKind kind_ = RegularizationKind::Identity;
  Scalar eps_ = Scalar(0);
};

using Regularizationd = Regularization<double>;

}  // namespace chemotaxis_lab
