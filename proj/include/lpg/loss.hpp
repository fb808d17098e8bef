#pragma once

#include <cmath>
#include <string>

#include "lpg/errors.hpp"

namespace lpg {

/// Convex differentiable surrogate for 0-1 loss with phi'(0) < 0
/// (classification-calibrated). The logistic loss is in base 2.
class SurrogateLoss {
public:
  enum class Family { Squared, Exponential, Logistic };

  explicit SurrogateLoss(Family f) : family_(f) {}

  static SurrogateLoss squared() { return SurrogateLoss(Family::Squared); }
  static SurrogateLoss exponential() {
    return SurrogateLoss(Family::Exponential);
  }
  static SurrogateLoss logistic() { return SurrogateLoss(Family::Logistic); }

  static SurrogateLoss parse(const std::string& name) {
    if (name == "squared") return squared();
    if (name == "exponential") return exponential();
    if (name == "logistic") return logistic();
    throw ConfigError("unknown loss family: " + name);
  }

  Family family() const { return family_; }

  const char* name() const {
    switch (family_) {
      case Family::Squared: return "squared";
      case Family::Exponential: return "exponential";
      case Family::Logistic: return "logistic";
    }
    return "?";
  }

  double value(double x) const {
    switch (family_) {
      case Family::Squared: {
        double t = 1.0 - x;
        return t * t;
      }
      case Family::Exponential:
        return std::exp(-x);
      case Family::Logistic:
        // log2(1 + e^{-x}), stable for large |x|.
        return std::log1p(std::exp(-std::abs(x))) / kLn2 +
               (x < 0 ? -x / kLn2 : 0.0);
    }
    return 0.0;
  }

  double derivative(double x) const {
    switch (family_) {
      case Family::Squared:
        return -2.0 * (1.0 - x);
      case Family::Exponential:
        return -std::exp(-x);
      case Family::Logistic:
        // -(1/ln 2) * sigmoid(-x)
        return -1.0 / (kLn2 * (1.0 + std::exp(x)));
    }
    return 0.0;
  }

private:
  static constexpr double kLn2 = 0.6931471805599453;
  Family family_;
};

/// Lipschitz constant C_d = max(|phi'(-d)|, |phi'(d)|) for arguments in
/// [-d, d]. Absolute values are taken: for decreasing losses both
/// derivatives are negative and the constant is used as a Lipschitz bound.
inline double surrogate_loss_constant(const SurrogateLoss& loss, double d) {
  if (d < 0) throw ArgumentError("surrogate_loss_constant: d must be >= 0");
  return std::max(std::abs(loss.derivative(-d)),
                  std::abs(loss.derivative(d)));
}

}  // namespace lpg
