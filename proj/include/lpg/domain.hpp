#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>

#include "lpg/errors.hpp"

namespace lpg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Compact latent space the kernel lives on. Points are column vectors;
/// an Interval is the one-dimensional case.
class LatentDomain {
public:
  enum class Kind { Interval, Box, Sphere };

  static LatentDomain interval(double a, double b) {
    if (!(std::isfinite(a) && std::isfinite(b)) || !(a < b))
      throw ConfigError("interval domain requires finite a < b");
    LatentDomain d;
    d.kind_ = Kind::Interval;
    d.lower_ = Vector::Constant(1, a);
    d.upper_ = Vector::Constant(1, b);
    return d;
  }

  static LatentDomain box(const Vector& lower, const Vector& upper) {
    if (lower.size() != upper.size() || lower.size() == 0)
      throw ConfigError("box domain requires matching nonempty bounds");
    for (Eigen::Index k = 0; k < lower.size(); ++k)
      if (!(std::isfinite(lower[k]) && std::isfinite(upper[k]) &&
            lower[k] < upper[k]))
        throw ConfigError("box domain requires finite lower < upper per axis");
    LatentDomain d;
    d.kind_ = Kind::Box;
    d.lower_ = lower;
    d.upper_ = upper;
    return d;
  }

  static LatentDomain sphere(int dim) {
    if (dim < 2) throw ConfigError("sphere domain requires dim >= 2");
    LatentDomain d;
    d.kind_ = Kind::Sphere;
    d.lower_ = Vector::Constant(dim, -1.0);
    d.upper_ = Vector::Constant(dim, 1.0);
    return d;
  }

  Kind kind() const { return kind_; }
  int dim() const { return static_cast<int>(lower_.size()); }
  double a() const { return lower_[0]; }
  double b() const { return upper_[0]; }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }

  bool contains(const Vector& x, double tol = 1e-9) const {
    if (x.size() != lower_.size()) return false;
    if (kind_ == Kind::Sphere)
      return std::abs(x.norm() - 1.0) <= tol;
    for (Eigen::Index k = 0; k < x.size(); ++k)
      if (x[k] < lower_[k] - tol || x[k] > upper_[k] + tol) return false;
    return true;
  }

  /// sup of <x,y> over the domain; used by kernel normalization.
  double sup_inner_product() const {
    if (kind_ == Kind::Sphere) return 1.0;
    double s = 0.0;
    for (Eigen::Index k = 0; k < lower_.size(); ++k)
      s += std::max(lower_[k] * lower_[k], upper_[k] * upper_[k]);
    return s;
  }

  /// inf of <x,y> over the domain.
  double inf_inner_product() const {
    if (kind_ == Kind::Sphere) return -1.0;
    double s = 0.0;
    for (Eigen::Index k = 0; k < lower_.size(); ++k) {
      double lo = lower_[k], hi = upper_[k];
      s += std::min({lo * lo, hi * hi, lo * hi});
    }
    return s;
  }

private:
  LatentDomain() = default;
  Kind kind_ = Kind::Interval;
  Vector lower_;
  Vector upper_;
};

}  // namespace lpg
