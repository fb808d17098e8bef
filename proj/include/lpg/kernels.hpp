#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>

#include "lpg/domain.hpp"
#include "lpg/errors.hpp"

namespace lpg {

/// A continuous positive definite link function, normalized so that its
/// range on the given domain is contained in [0,1]. The exponential and
/// binomial families exceed 1 on general domains, so each spec carries a
/// scale factor 1/sup(kappa) computed analytically per family and domain;
/// positive scaling preserves both positive definiteness and universality.
class KernelSpec {
public:
  enum class Family {
    Gaussian,            // exp(-|x-y|^2 / sigma^2)
    Exponential,         // exp(<x,y>)
    Binomial,            // (1 - <x,y>)^(-alpha)
    InverseMultiquadric, // (c^2 + |x-y|^2)^(-beta)
    DotProduct           // <x,y>
  };

  static KernelSpec gaussian(double sigma, LatentDomain domain) {
    if (!(sigma > 0)) throw ConfigError("gaussian kernel requires sigma > 0");
    KernelSpec s(Family::Gaussian, std::move(domain));
    s.sigma_ = sigma;
    s.scale_ = 1.0;  // already in (0,1]
    return s;
  }

  static KernelSpec exponential(LatentDomain domain) {
    KernelSpec s(Family::Exponential, std::move(domain));
    double m = s.domain_.sup_inner_product();
    if (m > 700.0)
      throw ConfigError("exponential kernel overflows on this domain");
    s.scale_ = std::exp(-m);
    return s;
  }

  static KernelSpec binomial(double alpha, LatentDomain domain) {
    if (!(alpha > 0)) throw ConfigError("binomial kernel requires alpha > 0");
    KernelSpec s(Family::Binomial, std::move(domain));
    double m = s.domain_.sup_inner_product();
    if (m >= 1.0)
      throw ConfigError(
          "binomial kernel requires sup <x,y> < 1 on the domain");
    s.alpha_ = alpha;
    s.scale_ = std::pow(1.0 - m, alpha);
    return s;
  }

  static KernelSpec inverse_multiquadric(double c, double beta,
                                         LatentDomain domain) {
    if (!(c > 0) || !(beta > 0))
      throw ConfigError("inverse multiquadric requires c > 0 and beta > 0");
    KernelSpec s(Family::InverseMultiquadric, std::move(domain));
    s.c_ = c;
    s.beta_ = beta;
    s.scale_ = std::pow(c * c, beta);
    return s;
  }

  static KernelSpec dot_product(LatentDomain domain) {
    KernelSpec s(Family::DotProduct, std::move(domain));
    if (s.domain_.inf_inner_product() < 0.0)
      throw ConfigError(
          "dot product kernel requires nonnegative <x,y> on the domain");
    double m = s.domain_.sup_inner_product();
    if (!(m > 0))
      throw ConfigError("dot product kernel requires sup <x,y> > 0");
    s.scale_ = 1.0 / m;
    return s;
  }

  Family family() const { return family_; }
  const LatentDomain& domain() const { return domain_; }
  double normalization() const { return scale_; }

  /// Raw (unnormalized) kernel value; no domain check.
  double raw(const Vector& x, const Vector& y) const {
    switch (family_) {
      case Family::Gaussian:
        return std::exp(-(x - y).squaredNorm() / (sigma_ * sigma_));
      case Family::Exponential:
        return std::exp(x.dot(y));
      case Family::Binomial:
        return std::pow(1.0 - x.dot(y), -alpha_);
      case Family::InverseMultiquadric:
        return std::pow(c_ * c_ + (x - y).squaredNorm(), -beta_);
      case Family::DotProduct:
        return x.dot(y);
    }
    return 0.0;
  }

  /// Normalized kernel value in [0,1]. Throws on out-of-domain points.
  double eval(const Vector& x, const Vector& y) const {
    if (!domain_.contains(x) || !domain_.contains(y))
      throw ArgumentError("kernel_eval: point outside the kernel domain");
    double v = scale_ * raw(x, y);
    // Guard against last-ulp overshoot only.
    if (v > 1.0 && v < 1.0 + 1e-12) v = 1.0;
    if (v < 0.0 && v > -1e-12) v = 0.0;
    return v;
  }

private:
  KernelSpec(Family f, LatentDomain d) : family_(f), domain_(std::move(d)) {}

  Family family_;
  LatentDomain domain_;
  double scale_ = 1.0;
  double sigma_ = 1.0;
  double alpha_ = 1.0;
  double c_ = 1.0;
  double beta_ = 1.0;
};

/// Symmetric kernel matrix K = (kappa(X_i, X_j)); points are rows of `pts`.
inline Matrix kernel_matrix(const KernelSpec& spec, const Matrix& pts) {
  const Eigen::Index n = pts.rows();
  if (n < 1) throw ArgumentError("kernel_matrix: empty point list");
  Matrix K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = spec.eval(pts.row(i), pts.row(i));
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double v = spec.eval(pts.row(i), pts.row(j));
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

/// Cross-kernel block k(x, X_j) for a single point against many.
inline Vector kernel_row(const KernelSpec& spec, const Vector& x,
                         const Matrix& pts) {
  Vector r(pts.rows());
  for (Eigen::Index j = 0; j < pts.rows(); ++j)
    r[j] = spec.eval(x, pts.row(j));
  return r;
}

}  // namespace lpg
