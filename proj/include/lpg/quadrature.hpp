#pragma once

#include <Eigen/Core>
#include <cmath>

#include "lpg/errors.hpp"

namespace lpg {

struct QuadratureRule {
  Eigen::VectorXd nodes;    // in [-1, 1]
  Eigen::VectorXd weights;  // sum to 2
};

/// Gauss-Legendre nodes and weights on [-1,1] by Newton iteration on the
/// Legendre recurrence. Accurate to machine precision for m up to a few
/// thousand.
inline QuadratureRule gauss_legendre(int m) {
  if (m < 1) throw ArgumentError("gauss_legendre: m >= 1 required");
  QuadratureRule q;
  q.nodes.resize(m);
  q.weights.resize(m);
  const int half = (m + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Chebyshev-based initial guess for the i-th root.
    double x = std::cos(M_PI * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= m; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = m * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    q.nodes[i] = -x;
    q.nodes[m - 1 - i] = x;
    q.weights[i] = w;
    q.weights[m - 1 - i] = w;
  }
  if (m % 2 == 1) q.nodes[m / 2] = 0.0;
  return q;
}

/// Rule mapped to [a, b]; weights sum to (b - a).
inline QuadratureRule gauss_legendre(int m, double a, double b) {
  QuadratureRule q = gauss_legendre(m);
  q.nodes = (0.5 * (b - a) * q.nodes.array() + 0.5 * (a + b)).matrix();
  q.weights *= 0.5 * (b - a);
  return q;
}

}  // namespace lpg
