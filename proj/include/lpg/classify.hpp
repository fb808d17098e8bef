#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>

#include "lpg/errors.hpp"
#include "lpg/graphgen.hpp"
#include "lpg/loss.hpp"
#include "lpg/rng.hpp"

namespace lpg {

/// Linear classifier g(z) = sign<w, z> over the norm-constrained class
/// { w : ||w|| <= d }.
struct LinearClassifier {
  Vector w;
  int d = 0;            // dimension, also the default norm budget
  double radius = 0.0;  // the actual constraint used in training

  struct Provenance {
    std::size_t n = 0;
    std::string loss;
    std::uint64_t seed = 0;
  } trained_on;
};

/// +1 iff <w,z> > 0; ties (including w = 0) resolve to -1.
inline int classify(const LinearClassifier& c, const Vector& z) {
  if (z.size() != c.w.size())
    throw ArgumentError("classify: dimension mismatch");
  return c.w.dot(z) > 0.0 ? +1 : -1;
}

struct RiskReport {
  double phi_risk = 0.0;
  double zero_one_error = 0.0;
  std::size_t n_eval = 0;
};

inline RiskReport evaluate_risks(const LinearClassifier& c, const Matrix& Z,
                                 const Eigen::VectorXi& Y,
                                 const SurrogateLoss& loss) {
  if (Z.rows() == 0) throw ArgumentError("evaluate_risks: empty set");
  if (Z.rows() != Y.size() || Z.cols() != c.w.size())
    throw ArgumentError("evaluate_risks: shape mismatch");
  RiskReport r;
  r.n_eval = static_cast<std::size_t>(Z.rows());
  Vector margins = Z * c.w;
  double phi = 0.0;
  long wrong = 0;
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    phi += loss.value(Y[i] * margins[i]);
    int pred = margins[i] > 0.0 ? +1 : -1;
    if (pred != Y[i]) ++wrong;
  }
  r.phi_risk = phi / static_cast<double>(Z.rows());
  r.zero_one_error = static_cast<double>(wrong) / static_cast<double>(Z.rows());
  return r;
}

namespace detail {

inline double phi_objective(const Matrix& Z, const Eigen::VectorXi& Y,
                            const SurrogateLoss& loss, const Vector& w,
                            Vector* grad = nullptr) {
  Vector margins = Z * w;
  double obj = 0.0;
  Vector coeff;
  if (grad) coeff.resize(Z.rows());
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    double m = Y[i] * margins[i];
    obj += loss.value(m);
    if (grad) coeff[i] = loss.derivative(m) * Y[i];
  }
  double inv_n = 1.0 / static_cast<double>(Z.rows());
  if (grad) *grad = inv_n * (Z.transpose() * coeff);
  return obj * inv_n;
}

inline Vector project_ball(const Vector& w, double radius) {
  double nw = w.norm();
  return nw > radius ? Vector(w * (radius / nw)) : w;
}

}  // namespace detail

/// Empirical phi-risk minimization over the Euclidean ball of the given
/// radius: projected gradient descent with Armijo backtracking (constant
/// 1e-4, shrink 0.5), at most 1e5 iterations per start, from w = 0 plus
/// five random restarts. The objective is convex so the restarts only
/// guard numerical corner cases; the best start wins.
inline LinearClassifier minimize_phi_risk(const Matrix& Z,
                                          const Eigen::VectorXi& Y,
                                          const SurrogateLoss& loss,
                                          double radius = -1.0,
                                          std::uint64_t seed = 0) {
  const Eigen::Index n = Z.rows();
  const int d = static_cast<int>(Z.cols());
  if (n < 1 || d < 1) throw ArgumentError("minimize_phi_risk: empty input");
  if (Y.size() != n) throw ArgumentError("minimize_phi_risk: label mismatch");
  if (!Z.allFinite())
    throw ArgumentError("minimize_phi_risk: non-finite embedding rows");
  for (Eigen::Index i = 0; i < n; ++i)
    if (Y[i] != 1 && Y[i] != -1)
      throw ArgumentError("minimize_phi_risk: labels must be +-1");
  if (radius < 0) radius = static_cast<double>(d);
  if (!(radius > 0)) throw ArgumentError("minimize_phi_risk: radius > 0");

  constexpr int kMaxIters = 100000;
  constexpr double kArmijo = 1e-4;
  constexpr double kShrink = 0.5;
  constexpr double kGradTol = 1e-10;

  CounterRng rng(seed, stream::kOptimizer);
  std::uint64_t ctr = 0;

  auto solve_from = [&](Vector w) {
    w = detail::project_ball(w, radius);
    Vector grad(d);
    double obj = detail::phi_objective(Z, Y, loss, w, &grad);
    double step = 1.0;
    for (int it = 0; it < kMaxIters; ++it) {
      // Projected-gradient stationarity: the prox-gradient step is zero.
      Vector moved = detail::project_ball(w - grad, radius);
      if ((moved - w).norm() <= kGradTol * (1.0 + w.norm())) break;
      bool accepted = false;
      for (int bt = 0; bt < 60; ++bt) {
        Vector cand = detail::project_ball(w - step * grad, radius);
        Vector dir = cand - w;
        double cand_obj = detail::phi_objective(Z, Y, loss, cand);
        if (cand_obj <= obj + kArmijo * grad.dot(dir)) {
          w = cand;
          obj = detail::phi_objective(Z, Y, loss, w, &grad);
          step *= 2.0;  // allow the step to grow back
          accepted = true;
          break;
        }
        step *= kShrink;
      }
      if (!accepted) break;  // step underflow: at numerical stationarity
    }
    return std::make_pair(w, obj);
  };

  Vector best_w = Vector::Zero(d);
  double best_obj = std::numeric_limits<double>::infinity();
  for (int start = 0; start < 6; ++start) {
    Vector w0 = Vector::Zero(d);
    if (start > 0) {
      for (int j = 0; j < d; ++j) w0[j] = rng.gaussian(ctr++);
      w0 = detail::project_ball(w0 * (radius * rng.uniform(ctr++)), radius);
    }
    auto [w, obj] = solve_from(w0);
    if (obj < best_obj) {
      best_obj = obj;
      best_w = w;
    }
  }

  // First-order optimality: interior stationarity or active-constraint
  // alignment w = -radius * grad / ||grad||.
  Vector grad(d);
  double obj = detail::phi_objective(Z, Y, loss, best_w, &grad);
  bool interior_ok = grad.norm() <= 1e-6 * (1.0 + std::abs(obj));
  bool boundary_ok = false;
  if (!interior_ok && grad.norm() > 0) {
    Vector target = -radius * grad / grad.norm();
    boundary_ok = (best_w - target).norm() <= 1e-6 * (1.0 + radius);
  }
  if (!interior_ok && !boundary_ok)
    throw NumericalError(
        "minimize_phi_risk: optimizer did not reach first-order optimality "
        "(||grad|| = " + std::to_string(grad.norm()) +
        ", obj = " + std::to_string(obj) + ")");

  LinearClassifier c;
  c.w = best_w;
  c.d = d;
  c.radius = radius;
  c.trained_on.n = static_cast<std::size_t>(n);
  c.trained_on.loss = loss.name();
  c.trained_on.seed = seed;
  return c;
}

/// Bayes-risk estimates for a synthetic distribution with known eta(x).
struct BayesEstimate {
  double l_star = 0.0;      // E[min(eta, 1-eta)]
  double r_phi_star = 0.0;  // E[inf_a eta phi(a) + (1-eta) phi(-a)]
  std::size_t mc_samples = 0;
  double std_error = 0.0;   // MC standard error of l_star
  bool low_sample_warning = false;
};

namespace detail {

/// inf over a of eta*phi(a) + (1-eta)*phi(-a). Closed forms for squared
/// (a* = 2 eta - 1) and exponential (a* = 0.5 ln(eta/(1-eta))); golden
/// section on [-40, 40] to 1e-10 for logistic.
inline double conditional_phi_risk(const SurrogateLoss& loss, double eta) {
  switch (loss.family()) {
    case SurrogateLoss::Family::Squared:
      return 4.0 * eta * (1.0 - eta);
    case SurrogateLoss::Family::Exponential:
      return 2.0 * std::sqrt(eta * (1.0 - eta));
    case SurrogateLoss::Family::Logistic: {
      if (eta <= 0.0 || eta >= 1.0) return 0.0;
      auto f = [&](double a) {
        return eta * loss.value(a) + (1.0 - eta) * loss.value(-a);
      };
      const double phi_ratio = (std::sqrt(5.0) - 1.0) / 2.0;
      double lo = -40.0, hi = 40.0;
      double x1 = hi - phi_ratio * (hi - lo), x2 = lo + phi_ratio * (hi - lo);
      double f1 = f(x1), f2 = f(x2);
      while (hi - lo > 1e-10) {
        if (f1 < f2) {
          hi = x2; x2 = x1; f2 = f1;
          x1 = hi - phi_ratio * (hi - lo);
          f1 = f(x1);
        } else {
          lo = x1; x1 = x2; f1 = f2;
          x2 = lo + phi_ratio * (hi - lo);
          f2 = f(x2);
        }
      }
      return f(0.5 * (lo + hi));
    }
  }
  throw ArgumentError("conditional_phi_risk: unknown loss family");
}

}  // namespace detail

inline BayesEstimate bayes_oracle(const DistributionSpec& dist,
                                  const SurrogateLoss& loss, std::size_t mc,
                                  std::uint64_t seed) {
  if (mc < 1) throw ArgumentError("bayes_oracle: mc >= 1");
  CounterRng rng(seed, stream::kBayesMc);
  double sum_l = 0.0, sum_l2 = 0.0, sum_r = 0.0;
  for (std::size_t i = 0; i < mc; ++i) {
    Vector x = dist.sample_point(rng, i);
    double eta = dist.eta(x);
    double l = std::min(eta, 1.0 - eta);
    sum_l += l;
    sum_l2 += l * l;
    sum_r += detail::conditional_phi_risk(loss, eta);
  }
  BayesEstimate b;
  b.mc_samples = mc;
  double m = static_cast<double>(mc);
  b.l_star = sum_l / m;
  b.r_phi_star = sum_r / m;
  double var = std::max(sum_l2 / m - b.l_star * b.l_star, 0.0);
  b.std_error = std::sqrt(var / m);
  b.low_sample_warning = mc < 1000;
  return b;
}

}  // namespace lpg
