#pragma once

#include <Eigen/Dense>
#include <functional>

#include "lpg/errors.hpp"
#include "lpg/rng.hpp"

namespace lpg {

/// Top-k algebraically largest eigenpairs of a symmetric operator given
/// only by its matvec, via Lanczos with full reorthogonalization.
/// Restarts with a fresh deflated vector on Krylov breakdown, so low-rank
/// and highly degenerate spectra are handled; the basis is doubled until
/// every requested Ritz pair meets the residual tolerance. Deterministic
/// for fixed inputs: the start vectors come from a counter-based stream.
struct LanczosResult {
  Eigen::VectorXd eigenvalues;  // k, descending
  Eigen::MatrixXd eigenvectors; // n x k, orthonormal
};

namespace detail {

struct LanczosAttempt {
  LanczosResult res;
  double worst_residual = 0.0;  // relative to the operator-norm estimate
};

inline LanczosAttempt lanczos_attempt(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& matvec,
    Eigen::Index n, int k, int max_basis) {
  CounterRng rng(0x6c616e637a6f73ULL, 0);
  Eigen::MatrixXd V(n, max_basis);
  Eigen::VectorXd alpha(max_basis), beta(max_basis);
  std::uint64_t ctr = 0;

  auto fresh_vector = [&](int m) {
    // Random vector orthogonalized against the current basis.
    for (int attempt = 0; attempt < 64; ++attempt) {
      Eigen::VectorXd v(n);
      for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.gaussian(ctr++);
      for (int pass = 0; pass < 2; ++pass)
        if (m > 0) v -= V.leftCols(m) * (V.leftCols(m).transpose() * v);
      double nv = v.norm();
      if (nv > 1e-8 * std::sqrt(static_cast<double>(n)))
        return Eigen::VectorXd(v / nv);
    }
    throw NumericalError("lanczos_topk: could not generate a basis vector");
  };

  double norm_est = 0.0;
  int m = 0;
  V.col(0) = fresh_vector(0);
  double beta_prev = 0.0;
  Eigen::VectorXd v_prev = Eigen::VectorXd::Zero(n);
  int block_start = 0;

  for (m = 0; m < max_basis; ++m) {
    Eigen::VectorXd w = matvec(V.col(m));
    alpha[m] = V.col(m).dot(w);
    w -= alpha[m] * V.col(m);
    if (m > block_start) w -= beta_prev * v_prev;
    // Full reorthogonalization, two passes.
    for (int pass = 0; pass < 2; ++pass)
      w -= V.leftCols(m + 1) * (V.leftCols(m + 1).transpose() * w);
    double b = w.norm();
    norm_est = std::max(norm_est, std::abs(alpha[m]) + b + beta_prev);
    if (m + 1 == max_basis) {
      beta[m] = 0.0;
      break;
    }
    if (b <= 1e-12 * std::max(norm_est, 1.0)) {
      // Breakdown: close this block and restart with a deflated vector.
      beta[m] = 0.0;
      block_start = m + 1;
      V.col(m + 1) = fresh_vector(m + 1);
      beta_prev = 0.0;
      v_prev.setZero();
    } else {
      beta[m] = b;
      v_prev = V.col(m);
      beta_prev = b;
      V.col(m + 1) = w / b;
    }
  }
  const int mdim = std::min(m + 1, max_basis);

  // Assemble the (block-)tridiagonal matrix and diagonalize it.
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(mdim, mdim);
  for (int i = 0; i < mdim; ++i) {
    T(i, i) = alpha[i];
    if (i + 1 < mdim && beta[i] != 0.0) {
      T(i, i + 1) = beta[i];
      T(i + 1, i) = beta[i];
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  if (es.info() != Eigen::Success)
    throw NumericalError("lanczos_topk: tridiagonal solve failed");

  LanczosAttempt out;
  out.res.eigenvalues.resize(k);
  out.res.eigenvectors.resize(n, k);
  for (int j = 0; j < k; ++j) {
    out.res.eigenvalues[j] = es.eigenvalues()[mdim - 1 - j];
    out.res.eigenvectors.col(j) =
        V.leftCols(mdim) * es.eigenvectors().col(mdim - 1 - j);
    out.res.eigenvectors.col(j).normalize();
  }
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXd r = matvec(out.res.eigenvectors.col(j)) -
                        out.res.eigenvalues[j] * out.res.eigenvectors.col(j);
    out.worst_residual =
        std::max(out.worst_residual, r.norm() / std::max(norm_est, 1.0));
  }
  return out;
}

}  // namespace detail

inline LanczosResult lanczos_topk(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& matvec,
    Eigen::Index n, int k, double tol = 1e-10, int max_basis = -1) {
  if (k < 1 || k > n) throw ArgumentError("lanczos_topk: bad k");
  if (max_basis < 0)
    max_basis = static_cast<int>(
        std::min<Eigen::Index>(n, std::max(4 * k + 48, 96)));
  max_basis = static_cast<int>(std::min<Eigen::Index>(max_basis, n));

  // Grow the basis until the requested pairs converge; at basis = n the
  // tridiagonalization is exact, so the loop terminates.
  for (;;) {
    detail::LanczosAttempt a = detail::lanczos_attempt(matvec, n, k, max_basis);
    if (a.worst_residual <= 100 * tol) return a.res;
    if (max_basis >= n)
      throw NumericalError(
          "lanczos_topk: Ritz pair did not converge to tolerance");
    max_basis = static_cast<int>(
        std::min<Eigen::Index>(n, 2 * static_cast<Eigen::Index>(max_basis)));
  }
}

}  // namespace lpg
