#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "lpg/errors.hpp"
#include "lpg/graphgen.hpp"
#include "lpg/operator_spectrum.hpp"
#include "lpg/spectral.hpp"

namespace lpg {

/// Solution of the orthogonal Procrustes problem min_W ||Z W - T||_F.
struct AlignmentResult {
  Matrix W;                 // d x d orthogonal
  double frobenius_error = 0.0;
  Vector per_point_errors;  // ||row_i(ZW) - row_i(T)||
  bool ambiguous = false;   // Z^T T was rank deficient; W is one minimizer
};

/// Classical orthogonal Procrustes via the SVD of Z^T T. The returned W is
/// a global minimizer; when Z^T T is rank deficient the optimum is not
/// unique and `ambiguous` is set.
inline AlignmentResult procrustes_align(const Matrix& Z, const Matrix& T) {
  if (Z.rows() != T.rows() || Z.cols() != T.cols() || Z.cols() < 1)
    throw ArgumentError("procrustes_align: shape mismatch");
  Eigen::JacobiSVD<Matrix> svd(Z.transpose() * T,
                               Eigen::ComputeFullU | Eigen::ComputeFullV);
  AlignmentResult r;
  r.W = svd.matrixU() * svd.matrixV().transpose();
  double smax = svd.singularValues()[0];
  r.ambiguous =
      smax <= 0.0 ||
      svd.singularValues()[Z.cols() - 1] <= 1e-12 * std::max(smax, 1.0);
  Matrix diff = Z * r.W - T;
  r.per_point_errors = diff.rowwise().norm();
  r.frobenius_error = diff.norm();
  return r;
}

/// One empirical verification of a paper bound: measured lhs against the
/// bound rhs with all constants included.
struct BoundCheck {
  enum class Name {
    OpNorm_Prop3,
    Projection_Prop4,
    Embedding_Thm1,
    Spectra_Thm5_Eq30,
    Projector_Thm5_Eq32,
    Sparse_Thm9,
    Procrustes_Lemma3
  };

  Name name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
  double eta_or_tau = 0.0;
  bool hypothesis_met = true;  // Prop. 4 / Eq. 32 carry an n-threshold
  std::size_t n = 0;
  int d = 0;
  std::uint64_t seed = 0;

  static const char* name_string(Name m) {
    switch (m) {
      case Name::OpNorm_Prop3: return "opnorm_prop3";
      case Name::Projection_Prop4: return "projection_prop4";
      case Name::Embedding_Thm1: return "embedding_thm1";
      case Name::Spectra_Thm5_Eq30: return "spectra_thm5_eq30";
      case Name::Projector_Thm5_Eq32: return "projector_thm5_eq32";
      case Name::Sparse_Thm9: return "sparse_thm9";
      case Name::Procrustes_Lemma3: return "procrustes_lemma3";
    }
    return "?";
  }
};

/// || A - rho K || <= 2 sqrt(Delta log(n/eta)) with Delta the max degree.
inline BoundCheck check_opnorm_bound(const AdjacencyMatrix& A, const Matrix& K,
                                     double eta) {
  if (static_cast<Eigen::Index>(A.n()) != K.rows())
    throw ArgumentError("check_opnorm_bound: shape mismatch");
  if (!(eta > 0 && eta < 1))
    throw ArgumentError("check_opnorm_bound: eta in (0,1)");
  BoundCheck c;
  c.name = BoundCheck::Name::OpNorm_Prop3;
  c.n = A.n();
  c.eta_or_tau = eta;
  c.seed = A.seed();
  c.lhs = spectral_norm_sym(A.to_dense() - A.rho() * K);
  double delta = static_cast<double>(max_degree(A));
  c.rhs = 2.0 * std::sqrt(delta * std::log(static_cast<double>(A.n()) / eta));
  c.holds = c.lhs <= c.rhs;
  return c;
}

/// Frobenius error of the Procrustes-aligned embedding against the oracle
/// truncated feature map:
///   || Z W - Phi_d ||_F <= 27 delta_d^{-2} sqrt(d log(n/eta) / rho),
/// with rho = 1 in the dense regime. delta_d comes from the quadrature
/// oracle. The non-constructive W of the theorem is realized as the
/// Procrustes minimizer, which can only shrink the lhs.
inline BoundCheck check_embedding_bound(const AdjacencyMatrix& A,
                                        const FeatureMap& oracle,
                                        const Matrix& latents, int d,
                                        double eta) {
  if (oracle.dim() != d)
    throw ArgumentError("check_embedding_bound: oracle dimension mismatch");
  double delta_d = oracle.spectrum().gap(d);
  if (!(delta_d > 0))
    throw NumericalError("check_embedding_bound: degenerate gap delta_d <= 0");
  BoundCheck c;
  c.name = A.rho() < 1.0 ? BoundCheck::Name::Sparse_Thm9
                         : BoundCheck::Name::Embedding_Thm1;
  c.n = A.n();
  c.d = d;
  c.eta_or_tau = eta;
  c.seed = A.seed();
  Embedding emb = spectral_embed(A, d);
  Matrix target = oracle.rows(latents);
  c.lhs = procrustes_align(emb.rows, target).frobenius_error;
  double n = static_cast<double>(A.n());
  c.rhs = 27.0 / (delta_d * delta_d) *
          std::sqrt(d * std::log(n / eta) / A.rho());
  c.holds = c.lhs <= c.rhs;
  return c;
}

/// || P_A - P_K || <= 4 sqrt(log(n/eta) / (n delta_d^2)), valid once
/// delta_d >= 8 (1 + sqrt 2) sqrt(log(n/eta) / n). Trials where the
/// hypothesis fails are reported with hypothesis_met = false.
inline BoundCheck check_projection_bound(const SpectralDecomposition& da,
                                         const SpectralDecomposition& dk,
                                         int d, double delta_d, double eta,
                                         std::uint64_t seed = 0) {
  if (!(delta_d > 0))
    throw NumericalError("check_projection_bound: delta_d <= 0");
  BoundCheck c;
  c.name = BoundCheck::Name::Projection_Prop4;
  c.n = static_cast<std::size_t>(da.n());
  c.d = d;
  c.eta_or_tau = eta;
  c.seed = seed;
  double n = static_cast<double>(da.n());
  double logterm = std::log(n / eta);
  c.hypothesis_met =
      delta_d >= 8.0 * (1.0 + std::sqrt(2.0)) * std::sqrt(logterm / n);
  c.lhs = projection_distance(da, dk, d);
  c.rhs = 4.0 * std::sqrt(logterm / (n * delta_d * delta_d));
  c.holds = c.lhs <= c.rhs;
  return c;
}

/// l2 distance between the zero-padded sorted spectra of K/n and the
/// operator oracle: <= 2 sqrt(2) sqrt(tau / n).
inline BoundCheck check_spectra_bound(const Matrix& K,
                                      const OperatorSpectrum& oracle,
                                      double tau, std::uint64_t seed = 0) {
  const Eigen::Index n = K.rows();
  BoundCheck c;
  c.name = BoundCheck::Name::Spectra_Thm5_Eq30;
  c.n = static_cast<std::size_t>(n);
  c.eta_or_tau = tau;
  c.seed = seed;
  Eigen::SelfAdjointEigenSolver<Matrix> es(K / static_cast<double>(n),
                                           Eigen::EigenvaluesOnly);
  const Eigen::Index len = std::max<Eigen::Index>(n, oracle.rank());
  double s = 0.0;
  for (Eigen::Index j = 0; j < len; ++j) {
    double a = j < n ? std::max(es.eigenvalues()[n - 1 - j], 0.0) : 0.0;
    double b = j < oracle.rank() ? oracle.eigenvalues[j] : 0.0;
    s += (a - b) * (a - b);
  }
  c.lhs = std::sqrt(s);
  c.rhs = 2.0 * std::sqrt(2.0) * std::sqrt(tau / static_cast<double>(n));
  c.holds = c.lhs <= c.rhs;
  return c;
}

/// RKHS projector distance || P_d - Phat_d ||_HS between the oracle top-d
/// eigenfunction subspace and the span of the empirical Nystrom extensions:
///   <= 2 sqrt(2 tau) / ((lambda_d - lambda_{d+1}) sqrt(n)),
/// valid once 4 sqrt(2 tau / n) < lambda_d - lambda_{d+1}. Both projectors
/// have HS norm sqrt(d) and the cross term reduces to kernel evaluations:
/// <phi_j, vhat_s>_H = (1/sqrt(lamhat_s n)) sum_i sqrt(lambda_j)
/// psi_j(X_i) uhat_si, the 1/sqrt(n) normalizing vhat_s to unit RKHS norm.
inline BoundCheck check_projector_bound(const FeatureMap& oracle,
                                        const EmpiricalNystrom& nystrom,
                                        const Matrix& latents, int d,
                                        double tau, std::uint64_t seed = 0) {
  const Eigen::Index n = latents.rows();
  if (d < 1 || d > oracle.dim())
    throw ArgumentError("check_projector_bound: bad d");
  BoundCheck c;
  c.name = BoundCheck::Name::Projector_Thm5_Eq32;
  c.n = static_cast<std::size_t>(n);
  c.d = d;
  c.eta_or_tau = tau;
  c.seed = seed;
  // Phi_d rows give sqrt(lambda_j) psi_j(X_i).
  Matrix phi = oracle.rows(latents);  // n x >= d
  double cross = 0.0;
  for (int s = 0; s < d; ++s) {
    double lam_s = nystrom.eigenvalues()[s];
    for (int j = 0; j < d; ++j) {
      double ip = phi.col(j).dot(nystrom.eigenvectors().col(s)) /
                  std::sqrt(lam_s * static_cast<double>(n));
      cross += ip * ip;
    }
  }
  double hs2 = std::max(2.0 * d - 2.0 * cross, 0.0);
  c.lhs = std::sqrt(hs2);
  double gap = oracle.spectrum().gap(d);
  c.hypothesis_met =
      gap > 0 && 4.0 * std::sqrt(2.0) * std::sqrt(tau / static_cast<double>(n)) < gap;
  c.rhs = 2.0 * std::sqrt(2.0) * std::sqrt(tau) /
          (gap * std::sqrt(static_cast<double>(n)));
  c.holds = c.lhs <= c.rhs;
  return c;
}

/// Deterministic Procrustes perturbation bound for rank-d PSD matrices:
///   min_W || X W - Y ||_F <= ||A - B|| (sqrt(d ||A||) + sqrt(d ||B||)) / delta
/// with X X^T = A, Y Y^T = B and delta the smallest nonzero eigenvalue of B.
inline BoundCheck check_procrustes_lemma(const Matrix& A_psd,
                                         const Matrix& B_psd, int d) {
  auto factor = [d](const Matrix& M, const char* which) {
    SpectralDecomposition dec = eigendecompose(M);
    const double lam1 = std::max(dec.eigenvalues[0], 0.0);
    double tol = 1e-9 * std::max(lam1, 1.0);
    if (d > dec.k() || !(dec.eigenvalues[d - 1] > tol) ||
        (d < dec.k() && dec.eigenvalues[d] > tol))
      throw ArgumentError(std::string("check_procrustes_lemma: ") + which +
                          " does not have rank exactly d");
    Matrix X = dec.eigenvectors.leftCols(d) *
               dec.eigenvalues.head(d).cwiseSqrt().asDiagonal();
    return std::make_pair(X, dec.eigenvalues[d - 1]);
  };
  auto [X, lamdA] = factor(A_psd, "A");
  auto [Y, delta] = factor(B_psd, "B");
  BoundCheck c;
  c.name = BoundCheck::Name::Procrustes_Lemma3;
  c.n = static_cast<std::size_t>(A_psd.rows());
  c.d = d;
  c.lhs = procrustes_align(X, Y).frobenius_error;
  double normR = spectral_norm_sym(A_psd - B_psd);
  double normA = spectral_norm_sym(A_psd);
  double normB = spectral_norm_sym(B_psd);
  c.rhs = normR * (std::sqrt(d * normA) + std::sqrt(d * normB)) / delta;
  c.holds = c.lhs <= c.rhs + 1e-12;
  return c;
}

}  // namespace lpg
