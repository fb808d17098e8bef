#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "lpg/graphgen.hpp"
#include "lpg/kernels.hpp"
#include "lpg/quadrature.hpp"

namespace lpg {

/// Quadrature approximation of the eigenpairs (lambda_j, psi_j) of the
/// integral operator f -> int kappa(., x') f(x') dF(x'). This is the
/// brute-force ground truth the estimated embeddings are compared against;
/// it is not part of the classified pipeline.
struct OperatorSpectrum {
  Matrix nodes;        // m x dim quadrature points
  Vector weights;      // m, sum to 1 (weights of F)
  Vector eigenvalues;  // d_max, non-increasing, >= 0
  Matrix eigenfunctions;  // m x d_max, psi_j at the nodes, unit L2(F) norm

  int rank() const { return static_cast<int>(eigenvalues.size()); }

  /// Spectral gap delta_d = lambda_d - lambda_{d+1} (1-indexed d).
  double gap(int d) const {
    if (d < 1 || d >= rank())
      throw ArgumentError("OperatorSpectrum::gap: d out of range");
    return eigenvalues[d - 1] - eigenvalues[d];
  }
};

namespace detail {

/// Quadrature rule for the latent law F: nodes in the domain and weights
/// summing to one.
inline void quadrature_for(const DistributionSpec& dist, int m, Matrix& nodes,
                           Vector& weights) {
  const LatentDomain& dom = dist.domain();
  if (dist.latent_law() == DistributionSpec::LatentLaw::TwoPointMasses) {
    nodes.resize(2, dom.dim());
    nodes.row(0) = dist.atom1().transpose();
    nodes.row(1) = dist.atom2().transpose();
    weights.resize(2);
    weights << dist.atom_probability(), 1.0 - dist.atom_probability();
    return;
  }
  if (dom.kind() == LatentDomain::Kind::Sphere)
    throw ConfigError("operator_spectrum: sphere domains are not supported");
  if (dom.kind() == LatentDomain::Kind::Interval) {
    QuadratureRule q = gauss_legendre(m, dom.a(), dom.b());
    nodes.resize(m, 1);
    weights.resize(m);
    for (int k = 0; k < m; ++k) {
      nodes(k, 0) = q.nodes[k];
      weights[k] = q.weights[k] * dist.density(nodes.row(k).transpose());
    }
  } else {  // Box: tensorized per-axis rule
    const int dim = dom.dim();
    QuadratureRule q1 = gauss_legendre(m);
    long total = 1;
    for (int k = 0; k < dim; ++k) total *= m;
    nodes.resize(total, dim);
    weights.resize(total);
    for (long idx = 0; idx < total; ++idx) {
      long rem = idx;
      double w = 1.0;
      for (int k = 0; k < dim; ++k) {
        int ik = static_cast<int>(rem % m);
        rem /= m;
        double a = dom.lower()[k], b = dom.upper()[k];
        nodes(idx, k) = 0.5 * (b - a) * q1.nodes[ik] + 0.5 * (a + b);
        w *= 0.5 * (b - a) * q1.weights[ik];
      }
      weights[idx] = w * dist.density(nodes.row(idx).transpose());
    }
  }
  double s = weights.sum();
  if (std::abs(s - 1.0) > 1e-6)
    throw ConfigError("operator_spectrum: quadrature weights sum to " +
                      std::to_string(s) + ", expected 1");
  weights /= s;
}

/// Fix eigenfunction sign: largest-magnitude nodal value positive.
inline void fix_sign(Eigen::Ref<Vector> psi) {
  Eigen::Index imax = 0;
  psi.cwiseAbs().maxCoeff(&imax);
  if (psi[imax] < 0) psi = -psi;
}

}  // namespace detail

/// Discretize the integral operator on an m-point quadrature rule for F and
/// eigendecompose the symmetrized matrix W^{1/2} K W^{1/2}. Eigenvalues
/// below 1e-12 relative to lambda_1 are clamped to zero.
inline OperatorSpectrum operator_spectrum(const KernelSpec& spec,
                                          const DistributionSpec& dist, int m,
                                          int d_max) {
  if (d_max < 1) throw ArgumentError("operator_spectrum: d_max >= 1");
  OperatorSpectrum os;
  detail::quadrature_for(dist, m, os.nodes, os.weights);
  const Eigen::Index mm = os.nodes.rows();
  if (mm < d_max)
    throw ArgumentError("operator_spectrum: m >= d_max required");
  Matrix K = kernel_matrix(spec, os.nodes);
  Vector sw = os.weights.cwiseSqrt();
  Matrix B = sw.asDiagonal() * K * sw.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> es(B);
  if (es.info() != Eigen::Success)
    throw NumericalError("operator_spectrum: eigensolver failed");
  os.eigenvalues.resize(d_max);
  os.eigenfunctions.resize(mm, d_max);
  const double lam1 = es.eigenvalues()[mm - 1];
  const double floor = 1e-12 * std::max(lam1, 0.0);
  for (int j = 0; j < d_max; ++j) {
    double lam = es.eigenvalues()[mm - 1 - j];
    os.eigenvalues[j] = lam < floor ? 0.0 : lam;
    os.eigenfunctions.col(j) =
        es.eigenvectors().col(mm - 1 - j).cwiseQuotient(sw);
    detail::fix_sign(os.eigenfunctions.col(j));
  }
  return os;
}

/// Truncated Mercer feature map Phi_d(x) = (sqrt(lambda_j) psi_j(x))_{j<=d},
/// evaluated off-node by the quadrature Nystrom extension
/// psi_j(x) = (1/lambda_j) sum_k w_k kappa(x, x_k) psi_j(x_k).
class FeatureMap {
public:
  FeatureMap(const KernelSpec& spec, const OperatorSpectrum& spectrum, int d)
      : spec_(&spec), spectrum_(&spectrum), d_(d) {
    if (d < 1 || d > spectrum.rank())
      throw ArgumentError("FeatureMap: d out of range of retained spectrum");
    const double lam1 = spectrum.eigenvalues[0];
    if (!(spectrum.eigenvalues[d - 1] > 1e-12 * lam1))
      throw NumericalError(
          "FeatureMap: lambda_d below positivity tolerance (degenerate "
          "spectrum)");
  }

  int dim() const { return d_; }
  const OperatorSpectrum& spectrum() const { return *spectrum_; }

  Vector operator()(const Vector& x) const {
    const OperatorSpectrum& os = *spectrum_;
    // At a quadrature node, reproduce the stored nodal value exactly.
    for (Eigen::Index k = 0; k < os.nodes.rows(); ++k) {
      if (os.nodes.row(k).transpose() == x) {
        Vector out(d_);
        for (int j = 0; j < d_; ++j)
          out[j] = std::sqrt(os.eigenvalues[j]) * os.eigenfunctions(k, j);
        return out;
      }
    }
    Vector kx = kernel_row(*spec_, x, os.nodes);
    Vector wk = kx.cwiseProduct(os.weights);
    Vector out(d_);
    for (int j = 0; j < d_; ++j) {
      double psi = wk.dot(os.eigenfunctions.col(j)) / os.eigenvalues[j];
      out[j] = std::sqrt(os.eigenvalues[j]) * psi;
    }
    return out;
  }

  /// Phi_d at each row of `pts`, stacked as an n x d matrix.
  Matrix rows(const Matrix& pts) const {
    Matrix out(pts.rows(), d_);
    for (Eigen::Index i = 0; i < pts.rows(); ++i)
      out.row(i) = (*this)(pts.row(i).transpose()).transpose();
    return out;
  }

private:
  const KernelSpec* spec_;
  const OperatorSpectrum* spectrum_;
  int d_;
};

/// Empirical Nystrom extension built from the kernel matrix at sample
/// points: with (lambda_hat_j, u_hat_j) the top eigenpairs of K/n, the
/// extension v_j(x) = (1/(sqrt(lambda_hat_j) n)) sum_i kappa(x, X_i) u_ji
/// satisfies v_j(X_i) = sqrt(lambda_hat_j) u_ji.
class EmpiricalNystrom {
public:
  EmpiricalNystrom(const KernelSpec& spec, Matrix sample_points,
                   const Matrix& K, int d)
      : spec_(&spec), pts_(std::move(sample_points)), d_(d) {
    const Eigen::Index n = pts_.rows();
    if (K.rows() != n || K.cols() != n)
      throw ArgumentError("EmpiricalNystrom: K must be n x n");
    if (d < 1 || d > n) throw ArgumentError("EmpiricalNystrom: bad d");
    Eigen::SelfAdjointEigenSolver<Matrix> es(K / static_cast<double>(n));
    eigenvalues_.resize(d);
    U_.resize(n, d);
    for (int j = 0; j < d; ++j) {
      eigenvalues_[j] = es.eigenvalues()[n - 1 - j];
      U_.col(j) = es.eigenvectors().col(n - 1 - j);
      detail::fix_sign(U_.col(j));
    }
    if (!(eigenvalues_[d - 1] > 0))
      throw NumericalError("EmpiricalNystrom: lambda_hat_d <= 0");
  }

  const Vector& eigenvalues() const { return eigenvalues_; }
  const Matrix& eigenvectors() const { return U_; }

  /// v_j(x) for j = 1..d.
  Vector extend(const Vector& x) const {
    Vector kx = kernel_row(*spec_, x, pts_);
    const double n = static_cast<double>(pts_.rows());
    Vector out(d_);
    for (int j = 0; j < d_; ++j)
      out[j] = kx.dot(U_.col(j)) / (std::sqrt(eigenvalues_[j]) * n);
    return out;
  }

private:
  const KernelSpec* spec_;
  Matrix pts_;
  int d_;
  Vector eigenvalues_;
  Matrix U_;
};

}  // namespace lpg
