#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "lpg/errors.hpp"
#include "lpg/graphgen.hpp"
#include "lpg/lanczos.hpp"
#include "lpg/loss.hpp"

namespace lpg {

/// Top-k eigenpairs of a symmetric matrix, eigenvalues sorted by algebraic
/// value descending, eigenvectors orthonormal with sign fixed so the
/// largest-magnitude coordinate is positive.
struct SpectralDecomposition {
  enum class Source { Adjacency, KernelMatrix, Generic };

  Vector eigenvalues;
  Matrix eigenvectors;  // n x k
  Source source = Source::Generic;

  Eigen::Index n() const { return eigenvectors.rows(); }
  int k() const { return static_cast<int>(eigenvalues.size()); }
};

namespace detail {

inline void fix_vector_signs(Matrix& U) {
  for (Eigen::Index j = 0; j < U.cols(); ++j) {
    Eigen::Index imax = 0;
    U.col(j).cwiseAbs().maxCoeff(&imax);
    if (U(imax, j) < 0) U.col(j) = -U.col(j);
  }
}

}  // namespace detail

/// Dense symmetric eigendecomposition; k = -1 means all eigenpairs.
/// Rejects matrices whose asymmetry exceeds 1e-12 relative to their scale.
inline SpectralDecomposition eigendecompose(
    const Matrix& M, int k = -1,
    SpectralDecomposition::Source source =
        SpectralDecomposition::Source::Generic) {
  const Eigen::Index n = M.rows();
  if (M.cols() != n) throw ArgumentError("eigendecompose: matrix not square");
  double scale = std::max(M.cwiseAbs().maxCoeff(), 1.0);
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw ArgumentError("eigendecompose: matrix is not symmetric");
  if (k < 0) k = static_cast<int>(n);
  if (k < 1 || k > n) throw ArgumentError("eigendecompose: bad k");

  Eigen::SelfAdjointEigenSolver<Matrix> es(M);
  if (es.info() != Eigen::Success)
    throw NumericalError("eigendecompose: solver failed");
  SpectralDecomposition d;
  d.source = source;
  d.eigenvalues.resize(k);
  d.eigenvectors.resize(n, k);
  for (int j = 0; j < k; ++j) {
    d.eigenvalues[j] = es.eigenvalues()[n - 1 - j];
    d.eigenvectors.col(j) = es.eigenvectors().col(n - 1 - j);
  }
  detail::fix_vector_signs(d.eigenvectors);
  return d;
}

/// Top-k eigenpairs of an adjacency matrix. Small instances use the dense
/// solver; large ones a Lanczos solver with full reorthogonalization
/// (residual tolerance 1e-10), using the adjacency-list matvec when the
/// graph is stored sparsely.
inline SpectralDecomposition eigendecompose(const AdjacencyMatrix& A, int k,
                                            Eigen::Index dense_cutoff = 1024) {
  const Eigen::Index n = static_cast<Eigen::Index>(A.n());
  if (k < 1 || k > n) throw ArgumentError("eigendecompose: bad k");
  if (n <= dense_cutoff || 8 * k > n)
    return eigendecompose(A.to_dense(), k,
                          SpectralDecomposition::Source::Adjacency);
  SpectralDecomposition d;
  d.source = SpectralDecomposition::Source::Adjacency;
  if (A.sparse_storage()) {
    auto mv = [&A](const Vector& x) { return A.matvec(x); };
    LanczosResult r = lanczos_topk(mv, n, k);
    d.eigenvalues = std::move(r.eigenvalues);
    d.eigenvectors = std::move(r.eigenvectors);
  } else {
    Matrix dense = A.to_dense();
    auto mv = [&dense](const Vector& x) { return Vector(dense * x); };
    LanczosResult r = lanczos_topk(mv, n, k);
    d.eigenvalues = std::move(r.eigenvalues);
    d.eigenvectors = std::move(r.eigenvectors);
  }
  detail::fix_vector_signs(d.eigenvectors);
  return d;
}

/// Rows of U_A S_A^{1/2}: the adjacency spectral embedding. In the sparse
/// regime (rho < 1) the rows carry the rho^{-1/2} rescaling.
struct Embedding {
  int d = 0;
  Matrix rows;             // n x d
  double scale = 1.0;      // 1 (dense) or rho^{-1/2} (sparse)
  Vector eigenvalues_used; // top-d eigenvalues of A
};

inline Embedding spectral_embed(const SpectralDecomposition& decomp, int d,
                                double rho) {
  if (d < 1 || d > decomp.k())
    throw ArgumentError("spectral_embed: d exceeds available eigenpairs");
  if (!(decomp.eigenvalues[d - 1] > 0)) {
    int admissible = 0;
    while (admissible < decomp.k() && decomp.eigenvalues[admissible] > 0)
      ++admissible;
    throw NumericalError(
        "spectral_embed: lambda_" + std::to_string(d) +
        "(A) <= 0; largest admissible d is " + std::to_string(admissible));
  }
  Embedding e;
  e.d = d;
  e.eigenvalues_used = decomp.eigenvalues.head(d);
  e.scale = rho < 1.0 ? 1.0 / std::sqrt(rho) : 1.0;
  e.rows = decomp.eigenvectors.leftCols(d) *
           decomp.eigenvalues.head(d).cwiseSqrt().asDiagonal();
  e.rows *= e.scale;
  return e;
}

inline Embedding spectral_embed(const AdjacencyMatrix& A, int d) {
  return spectral_embed(eigendecompose(A, d), d, A.rho());
}

/// (lambda_d - lambda_{d+1}) / n, the data-driven estimate of the operator
/// spectral gap delta_d.
struct GapEstimate {
  int d = 0;
  double value = 0.0;
};

inline GapEstimate gap_estimate(const SpectralDecomposition& decomp, int d) {
  if (d < 1 || d + 1 > decomp.k())
    throw ArgumentError("gap_estimate: needs at least d+1 eigenvalues");
  GapEstimate g;
  g.d = d;
  g.value = (decomp.eigenvalues[d - 1] - decomp.eigenvalues[d]) /
            static_cast<double>(decomp.n());
  return g;
}

/// Dimension selected by the spectral-gap rule, plus a flag for the
/// fallback path when no dimension satisfies the rule.
struct DimensionSelection {
  int d = 1;
  bool fallback = false;
  double gap = 0.0;        // gap estimate at the selected d
  double threshold = 0.0;  // rule threshold at the selected d
};

/// d_n = max{ d : (lambda_d(A) - lambda_{d+1}(A))/n
///                >= constant * sqrt(d C_d) (d log n / n)^{1/4 - eps} }.
/// The constant defaults to 32; it is exposed because the rule is very
/// conservative at small n. When no d qualifies the selection falls back
/// to d = 1 with `fallback` set.
inline DimensionSelection select_dimension(const SpectralDecomposition& decomp,
                                           const SurrogateLoss& loss,
                                           double epsilon,
                                           double constant = 32.0) {
  if (!(epsilon > 0 && epsilon < 0.25))
    throw ArgumentError("select_dimension: epsilon must be in (0, 1/4)");
  const double n = static_cast<double>(decomp.n());
  if (n < 2) throw ArgumentError("select_dimension: n >= 2 required");
  DimensionSelection sel;
  sel.fallback = true;
  const int dmax = decomp.k() - 1;
  for (int d = 1; d <= dmax; ++d) {
    double cd = surrogate_loss_constant(loss, static_cast<double>(d));
    double thr = constant * std::sqrt(d * cd) *
                 std::pow(d * std::log(n) / n, 0.25 - epsilon);
    double gap = gap_estimate(decomp, d).value;
    if (gap >= thr) {
      sel.d = d;
      sel.fallback = false;
      sel.gap = gap;
      sel.threshold = thr;
    }
  }
  if (sel.fallback) {
    sel.d = 1;
    sel.gap = dmax >= 1 ? gap_estimate(decomp, 1).value : 0.0;
  }
  return sel;
}

/// Spectral norm of a symmetric matrix: largest |eigenvalue|.
inline double spectral_norm_sym(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw NumericalError("spectral_norm_sym: solver failed");
  return std::max(std::abs(es.eigenvalues()[0]),
                  std::abs(es.eigenvalues()[M.rows() - 1]));
}

/// || U_A U_A^T - U_B U_B^T || over the top-d columns of each.
inline double projection_distance(const SpectralDecomposition& a,
                                  const SpectralDecomposition& b, int d) {
  if (d < 1 || d > a.k() || d > b.k())
    throw ArgumentError("projection_distance: d exceeds available vectors");
  if (a.n() != b.n())
    throw ArgumentError("projection_distance: dimension mismatch");
  Matrix Ua = a.eigenvectors.leftCols(d);
  Matrix Ub = b.eigenvectors.leftCols(d);
  return spectral_norm_sym(Ua * Ua.transpose() - Ub * Ub.transpose());
}

/// CSV with header `vertex,z1,...,zd`; 17 significant digits so the values
/// round-trip exactly.
inline void write_embedding_csv(std::ostream& os, const Embedding& e) {
  os << "vertex";
  for (int j = 1; j <= e.d; ++j) os << ",z" << j;
  os << "\n";
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < e.rows.rows(); ++i) {
    os << i;
    for (int j = 0; j < e.d; ++j) os << "," << e.rows(i, j);
    os << "\n";
  }
}

/// Inverse of write_embedding_csv: returns the n x d coordinate matrix.
inline Matrix read_embedding_csv(std::istream& is) {
  std::string header;
  if (!std::getline(is, header) || header.rfind("vertex", 0) != 0)
    throw ConfigError("embedding csv: missing 'vertex,z1,...' header");
  int d = 0;
  for (char ch : header)
    if (ch == ',') ++d;
  if (d < 1) throw ConfigError("embedding csv: no coordinate columns");
  std::vector<double> values;
  std::string line;
  Eigen::Index n = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    if (!std::getline(ss, cell, ','))
      throw ConfigError("embedding csv: malformed row");
    if (std::stoll(cell) != n)
      throw ConfigError("embedding csv: vertices out of order");
    for (int j = 0; j < d; ++j) {
      if (!std::getline(ss, cell, ','))
        throw ConfigError("embedding csv: short row");
      values.push_back(std::stod(cell));
    }
    ++n;
  }
  Matrix Z(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j)
      Z(i, j) = values[static_cast<std::size_t>(i) * d + j];
  return Z;
}

}  // namespace lpg
