#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lpg/domain.hpp"
#include "lpg/errors.hpp"
#include "lpg/rng.hpp"

namespace lpg {

/// Joint law of (X, Y): a latent law on the domain plus a posterior
/// eta(x) = P[Y = +1 | X = x].
class DistributionSpec {
public:
  enum class LatentLaw { Uniform, TruncatedGaussianMixture, TwoPointMasses };
  enum class LabelModel { Deterministic, Logistic, ConstantNoise };

  struct MixtureComponent {
    double mean;
    double sd;
    double weight;
  };

  static DistributionSpec uniform(LatentDomain domain) {
    DistributionSpec d(std::move(domain));
    d.latent_ = LatentLaw::Uniform;
    return d;
  }

  /// Gaussian mixture truncated to a 1-d interval domain.
  static DistributionSpec truncated_gaussian_mixture(
      LatentDomain domain, std::vector<MixtureComponent> comps) {
    if (domain.kind() != LatentDomain::Kind::Interval)
      throw ConfigError("gaussian mixture law requires an interval domain");
    if (comps.empty()) throw ConfigError("mixture needs >= 1 component");
    double wsum = 0.0;
    for (const auto& c : comps) {
      if (!(c.sd > 0) || !(c.weight >= 0))
        throw ConfigError("mixture component needs sd > 0, weight >= 0");
      wsum += c.weight;
    }
    if (std::abs(wsum - 1.0) > 1e-9)
      throw ConfigError("mixture weights must sum to 1");
    DistributionSpec d(std::move(domain));
    d.latent_ = LatentLaw::TruncatedGaussianMixture;
    d.comps_ = std::move(comps);
    return d;
  }

  static DistributionSpec two_point_masses(LatentDomain domain,
                                           const Vector& x1, const Vector& x2,
                                           double p) {
    if (!(p >= 0 && p <= 1)) throw ConfigError("two-point mass p in [0,1]");
    if (!domain.contains(x1) || !domain.contains(x2))
      throw ConfigError("point masses must lie in the kernel domain");
    DistributionSpec d(std::move(domain));
    d.latent_ = LatentLaw::TwoPointMasses;
    d.atom1_ = x1;
    d.atom2_ = x2;
    d.p_ = p;
    return d;
  }

  DistributionSpec& with_deterministic_labels(Vector direction,
                                              double threshold) {
    label_ = LabelModel::Deterministic;
    direction_ = std::move(direction);
    offset_ = threshold;
    return *this;
  }

  DistributionSpec& with_logistic_labels(Vector direction, double offset,
                                         double slope) {
    label_ = LabelModel::Logistic;
    direction_ = std::move(direction);
    offset_ = offset;
    slope_ = slope;
    return *this;
  }

  DistributionSpec& with_constant_noise_labels(double level) {
    if (!(level >= 0 && level <= 1))
      throw ConfigError("noise level must be in [0,1]");
    label_ = LabelModel::ConstantNoise;
    level_ = level;
    return *this;
  }

  const LatentDomain& domain() const { return domain_; }
  LatentLaw latent_law() const { return latent_; }
  LabelModel label_model() const { return label_; }
  const std::vector<MixtureComponent>& components() const { return comps_; }
  const Vector& atom1() const { return atom1_; }
  const Vector& atom2() const { return atom2_; }
  double atom_probability() const { return p_; }

  /// Posterior P[Y = +1 | X = x], available in closed form.
  double eta(const Vector& x) const {
    switch (label_) {
      case LabelModel::Deterministic:
        return direction_.dot(x) >= offset_ ? 1.0 : 0.0;
      case LabelModel::Logistic:
        return 1.0 / (1.0 + std::exp(-slope_ * (direction_.dot(x) - offset_)));
      case LabelModel::ConstantNoise:
        return level_;
    }
    return 0.5;
  }

  /// Latent density with respect to Lebesgue measure (continuous laws only).
  double density(const Vector& x) const {
    switch (latent_) {
      case LatentLaw::Uniform: {
        double vol = 1.0;
        for (int k = 0; k < domain_.dim(); ++k)
          vol *= domain_.upper()[k] - domain_.lower()[k];
        return domain_.contains(x) ? 1.0 / vol : 0.0;
      }
      case LatentLaw::TruncatedGaussianMixture: {
        if (!domain_.contains(x)) return 0.0;
        double a = domain_.a(), b = domain_.b(), f = 0.0;
        for (const auto& c : comps_) {
          double z = normal_cdf((b - c.mean) / c.sd) -
                     normal_cdf((a - c.mean) / c.sd);
          f += c.weight * normal_pdf((x[0] - c.mean) / c.sd) / (c.sd * z);
        }
        return f;
      }
      case LatentLaw::TwoPointMasses:
        throw ConfigError("two-point-mass law has no Lebesgue density");
    }
    return 0.0;
  }

  /// One latent draw; pure function of (seed via rng, index i).
  Vector sample_point(const CounterRng& rng, std::uint64_t i) const {
    switch (latent_) {
      case LatentLaw::Uniform: {
        if (domain_.kind() == LatentDomain::Kind::Sphere) {
          Vector g(domain_.dim());
          for (int k = 0; k < domain_.dim(); ++k)
            g[k] = rng.gaussian(i * 64 + static_cast<std::uint64_t>(k));
          return g / g.norm();
        }
        Vector x(domain_.dim());
        for (int k = 0; k < domain_.dim(); ++k) {
          double u = rng.uniform(i * 64 + static_cast<std::uint64_t>(k));
          x[k] = domain_.lower()[k] +
                 u * (domain_.upper()[k] - domain_.lower()[k]);
        }
        return x;
      }
      case LatentLaw::TruncatedGaussianMixture: {
        double u = rng.uniform(i * 64);
        std::size_t c = 0;
        double acc = 0.0;
        for (; c < comps_.size(); ++c) {
          acc += comps_[c].weight;
          if (u < acc) break;
        }
        if (c == comps_.size()) c = comps_.size() - 1;
        // Rejection against the interval; counter advances per attempt.
        for (std::uint64_t k = 1; k < 4096; ++k) {
          double g = comps_[c].mean +
                     comps_[c].sd * rng.gaussian(i * 64 + k);
          if (g >= domain_.a() && g <= domain_.b())
            return Vector::Constant(1, g);
        }
        throw NumericalError(
            "truncated gaussian rejection sampler failed to accept");
      }
      case LatentLaw::TwoPointMasses:
        return rng.uniform(i * 64) < p_ ? atom1_ : atom2_;
    }
    return Vector();
  }

private:
  explicit DistributionSpec(LatentDomain d) : domain_(std::move(d)) {}

  static double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / 2.5066282746310002;
  }
  static double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / 1.4142135623730951);
  }

  LatentDomain domain_;
  LatentLaw latent_ = LatentLaw::Uniform;
  LabelModel label_ = LabelModel::ConstantNoise;
  std::vector<MixtureComponent> comps_;
  Vector atom1_, atom2_;
  double p_ = 0.5;
  Vector direction_ = Vector::Constant(1, 1.0);
  double offset_ = 0.0;
  double slope_ = 1.0;
  double level_ = 0.5;
};

/// i.i.d. latent positions with labels in {-1, +1}.
struct LatentSample {
  Matrix points;             // n x dim
  std::vector<int> labels;   // +-1
  std::uint64_t seed = 0;
};

inline LatentSample sample_latents(const DistributionSpec& dist,
                                   std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ArgumentError("sample_latents: n >= 1 required");
  LatentSample s;
  s.seed = seed;
  s.points.resize(static_cast<Eigen::Index>(n), dist.domain().dim());
  s.labels.resize(n);
  CounterRng xrng(seed, stream::kLatent);
  CounterRng yrng(seed, stream::kLabel);
  for (std::size_t i = 0; i < n; ++i) {
    Vector x = dist.sample_point(xrng, i);
    s.points.row(static_cast<Eigen::Index>(i)) = x.transpose();
    s.labels[i] = yrng.uniform(i) < dist.eta(x) ? 1 : -1;
  }
  return s;
}

/// Hollow symmetric binary adjacency matrix. Dense graphs use a packed
/// bit matrix; when the expected density rho * mean(K) drops below 0.05
/// the storage switches to adjacency lists.
class AdjacencyMatrix {
public:
  static constexpr double kSparseDensityThreshold = 0.05;

  std::size_t n() const { return n_; }
  double rho() const { return rho_; }
  std::uint64_t seed() const { return seed_; }
  bool sparse_storage() const { return sparse_; }
  std::size_t edge_count() const { return edges_; }

  bool has_edge(std::size_t i, std::size_t j) const {
    if (i == j) return false;
    if (sparse_) {
      const auto& nb = adj_[i];
      return std::find(nb.begin(), nb.end(), static_cast<std::uint32_t>(j)) !=
             nb.end();
    }
    std::size_t idx = i * n_ + j;
    return (bits_[idx >> 6] >> (idx & 63)) & 1u;
  }

  std::size_t degree(std::size_t i) const {
    if (sparse_) return adj_[i].size();
    std::size_t d = 0;
    for (std::size_t j = 0; j < n_; ++j) d += has_edge(i, j);
    return d;
  }

  /// y = A x
  Vector matvec(const Vector& x) const {
    Vector y = Vector::Zero(static_cast<Eigen::Index>(n_));
    if (sparse_) {
      for (std::size_t i = 0; i < n_; ++i) {
        double s = 0.0;
        for (std::uint32_t j : adj_[i]) s += x[j];
        y[static_cast<Eigen::Index>(i)] = s;
      }
    } else {
      for (std::size_t i = 0; i < n_; ++i) {
        double s = 0.0;
        std::size_t base = i * n_;
        for (std::size_t w = base >> 6; w <= (base + n_ - 1) >> 6; ++w) {
          std::uint64_t word = bits_[w];
          while (word) {
            int b = std::countr_zero(word);
            std::size_t j = (w << 6) + static_cast<std::size_t>(b) - base;
            if (j < n_) s += x[static_cast<Eigen::Index>(j)];
            word &= word - 1;
          }
        }
        y[static_cast<Eigen::Index>(i)] = s;
      }
    }
    return y;
  }

  Matrix to_dense() const {
    Matrix A = Matrix::Zero(static_cast<Eigen::Index>(n_),
                            static_cast<Eigen::Index>(n_));
    if (sparse_) {
      for (std::size_t i = 0; i < n_; ++i)
        for (std::uint32_t j : adj_[i]) A(static_cast<Eigen::Index>(i), j) = 1.0;
    } else {
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j)
          if (has_edge(i, j))
            A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
    }
    return A;
  }

  const std::vector<std::vector<std::uint32_t>>& neighbors() const {
    if (!sparse_)
      throw ArgumentError("neighbors(): dense-storage adjacency");
    return adj_;
  }

  friend AdjacencyMatrix sample_adjacency(const Matrix&, double,
                                          std::uint64_t);
  friend AdjacencyMatrix adjacency_from_edges(
      std::size_t, double, std::uint64_t,
      const std::vector<std::pair<std::uint32_t, std::uint32_t>>&);

private:
  void set_edge(std::size_t i, std::size_t j) {
    ++edges_;
    if (sparse_) {
      adj_[i].push_back(static_cast<std::uint32_t>(j));
      adj_[j].push_back(static_cast<std::uint32_t>(i));
    } else {
      std::size_t a = i * n_ + j, b = j * n_ + i;
      bits_[a >> 6] |= 1ull << (a & 63);
      bits_[b >> 6] |= 1ull << (b & 63);
    }
  }

  std::size_t n_ = 0;
  double rho_ = 1.0;
  std::uint64_t seed_ = 0;
  bool sparse_ = false;
  std::size_t edges_ = 0;
  std::vector<std::uint64_t> bits_;
  std::vector<std::vector<std::uint32_t>> adj_;
};

/// Conditionally independent Bernoulli edges: A_ij ~ Bern(rho * K_ij) for
/// i < j. The draw for edge (i,j) is a pure hash of (seed, i, j), so the
/// result is independent of evaluation order.
inline AdjacencyMatrix sample_adjacency(const Matrix& K, double rho,
                                        std::uint64_t seed) {
  const std::size_t n = static_cast<std::size_t>(K.rows());
  if (K.rows() != K.cols()) throw ArgumentError("sample_adjacency: K square");
  if (!(rho > 0 && rho <= 1))
    throw ArgumentError("sample_adjacency: rho must be in (0, 1]");
  if ((K.array() < -1e-12).any() || (K.array() > 1.0 + 1e-12).any())
    throw ArgumentError("sample_adjacency: K entries must be in [0,1]");
  AdjacencyMatrix A;
  A.n_ = n;
  A.rho_ = rho;
  A.seed_ = seed;
  A.sparse_ = rho * K.mean() < AdjacencyMatrix::kSparseDensityThreshold;
  if (A.sparse_)
    A.adj_.resize(n);
  else
    A.bits_.assign((n * n + 63) / 64, 0);
  CounterRng rng(seed, stream::kEdge);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.uniform(i, j) < rho * K(static_cast<Eigen::Index>(i),
                                      static_cast<Eigen::Index>(j)))
        A.set_edge(i, j);
  return A;
}

inline AdjacencyMatrix adjacency_from_edges(
    std::size_t n, double rho, std::uint64_t seed,
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
  AdjacencyMatrix A;
  A.n_ = n;
  A.rho_ = rho;
  A.seed_ = seed;
  double density =
      n > 1 ? 2.0 * static_cast<double>(edges.size()) / (static_cast<double>(n) * (n - 1)) : 0.0;
  A.sparse_ = density < AdjacencyMatrix::kSparseDensityThreshold;
  if (A.sparse_)
    A.adj_.resize(n);
  else
    A.bits_.assign((n * n + 63) / 64, 0);
  for (auto [i, j] : edges) {
    if (i >= n || j >= n || i == j)
      throw ArgumentError("adjacency_from_edges: bad edge index");
    A.set_edge(i, j);
  }
  return A;
}

inline std::size_t max_degree(const AdjacencyMatrix& A) {
  std::size_t m = 0;
  for (std::size_t i = 0; i < A.n(); ++i) m = std::max(m, A.degree(i));
  return m;
}

// --- edge-list / label file formats ---------------------------------------

/// Header line `n <count> rho <value> seed <value>`, then `i j` per edge,
/// 0-indexed with i < j.
inline void write_edge_list(std::ostream& os, const AdjacencyMatrix& A) {
  os << "n " << A.n() << " rho " << A.rho() << " seed " << A.seed() << "\n";
  for (std::size_t i = 0; i < A.n(); ++i)
    for (std::size_t j = i + 1; j < A.n(); ++j)
      if (A.has_edge(i, j)) os << i << " " << j << "\n";
}

inline AdjacencyMatrix read_edge_list(std::istream& is) {
  std::string tag_n, tag_rho, tag_seed;
  std::size_t n;
  double rho;
  std::uint64_t seed;
  if (!(is >> tag_n >> n >> tag_rho >> rho >> tag_seed >> seed) ||
      tag_n != "n" || tag_rho != "rho" || tag_seed != "seed")
    throw ConfigError("edge list: malformed header");
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  std::uint32_t i, j;
  while (is >> i >> j) {
    if (i >= j) throw ConfigError("edge list: expected i < j");
    edges.emplace_back(i, j);
  }
  return adjacency_from_edges(n, rho, seed, edges);
}

/// Two columns `vertex label`; labels stored as bits 0/1, mapped back to
/// {-1, +1} on read.
inline void write_labels(std::ostream& os, const std::vector<int>& labels) {
  for (std::size_t i = 0; i < labels.size(); ++i)
    os << i << " " << (labels[i] > 0 ? 1 : 0) << "\n";
}

inline std::vector<int> read_labels(std::istream& is) {
  std::vector<int> labels;
  std::size_t v;
  int bit;
  while (is >> v >> bit) {
    if (v != labels.size()) throw ConfigError("label file: vertices out of order");
    labels.push_back(bit ? 1 : -1);
  }
  return labels;
}

}  // namespace lpg
