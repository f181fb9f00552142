#pragma once

// Rank-1 measurement model and its two Gram structures.

#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "gramtomo/core.hpp"
#include "gramtomo/fock.hpp"

namespace gramtomo {

/// Π = |y⟩⟨y| with the bin weight absorbed into |y⟩.
struct Effect {
  StateVector vector;
  int phase_index = 0;
  int bin_index = 0;
  double bin_center = 0.0;
  double bin_width = 1.0;
};

struct PovmSet {
  int dim = 0;
  std::vector<Effect> effects;

  std::size_t size() const { return effects.size(); }
  bool empty() const { return effects.empty(); }

  /// dim × N matrix whose columns are the |y_i⟩.
  Matrix vectors() const {
    Matrix y(dim, static_cast<Eigen::Index>(effects.size()));
    for (std::size_t i = 0; i < effects.size(); ++i) y.col(static_cast<Eigen::Index>(i)) = effects[i].vector;
    return y;
  }

  void validate() const {
    require(dim >= 1, "povm dimension must be >= 1");
    require(!effects.empty(), "povm has no effects");
    for (const auto& e : effects) {
      require(e.vector.size() == dim, "povm effect dimension mismatch");
      require(e.bin_width > 0.0, "povm bin width must be positive");
      require(e.vector.allFinite(), "povm effect has non-finite entries");
    }
  }

  /// Builds a set from the columns of a dim × N matrix (no bin metadata).
  static PovmSet from_vectors(const Matrix& y) {
    PovmSet povm;
    povm.dim = static_cast<int>(y.rows());
    povm.effects.reserve(y.cols());
    for (Eigen::Index i = 0; i < y.cols(); ++i) {
      povm.effects.push_back(Effect{y.col(i), 0, static_cast<int>(i), 0.0, 1.0});
    }
    return povm;
  }
};

struct HomodyneConfig {
  int phase_count = 6;
  std::vector<double> phases;  // empty: θ_j = jπ/phase_count
  int bins = 51;
  double x_min = -5.0;
  double x_max = 5.0;

  std::vector<double> resolved_phases() const {
    if (!phases.empty()) return phases;
    std::vector<double> out(phase_count);
    for (int j = 0; j < phase_count; ++j) out[j] = j * std::numbers::pi / phase_count;
    return out;
  }

  double bin_width() const { return (x_max - x_min) / bins; }

  void validate() const {
    require(phase_count >= 1, "phase count must be positive");
    require(bins >= 1, "bin count must be positive");
    require(std::isfinite(x_min) && std::isfinite(x_max) && x_min < x_max, "quadrature range must satisfy lower < upper");
    if (!phases.empty()) {
      require(static_cast<int>(phases.size()) == phase_count, "phase list length must equal phase count");
      for (std::size_t j = 0; j < phases.size(); ++j) {
        require(phases[j] >= 0.0 && phases[j] < std::numbers::pi, "phases must lie in [0, pi)");
        require(j == 0 || phases[j] > phases[j - 1], "phases must be strictly increasing");
      }
    }
  }
};

/// Midpoint-rule rank-1 homodyne effects, phase-major and bin-minor:
/// |y⟩ = √Δx Σ_n ⟨n|x_b, θ_j⟩ |n⟩.
inline PovmSet build_homodyne_povm(const HomodyneConfig& config, int dim) {
  require(dim >= 1, "dimension must be >= 1");
  config.validate();
  const auto phases = config.resolved_phases();
  const double width = config.bin_width();
  const double weight = std::sqrt(width);
  PovmSet povm;
  povm.dim = dim;
  povm.effects.reserve(phases.size() * config.bins);
  for (int j = 0; j < static_cast<int>(phases.size()); ++j) {
    for (int b = 0; b < config.bins; ++b) {
      const double center = config.x_min + (b + 0.5) * width;
      povm.effects.push_back(Effect{weight * quadrature_eigenvector(center, phases[j], dim), j, b, center, width});
    }
  }
  return povm;
}

/// G = Σ_i |y_i⟩⟨y_i|
inline Matrix gram_operator(const PovmSet& povm) {
  povm.validate();
  const Matrix y = povm.vectors();
  Matrix g = y * y.adjoint();
  // Exact Hermitian symmetry; the product is Hermitian only up to round-off.
  return 0.5 * (g + g.adjoint());
}

/// G_ij = ⟨y_i|y_j⟩ (N × N).
inline Matrix gram_matrix_state_space(const PovmSet& povm) {
  povm.validate();
  const Matrix y = povm.vectors();
  return y.adjoint() * y;
}

/// Q_ij = Tr(Π_i Π_j), evaluated as Hilbert–Schmidt inner products of the
/// vectorised effects rather than through ⟨y_i|y_j⟩.
inline RealMatrix gram_matrix_operator_space(const PovmSet& povm) {
  povm.validate();
  const Eigen::Index d2 = static_cast<Eigen::Index>(povm.dim) * povm.dim;
  Matrix vec(d2, static_cast<Eigen::Index>(povm.size()));
  for (std::size_t i = 0; i < povm.size(); ++i) {
    const Matrix pi = projector(povm.effects[i].vector);
    vec.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::VectorXcd>(pi.data(), d2);
  }
  return (vec.adjoint() * vec).real();
}

/// Spectral data of a Hermitian PSD operator, eigenvalues descending.
struct GramAnalysis {
  RealVector eigenvalues;
  Matrix eigenvectors;  // columns |g_k⟩
  int rank = 0;
  double threshold = 0.0;

  int dim() const { return static_cast<int>(eigenvalues.size()); }
  bool in_support(int k) const { return eigenvalues(k) > threshold; }

  /// Columns spanning the numerical support (the first `rank` eigenvectors).
  Matrix support_basis() const { return eigenvectors.leftCols(rank); }

  /// U Λ U†
  Matrix reassemble() const {
    return eigenvectors * eigenvalues.cast<Complex>().asDiagonal() * eigenvectors.adjoint();
  }

  /// Top-d eigenvectors.
  Matrix leading_modes(int d) const {
    require(d >= 1 && d <= dim(), "requested mode count out of range");
    return eigenvectors.leftCols(d);
  }
};

/// Full eigendecomposition with descending eigenvalues and a deterministic
/// phase convention (first significant component real-positive). Rank counts
/// eigenvalues above relative_threshold × λ_max.
inline GramAnalysis gram_spectrum(const Matrix& g, double relative_threshold = 1e-12) {
  require(g.rows() == g.cols() && g.rows() >= 1, "gram_spectrum: matrix must be square and non-empty");
  require(relative_threshold >= 0.0, "rank threshold must be non-negative");
  if (!is_hermitian(g)) {
    fail(ErrorKind::invalid_input, "gram_spectrum: matrix is not Hermitian (defect " + std::to_string(hermiticity_defect(g)) + ")");
  }
  const Matrix sym = 0.5 * (g + g.adjoint());
  const Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) fail(ErrorKind::numerical_consistency, "eigendecomposition failed");

  const Eigen::Index n = g.rows();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  const RealVector& ascending = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return ascending(a) > ascending(b); });

  GramAnalysis out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  const double lambda_max = std::max(ascending(order[0]), 0.0);
  out.threshold = relative_threshold * lambda_max;
  for (Eigen::Index k = 0; k < n; ++k) {
    double lambda = ascending(order[k]);
    if (lambda < out.threshold) lambda = std::max(lambda, 0.0);
    out.eigenvalues(k) = lambda;
    StateVector v = solver.eigenvectors().col(order[k]);
    const double scale = v.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(v(i)) > 1e-6 * scale) {
        v *= std::conj(v(i)) / std::abs(v(i));
        break;
      }
    }
    out.eigenvectors.col(k) = v;
    if (lambda > out.threshold) ++out.rank;
  }
  return out;
}

/// Largest k with λ_k ≥ drop_ratio × λ_1: the count of reliably resolved modes.
inline int effective_rank(const GramAnalysis& analysis, double drop_ratio = 1e-3) {
  require(analysis.dim() >= 1, "effective_rank: empty spectrum");
  require(drop_ratio > 0.0 && drop_ratio < 1.0, "drop ratio must lie in (0, 1)");
  const double cut = drop_ratio * analysis.eigenvalues(0);
  int k = 0;
  while (k < analysis.dim() && analysis.eigenvalues(k) >= cut) ++k;
  return k;
}

}  // namespace gramtomo
