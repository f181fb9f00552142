#pragma once

// Normalised maximum-likelihood reconstruction for (possibly incomplete)
// rank-1 measurements.
//
// The likelihood is the conditional one, Σ n_i log[p_i / Σ_k p_k]. The
// iteration runs on the support of G after the rescaling
// Π'_i = G^{-1/2} Π_i G^{-1/2}, where the rescaled effects resolve the
// identity and the conditional probabilities become plain Born probabilities
// of σ ∝ G^{1/2} ρ G^{1/2}. Each step is the diluted congruence
// σ ← N(R̃ σ R̃), R̃ = (1 − ε) I + ε R'(σ), which keeps σ positive and whose
// fixed points satisfy R(ρ)ρ = Gρ.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "gramtomo/core.hpp"
#include "gramtomo/povm.hpp"

namespace gramtomo {

/// Observed (or pseudo-) counts aligned with a PovmSet.
struct Dataset {
  RealVector counts;
  double total = 0.0;
  RealVector frequencies;

  static Dataset from_counts(RealVector counts) {
    Dataset d;
    for (Eigen::Index i = 0; i < counts.size(); ++i) {
      require(std::isfinite(counts(i)) && counts(i) >= 0.0, "counts must be finite and non-negative");
    }
    d.total = counts.sum();
    d.frequencies = d.total > 0.0 ? RealVector(counts / d.total) : RealVector::Zero(counts.size());
    d.counts = std::move(counts);
    return d;
  }

  std::size_t size() const { return static_cast<std::size_t>(counts.size()); }
};

inline void check_aligned(const Dataset& data, const PovmSet& povm) {
  if (data.size() != povm.size()) {
    fail(ErrorKind::invalid_input, "dataset has " + std::to_string(data.size()) + " outcomes but povm has " +
                                       std::to_string(povm.size()));
  }
}

namespace detail {

// ⟨y_i|A|y_i⟩ for the columns of y.
inline Eigen::VectorXcd quadratic_forms(const Matrix& a, const Matrix& y) {
  const Matrix ay = a * y;
  return (y.conjugate().cwiseProduct(ay)).colwise().sum().transpose();
}

// p_i = ⟨y_i|ρ|y_i⟩ for the columns of y, negative round-off clamped.
inline RealVector born_probabilities(const Matrix& rho, const Matrix& y) {
  RealVector p = quadratic_forms(rho, y).real();
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = std::max(p(i), 0.0);
  return p;
}

// Σ_i w_i |y_i⟩⟨y_i|
inline Matrix weighted_sum(const Matrix& y, const RealVector& w) {
  Matrix r = (y * w.cast<Complex>().asDiagonal()) * y.adjoint();
  return 0.5 * (r + r.adjoint());
}

}  // namespace detail

/// p_i(ρ) = Tr(ρ Π_i), negative round-off clamped to zero.
inline RealVector expected_probabilities(const Matrix& rho, const PovmSet& povm) {
  povm.validate();
  require(rho.rows() == povm.dim && rho.cols() == povm.dim, "expected_probabilities: dimension mismatch");
  return detail::born_probabilities(rho, povm.vectors());
}

/// Σ n_i log[p_i / Σ_k p_k]; −∞ when an observed outcome has p_i = 0.
inline double log_likelihood(const Matrix& rho, const Dataset& data, const PovmSet& povm) {
  check_aligned(data, povm);
  require(data.total > 0.0, "log_likelihood: dataset has no counts");
  const RealVector p = expected_probabilities(rho, povm);
  const double norm = p.sum();
  double value = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (data.counts(i) <= 0.0) continue;
    if (p(i) <= 0.0) return -std::numeric_limits<double>::infinity();
    value += data.counts(i) * std::log(p(i) / norm);
  }
  return value;
}

/// Number of observed outcomes the state assigns zero probability.
inline int impossible_outcomes(const Matrix& rho, const Dataset& data, const PovmSet& povm) {
  check_aligned(data, povm);
  const RealVector p = expected_probabilities(rho, povm);
  int count = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) count += (data.counts(i) > 0.0 && p(i) <= 0.0) ? 1 : 0;
  return count;
}

struct ROperator {
  Matrix r;
  int floor_activations = 0;
};

/// R(ρ) = Σ_{f_i > 0} f_i / max(p_i, floor) Π_i with floor = relative_floor × max_k p_k.
inline ROperator r_operator(const Matrix& rho, const Dataset& data, const PovmSet& povm,
                            double relative_floor = 1e-14) {
  check_aligned(data, povm);
  const Matrix y = povm.vectors();
  require(rho.rows() == povm.dim && rho.cols() == povm.dim, "r_operator: dimension mismatch");
  const RealVector p = detail::born_probabilities(rho, y);
  const double floor = relative_floor * p.maxCoeff();
  ROperator out;
  RealVector w = RealVector::Zero(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (data.frequencies(i) <= 0.0) continue;
    double pi = p(i);
    if (pi <= floor) {
      pi = floor > 0.0 ? floor : std::numeric_limits<double>::min();
      ++out.floor_activations;
    }
    w(i) = data.frequencies(i) / pi;
  }
  out.r = detail::weighted_sum(y, w);
  return out;
}

/// ‖Tr(Gρ) R(ρ) ρ − G ρ‖_max. The factor Tr(Gρ) turns p_i into the conditional
/// probabilities, so this vanishes exactly at stationary points of log L.
inline double extremal_residual(const Matrix& rho, const Dataset& data, const PovmSet& povm,
                                double relative_floor = 1e-14) {
  const Matrix g = gram_operator(povm);
  const double norm = (g * rho).trace().real();
  const Matrix r = r_operator(rho, data, povm, relative_floor).r;
  return max_abs(norm * r * rho - g * rho);
}

/// The support of G with the rescaled, identity-resolving effect set.
struct SupportRescaling {
  Matrix isometry;           // dim × r, columns are support eigenvectors of G
  RealVector sqrt_eigenvalues;  // λ_k^{1/2} on the support
  PovmSet rescaled;          // r-dimensional effects Λ^{-1/2} U_s† |y_i⟩

  int support_dim() const { return static_cast<int>(sqrt_eigenvalues.size()); }

  /// ρ = G^{-1/2} σ G^{-1/2}, trace-normalised, in the original basis.
  Matrix to_ambient(const Matrix& sigma) const {
    const RealVector inv = sqrt_eigenvalues.cwiseInverse();
    const Matrix inner = inv.cast<Complex>().asDiagonal() * sigma * inv.cast<Complex>().asDiagonal();
    Matrix rho = isometry * inner * isometry.adjoint();
    rho = 0.5 * (rho + rho.adjoint());
    return rho / rho.trace().real();
  }

  /// σ = G^{1/2} ρ G^{1/2} restricted to the support, trace-normalised.
  Matrix to_support(const Matrix& rho) const {
    const Matrix s = sqrt_eigenvalues.cast<Complex>().asDiagonal() * (isometry.adjoint() * rho * isometry) *
                     sqrt_eigenvalues.cast<Complex>().asDiagonal();
    return s / s.trace().real();
  }
};

inline SupportRescaling rescale_to_support(const PovmSet& povm, const GramAnalysis& analysis) {
  povm.validate();
  require(analysis.dim() == povm.dim, "rescale_to_support: analysis dimension mismatch");
  if (analysis.rank == 0) fail(ErrorKind::empty_data, "rescale_to_support: measurement has empty support");
  SupportRescaling out;
  out.isometry = analysis.support_basis();
  out.sqrt_eigenvalues = analysis.eigenvalues.head(analysis.rank).cwiseSqrt();
  const Matrix map = out.sqrt_eigenvalues.cwiseInverse().cast<Complex>().asDiagonal() * out.isometry.adjoint();
  out.rescaled.dim = analysis.rank;
  out.rescaled.effects.reserve(povm.size());
  for (const auto& e : povm.effects) {
    Effect r = e;
    r.vector = map * e.vector;
    out.rescaled.effects.push_back(std::move(r));
  }
  return out;
}

/// Columns of `basis` must be orthonormal within 1e-10.
inline void check_orthonormal(const Matrix& basis) {
  require(basis.cols() >= 1 && basis.cols() <= basis.rows(), "subspace basis must have 1..dim columns");
  const double defect = max_abs(basis.adjoint() * basis - Matrix::Identity(basis.cols(), basis.cols()));
  if (defect > 1e-10) fail(ErrorKind::invalid_input, "subspace basis is not orthonormal (defect " + std::to_string(defect) + ")");
}

/// Effect vectors mapped to their coordinates V†|y_i⟩ in the subspace spanned
/// by the columns of V.
inline PovmSet restrict_to_subspace(const PovmSet& povm, const Matrix& basis) {
  povm.validate();
  require(basis.rows() == povm.dim, "restrict_to_subspace: basis dimension mismatch");
  check_orthonormal(basis);
  PovmSet out;
  out.dim = static_cast<int>(basis.cols());
  out.effects.reserve(povm.size());
  const Matrix adjoint = basis.adjoint();
  for (const auto& e : povm.effects) {
    Effect r = e;
    r.vector = adjoint * e.vector;
    out.effects.push_back(std::move(r));
  }
  return out;
}

/// max_i |p_i / Σ_k p_k − f_i|
inline double born_residual(const Matrix& rho, const Dataset& data, const PovmSet& povm) {
  check_aligned(data, povm);
  const RealVector p = expected_probabilities(rho, povm);
  const double norm = p.sum();
  if (!(norm > 0.0)) return 1.0;
  return (p / norm - data.frequencies).cwiseAbs().maxCoeff();
}

struct ReconstructionConfig {
  std::optional<Matrix> basis;  // dim × d orthonormal columns; nullopt: full space
  double dilution = 1.0;
  double min_dilution = 1.0 / 64.0;
  double probability_floor = 1e-14;
  int max_iterations = 20000;
  double tol_likelihood = 1e-10;
  double tol_born = 1e-7;
  double tol_gap = 1e-12;  // bound on log L* − log L per count
  double rank_threshold = 1e-12;

  void validate() const {
    require(dilution > 0.0 && dilution <= 1.0, "dilution must lie in (0, 1]");
    require(min_dilution > 0.0 && min_dilution <= dilution, "minimum dilution must lie in (0, dilution]");
    require(probability_floor > 0.0 && probability_floor < 1.0, "probability floor must lie in (0, 1)");
    require(max_iterations >= 1, "max iterations must be >= 1");
    require(tol_likelihood > 0.0 && tol_born > 0.0 && tol_gap > 0.0, "tolerances must be positive");
    require(rank_threshold >= 0.0 && rank_threshold < 1.0, "rank threshold must lie in [0, 1)");
    if (basis) check_orthonormal(*basis);
  }
};

struct ReconstructionResult {
  Matrix rho;                            // ambient basis
  std::vector<double> likelihood_trace;  // Σ f_i log p̂_i per accepted iterate
  int iterations = 0;
  double born_residual = 0.0;
  double extremal_residual = 0.0;        // in the reconstruction space
  double stationarity_residual = 0.0;    // max(‖R'σ − σ‖_max, λ_max(R') − 1), rescaled space
  bool converged = false;
  int floor_activations = 0;
  int support_dim = 0;
  int subspace_dim = 0;
  std::string stop_reason;
  double wall_seconds = 0.0;
};

namespace detail {

// Sort key making the solver independent of outcome order.
inline std::vector<std::size_t> canonical_order(const PovmSet& povm, const Dataset& data) {
  std::vector<std::size_t> order(povm.size());
  std::iota(order.begin(), order.end(), 0);
  auto less = [&](std::size_t a, std::size_t b) {
    const Effect& ea = povm.effects[a];
    const Effect& eb = povm.effects[b];
    if (ea.phase_index != eb.phase_index) return ea.phase_index < eb.phase_index;
    if (ea.bin_index != eb.bin_index) return ea.bin_index < eb.bin_index;
    for (Eigen::Index n = 0; n < ea.vector.size(); ++n) {
      if (ea.vector(n).real() != eb.vector(n).real()) return ea.vector(n).real() < eb.vector(n).real();
      if (ea.vector(n).imag() != eb.vector(n).imag()) return ea.vector(n).imag() < eb.vector(n).imag();
    }
    return data.counts(a) < data.counts(b);
  };
  std::stable_sort(order.begin(), order.end(), less);
  return order;
}

struct IterateState {
  Matrix sigma;
  RealVector p;  // Born probabilities on all outcomes
  double log_l = 0.0;
  int floor_hits = 0;
};

}  // namespace detail

inline ReconstructionResult maxlik_solve(const Dataset& dataset, const PovmSet& povm,
                                         const ReconstructionConfig& config = {}) {
  const auto start = std::chrono::steady_clock::now();
  povm.validate();
  check_aligned(dataset, povm);
  config.validate();
  if (!(dataset.total > 0.0)) fail(ErrorKind::invalid_input, "maxlik_solve: dataset is empty");
  if (config.basis) require(config.basis->rows() == povm.dim, "maxlik_solve: basis dimension mismatch");

  const auto order = detail::canonical_order(povm, dataset);
  PovmSet sorted;
  sorted.dim = povm.dim;
  RealVector counts(dataset.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    sorted.effects.push_back(povm.effects[order[k]]);
    counts(static_cast<Eigen::Index>(k)) = dataset.counts(static_cast<Eigen::Index>(order[k]));
  }
  const Dataset data = Dataset::from_counts(std::move(counts));
  const PovmSet work = config.basis ? restrict_to_subspace(sorted, *config.basis) : sorted;

  const GramAnalysis analysis = gram_spectrum(gram_operator(work), config.rank_threshold);
  const SupportRescaling support = rescale_to_support(work, analysis);
  const Matrix w = support.rescaled.vectors();
  const RealVector& f = data.frequencies;
  const int r = support.support_dim();
  const Matrix identity = Matrix::Identity(r, r);

  auto evaluate = [&](Matrix sigma) {
    detail::IterateState s;
    s.sigma = std::move(sigma);
    s.p = detail::born_probabilities(s.sigma, w);
    const double norm = s.p.sum();
    s.log_l = 0.0;
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      if (f(i) <= 0.0) continue;
      s.log_l += s.p(i) > 0.0 ? f(i) * std::log(s.p(i) / norm) : -std::numeric_limits<double>::infinity();
    }
    return s;
  };
  auto r_prime = [&](detail::IterateState& s) {
    const double floor = config.probability_floor * s.p.maxCoeff();
    RealVector weights = RealVector::Zero(f.size());
    s.floor_hits = 0;
    const double norm = s.p.sum();
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      if (f(i) <= 0.0) continue;
      double pi = s.p(i);
      if (pi <= floor) {
        pi = floor > 0.0 ? floor : std::numeric_limits<double>::min();
        ++s.floor_hits;
      }
      weights(i) = f(i) * norm / pi;
    }
    return detail::weighted_sum(w, weights);
  };
  // Residuals of the current iterate: Born, rescaled stationarity, extremal in
  // the reconstruction space.
  auto residuals = [&](const detail::IterateState& s, const Matrix& rp) {
    const double norm = s.p.sum();
    const double born = (s.p / norm - f).cwiseAbs().maxCoeff();
    const Matrix defect = rp * s.sigma - s.sigma;
    // λ_max(R') − 1 bounds log L* − log L(σ); both terms vanish only at the optimum.
    const Eigen::SelfAdjointEigenSolver<Matrix> spectrum(rp, Eigen::EigenvaluesOnly);
    const double stationarity = std::max(max_abs(defect), spectrum.eigenvalues().maxCoeff() - 1.0);
    const RealVector& root = support.sqrt_eigenvalues;
    const Matrix lifted = root.cast<Complex>().asDiagonal() * defect * root.cwiseInverse().cast<Complex>().asDiagonal();
    const RealVector inv = root.cwiseInverse();
    const double c = (inv.cwiseProduct(inv).cast<Complex>().asDiagonal() * s.sigma).trace().real();
    const double extremal = max_abs(support.isometry * lifted * support.isometry.adjoint()) / c;
    return std::array<double, 3>{born, stationarity, extremal};
  };

  // Necessary condition for `fitted`, free of the eigensolve.
  auto cheap_fit = [&](const detail::IterateState& s, const Matrix& rp) {
    if ((s.p / s.p.sum() - f).cwiseAbs().maxCoeff() < config.tol_born) return true;
    return max_abs(rp * s.sigma - s.sigma) < config.tol_gap;
  };

  ReconstructionResult result;
  result.support_dim = r;
  result.subspace_dim = work.dim;
  detail::IterateState current = evaluate(identity / static_cast<double>(r));
  result.likelihood_trace.push_back(current.log_l);
  Matrix rp = r_prime(current);
  double increment = std::numeric_limits<double>::infinity();
  double dilution = config.dilution;
  Matrix last_move;
  result.stop_reason = "max-iterations";

  for (int it = 0;; ++it) {
    // Residuals need an eigensolve; only evaluate them once the likelihood has settled.
    if (increment < config.tol_likelihood && cheap_fit(current, rp)) {
      const auto res = residuals(current, rp);
      const bool fitted = res[0] < config.tol_born || res[1] < config.tol_gap;
      if (fitted && res[2] <= 10.0 * config.tol_born) {
        result.converged = true;
        result.stop_reason = "converged";
        break;
      }
    }
    if (it >= config.max_iterations) break;

    bool accepted = false;
    for (double eps = dilution; eps >= config.min_dilution; eps *= 0.5) {
      const Matrix step = (1.0 - eps) * identity + eps * rp;
      Matrix next = step * current.sigma * step;
      next = 0.5 * (next + next.adjoint());
      next /= next.trace().real();
      // A full step can hop across the optimum and back at equal likelihood.
      // Damp for the rest of the run once a step nearly undoes its predecessor.
      Matrix move = next - current.sigma;
      if (eps * 0.5 >= config.min_dilution && last_move.size() != 0 &&
          (move + last_move).norm() < 0.5 * last_move.norm()) {
        dilution = eps * 0.5;
        continue;
      }
      detail::IterateState candidate = evaluate(std::move(next));
      if (candidate.log_l >= current.log_l - 1e-13) {
        increment = candidate.log_l - current.log_l;
        current = std::move(candidate);
        last_move = std::move(move);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      result.stop_reason = "stalled";
      break;
    }
    result.likelihood_trace.push_back(current.log_l);
    result.iterations = it + 1;
    rp = r_prime(current);
  }

  const auto res = residuals(current, rp);
  result.floor_activations = current.floor_hits;
  result.born_residual = res[0];
  result.stationarity_residual = res[1];
  result.extremal_residual = res[2];
  const Matrix rho_work = support.to_ambient(current.sigma);
  if (config.basis) {
    Matrix rho = *config.basis * rho_work * config.basis->adjoint();
    rho = 0.5 * (rho + rho.adjoint());
    result.rho = rho / rho.trace().real();
  } else {
    result.rho = rho_work;
  }
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace gramtomo
