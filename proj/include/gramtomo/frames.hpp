#pragma once

// Finite-frame view of the measurement: the state-space frame {|y_i⟩} with
// its canonical dual, and the operator-space frame {Π_i} with frame operator
// S(A) = Σ_i Tr(Π_i A) Π_i used for linear-inversion tomography.
//
// Operator-space quantities are vectorised over the orthonormal Hermitian
// basis {I/√d, generalised Gell-Mann}; in that basis S is a real symmetric
// d² × d² matrix.

#include <cmath>
#include <vector>

#include "gramtomo/core.hpp"
#include "gramtomo/maxlik.hpp"
#include "gramtomo/povm.hpp"

namespace gramtomo {

struct DualFrame {
  Matrix duals;  // dim × N, columns |ỹ_i⟩ = G⁺|y_i⟩
  Matrix support_projector;
  int support_rank = 0;
  double threshold = 0.0;
};

inline Matrix pseudo_inverse(const GramAnalysis& analysis) {
  const Matrix u = analysis.support_basis();
  const RealVector inv = analysis.eigenvalues.head(analysis.rank).cwiseInverse();
  return u * inv.cast<Complex>().asDiagonal() * u.adjoint();
}

inline DualFrame dual_frame(const PovmSet& povm, const GramAnalysis& analysis) {
  povm.validate();
  require(analysis.dim() == povm.dim, "dual_frame: analysis dimension mismatch");
  if (analysis.rank == 0) fail(ErrorKind::empty_data, "dual_frame: frame has empty support");
  DualFrame out;
  out.duals = pseudo_inverse(analysis) * povm.vectors();
  const Matrix u = analysis.support_basis();
  out.support_projector = u * u.adjoint();
  out.support_rank = analysis.rank;
  out.threshold = analysis.threshold;
  return out;
}

/// Σ_i ⟨ỹ_i|ψ⟩ |y_i⟩: the projection of ψ onto the frame span.
inline StateVector frame_reconstruct(const StateVector& psi, const PovmSet& povm, const DualFrame& dual) {
  require(psi.size() == povm.dim, "frame_reconstruct: dimension mismatch");
  return povm.vectors() * (dual.duals.adjoint() * psi);
}

/// Σ_i ⟨y_i|ψ⟩ |ỹ_i⟩
inline StateVector frame_reconstruct_dual_order(const StateVector& psi, const PovmSet& povm, const DualFrame& dual) {
  require(psi.size() == povm.dim, "frame_reconstruct: dimension mismatch");
  return dual.duals * (povm.vectors().adjoint() * psi);
}

// ---------------------------------------------------------------------------
// Hermitian operator basis

/// Orthonormal (Hilbert–Schmidt) Hermitian basis of d × d matrices. Ordering:
/// I/√d, diagonal Gell-Mann l = 1..d−1, then for each j < k the symmetric and
/// antisymmetric off-diagonal pair.
inline std::vector<Matrix> hermitian_basis(int d) {
  require(d >= 1, "dimension must be >= 1");
  std::vector<Matrix> basis;
  basis.reserve(static_cast<std::size_t>(d) * d);
  basis.push_back(Matrix::Identity(d, d) / std::sqrt(static_cast<double>(d)));
  for (int l = 1; l < d; ++l) {
    Matrix b = Matrix::Zero(d, d);
    for (int m = 0; m < l; ++m) b(m, m) = 1.0;
    b(l, l) = -static_cast<double>(l);
    basis.push_back(b / std::sqrt(static_cast<double>(l) * (l + 1)));
  }
  const double h = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < d; ++j) {
    for (int k = j + 1; k < d; ++k) {
      Matrix s = Matrix::Zero(d, d);
      s(j, k) = h;
      s(k, j) = h;
      Matrix a = Matrix::Zero(d, d);
      a(j, k) = Complex(0.0, -h);
      a(k, j) = Complex(0.0, h);
      basis.push_back(std::move(s));
      basis.push_back(std::move(a));
    }
  }
  return basis;
}

/// Coordinates Tr(B_k A) of a Hermitian A in hermitian_basis(d).
inline RealVector vectorize_hermitian(const Matrix& a) {
  require(a.rows() == a.cols(), "vectorize_hermitian: matrix must be square");
  const int d = static_cast<int>(a.rows());
  RealVector v(static_cast<Eigen::Index>(d) * d);
  Eigen::Index k = 0;
  v(k++) = a.trace().real() / std::sqrt(static_cast<double>(d));
  double running = 0.0;
  for (int l = 1; l < d; ++l) {
    running += a(l - 1, l - 1).real();
    v(k++) = (running - l * a(l, l).real()) / std::sqrt(static_cast<double>(l) * (l + 1));
  }
  const double root2 = std::sqrt(2.0);
  for (int j = 0; j < d; ++j) {
    for (int m = j + 1; m < d; ++m) {
      const Complex avg = 0.5 * (a(j, m) + std::conj(a(m, j)));
      v(k++) = root2 * avg.real();
      v(k++) = -root2 * avg.imag();
    }
  }
  return v;
}

/// Inverse of vectorize_hermitian: Σ_k v_k B_k.
inline Matrix unvectorize_hermitian(const RealVector& v, int d) {
  require(v.size() == static_cast<Eigen::Index>(d) * d, "unvectorize_hermitian: length must be d^2");
  Matrix a = Matrix::Zero(d, d);
  Eigen::Index k = 0;
  const double c0 = v(k++) / std::sqrt(static_cast<double>(d));
  for (int m = 0; m < d; ++m) a(m, m) = c0;
  for (int l = 1; l < d; ++l) {
    const double c = v(k++) / std::sqrt(static_cast<double>(l) * (l + 1));
    for (int m = 0; m < l; ++m) a(m, m) += c;
    a(l, l) -= l * c;
  }
  const double h = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < d; ++j) {
    for (int m = j + 1; m < d; ++m) {
      const double s = v(k++);
      const double t = v(k++);
      a(j, m) = h * Complex(s, -t);
      a(m, j) = h * Complex(s, t);
    }
  }
  return a;
}

// ---------------------------------------------------------------------------
// Operator frame

/// S in vectorised form together with its pseudo-inverse and the dual-effect
/// coordinates. Computed once per povm and reused across trials.
struct OperatorFrame {
  int dim = 0;
  RealMatrix analysis;  // d² × N, column i = vec(Π_i)
  RealMatrix frame_matrix;  // S = analysis · analysisᵀ
  RealMatrix frame_pinv;
  RealMatrix support_projector;  // on the d²-dimensional coordinate space
  RealMatrix dual_coordinates;   // d² × N, column i = vec(Π̃_i)
  RealVector spectrum;           // eigenvalues of S, descending
  int support_rank = 0;
  double threshold = 0.0;

  Matrix dual_effect(std::size_t i) const {
    return unvectorize_hermitian(dual_coordinates.col(static_cast<Eigen::Index>(i)), dim);
  }
};

inline OperatorFrame build_operator_frame(const PovmSet& povm, double relative_threshold = 1e-12) {
  povm.validate();
  OperatorFrame out;
  out.dim = povm.dim;
  const Eigen::Index d2 = static_cast<Eigen::Index>(povm.dim) * povm.dim;
  out.analysis.resize(d2, static_cast<Eigen::Index>(povm.size()));
  for (std::size_t i = 0; i < povm.size(); ++i) {
    out.analysis.col(static_cast<Eigen::Index>(i)) = vectorize_hermitian(projector(povm.effects[i].vector));
  }
  out.frame_matrix = out.analysis * out.analysis.transpose();
  out.frame_matrix = 0.5 * (out.frame_matrix + out.frame_matrix.transpose()).eval();
  const Eigen::SelfAdjointEigenSolver<RealMatrix> solver(out.frame_matrix);
  if (solver.info() != Eigen::Success) fail(ErrorKind::numerical_consistency, "frame operator eigendecomposition failed");
  const RealVector& values = solver.eigenvalues();
  const RealMatrix& vectors = solver.eigenvectors();
  out.spectrum = values.reverse();
  out.threshold = relative_threshold * std::max(values.maxCoeff(), 0.0);
  out.frame_pinv = RealMatrix::Zero(d2, d2);
  out.support_projector = RealMatrix::Zero(d2, d2);
  for (Eigen::Index k = 0; k < d2; ++k) {
    if (values(k) <= out.threshold) continue;
    ++out.support_rank;
    out.frame_pinv += vectors.col(k) * vectors.col(k).transpose() / values(k);
    out.support_projector += vectors.col(k) * vectors.col(k).transpose();
  }
  out.dual_coordinates = out.frame_pinv * out.analysis;
  return out;
}

/// S(A) = Σ_i Tr(Π_i A) Π_i, summed directly over the effects.
inline Matrix operator_frame_apply(const Matrix& a, const PovmSet& povm) {
  povm.validate();
  require(a.rows() == povm.dim && a.cols() == povm.dim, "operator_frame_apply: dimension mismatch");
  const Matrix y = povm.vectors();
  const Eigen::VectorXcd weights = detail::quadratic_forms(a, y);
  return (y * weights.asDiagonal()) * y.adjoint();
}

struct LinearInversionResult {
  Matrix rho;  // Hermitian, not necessarily positive
  bool partial = false;  // S not invertible on the full operator space
  int support_rank = 0;
  int operator_dim = 0;
  RealMatrix support_projector;
};

/// ρ = Σ_i p_i Π̃_i with Π̃_i = S⁺(Π_i). No positivity constraint.
inline LinearInversionResult linear_inversion(const RealVector& probabilities, const OperatorFrame& frame) {
  require(probabilities.size() == frame.analysis.cols(), "linear_inversion: probabilities not aligned with povm");
  LinearInversionResult out;
  out.rho = unvectorize_hermitian(frame.dual_coordinates * probabilities, frame.dim);
  out.operator_dim = static_cast<int>(frame.frame_matrix.rows());
  out.support_rank = frame.support_rank;
  out.partial = frame.support_rank < out.operator_dim;
  if (out.partial) out.support_projector = frame.support_projector;
  return out;
}

inline LinearInversionResult linear_inversion(const RealVector& probabilities, const PovmSet& povm) {
  return linear_inversion(probabilities, build_operator_frame(povm));
}

/// Optional post-processing: clip negative eigenvalues and renormalise.
inline Matrix clip_to_physical(const Matrix& rho) {
  const Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (rho + rho.adjoint()));
  RealVector values = solver.eigenvalues().cwiseMax(0.0);
  require(values.sum() > 0.0, "clip_to_physical: no positive eigenvalues");
  values /= values.sum();
  return solver.eigenvectors() * values.cast<Complex>().asDiagonal() * solver.eigenvectors().adjoint();
}

/// ‖Q − G∘G*‖_max with Q from traces of effect products and G the state-space Gram matrix.
inline double hadamard_identity_check(const PovmSet& povm) {
  const RealMatrix q = gram_matrix_operator_space(povm);
  const Matrix g = gram_matrix_state_space(povm);
  const RealMatrix hadamard = g.cwiseProduct(g.conjugate()).real();
  return max_abs(q - hadamard);
}

struct ModalWeighting {
  Matrix modal;     // ρ̃ = U†ρU
  Matrix weighted;  // λ_k λ_l ρ̃_kl
  double congruence_defect = 0.0;  // ‖U (Λρ̃Λ) U† − GρG‖_max
};

inline ModalWeighting modal_weighting(const Matrix& rho, const GramAnalysis& analysis) {
  require(rho.rows() == analysis.dim() && rho.cols() == analysis.dim(), "modal_weighting: dimension mismatch");
  const Matrix& u = analysis.eigenvectors;
  ModalWeighting out;
  out.modal = u.adjoint() * rho * u;
  out.weighted = out.modal;
  for (int k = 0; k < analysis.dim(); ++k) {
    for (int l = 0; l < analysis.dim(); ++l) out.weighted(k, l) *= analysis.eigenvalues(k) * analysis.eigenvalues(l);
  }
  const Matrix g = analysis.reassemble();
  const Matrix direct = g * rho * g;
  out.congruence_defect = max_abs(u * out.weighted * u.adjoint() - direct);
  if (out.congruence_defect > 1e-9 * std::max(1.0, max_abs(direct))) {
    fail(ErrorKind::numerical_consistency,
         "modal weighting disagrees with G rho G (defect " + std::to_string(out.congruence_defect) + ")");
  }
  return out;
}

}  // namespace gramtomo
