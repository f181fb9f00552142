#pragma once

// Truncated Fock-space states, quadrature wavefunctions, Wigner functions.
//
// Conventions: hbar = 1, x = (a + a†)/√2, p = (a − a†)/(i√2). The rotated
// quadrature x_θ = x cos θ + p sin θ has eigenvectors with
// ⟨x_θ|n⟩ = e^{−inθ} ψ_n(x). The Wigner function is normalised so that
// ∫∫ W dx dp = 1 (vacuum peak 1/π).

#include <cmath>
#include <numbers>
#include <vector>

#include "gramtomo/core.hpp"

namespace gramtomo {

enum class Parity { even, odd };

inline void check_dim(int dim) { require(dim >= 1, "dimension must be >= 1"); }

inline StateVector fock_state(int n, int dim) {
  check_dim(dim);
  require(n >= 0 && n < dim, "Fock index out of range");
  StateVector v = StateVector::Zero(dim);
  v(n) = 1.0;
  return v;
}

/// Coherent-state amplitudes e^{−|α|²/2} α^n / √n! for n < dim.
///
/// The truncated tail is not renormalised unless `normalize` is set, so the
/// truncation leak 1 − Σ|c_n|² stays observable.
inline StateVector coherent_state(Complex alpha, int dim, bool normalize = false) {
  check_dim(dim);
  require(std::isfinite(alpha.real()) && std::isfinite(alpha.imag()),
          "coherent amplitude must be finite");
  StateVector c(dim);
  c(0) = std::exp(-0.5 * std::norm(alpha));
  for (int n = 1; n < dim; ++n) c(n) = c(n - 1) * alpha / std::sqrt(static_cast<double>(n));
  if (normalize) c.normalize();
  return c;
}

/// N(|α⟩ ± |−α⟩), normalised within the truncated space. Amplitudes of the
/// excluded parity are exactly zero.
inline StateVector cat_state(Complex alpha, Parity parity, int dim) {
  check_dim(dim);
  StateVector c = coherent_state(alpha, dim);
  const int keep = parity == Parity::even ? 0 : 1;
  for (int n = 0; n < dim; ++n) c(n) = (n % 2 == keep) ? 2.0 * c(n) : Complex(0.0);
  const double norm = c.norm();
  if (!(norm > 0.0)) {
    fail(ErrorKind::invalid_input, "cat state is the zero vector (odd parity with alpha = 0, "
                                   "or no odd level inside the cutoff)");
  }
  return c / norm;
}

/// Normalised Hermite functions ψ_0(x) .. ψ_{count−1}(x) by the three-term
/// recurrence ψ_{n+1} = x√(2/(n+1)) ψ_n − √(n/(n+1)) ψ_{n−1}.
inline RealVector hermite_functions(double x, int count) {
  require(count >= 0, "count must be non-negative");
  require(std::isfinite(x), "quadrature value must be finite");
  RealVector psi = RealVector::Zero(count);
  if (count == 0) return psi;
  psi(0) = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * x * x);
  if (count > 1) psi(1) = std::numbers::sqrt2 * x * psi(0);
  for (int n = 1; n + 1 < count; ++n) {
    psi(n + 1) = x * std::sqrt(2.0 / (n + 1)) * psi(n) - std::sqrt(static_cast<double>(n) / (n + 1)) * psi(n - 1);
  }
  return psi;
}

/// ⟨x_θ|n⟩ = e^{−inθ} ψ_n(x)
inline Complex quadrature_overlap(int n, double x, double theta) {
  require(n >= 0, "Fock index must be non-negative");
  require(std::isfinite(theta), "phase must be finite");
  const double psi = hermite_functions(x, n + 1)(n);
  return std::polar(psi, -n * theta);
}

/// Column of ⟨n|x_θ⟩ for n < dim.
inline StateVector quadrature_eigenvector(double x, double theta, int dim) {
  check_dim(dim);
  require(std::isfinite(theta), "phase must be finite");
  const RealVector psi = hermite_functions(x, dim);
  StateVector v(dim);
  for (int n = 0; n < dim; ++n) v(n) = std::polar(psi(n), n * theta);
  return v;
}

struct PhaseSpaceGrid {
  double x_min = -5.0;
  double x_max = 5.0;
  double p_min = -5.0;
  double p_max = 5.0;
  int x_points = 101;
  int p_points = 101;

  void validate() const {
    require(std::isfinite(x_min) && std::isfinite(x_max) && x_min < x_max, "grid x-range must satisfy lower < upper");
    require(std::isfinite(p_min) && std::isfinite(p_max) && p_min < p_max, "grid p-range must satisfy lower < upper");
    require(x_points >= 2 && p_points >= 2, "grid resolution must be >= 2");
  }

  double x(int i) const { return x_min + (x_max - x_min) * i / (x_points - 1); }
  double p(int j) const { return p_min + (p_max - p_min) * j / (p_points - 1); }
};

namespace detail {

// Tr(ρ D(α) P D(α)†) with α = (x + ip)/√2, P the parity operator.
inline Complex displaced_parity_expectation(const Matrix& rho, double x, double p,
                                            const std::vector<double>& log_factorial) {
  const int dim = static_cast<int>(rho.rows());
  const Complex beta = Complex(x, p) * std::numbers::sqrt2;  // 2α
  const double r = std::norm(beta);
  const double envelope = std::exp(-0.5 * r);
  Complex total = 0.0;
  std::vector<double> laguerre(dim);
  Complex beta_power = 1.0;
  for (int k = 0; k < dim; ++k) {
    const int count = dim - k;
    // Generalised Laguerre L_n^{(k)}(r) for n < count.
    laguerre[0] = 1.0;
    if (count > 1) laguerre[1] = 1.0 + k - r;
    for (int n = 1; n + 1 < count; ++n) {
      laguerre[n + 1] = ((2 * n + 1 + k - r) * laguerre[n] - (n + k) * laguerre[n - 1]) / (n + 1);
    }
    for (int n = 0; n < count; ++n) {
      const int m = n + k;
      const double sign = (n % 2 == 0) ? 1.0 : -1.0;
      const double scale = std::exp(0.5 * (log_factorial[n] - log_factorial[m]));
      const Complex kernel = sign * scale * beta_power * envelope * laguerre[n];  // ⟨m|K|n⟩
      total += rho(n, m) * kernel;
      if (k > 0) total += rho(m, n) * std::conj(kernel);
    }
    beta_power *= beta;
  }
  return total;
}

inline std::vector<double> log_factorials(int count) {
  std::vector<double> out(count);
  for (int n = 0; n < count; ++n) out[n] = std::lgamma(n + 1.0);
  return out;
}

}  // namespace detail

/// W(x, p) at a single phase-space point.
inline double wigner_point(const Matrix& rho, double x, double p) {
  require(rho.rows() == rho.cols() && rho.rows() >= 1, "density operator must be square");
  const Complex value = detail::displaced_parity_expectation(rho, x, p, detail::log_factorials(rho.rows())) / std::numbers::pi;
  if (std::abs(value.imag()) > 1e-8) {
    fail(ErrorKind::numerical_consistency, "Wigner value has imaginary residue " + std::to_string(value.imag()));
  }
  return value.real();
}

/// Wigner function on a grid; row j holds p = grid.p(j), column i holds x = grid.x(i).
inline RealMatrix wigner(const Matrix& rho, const PhaseSpaceGrid& grid) {
  grid.validate();
  require(rho.rows() == rho.cols() && rho.rows() >= 1, "density operator must be square");
  require(is_hermitian(rho), "density operator must be Hermitian");
  require(std::abs(rho.trace() - 1.0) < 1e-8, "density operator must have unit trace");
  const auto log_factorial = detail::log_factorials(rho.rows());
  RealMatrix w(grid.p_points, grid.x_points);
  double worst_imag = 0.0;
  for (int j = 0; j < grid.p_points; ++j) {
    for (int i = 0; i < grid.x_points; ++i) {
      const Complex value = detail::displaced_parity_expectation(rho, grid.x(i), grid.p(j), log_factorial) / std::numbers::pi;
      worst_imag = std::max(worst_imag, std::abs(value.imag()));
      w(j, i) = value.real();
    }
  }
  if (worst_imag > 1e-8) {
    fail(ErrorKind::numerical_consistency, "Wigner grid has imaginary residue " + std::to_string(worst_imag));
  }
  return w;
}

/// ⟨ψ|ρ|ψ⟩, equal to |⟨ψ|φ⟩|² when ρ = |φ⟩⟨φ|.
inline double fidelity(const StateVector& psi, const Matrix& rho) {
  require(rho.rows() == rho.cols() && psi.size() == rho.rows(), "fidelity: dimension mismatch");
  const double value = psi.dot(rho * psi).real();
  return std::clamp(value, 0.0, 1.0);
}

/// Checks the DensityOperator invariants; throws invalid_input on violation.
inline void validate_density(const Matrix& rho, bool normalized = true) {
  require(rho.rows() == rho.cols() && rho.rows() >= 1, "density operator must be square and non-empty");
  require(hermiticity_defect(rho) < 1e-12 * std::max(1.0, max_abs(rho)), "density operator is not Hermitian");
  const Eigen::SelfAdjointEigenSolver<Matrix> solver(rho, Eigen::EigenvaluesOnly);
  require(solver.eigenvalues().minCoeff() >= -1e-10, "density operator is not positive semidefinite");
  if (normalized) require(std::abs(rho.trace().real() - 1.0) < 1e-10, "density operator trace is not 1");
}

}  // namespace gramtomo
