#pragma once

#include <algorithm>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace gramtomo {

using Complex = std::complex<double>;

/// Amplitudes in the truncated Fock basis (or in a subspace basis).
using StateVector = Eigen::VectorXcd;

/// Dense complex matrix; density operators, Gram operators and effects share it.
using Matrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

enum class ErrorKind {
  invalid_input,
  numerical_consistency,
  empty_data,
  io,
};

/// Single exception type for the library; the kind selects the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(ErrorKind::invalid_input, what);
}

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

/// ‖M − M†‖_max
inline double hermiticity_defect(const Matrix& m) {
  return max_abs(m - m.adjoint());
}

/// Hermitian within `tol` relative to the largest entry (absolute below 1).
inline bool is_hermitian(const Matrix& m, double tol = 1e-10) {
  if (m.rows() != m.cols()) return false;
  return hermiticity_defect(m) <= tol * std::max(1.0, max_abs(m));
}

inline Matrix projector(const StateVector& v) { return v * v.adjoint(); }

}  // namespace gramtomo
