#pragma once

#include <cstdint>
#include <random>

#include "gramtomo/povm.hpp"
#include "gramtomo/simulate.hpp"

namespace gramtomo::testing {

inline Matrix random_matrix(int rows, int cols, std::uint64_t seed) {
  CounterRng rng(seed);
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = Complex(normal(rng), normal(rng));
  return m;
}

inline StateVector random_state(int dim, std::uint64_t seed) {
  StateVector v = random_matrix(dim, 1, seed).col(0);
  return v.normalized();
}

inline Matrix random_hermitian(int dim, std::uint64_t seed) {
  const Matrix a = random_matrix(dim, dim, seed);
  return 0.5 * (a + a.adjoint());
}

inline Matrix random_density(int dim, std::uint64_t seed, int rank = -1) {
  if (rank < 0) rank = dim;
  const Matrix a = random_matrix(dim, rank, seed);
  const Matrix rho = a * a.adjoint();
  return rho / rho.trace().real();
}

inline PovmSet random_povm(int dim, int outcomes, std::uint64_t seed) {
  return PovmSet::from_vectors(random_matrix(dim, outcomes, seed));
}

/// Random rank-1 effects scaled so that G ≤ I, i.e. a genuine (incomplete) POVM.
inline PovmSet random_rank1_povm(int dim, int outcomes, std::uint64_t seed) {
  Matrix y = random_matrix(dim, outcomes, seed);
  const Eigen::SelfAdjointEigenSolver<Matrix> s(y * y.adjoint(), Eigen::EigenvaluesOnly);
  y /= std::sqrt(s.eigenvalues().maxCoeff());
  return PovmSet::from_vectors(y);
}

inline PovmSet paper_povm() { return build_homodyne_povm(HomodyneConfig{}, 15); }

inline StateVector paper_cat() { return cat_state(Complex(2.0, 0.0), Parity::even, 15); }

}  // namespace gramtomo::testing
