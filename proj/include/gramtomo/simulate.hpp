#pragma once

// Synthetic homodyne data and the reconstruction experiments built on it.

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gramtomo/core.hpp"
#include "gramtomo/fock.hpp"
#include "gramtomo/maxlik.hpp"
#include "gramtomo/povm.hpp"

namespace gramtomo {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the independent stream used by trial `trial`.
inline std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) {
  return splitmix64(seed ^ splitmix64(trial + 0x632be59bd9b4e019ULL));
}

/// Counter-based generator: output k is a hash of (key, k). Streams for
/// different trials never share state, so draw order cannot depend on
/// scheduling.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(splitmix64(key)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return splitmix64(key_ ^ splitmix64(counter_++)); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

enum class NoiseKind { exact, multinomial, poisson };

struct NoiseModel {
  NoiseKind kind = NoiseKind::poisson;
  double exposure = 100000.0;
  std::uint64_t seed = 1;

  void validate() const {
    require(std::isfinite(exposure) && exposure > 0.0, "noise exposure must be positive");
    if (kind == NoiseKind::multinomial) {
      require(exposure == std::floor(exposure), "multinomial exposure must be an integer");
    }
  }
};

/// Counts for outcome probabilities of ρ. `trial` selects the random stream.
inline Dataset generate_counts(const Matrix& rho, const PovmSet& povm, const NoiseModel& noise,
                               std::uint64_t trial = 0) {
  noise.validate();
  const RealVector p = expected_probabilities(rho, povm);
  const double norm = p.sum();
  if (!(norm > 0.0)) fail(ErrorKind::empty_data, "generate_counts: all outcome probabilities are zero");
  const RealVector q = p / norm;
  RealVector counts(q.size());
  CounterRng rng(trial_seed(noise.seed, trial));
  switch (noise.kind) {
    case NoiseKind::exact:
      counts = noise.exposure * q;
      break;
    case NoiseKind::poisson:
      for (Eigen::Index i = 0; i < q.size(); ++i) {
        const double mean = noise.exposure * q(i);
        if (mean <= 0.0) {
          counts(i) = 0.0;
          continue;
        }
        std::poisson_distribution<long long> draw(mean);
        counts(i) = static_cast<double>(draw(rng));
      }
      break;
    case NoiseKind::multinomial: {
      auto remaining = static_cast<long long>(noise.exposure);
      double mass = 1.0;
      for (Eigen::Index i = 0; i < q.size(); ++i) {
        long long n = 0;
        if (i + 1 == q.size()) {
          n = remaining;
        } else if (remaining > 0 && q(i) > 0.0) {
          const double prob = std::clamp(q(i) / mass, 0.0, 1.0);
          std::binomial_distribution<long long> draw(remaining, prob);
          n = draw(rng);
        }
        counts(i) = static_cast<double>(n);
        remaining -= n;
        mass -= q(i);
        if (mass <= 0.0) mass = std::numeric_limits<double>::min();
      }
      break;
    }
  }
  return Dataset::from_counts(std::move(counts));
}

enum class BasisKind { gram, fock };

inline std::string to_string(BasisKind kind) { return kind == BasisKind::gram ? "gram" : "fock"; }
inline std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::exact: return "exact";
    case NoiseKind::multinomial: return "multinomial";
    case NoiseKind::poisson: return "poisson";
  }
  return "unknown";
}

/// Top-d Gram eigenvectors, or the first d Fock states.
inline Matrix reconstruction_basis(BasisKind kind, int d, const GramAnalysis& analysis) {
  require(d >= 1 && d <= analysis.dim(), "reconstruction dimension out of range");
  if (kind == BasisKind::gram) return analysis.leading_modes(d);
  return Matrix::Identity(analysis.dim(), d);
}

struct SweepEntry {
  int dim = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  double fidelity = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct FidelityStats {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single trial
};

inline FidelityStats summarize(const std::vector<double>& values) {
  require(!values.empty(), "summarize: no values");
  FidelityStats s;
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / values.size();
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / (values.size() - 1));
  }
  return s;
}

struct SweepResult {
  BasisKind basis = BasisKind::gram;
  NoiseModel noise;
  int trials = 0;
  std::vector<int> dims;
  std::vector<FidelityStats> stats;  // aligned with dims
  std::vector<SweepEntry> entries;   // dim-major, trial-minor
  std::vector<std::uint64_t> trial_seeds;
};

namespace detail {

inline void check_sweep_inputs(const StateVector& target, const PovmSet& povm, int trials) {
  povm.validate();
  require(target.size() == povm.dim, "target dimension does not match povm");
  require(std::abs(target.norm() - 1.0) < 1e-10, "target state must be normalised");
  require(trials >= 1, "trial count must be >= 1");
}

inline std::vector<Dataset> trial_datasets(const StateVector& target, const PovmSet& povm, const NoiseModel& noise,
                                           int trials) {
  const Matrix rho = projector(target);
  std::vector<Dataset> out;
  out.reserve(trials);
  for (int t = 0; t < trials; ++t) out.push_back(generate_counts(rho, povm, noise, static_cast<std::uint64_t>(t)));
  return out;
}

}  // namespace detail

/// Fidelity of MaxLik reconstructions versus reconstruction dimension. Each
/// trial draws one dataset, shared across all dimensions.
inline SweepResult dimension_sweep(const StateVector& target, const PovmSet& povm, BasisKind basis,
                                   const std::vector<int>& dims, const NoiseModel& noise, int trials,
                                   const ReconstructionConfig& base = {}) {
  detail::check_sweep_inputs(target, povm, trials);
  require(!dims.empty(), "dimension list is empty");
  for (int d : dims) require(d >= 1 && d <= povm.dim, "sweep dimension out of range");
  const GramAnalysis analysis = gram_spectrum(gram_operator(povm), base.rank_threshold);
  const auto datasets = detail::trial_datasets(target, povm, noise, trials);

  SweepResult out;
  out.basis = basis;
  out.noise = noise;
  out.trials = trials;
  out.dims = dims;
  for (int t = 0; t < trials; ++t) out.trial_seeds.push_back(trial_seed(noise.seed, static_cast<std::uint64_t>(t)));
  for (int d : dims) {
    ReconstructionConfig config = base;
    config.basis = reconstruction_basis(basis, d, analysis);
    std::vector<double> fidelities;
    for (int t = 0; t < trials; ++t) {
      const ReconstructionResult r = maxlik_solve(datasets[t], povm, config);
      SweepEntry e;
      e.dim = d;
      e.trial = t;
      e.seed = out.trial_seeds[t];
      e.fidelity = fidelity(target, r.rho);
      e.converged = r.converged;
      e.iterations = r.iterations;
      fidelities.push_back(e.fidelity);
      out.entries.push_back(e);
    }
    out.stats.push_back(summarize(fidelities));
  }
  return out;
}

struct StabilityTrial {
  int trial = 0;
  std::uint64_t seed = 0;
  double fidelity = 0.0;
  bool converged = false;
  int iterations = 0;
  Matrix rho;
  RealMatrix wigner;
};

struct StabilityResult {
  BasisKind basis = BasisKind::gram;
  int dim = 0;
  NoiseModel noise;
  PhaseSpaceGrid grid;
  std::vector<StabilityTrial> trials;
  FidelityStats stats;

  /// Standard deviation of fidelity across trials.
  double spread() const { return stats.stddev; }
};

/// Repeated reconstructions in one fixed subspace from independent datasets.
inline StabilityResult stability_study(const StateVector& target, const PovmSet& povm, BasisKind basis, int d,
                                       const NoiseModel& noise, int trials, const ReconstructionConfig& base = {},
                                       const std::optional<PhaseSpaceGrid>& grid = PhaseSpaceGrid{}) {
  detail::check_sweep_inputs(target, povm, trials);
  require(trials >= 2, "stability study needs at least two trials");
  const GramAnalysis analysis = gram_spectrum(gram_operator(povm), base.rank_threshold);
  ReconstructionConfig config = base;
  config.basis = reconstruction_basis(basis, d, analysis);

  StabilityResult out;
  out.basis = basis;
  out.dim = d;
  out.noise = noise;
  if (grid) out.grid = *grid;
  const auto datasets = detail::trial_datasets(target, povm, noise, trials);
  std::vector<double> fidelities;
  for (int t = 0; t < trials; ++t) {
    const ReconstructionResult r = maxlik_solve(datasets[t], povm, config);
    StabilityTrial s;
    s.trial = t;
    s.seed = trial_seed(noise.seed, static_cast<std::uint64_t>(t));
    s.fidelity = fidelity(target, r.rho);
    s.converged = r.converged;
    s.iterations = r.iterations;
    s.rho = r.rho;
    if (grid) s.wigner = wigner(r.rho, *grid);
    fidelities.push_back(s.fidelity);
    out.trials.push_back(std::move(s));
  }
  out.stats = summarize(fidelities);
  return out;
}

}  // namespace gramtomo
