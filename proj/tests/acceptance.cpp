// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "gramtomo/experiment.hpp"
#include "helpers.hpp"

using namespace gramtomo;
namespace fs = std::filesystem;
using gramtomo::testing::paper_cat;
using gramtomo::testing::paper_povm;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double min_eigenvalue(const Matrix& m) {
  const Eigen::SelfAdjointEigenSolver<Matrix> s(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  return s.eigenvalues().minCoeff();
}

const NoiseModel default_noise{NoiseKind::poisson, 1e5, 1};

// First verified run of the default homodyne configuration.
constexpr double pinned_gram[15] = {5.9999999999990274, 5.999999999932048, 5.999999997660665, 5.999999830024561,
                                    5.9999980153583365, 5.999982265068401, 5.99987402633447,  5.999270868364798,
                                    5.996503140271937,  5.985946678454656, 5.952333394953838, 5.863019331842607,
                                    5.6661407846520575, 5.31085293064924,  4.7991037209330685};

Outcome gram_spectrum_shape() {
  const PovmSet povm = paper_povm();
  const GramAnalysis g = gram_spectrum(gram_operator(povm));
  const GramAnalysis q = gram_spectrum(gram_matrix_operator_space(povm).cast<Complex>());
  bool positive = g.eigenvalues.minCoeff() > 0.0;
  bool descending = true;
  for (int k = 1; k < 15; ++k) descending = descending && g.eigenvalues(k) <= g.eigenvalues(k - 1);
  const double decay = g.eigenvalues(14) / g.eigenvalues(0);
  // Q decays faster than G over the tail after the leading mode.
  double c = 0.0;
  for (int k = 1; k < 15; ++k) {
    c = std::max(c, (q.eigenvalues(k) / q.eigenvalues(0)) / (g.eigenvalues(k) / g.eigenvalues(0)));
  }
  double drift = 0.0;
  for (int k = 0; k < 15; ++k) drift = std::max(drift, std::abs(g.eigenvalues(k) - pinned_gram[k]));
  Outcome o;
  o.pass = positive && descending && decay < 1e-2 && c <= 1.0 && drift < 1e-11;
  o.detail = std::string("positive=") + (positive ? "yes" : "no") + " descending=" + (descending ? "yes" : "no") +
             " lambda15/lambda1=" + fmt("%.4f", decay) + " (need < 1e-2) C=" + fmt("%.4f", c) +
             " (need <= 1) pinned drift=" + fmt("%.1e", drift) + " Q rank=" + std::to_string(q.rank);
  return o;
}

Outcome hadamard_identity() {
  double worst = hadamard_identity_check(paper_povm());
  const double paper = worst;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const int dim = 2 + static_cast<int>(seed % 14), n = 1 + static_cast<int>((seed * 7) % 40);
    worst = std::max(worst, hadamard_identity_check(gramtomo::testing::random_rank1_povm(dim, n, 1000 + seed)));
  }
  return {worst < 1e-14, "paper deviation " + fmt("%.2e", paper) + ", worst over paper + 50 random " + fmt("%.2e", worst)};
}

Outcome commuting_case() {
  const PovmSet povm = PovmSet::from_vectors(Matrix::Identity(15, 15));
  Matrix rho = gramtomo::testing::random_density(15, 5);
  rho = Matrix(rho.diagonal().asDiagonal());
  Dataset data = generate_counts(rho, povm, NoiseModel{NoiseKind::poisson, 500, 3});
  RealVector counts = data.counts;
  counts(4) = 0.0;  // an unobserved outcome must stay at zero weight
  data = Dataset::from_counts(counts);
  const ReconstructionResult r = maxlik_solve(data, povm);
  Matrix expect = Matrix::Zero(15, 15);
  expect.diagonal() = data.frequencies.cast<Complex>();
  const double err = max_abs(r.rho - expect);
  return {r.converged && err < 1e-10,
          "max |rho - diag(f)| = " + fmt("%.2e", err) + " after " + std::to_string(r.iterations) + " iterations"};
}

Outcome full_bandwidth() {
  const PovmSet povm = paper_povm();
  const StateVector cat = paper_cat();
  const Dataset data = generate_counts(projector(cat), povm, NoiseModel{NoiseKind::exact, 1e5, 1});
  ReconstructionConfig c;
  c.max_iterations = 1000000;
  const ReconstructionResult r = maxlik_solve(data, povm, c);
  const double f = fidelity(cat, r.rho);
  Outcome o;
  o.pass = f >= 1 - 1e-4 && r.extremal_residual < 1e-6 && r.born_residual < 1e-7;
  o.detail = "fidelity " + fmt("%.8f", f) + ", extremal residual " + fmt("%.2e", r.extremal_residual) + ", Born residual " +
             fmt("%.2e", r.born_residual) + ", " + std::to_string(r.iterations) + " iterations (" + r.stop_reason + ")";
  return o;
}

Outcome likelihood_ascent() {
  const PovmSet povm = paper_povm();
  double worst = 0.0;
  std::size_t steps = 0;
  for (std::uint64_t t = 0; t < 20; ++t) {
    const Matrix truth = t % 2 == 0 ? projector(gramtomo::testing::random_state(15, 50 + t))
                                    : gramtomo::testing::random_density(15, 50 + t, 3);
    const Dataset data = generate_counts(truth, povm, NoiseModel{NoiseKind::poisson, 1e5, 77}, t);
    ReconstructionConfig c;
    if (t % 4 == 3) c.basis = gram_spectrum(gram_operator(povm)).leading_modes(4 + static_cast<int>(t % 7));
    const ReconstructionResult r = maxlik_solve(data, povm, c);
    for (std::size_t k = 1; k < r.likelihood_trace.size(); ++k) {
      worst = std::max(worst, r.likelihood_trace[k - 1] - r.likelihood_trace[k]);
      ++steps;
    }
  }
  return {worst <= 1e-12, "largest per-step decrease " + fmt("%.2e", worst) + " over " + std::to_string(steps) + " steps"};
}

int first_dim_reaching(const SweepResult& s, double level) {
  for (std::size_t k = 0; k < s.dims.size(); ++k)
    if (s.stats[k].mean >= level) return s.dims[k];
  return 0;  // never reached
}

std::string means(const SweepResult& s) {
  std::string out;
  for (std::size_t k = 0; k < s.dims.size(); ++k) out += (k ? " " : "") + fmt("%.3f", s.stats[k].mean);
  return out;
}

Outcome dimension_ordering() {
  const PovmSet povm = paper_povm();
  std::vector<int> dims(15);
  for (int d = 1; d <= 15; ++d) dims[d - 1] = d;
  const SweepResult gram = dimension_sweep(paper_cat(), povm, BasisKind::gram, dims, default_noise, 8);
  const SweepResult fock = dimension_sweep(paper_cat(), povm, BasisKind::fock, dims, default_noise, 8);
  const int dg = first_dim_reaching(gram, 0.95), df = first_dim_reaching(fock, 0.95);
  Outcome o;
  o.pass = dg > 0 && df > 0 && dg <= 4 && df >= dg + 4 && df >= 8;
  o.detail = "d*(gram)=" + std::to_string(dg) + " d*(fock)=" + std::to_string(df) +
             " (need d*(gram) <= 4, d*(fock) >= d*(gram)+4, d*(fock) >= 8); mean F gram by d: " + means(gram) +
             "; fock by d: " + means(fock);
  return o;
}

Outcome stability() {
  const PovmSet povm = paper_povm();
  const StateVector cat = paper_cat();
  auto run = [&](BasisKind b, int d) { return stability_study(cat, povm, b, d, default_noise, 8, {}, std::nullopt); };
  const StabilityResult g3 = run(BasisKind::gram, 3), g11 = run(BasisKind::gram, 11);
  const StabilityResult g2 = run(BasisKind::gram, 2), f2 = run(BasisKind::fock, 2);
  Outcome o;
  const bool spread_ok = g11.spread() > g3.spread();
  const bool fock_ok = f2.stats.mean < g2.stats.mean;
  o.pass = spread_ok && fock_ok;
  o.detail = "spread gram d=11 " + fmt("%.3e", g11.spread()) + " vs d=3 " + fmt("%.3e", g3.spread()) +
             (spread_ok ? " (ok)" : " (not larger)") + "; mean F fock d=2 " + fmt("%.17g", f2.stats.mean) +
             " vs gram d=2 " + fmt("%.17g", g2.stats.mean) + (fock_ok ? " (ok)" : " (not lower)");
  return o;
}

Outcome frame_identities() {
  const PovmSet povm = paper_povm();
  const GramAnalysis a = gram_spectrum(gram_operator(povm));
  const DualFrame dual = dual_frame(povm, a);
  const Matrix y = povm.vectors();
  const double reassembly = std::max(max_abs(y * dual.duals.adjoint() - dual.support_projector),
                                     max_abs(dual.duals * y.adjoint() - dual.support_projector));

  auto round_trip = [](const PovmSet& p, std::uint64_t seed) {
    const OperatorFrame frame = build_operator_frame(p);
    const Matrix a = gramtomo::testing::random_hermitian(p.dim, seed);
    const Matrix inside = unvectorize_hermitian(frame.support_projector * vectorize_hermitian(a), p.dim);
    RealVector probs(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) probs(i) = p.effects[i].vector.dot(inside * p.effects[i].vector).real();
    return max_abs(linear_inversion(probs, frame).rho - inside);
  };
  double inversion = round_trip(povm, 1);
  double brute = 0.0;
  for (int d = 1; d <= 4; ++d) {
    for (int n : {d * d - 1, d * d, 16}) {
      if (n < 1) continue;
      const PovmSet p = gramtomo::testing::random_povm(d, n, 300 + 17 * d + n);
      inversion = std::max(inversion, round_trip(p, 400 + n));
      const OperatorFrame frame = build_operator_frame(p);
      const auto basis = hermitian_basis(d);
      for (int k = 0; k < d * d; ++k) {
        const RealVector direct = vectorize_hermitian(operator_frame_apply(basis[k], p));
        brute = std::max(brute, (direct - frame.frame_matrix.col(k)).cwiseAbs().maxCoeff());
      }
    }
  }
  Outcome o;
  o.pass = reassembly < 1e-9 && inversion < 1e-8 && brute < 1e-10;
  o.detail = "dual-frame reassembly " + fmt("%.2e", reassembly) + ", linear-inversion round trip " + fmt("%.2e", inversion) +
             ", S brute-force vs vectorized " + fmt("%.2e", brute);
  return o;
}

Outcome positivity_contrast() {
  const PovmSet povm = paper_povm();
  const OperatorFrame frame = build_operator_frame(povm);
  const Matrix cat = projector(paper_cat());
  int negative = 0;
  double worst_maxlik = 1.0, mildest_linear = -1.0;
  for (std::uint64_t t = 0; t < 20; ++t) {
    const Dataset data = generate_counts(cat, povm, default_noise, t);
    Matrix lin = linear_inversion(data.frequencies, frame).rho;
    lin /= lin.trace().real();
    const double lin_min = min_eigenvalue(lin);
    negative += lin_min < -1e-3;
    mildest_linear = std::max(mildest_linear, lin_min);
    worst_maxlik = std::min(worst_maxlik, min_eigenvalue(maxlik_solve(data, povm).rho));
  }
  Outcome o;
  o.pass = negative >= 15 && worst_maxlik >= -1e-10;
  o.detail = "linear inversion min-eigenvalue < -1e-3 in " + std::to_string(negative) + "/20 trials (least negative " +
             fmt("%.3e", mildest_linear) + "); MaxLik smallest eigenvalue " + fmt("%.2e", worst_maxlik);
  return o;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = io::read_text(e.path());
  return files;
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "gramtomo_acceptance_determinism";
  ExperimentConfig c = parse_config(io::json::parse(
      R"({"reconstruction": {"dimension": 3, "dims": [1, 3, 5], "trials": 2}, "wigner": {"resolution": 21}})"));
  c.output_directory = dir.string();
  auto run_all = [&] {
    fs::remove_all(dir);
    cmd_gram_spectrum(c);
    cmd_reconstruct(c);
    cmd_sweep(c);
    cmd_stability(c);
    cmd_frames_check(c);
    return snapshot(dir);
  };
  const auto first = run_all();
  const auto second = run_all();
  fs::remove_all(dir);
  int differing = 0;
  for (const auto& [name, bytes] : first) {
    const auto it = second.find(name);
    differing += it == second.end() || it->second != bytes;
  }
  differing += static_cast<int>(second.size() != first.size());
  return {differing == 0 && !first.empty(),
          std::to_string(first.size()) + " files from five commands, " + std::to_string(differing) + " differ on rerun"};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "Gram spectrum shape", 1.0, gram_spectrum_shape},
      {2, "Hadamard identity", 1.0, hadamard_identity},
      {3, "MaxLik commuting case", 1.0, commuting_case},
      {4, "self-consistency at full bandwidth", 30.0, full_bandwidth},
      {5, "likelihood ascent", 120.0, likelihood_ascent},
      {6, "Gram vs Fock dimension ordering", 600.0, dimension_ordering},
      {7, "stability vs dimension", 600.0, stability},
      {8, "frame identities", 60.0, frame_identities},
      {9, "linear inversion vs MaxLik positivity", 300.0, positivity_contrast},
      {10, "determinism", 60.0, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = seconds < c.budget_seconds;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("[%s] %2d %s: %s; runtime %.2f s (budget %.0f s)%s\n", pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), seconds, c.budget_seconds, in_time ? "" : " EXCEEDED");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
