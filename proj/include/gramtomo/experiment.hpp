#pragma once

// Configuration-driven experiments behind the gramtomo command-line tool.
// Each command is a pure function of the resolved configuration; every file
// it writes embeds that configuration.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gramtomo/core.hpp"
#include "gramtomo/fock.hpp"
#include "gramtomo/frames.hpp"
#include "gramtomo/io.hpp"
#include "gramtomo/maxlik.hpp"
#include "gramtomo/povm.hpp"
#include "gramtomo/simulate.hpp"

namespace gramtomo {

enum class MeasurementKind { homodyne, fock_projectors };

struct TargetSpec {
  std::string kind = "cat";  // cat | coherent | fock
  Complex alpha{2.0, 0.0};
  Parity parity = Parity::even;
  int fock_index = 0;
};

struct ExperimentConfig {
  TargetSpec target;
  int fock_cutoff = 14;
  MeasurementKind measurement = MeasurementKind::homodyne;
  HomodyneConfig homodyne;
  NoiseModel noise;
  BasisKind basis = BasisKind::gram;
  std::optional<int> dimension;  // nullopt: full ambient dimension
  std::vector<int> dims;         // empty: 1..dim
  std::vector<BasisKind> sweep_bases{BasisKind::gram, BasisKind::fock};
  int trials = 4;
  ReconstructionConfig solver;
  double bandwidth_ratio = 1e-3;
  PhaseSpaceGrid grid;
  std::optional<std::string> counts_file;
  std::optional<std::string> povm_file;
  std::string output_directory = "gramtomo-out";
  std::vector<std::string> formats{"csv", "json"};

  int dim() const { return fock_cutoff + 1; }

  bool wants(const std::string& format) const {
    return std::find(formats.begin(), formats.end(), format) != formats.end();
  }

  std::vector<int> resolved_dims() const {
    if (!dims.empty()) return dims;
    std::vector<int> out;
    for (int d = 1; d <= dim(); ++d) out.push_back(d);
    return out;
  }
};

namespace config_detail {

using io::json;

inline void reject_unknown(const json& object, const std::set<std::string>& allowed, const std::string& where) {
  if (!object.is_object()) fail(ErrorKind::invalid_input, where + " must be a JSON object");
  for (const auto& [key, value] : object.items()) {
    if (!allowed.count(key)) fail(ErrorKind::invalid_input, "unknown key \"" + key + "\" in " + where);
  }
}

template <typename T>
T get(const json& object, const std::string& key, const std::string& where) {
  try {
    return object.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::invalid_input, where + "." + key + ": " + e.what());
  }
}

inline double get_number(const json& object, const std::string& key, const std::string& where) {
  if (!object.at(key).is_number()) fail(ErrorKind::invalid_input, where + "." + key + " must be a number");
  return object.at(key).get<double>();
}

inline int get_int(const json& object, const std::string& key, const std::string& where) {
  if (!object.at(key).is_number_integer()) fail(ErrorKind::invalid_input, where + "." + key + " must be an integer");
  return object.at(key).get<int>();
}

inline std::pair<double, double> get_range(const json& object, const std::string& key, const std::string& where) {
  const json& r = object.at(key);
  if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number()) {
    fail(ErrorKind::invalid_input, where + "." + key + " must be a [lower, upper] pair");
  }
  return {r[0].get<double>(), r[1].get<double>()};
}

inline BasisKind parse_basis(const std::string& s) {
  if (s == "gram") return BasisKind::gram;
  if (s == "fock") return BasisKind::fock;
  fail(ErrorKind::invalid_input, "basis must be \"gram\" or \"fock\", got \"" + s + "\"");
}

inline NoiseKind parse_noise(const std::string& s) {
  if (s == "exact") return NoiseKind::exact;
  if (s == "multinomial") return NoiseKind::multinomial;
  if (s == "poisson") return NoiseKind::poisson;
  fail(ErrorKind::invalid_input, "noise kind must be exact, multinomial or poisson, got \"" + s + "\"");
}

}  // namespace config_detail

/// Checks value ranges across the whole configuration.
inline void validate(const ExperimentConfig& c) {
  require(c.target.kind == "cat" || c.target.kind == "coherent" || c.target.kind == "fock",
          "target.kind must be cat, coherent or fock");
  require(c.fock_cutoff >= 0, "fock_cutoff must be >= 0");
  if (c.target.kind == "fock") require(c.target.fock_index >= 0 && c.target.fock_index < c.dim(), "target.n must lie in [0, fock_cutoff]");
  c.homodyne.validate();
  c.noise.validate();
  c.solver.validate();
  c.grid.validate();
  require(c.trials >= 1, "trials must be >= 1");
  require(c.bandwidth_ratio > 0.0 && c.bandwidth_ratio < 1.0, "bandwidth_ratio must lie in (0, 1)");
  if (c.dimension) require(*c.dimension >= 1 && *c.dimension <= c.dim(), "reconstruction dimension must lie in [1, fock_cutoff + 1]");
  for (int d : c.dims) require(d >= 1 && d <= c.dim(), "dims entries must lie in [1, fock_cutoff + 1]");
  require(!c.sweep_bases.empty(), "sweep_bases must not be empty");
  require(!c.formats.empty(), "output formats must not be empty");
  for (const auto& f : c.formats) require(f == "csv" || f == "json", "output format must be csv or json");
  require(!c.output_directory.empty(), "output directory must not be empty");
}

/// Parses and validates a configuration document. Unknown keys are rejected
/// at every level; absent keys keep their defaults.
inline ExperimentConfig parse_config(const io::json& j, ExperimentConfig c = {}) {
  using namespace config_detail;
  reject_unknown(j, {"target", "fock_cutoff", "measurement", "homodyne", "noise", "reconstruction", "wigner",
                     "counts_file", "povm_file", "output"},
                 "config");
  if (j.contains("target")) {
    const json& t = j.at("target");
    reject_unknown(t, {"kind", "alpha", "parity", "n"}, "target");
    if (t.contains("kind")) c.target.kind = get<std::string>(t, "kind", "target");
    if (t.contains("alpha")) c.target.alpha = io::complex_from_json(t.at("alpha"));
    if (t.contains("parity")) {
      const auto p = get<std::string>(t, "parity", "target");
      require(p == "even" || p == "odd", "target.parity must be even or odd");
      c.target.parity = p == "even" ? Parity::even : Parity::odd;
    }
    if (t.contains("n")) c.target.fock_index = get_int(t, "n", "target");
  }
  if (j.contains("fock_cutoff")) c.fock_cutoff = get_int(j, "fock_cutoff", "config");
  if (j.contains("measurement")) {
    const auto m = get<std::string>(j, "measurement", "config");
    require(m == "homodyne" || m == "fock-projectors", "measurement must be homodyne or fock-projectors");
    c.measurement = m == "homodyne" ? MeasurementKind::homodyne : MeasurementKind::fock_projectors;
  }
  if (j.contains("homodyne")) {
    const json& h = j.at("homodyne");
    reject_unknown(h, {"phase_count", "phases", "bins", "range"}, "homodyne");
    if (h.contains("phase_count")) c.homodyne.phase_count = get_int(h, "phase_count", "homodyne");
    if (h.contains("phases")) {
      c.homodyne.phases = get<std::vector<double>>(h, "phases", "homodyne");
      if (!h.contains("phase_count")) c.homodyne.phase_count = static_cast<int>(c.homodyne.phases.size());
    }
    if (h.contains("bins")) c.homodyne.bins = get_int(h, "bins", "homodyne");
    if (h.contains("range")) std::tie(c.homodyne.x_min, c.homodyne.x_max) = get_range(h, "range", "homodyne");
  }
  if (j.contains("noise")) {
    const json& n = j.at("noise");
    reject_unknown(n, {"kind", "exposure", "seed"}, "noise");
    if (n.contains("kind")) c.noise.kind = parse_noise(get<std::string>(n, "kind", "noise"));
    if (n.contains("exposure")) c.noise.exposure = get_number(n, "exposure", "noise");
    if (n.contains("seed")) {
      if (!n.at("seed").is_number_unsigned()) fail(ErrorKind::invalid_input, "noise.seed must be a non-negative integer");
      c.noise.seed = n.at("seed").get<std::uint64_t>();
    }
  }
  if (j.contains("reconstruction")) {
    const json& r = j.at("reconstruction");
    reject_unknown(r, {"basis", "dimension", "dims", "sweep_bases", "trials", "dilution", "min_dilution",
                       "probability_floor", "max_iterations", "tol_likelihood", "tol_born", "tol_gap",
                       "rank_threshold", "bandwidth_ratio"},
                   "reconstruction");
    const std::string w = "reconstruction";
    if (r.contains("basis")) c.basis = parse_basis(get<std::string>(r, "basis", w));
    if (r.contains("dimension")) {
      if (r.at("dimension").is_null()) c.dimension.reset();
      else c.dimension = get_int(r, "dimension", w);
    }
    if (r.contains("dims")) c.dims = get<std::vector<int>>(r, "dims", w);
    if (r.contains("sweep_bases")) {
      c.sweep_bases.clear();
      for (const auto& b : get<std::vector<std::string>>(r, "sweep_bases", w)) c.sweep_bases.push_back(parse_basis(b));
    }
    if (r.contains("trials")) c.trials = get_int(r, "trials", w);
    if (r.contains("dilution")) c.solver.dilution = get_number(r, "dilution", w);
    if (r.contains("min_dilution")) c.solver.min_dilution = get_number(r, "min_dilution", w);
    if (r.contains("probability_floor")) c.solver.probability_floor = get_number(r, "probability_floor", w);
    if (r.contains("max_iterations")) c.solver.max_iterations = get_int(r, "max_iterations", w);
    if (r.contains("tol_likelihood")) c.solver.tol_likelihood = get_number(r, "tol_likelihood", w);
    if (r.contains("tol_born")) c.solver.tol_born = get_number(r, "tol_born", w);
    if (r.contains("tol_gap")) c.solver.tol_gap = get_number(r, "tol_gap", w);
    if (r.contains("rank_threshold")) c.solver.rank_threshold = get_number(r, "rank_threshold", w);
    if (r.contains("bandwidth_ratio")) c.bandwidth_ratio = get_number(r, "bandwidth_ratio", w);
  }
  if (j.contains("wigner")) {
    const json& g = j.at("wigner");
    reject_unknown(g, {"x_range", "p_range", "resolution"}, "wigner");
    if (g.contains("x_range")) std::tie(c.grid.x_min, c.grid.x_max) = get_range(g, "x_range", "wigner");
    if (g.contains("p_range")) std::tie(c.grid.p_min, c.grid.p_max) = get_range(g, "p_range", "wigner");
    if (g.contains("resolution")) c.grid.x_points = c.grid.p_points = get_int(g, "resolution", "wigner");
  }
  if (j.contains("counts_file")) {
    if (j.at("counts_file").is_null()) c.counts_file.reset();
    else c.counts_file = get<std::string>(j, "counts_file", "config");
  }
  if (j.contains("povm_file")) {
    if (j.at("povm_file").is_null()) c.povm_file.reset();
    else c.povm_file = get<std::string>(j, "povm_file", "config");
  }
  if (j.contains("output")) {
    const json& o = j.at("output");
    reject_unknown(o, {"directory", "formats"}, "output");
    if (o.contains("directory")) c.output_directory = get<std::string>(o, "directory", "output");
    if (o.contains("formats")) c.formats = get<std::vector<std::string>>(o, "formats", "output");
  }
  validate(c);
  return c;
}

/// The fully resolved configuration (defaults materialised).
inline io::json to_json(const ExperimentConfig& c) {
  using io::json;
  json target = {{"kind", c.target.kind}};
  if (c.target.kind == "fock") {
    target["n"] = c.target.fock_index;
  } else {
    target["alpha"] = io::to_json(c.target.alpha);
    if (c.target.kind == "cat") target["parity"] = c.target.parity == Parity::even ? "even" : "odd";
  }
  json sweep_bases = json::array();
  for (auto b : c.sweep_bases) sweep_bases.push_back(to_string(b));
  json out = {
      {"target", target},
      {"fock_cutoff", c.fock_cutoff},
      {"measurement", c.measurement == MeasurementKind::homodyne ? "homodyne" : "fock-projectors"},
      {"homodyne",
       {{"phase_count", c.homodyne.phase_count},
        {"phases", c.homodyne.resolved_phases()},
        {"bins", c.homodyne.bins},
        {"range", json::array({c.homodyne.x_min, c.homodyne.x_max})}}},
      {"noise", io::to_json(c.noise)},
      {"reconstruction",
       {{"basis", to_string(c.basis)},
        {"dimension", c.dimension ? json(*c.dimension) : json(nullptr)},
        {"dims", c.resolved_dims()},
        {"sweep_bases", sweep_bases},
        {"trials", c.trials},
        {"dilution", c.solver.dilution},
        {"min_dilution", c.solver.min_dilution},
        {"probability_floor", c.solver.probability_floor},
        {"max_iterations", c.solver.max_iterations},
        {"tol_likelihood", c.solver.tol_likelihood},
        {"tol_born", c.solver.tol_born},
        {"tol_gap", c.solver.tol_gap},
        {"rank_threshold", c.solver.rank_threshold},
        {"bandwidth_ratio", c.bandwidth_ratio}}},
      {"wigner",
       {{"x_range", json::array({c.grid.x_min, c.grid.x_max})},
        {"p_range", json::array({c.grid.p_min, c.grid.p_max})},
        {"resolution", c.grid.x_points}}},
      {"counts_file", c.counts_file ? json(*c.counts_file) : json(nullptr)},
      {"povm_file", c.povm_file ? json(*c.povm_file) : json(nullptr)},
      {"output", {{"directory", c.output_directory}, {"formats", c.formats}}},
  };
  return out;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  const std::string text = io::read_text(path);
  io::json j;
  try {
    j = io::json::parse(text);
  } catch (const io::json::parse_error& e) {
    fail(ErrorKind::invalid_input, "config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

inline StateVector make_target(const ExperimentConfig& c) {
  if (c.target.kind == "cat") return cat_state(c.target.alpha, c.target.parity, c.dim());
  if (c.target.kind == "coherent") return coherent_state(c.target.alpha, c.dim(), true);
  return fock_state(c.target.fock_index, c.dim());
}

inline PovmSet make_povm(const ExperimentConfig& c) {
  if (c.povm_file) {
    const std::string text = io::read_text(*c.povm_file);
    io::json j;
    try {
      j = io::json::parse(text);
    } catch (const io::json::parse_error& e) {
      fail(ErrorKind::invalid_input, "povm file is not valid JSON: " + std::string(e.what()));
    }
    PovmSet povm = io::povm_from_json(j);
    require(povm.dim == c.dim(), "povm file dimension " + std::to_string(povm.dim) + " differs from fock_cutoff + 1 = " +
                                     std::to_string(c.dim()));
    return povm;
  }
  if (c.measurement == MeasurementKind::fock_projectors) {
    return PovmSet::from_vectors(Matrix::Identity(c.dim(), c.dim()));
  }
  return build_homodyne_povm(c.homodyne, c.dim());
}

// ---------------------------------------------------------------------------
// Commands

struct CommandOutput {
  std::vector<std::filesystem::path> files;
  bool passed = true;  // frames-check verdict
  std::string summary;
};

namespace command_detail {

inline std::filesystem::path out_path(const ExperimentConfig& c, const std::string& name) {
  return std::filesystem::path(c.output_directory) / name;
}

inline void emit(CommandOutput& out, const std::filesystem::path& path, const std::string& content) {
  io::write_text(path, content);
  out.files.push_back(path);
}

inline std::string dump(const io::json& j) { return j.dump(2) + "\n"; }

}  // namespace command_detail

/// Eigenvalues of G and Q plus the effective-rank report.
inline CommandOutput cmd_gram_spectrum(const ExperimentConfig& c) {
  using namespace command_detail;
  const io::json config = to_json(c);
  const PovmSet povm = make_povm(c);
  const GramAnalysis g = gram_spectrum(gram_operator(povm), c.solver.rank_threshold);
  const RealMatrix q = gram_matrix_operator_space(povm);
  const GramAnalysis qa = gram_spectrum(q.cast<Complex>(), c.solver.rank_threshold);
  const int eff = effective_rank(g, c.bandwidth_ratio);

  CommandOutput out;
  const io::json report = {{"config", config},
                           {"dim", povm.dim},
                           {"outcomes", povm.size()},
                           {"gram_rank", g.rank},
                           {"gram_threshold", g.threshold},
                           {"effective_rank", eff},
                           {"bandwidth_ratio", c.bandwidth_ratio},
                           {"lambda_min_over_max", g.eigenvalues(g.dim() - 1) / g.eigenvalues(0)},
                           {"q_rank", qa.rank},
                           {"q_threshold", qa.threshold}};
  emit(out, out_path(c, "effective_rank.json"), dump(report));
  if (c.wants("csv")) {
    emit(out, out_path(c, "gram_eigenvalues.csv"), io::eigenvalues_csv(g.eigenvalues, config));
    emit(out, out_path(c, "q_eigenvalues.csv"), io::eigenvalues_csv(qa.eigenvalues, config));
  }
  if (c.wants("json")) {
    io::json spectra = {{"config", config},
                        {"gram", io::to_json(g)},
                        {"q_eigenvalues", io::to_json(qa.eigenvalues)},
                        {"q_rank", qa.rank}};
    emit(out, out_path(c, "gram_spectrum.json"), dump(spectra));
    io::json p = io::to_json(povm, true);
    p["config"] = config;
    emit(out, out_path(c, "povm.json"), dump(p));
  }
  out.summary = "G rank " + std::to_string(g.rank) + ", effective rank " + std::to_string(eff) + ", Q rank " +
                std::to_string(qa.rank);
  return out;
}

/// Synthetic or file-based data, one MaxLik reconstruction, its Wigner grid.
inline CommandOutput cmd_reconstruct(const ExperimentConfig& c, double* wall_seconds = nullptr) {
  using namespace command_detail;
  const io::json config = to_json(c);
  const PovmSet povm = make_povm(c);
  const StateVector target = make_target(c);
  const Dataset data = c.counts_file ? io::read_counts_csv(io::read_text(*c.counts_file), povm)
                                     : generate_counts(projector(target), povm, c.noise, 0);
  ReconstructionConfig solver = c.solver;
  const GramAnalysis analysis = gram_spectrum(gram_operator(povm), c.solver.rank_threshold);
  const int d = c.dimension.value_or(c.dim());
  if (d < c.dim() || c.basis == BasisKind::gram) solver.basis = reconstruction_basis(c.basis, d, analysis);
  const ReconstructionResult r = maxlik_solve(data, povm, solver);
  if (wall_seconds) *wall_seconds = r.wall_seconds;

  CommandOutput out;
  io::json result = {{"config", config}, {"reconstruction_dim", d}, {"basis", to_string(c.basis)}};
  if (!c.counts_file) result["fidelity"] = fidelity(target, r.rho);
  result["result"] = io::to_json(r);
  emit(out, out_path(c, "reconstruction.json"), dump(result));
  const RealMatrix w = wigner(r.rho, c.grid);
  emit(out, out_path(c, "wigner.csv"), io::wigner_csv(w, c.grid, config));
  emit(out, out_path(c, "likelihood_trace.csv"), io::likelihood_trace_csv(r.likelihood_trace, config));
  if (!c.counts_file && c.wants("csv")) {
    emit(out, out_path(c, "counts.csv"), io::config_comment(config) + io::counts_csv(data, povm));
  }
  out.summary = std::string(r.converged ? "converged" : "not converged") + " after " + std::to_string(r.iterations) +
                " iterations";
  if (!c.counts_file) out.summary += ", fidelity " + io::format_double(fidelity(target, r.rho));
  return out;
}

inline CommandOutput cmd_sweep(const ExperimentConfig& c) {
  using namespace command_detail;
  const io::json config = to_json(c);
  const PovmSet povm = make_povm(c);
  const StateVector target = make_target(c);
  CommandOutput out;
  for (BasisKind basis : c.sweep_bases) {
    const SweepResult s = dimension_sweep(target, povm, basis, c.resolved_dims(), c.noise, c.trials, c.solver);
    const std::string stem = "sweep_" + to_string(basis);
    if (c.wants("csv")) emit(out, out_path(c, stem + ".csv"), io::sweep_csv(s, config));
    if (c.wants("json")) {
      io::json j = io::to_json(s);
      j["config"] = config;
      emit(out, out_path(c, stem + ".json"), dump(j));
    }
    out.summary += to_string(basis) + ": ";
    for (std::size_t k = 0; k < s.dims.size(); ++k) {
      out.summary += std::to_string(s.dims[k]) + "=" + io::format_double(s.stats[k].mean) + " ";
    }
  }
  return out;
}

inline CommandOutput cmd_stability(const ExperimentConfig& c) {
  using namespace command_detail;
  const io::json config = to_json(c);
  const PovmSet povm = make_povm(c);
  const StateVector target = make_target(c);
  const int d = c.dimension.value_or(3);
  const StabilityResult s = stability_study(target, povm, c.basis, d, c.noise, std::max(c.trials, 2), c.solver, c.grid);
  const std::string stem = "stability_" + to_string(c.basis) + "_d" + std::to_string(d);
  CommandOutput out;
  if (c.wants("csv")) {
    std::string table = io::config_comment(config) + "basis,dim,trial,seed,fidelity,converged,iterations\n";
    for (const auto& t : s.trials) {
      table += to_string(c.basis) + "," + std::to_string(d) + "," + std::to_string(t.trial) + "," + std::to_string(t.seed) +
               "," + io::format_double(t.fidelity) + "," + (t.converged ? "1" : "0") + "," + std::to_string(t.iterations) + "\n";
    }
    emit(out, out_path(c, stem + ".csv"), table);
  }
  for (const auto& t : s.trials) {
    emit(out, out_path(c, stem + "_wigner_trial" + std::to_string(t.trial) + ".csv"), io::wigner_csv(t.wigner, c.grid, config));
  }
  if (c.wants("json")) {
    io::json trials = io::json::array();
    for (const auto& t : s.trials) {
      trials.push_back({{"trial", t.trial}, {"seed", t.seed}, {"fidelity", t.fidelity}, {"converged", t.converged},
                        {"iterations", t.iterations}, {"rho", io::to_json(t.rho)}});
    }
    const io::json j = {{"config", config}, {"basis", to_string(c.basis)}, {"dim", d}, {"stats", io::to_json(s.stats)},
                        {"spread", s.spread()}, {"trials", trials}};
    emit(out, out_path(c, stem + ".json"), dump(j));
  }
  out.summary = "mean fidelity " + io::format_double(s.stats.mean) + ", spread " + io::format_double(s.spread());
  return out;
}

struct IdentityCheck {
  std::string name;
  double deviation = 0.0;
  double tolerance = 0.0;
  bool passed() const { return deviation < tolerance; }
};

/// Frame-theoretic identities on the configured measurement.
inline std::vector<IdentityCheck> frame_identity_checks(const PovmSet& povm, std::uint64_t seed) {
  std::vector<IdentityCheck> checks;
  const Matrix g = gram_operator(povm);
  const GramAnalysis analysis = gram_spectrum(g);
  checks.push_back({"hadamard_identity", hadamard_identity_check(povm), 1e-14});

  const DualFrame dual = dual_frame(povm, analysis);
  const Matrix y = povm.vectors();
  const double reassembly = std::max(max_abs(y * dual.duals.adjoint() - dual.support_projector),
                                     max_abs(dual.duals * y.adjoint() - dual.support_projector));
  checks.push_back({"dual_frame_projector", reassembly, 1e-9});

  CounterRng rng(seed);
  std::normal_distribution<double> normal;
  auto random_hermitian = [&](int d) {
    Matrix a(d, d);
    for (int r = 0; r < d; ++r)
      for (int col = 0; col < d; ++col) a(r, col) = Complex(normal(rng), normal(rng));
    return Matrix(0.5 * (a + a.adjoint()));
  };
  StateVector psi(povm.dim);
  for (int n = 0; n < povm.dim; ++n) psi(n) = Complex(normal(rng), normal(rng));
  psi.normalize();
  checks.push_back({"frame_reconstruction_orderings",
                    max_abs(frame_reconstruct(psi, povm, dual) - frame_reconstruct_dual_order(psi, povm, dual)), 1e-10});
  checks.push_back({"frame_reconstruction_projection",
                    max_abs(frame_reconstruct(psi, povm, dual) - dual.support_projector * psi), 1e-9});

  const Matrix a = random_hermitian(povm.dim);
  const Matrix b = random_hermitian(povm.dim);
  const Complex lhs = (operator_frame_apply(a, povm).adjoint() * b).trace();
  const Complex rhs = (a.adjoint() * operator_frame_apply(b, povm)).trace();
  checks.push_back({"frame_operator_self_adjoint", std::abs(lhs - rhs), 1e-10});

  const OperatorFrame frame = build_operator_frame(povm);
  const Matrix via_matrix = unvectorize_hermitian(frame.frame_matrix * vectorize_hermitian(a), povm.dim);
  checks.push_back({"frame_operator_vectorized", max_abs(via_matrix - operator_frame_apply(a, povm)), 1e-10});

  // Operator inside the operator-space support, then p_i = Tr(A Π_i) and back.
  const Matrix inside = unvectorize_hermitian(frame.support_projector * vectorize_hermitian(random_hermitian(povm.dim)), povm.dim);
  const RealVector p = detail::quadratic_forms(inside, y).real();
  checks.push_back({"linear_inversion_round_trip", max_abs(linear_inversion(p, frame).rho - inside), 1e-8});

  const GramAnalysis matrix_spectrum = gram_spectrum(gram_matrix_state_space(povm));
  const int shared = std::min(analysis.rank, matrix_spectrum.rank);
  double spectral_gap = analysis.rank == matrix_spectrum.rank ? 0.0 : 1.0;
  for (int k = 0; k < shared; ++k) spectral_gap = std::max(spectral_gap, std::abs(analysis.eigenvalues(k) - matrix_spectrum.eigenvalues(k)));
  checks.push_back({"unitary_equivalence_spectra", spectral_gap, 1e-9});

  const Matrix rho = [&] {
    const Matrix h = random_hermitian(povm.dim);
    Matrix r = h * h.adjoint();
    return Matrix(r / r.trace().real());
  }();
  const ModalWeighting mw = modal_weighting(rho, analysis);
  checks.push_back({"modal_weighting_congruence", mw.congruence_defect, 1e-9 * std::max(1.0, max_abs(g * rho * g))});
  return checks;
}

inline CommandOutput cmd_frames_check(const ExperimentConfig& c) {
  using namespace command_detail;
  const io::json config = to_json(c);
  const PovmSet povm = make_povm(c);
  const auto checks = frame_identity_checks(povm, c.noise.seed);
  CommandOutput out;
  io::json rows = io::json::array();
  std::string table = io::config_comment(config) + "identity,deviation,tolerance,passed\n";
  for (const auto& k : checks) {
    rows.push_back({{"identity", k.name}, {"deviation", k.deviation}, {"tolerance", k.tolerance}, {"passed", k.passed()}});
    table += k.name + "," + io::format_double(k.deviation) + "," + io::format_double(k.tolerance) + "," +
             (k.passed() ? "pass" : "FAIL") + "\n";
    out.passed = out.passed && k.passed();
  }
  if (c.wants("json")) emit(out, out_path(c, "frames_report.json"), dump({{"config", config}, {"passed", out.passed}, {"checks", rows}}));
  if (c.wants("csv")) emit(out, out_path(c, "frames_report.csv"), table);
  out.summary = out.passed ? "all frame identities hold" : "frame identity violated";
  return out;
}

/// CLI exit code for a library error.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input:
    case ErrorKind::empty_data: return 1;
    case ErrorKind::numerical_consistency: return 2;
    case ErrorKind::io: return 3;
  }
  return 1;
}

}  // namespace gramtomo
