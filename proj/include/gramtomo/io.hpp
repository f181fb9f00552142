#pragma once

// JSON and CSV interchange. Complex numbers are [re, im] pairs; matrices are
// arrays of rows. Floating-point values are written in shortest round-trip
// form so identical inputs give byte-identical files.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gramtomo/core.hpp"
#include "gramtomo/fock.hpp"
#include "gramtomo/maxlik.hpp"
#include "gramtomo/povm.hpp"
#include "gramtomo/simulate.hpp"

namespace gramtomo::io {

using json = nlohmann::ordered_json;

inline std::string format_double(double value) {
  char buffer[64];
  const auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc()) fail(ErrorKind::io, "number formatting failed");
  return std::string(buffer, end);
}

inline json to_json(Complex z) { return json::array({z.real(), z.imag()}); }

inline Complex complex_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    fail(ErrorKind::invalid_input, "complex number must be an [re, im] pair");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

inline json to_json(const StateVector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(to_json(v(i)));
  return out;
}

inline StateVector vector_from_json(const json& j) {
  if (!j.is_array()) fail(ErrorKind::invalid_input, "vector must be an array of [re, im] pairs");
  StateVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = complex_from_json(j[i]);
  return v;
}

inline json to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(to_json(m(r, c)));
    out.push_back(std::move(row));
  }
  return out;
}

inline Matrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) fail(ErrorKind::invalid_input, "matrix must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) fail(ErrorKind::invalid_input, "matrix rows must have equal length");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = complex_from_json(row[static_cast<std::size_t>(c)]);
  }
  return m;
}

inline json to_json(const RealVector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

// ---------------------------------------------------------------------------
// Domain objects

inline json to_json(const PovmSet& povm, bool include_gram = false) {
  json effects = json::array();
  for (const auto& e : povm.effects) {
    effects.push_back({{"phase_index", e.phase_index},
                       {"bin_index", e.bin_index},
                       {"bin_center", e.bin_center},
                       {"bin_width", e.bin_width},
                       {"vector", to_json(e.vector)}});
  }
  json out = {{"dim", povm.dim}, {"outcomes", povm.size()}, {"effects", std::move(effects)}};
  if (include_gram) out["gram_operator"] = to_json(gram_operator(povm));
  return out;
}

/// Parses a PovmSet. A stored "gram_operator" must be Hermitian and agree with
/// the effects; otherwise the file is rejected.
inline PovmSet povm_from_json(const json& j) {
  if (!j.is_object() || !j.contains("dim") || !j.contains("effects")) {
    fail(ErrorKind::invalid_input, "povm file needs \"dim\" and \"effects\"");
  }
  PovmSet povm;
  Matrix stored;
  try {
    povm.dim = j.at("dim").get<int>();
    for (const auto& e : j.at("effects")) {
      Effect effect;
      effect.vector = vector_from_json(e.at("vector"));
      effect.phase_index = e.value("phase_index", 0);
      effect.bin_index = e.value("bin_index", static_cast<int>(povm.effects.size()));
      effect.bin_center = e.value("bin_center", 0.0);
      effect.bin_width = e.value("bin_width", 1.0);
      povm.effects.push_back(std::move(effect));
    }
    if (j.contains("outcomes") && j.at("outcomes").get<std::size_t>() != povm.size()) {
      fail(ErrorKind::invalid_input, "povm file declares " + std::to_string(j.at("outcomes").get<std::size_t>()) +
                                         " outcomes but lists " + std::to_string(povm.size()));
    }
    if (j.contains("gram_operator")) stored = matrix_from_json(j.at("gram_operator"));
  } catch (const json::exception& e) {
    fail(ErrorKind::invalid_input, std::string("malformed povm file: ") + e.what());
  }
  povm.validate();
  if (j.contains("gram_operator")) {
    require(stored.rows() == povm.dim && stored.cols() == povm.dim, "stored gram operator has wrong shape");
    if (!is_hermitian(stored)) {
      fail(ErrorKind::invalid_input, "stored gram operator is not Hermitian (defect " +
                                         format_double(hermiticity_defect(stored)) + ")");
    }
    const double mismatch = max_abs(stored - gram_operator(povm));
    if (mismatch > 1e-10 * std::max(1.0, max_abs(stored))) {
      fail(ErrorKind::invalid_input, "stored gram operator disagrees with effects (" + format_double(mismatch) + ")");
    }
  }
  return povm;
}

inline json to_json(const GramAnalysis& a) {
  return {{"dim", a.dim()},
          {"rank", a.rank},
          {"threshold", a.threshold},
          {"eigenvalues", to_json(a.eigenvalues)},
          {"eigenvectors", to_json(a.eigenvectors)}};
}

inline json to_json(const ReconstructionResult& r, bool include_timing = false) {
  json out = {{"converged", r.converged},
              {"stop_reason", r.stop_reason},
              {"iterations", r.iterations},
              {"born_residual", r.born_residual},
              {"extremal_residual", r.extremal_residual},
              {"stationarity_residual", r.stationarity_residual},
              {"floor_activations", r.floor_activations},
              {"support_dim", r.support_dim},
              {"subspace_dim", r.subspace_dim},
              {"likelihood_trace", r.likelihood_trace},
              {"rho", to_json(r.rho)}};
  if (include_timing) out["wall_seconds"] = r.wall_seconds;
  return out;
}

inline json to_json(const FidelityStats& s) {
  return {{"mean", s.mean}, {"min", s.min}, {"max", s.max}, {"stddev", s.stddev}};
}

inline json to_json(const NoiseModel& n) {
  return {{"kind", to_string(n.kind)}, {"exposure", n.exposure}, {"seed", n.seed}};
}

inline json to_json(const SweepResult& s) {
  json stats = json::array();
  for (std::size_t k = 0; k < s.dims.size(); ++k) {
    json row = to_json(s.stats[k]);
    row["dim"] = s.dims[k];
    stats.push_back(std::move(row));
  }
  json entries = json::array();
  for (const auto& e : s.entries) {
    entries.push_back({{"dim", e.dim}, {"trial", e.trial}, {"seed", e.seed}, {"fidelity", e.fidelity},
                       {"converged", e.converged}, {"iterations", e.iterations}});
  }
  return {{"basis", to_string(s.basis)},
          {"trials", s.trials},
          {"noise", to_json(s.noise)},
          {"trial_seeds", s.trial_seeds},
          {"dims", s.dims},
          {"stats", std::move(stats)},
          {"entries", std::move(entries)}};
}

// ---------------------------------------------------------------------------
// CSV

/// Writes `content` to `path`, creating parent directories.
inline void write_text(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) fail(ErrorKind::io, "cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
  out << content;
  if (!out) fail(ErrorKind::io, "write failed for " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

/// "# config: {...}" line that makes CSV outputs self-describing.
inline std::string config_comment(const json& config) { return "# config: " + config.dump() + "\n"; }

inline std::string eigenvalues_csv(const RealVector& values, const json& config) {
  std::string out = config_comment(config) + "index,value\n";
  for (Eigen::Index k = 0; k < values.size(); ++k) out += std::to_string(k + 1) + "," + format_double(values(k)) + "\n";
  return out;
}

/// Dense grid: a row "x,<x values>", a row "p,<p values>", then one row of W
/// per p value.
inline std::string wigner_csv(const RealMatrix& w, const PhaseSpaceGrid& grid, const json& config) {
  std::string out = config_comment(config) + "x";
  for (int i = 0; i < grid.x_points; ++i) out += "," + format_double(grid.x(i));
  out += "\np";
  for (int j = 0; j < grid.p_points; ++j) out += "," + format_double(grid.p(j));
  out += "\n";
  for (Eigen::Index j = 0; j < w.rows(); ++j) {
    for (Eigen::Index i = 0; i < w.cols(); ++i) {
      if (i > 0) out += ",";
      out += format_double(w(j, i));
    }
    out += "\n";
  }
  return out;
}

inline std::string sweep_csv(const SweepResult& s, const json& config) {
  std::string out = config_comment(config) + "basis,dim,trial,seed,fidelity,converged,iterations\n";
  for (const auto& e : s.entries) {
    out += to_string(s.basis) + "," + std::to_string(e.dim) + "," + std::to_string(e.trial) + "," +
           std::to_string(e.seed) + "," + format_double(e.fidelity) + "," + (e.converged ? "1" : "0") + "," +
           std::to_string(e.iterations) + "\n";
  }
  return out;
}

inline std::string likelihood_trace_csv(const std::vector<double>& trace, const json& config) {
  std::string out = config_comment(config) + "iteration,log_likelihood\n";
  for (std::size_t k = 0; k < trace.size(); ++k) out += std::to_string(k) + "," + format_double(trace[k]) + "\n";
  return out;
}

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

}  // namespace detail

/// Count file: CSV with header phase_index,bin_index,count; '#' lines ignored.
/// Rows are matched to povm outcomes by (phase_index, bin_index).
inline Dataset read_counts_csv(const std::string& text, const PovmSet& povm) {
  std::istringstream in(text);
  std::string line;
  bool header = false;
  std::map<std::pair<int, int>, double> rows;
  std::size_t row_count = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line == "\r") continue;
    const auto cells = detail::split(line, ',');
    if (!header) {
      if (cells != std::vector<std::string>{"phase_index", "bin_index", "count"}) {
        fail(ErrorKind::invalid_input, "count file header must be phase_index,bin_index,count");
      }
      header = true;
      continue;
    }
    if (cells.size() != 3) fail(ErrorKind::invalid_input, "count file row must have 3 columns: " + line);
    int phase = 0;
    int bin = 0;
    double count = 0.0;
    try {
      phase = std::stoi(cells[0]);
      bin = std::stoi(cells[1]);
      count = std::stod(cells[2]);
    } catch (const std::exception&) {
      fail(ErrorKind::invalid_input, "count file row is not numeric: " + line);
    }
    if (!(count >= 0.0) || !std::isfinite(count)) fail(ErrorKind::invalid_input, "count must be non-negative: " + line);
    if (!rows.emplace(std::make_pair(phase, bin), count).second) {
      fail(ErrorKind::invalid_input, "count file repeats outcome " + std::to_string(phase) + "," + std::to_string(bin));
    }
    ++row_count;
  }
  if (!header) fail(ErrorKind::invalid_input, "count file is empty");
  if (row_count != povm.size()) {
    fail(ErrorKind::invalid_input, "count file has " + std::to_string(row_count) + " rows but povm has " +
                                       std::to_string(povm.size()) + " outcomes");
  }
  RealVector counts(static_cast<Eigen::Index>(povm.size()));
  for (std::size_t i = 0; i < povm.size(); ++i) {
    const auto key = std::make_pair(povm.effects[i].phase_index, povm.effects[i].bin_index);
    const auto it = rows.find(key);
    if (it == rows.end()) {
      fail(ErrorKind::invalid_input, "count file has no row for outcome " + std::to_string(key.first) + "," +
                                         std::to_string(key.second));
    }
    counts(static_cast<Eigen::Index>(i)) = it->second;
  }
  return Dataset::from_counts(std::move(counts));
}

inline std::string counts_csv(const Dataset& data, const PovmSet& povm) {
  check_aligned(data, povm);
  std::string out = "phase_index,bin_index,count\n";
  for (std::size_t i = 0; i < povm.size(); ++i) {
    out += std::to_string(povm.effects[i].phase_index) + "," + std::to_string(povm.effects[i].bin_index) + "," +
           format_double(data.counts(static_cast<Eigen::Index>(i))) + "\n";
  }
  return out;
}

}  // namespace gramtomo::io
