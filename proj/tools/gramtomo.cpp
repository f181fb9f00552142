// gramtomo: Gram-operator bandwidth analysis and MaxLik homodyne tomography.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gramtomo/experiment.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<int> trials;
  std::vector<int> dims;
  std::optional<std::string> basis;
};

// Flags win over the file, the file wins over the environment default.
// Reconstruct and stability take a single dimension from --dims.
gramtomo::ExperimentConfig resolve(const Overrides& o, bool single_dim) {
  using gramtomo::io::json;
  json j = json::object();
  if (!o.config_path.empty()) {
    const std::string text = gramtomo::io::read_text(o.config_path);
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      gramtomo::fail(gramtomo::ErrorKind::invalid_input, "config " + o.config_path + " is not valid JSON: " + e.what());
    }
    if (!j.is_object()) gramtomo::fail(gramtomo::ErrorKind::invalid_input, "config must be a JSON object");
  }
  auto section = [&](const char* key) -> json& {
    if (!j.contains(key)) j[key] = json::object();
    return j[key];
  };
  if (o.seed) section("noise")["seed"] = *o.seed;
  if (o.trials) section("reconstruction")["trials"] = *o.trials;
  if (single_dim && !o.dims.empty()) {
    if (o.dims.size() != 1) gramtomo::fail(gramtomo::ErrorKind::invalid_input, "--dims takes one value for this command");
    section("reconstruction")["dimension"] = o.dims.front();
  } else if (!o.dims.empty()) {
    section("reconstruction")["dims"] = o.dims;
  }
  if (o.basis) {
    section("reconstruction")["basis"] = *o.basis;
    section("reconstruction")["sweep_bases"] = json::array({*o.basis});
  }
  if (o.format) section("output")["formats"] = json::array({*o.format});

  gramtomo::ExperimentConfig defaults;
  if (const char* env = std::getenv("GRAMTOMO_OUTPUT_DIR"); env && *env) defaults.output_directory = env;
  if (o.out) section("output")["directory"] = *o.out;
  return gramtomo::parse_config(j, defaults);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gram-operator bandwidth analysis and maximum-likelihood homodyne tomography"};
  app.require_subcommand(1);
  Overrides o;

  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON experiment config");
    sub->add_option("--seed", o.seed, "noise seed");
    sub->add_option("--out", o.out, "output directory (default: $GRAMTOMO_OUTPUT_DIR or ./gramtomo-out)");
    sub->add_option("--format", o.format, "restrict output to one format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--trials", o.trials, "noise trials per point");
    sub->add_option("--dims", o.dims, "reconstruction dimensions, comma separated (one value for reconstruct and stability)")->delimiter(',');
    sub->add_option("--basis", o.basis, "reconstruction basis")->check(CLI::IsMember({"gram", "fock"}));
  };

  auto* gram = app.add_subcommand("gram-spectrum", "eigenvalues of G and Q, effective rank");
  auto* reconstruct = app.add_subcommand("reconstruct", "one MaxLik reconstruction with Wigner grid");
  auto* sweep = app.add_subcommand("sweep", "fidelity versus reconstruction dimension");
  auto* stability = app.add_subcommand("stability", "fidelity spread over noise trials at a fixed dimension");
  auto* frames = app.add_subcommand("frames-check", "frame identity report; nonzero exit on violation");
  for (auto* sub : {gram, reconstruct, sweep, stability, frames}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const gramtomo::ExperimentConfig config = resolve(o, reconstruct->parsed() || stability->parsed());
    gramtomo::CommandOutput out;
    double solve_seconds = -1.0;
    if (gram->parsed()) out = gramtomo::cmd_gram_spectrum(config);
    else if (reconstruct->parsed()) out = gramtomo::cmd_reconstruct(config, &solve_seconds);
    else if (sweep->parsed()) out = gramtomo::cmd_sweep(config);
    else if (stability->parsed()) out = gramtomo::cmd_stability(config);
    else out = gramtomo::cmd_frames_check(config);

    for (const auto& f : out.files) std::cout << f.string() << "\n";
    std::cerr << out.summary << "\n";
    if (solve_seconds >= 0.0) std::cerr << "solve wall time " << solve_seconds << " s\n";
    if (!out.passed) return gramtomo::exit_code(gramtomo::ErrorKind::numerical_consistency);
    return 0;
  } catch (const gramtomo::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return gramtomo::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
