// Drives the gramtomo executable end to end.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "gramtomo/io.hpp"

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("gramtomo_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " + GRAMTOMO_CLI + " " + args + " > " + (dir_ / "stdout.txt").string() + " 2> " +
                            (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string stderr_text() { return gramtomo::io::read_text(dir_ / "stderr.txt"); }

  fs::path write(const std::string& name, const std::string& text) {
    std::ofstream(dir_ / name) << text;
    return dir_ / name;
  }

  static std::string slurp(const fs::path& p) { return gramtomo::io::read_text(p); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, GramSpectrumWritesSelfDescribingFilesDeterministically) {
  const fs::path out = dir_ / "g";
  ASSERT_EQ(run("gram-spectrum --out " + out.string()), 0) << stderr_text();
  for (const char* f : {"gram_eigenvalues.csv", "q_eigenvalues.csv", "effective_rank.json", "gram_spectrum.json", "povm.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const std::string first = slurp(out / "q_eigenvalues.csv");
  EXPECT_EQ(first.rfind("# config: {", 0), 0u);
  const auto report = gramtomo::io::json::parse(slurp(out / "effective_rank.json"));
  EXPECT_EQ(report["config"]["homodyne"]["bins"], 51);
  EXPECT_EQ(report["outcomes"], 306);

  ASSERT_EQ(run("gram-spectrum --out " + out.string()), 0);
  EXPECT_EQ(slurp(out / "q_eigenvalues.csv"), first);
}

TEST_F(Cli, MalformedConfigIsAValidationErrorWithoutOutputs) {
  const fs::path cfg = write("bad.json", R"({"homodyne": {"bins": -4}})");
  EXPECT_EQ(run("reconstruct --config " + cfg.string() + " --out " + (dir_ / "o").string()), 1);
  EXPECT_FALSE(fs::exists(dir_ / "o"));
  EXPECT_NE(stderr_text().find("bin count"), std::string::npos);

  write("typo.json", R"({"noise": {"exposur": 10}})");
  EXPECT_EQ(run("sweep --config " + (dir_ / "typo.json").string() + " --out " + (dir_ / "o").string()), 1);
  EXPECT_NE(stderr_text().find("exposur"), std::string::npos);

  write("broken.json", "{not json");
  EXPECT_EQ(run("sweep --config " + (dir_ / "broken.json").string()), 1);
}

TEST_F(Cli, UsageErrorsAndIoFailures) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("nonsense"), 1);
  EXPECT_EQ(run("sweep --basis hilbert"), 1);
  EXPECT_EQ(run("sweep --format xml"), 1);
  EXPECT_EQ(run("gram-spectrum --config " + (dir_ / "missing.json").string()), 3);
  write("blocker", "a file, not a directory");
  EXPECT_EQ(run("gram-spectrum --out " + (dir_ / "blocker" / "sub").string()), 3);
}

TEST_F(Cli, CountFileLengthMismatchNamesBothLengths) {
  write("counts.csv", "phase_index,bin_index,count\n0,0,10\n0,1,12\n");
  write("cfg.json", R"({"counts_file": ")" + (dir_ / "counts.csv").string() + R"("})");
  EXPECT_EQ(run("reconstruct --config " + (dir_ / "cfg.json").string() + " --out " + (dir_ / "o").string()), 1);
  const std::string err = stderr_text();
  EXPECT_NE(err.find("2 rows"), std::string::npos) << err;
  EXPECT_NE(err.find("306 outcomes"), std::string::npos) << err;
  EXPECT_FALSE(fs::exists(dir_ / "o"));
}

TEST_F(Cli, ReconstructFromItsOwnCountFile) {
  write("d3.json", R"({"reconstruction": {"dimension": 3}, "wigner": {"resolution": 11}})");
  ASSERT_EQ(run("reconstruct --config " + (dir_ / "d3.json").string() + " --out " + (dir_ / "a").string()), 0) << stderr_text();
  const auto first = gramtomo::io::json::parse(slurp(dir_ / "a" / "reconstruction.json"));
  EXPECT_TRUE(first.contains("fidelity"));
  EXPECT_EQ(first["result"]["rho"].size(), 15u);
  EXPECT_EQ(first["result"]["rho"][0][0].size(), 2u);

  const std::string wigner = slurp(dir_ / "a" / "wigner.csv");
  EXPECT_NE(wigner.find("\nx,-5,-4,"), std::string::npos);
  EXPECT_NE(wigner.find("\np,-5,-4,"), std::string::npos);

  write("replay.json", R"({"reconstruction": {"dimension": 3}, "wigner": {"resolution": 11}, "counts_file": ")" +
                           (dir_ / "a" / "counts.csv").string() + R"("})");
  ASSERT_EQ(run("reconstruct --config " + (dir_ / "replay.json").string() + " --out " + (dir_ / "b").string()), 0)
      << stderr_text();
  const auto replay = gramtomo::io::json::parse(slurp(dir_ / "b" / "reconstruction.json"));
  EXPECT_EQ(replay["result"]["rho"], first["result"]["rho"]);
}

TEST_F(Cli, CorruptedPovmFileIsRejected) {
  ASSERT_EQ(run("gram-spectrum --format json --out " + (dir_ / "g").string()), 0);
  auto povm = gramtomo::io::json::parse(slurp(dir_ / "g" / "povm.json"));
  povm.erase("config");
  write("good.json", povm.dump());
  write("cfg_good.json", R"({"povm_file": ")" + (dir_ / "good.json").string() + R"("})");
  EXPECT_EQ(run("frames-check --config " + (dir_ / "cfg_good.json").string() + " --out " + (dir_ / "f").string()), 0)
      << stderr_text();

  povm["gram_operator"][0][1] = gramtomo::io::json::array({0.5, 0.25});
  write("bad.json", povm.dump());
  write("cfg_bad.json", R"({"povm_file": ")" + (dir_ / "bad.json").string() + R"("})");
  EXPECT_EQ(run("frames-check --config " + (dir_ / "cfg_bad.json").string() + " --out " + (dir_ / "f2").string()), 1);
  EXPECT_NE(stderr_text().find("not Hermitian"), std::string::npos) << stderr_text();
}

TEST_F(Cli, FramesCheckReportsEveryIdentity) {
  ASSERT_EQ(run("frames-check --out " + (dir_ / "f").string()), 0) << stderr_text();
  const auto report = gramtomo::io::json::parse(slurp(dir_ / "f" / "frames_report.json"));
  EXPECT_TRUE(report["passed"].get<bool>());
  EXPECT_GE(report["checks"].size(), 8u);
}

TEST_F(Cli, FlagsOverrideFileAndEnvironmentSuppliesDefaultDirectory) {
  write("cfg.json", R"({"noise": {"seed": 3}, "reconstruction": {"trials": 5}})");
  const std::string env = "GRAMTOMO_OUTPUT_DIR=" + (dir_ / "env").string();
  ASSERT_EQ(run("sweep --config " + (dir_ / "cfg.json").string() +
                    " --seed 9 --trials 2 --dims 1,2 --basis fock --format json",
                env),
            0)
      << stderr_text();
  ASSERT_TRUE(fs::exists(dir_ / "env" / "sweep_fock.json"));
  EXPECT_FALSE(fs::exists(dir_ / "env" / "sweep_gram.json"));
  EXPECT_FALSE(fs::exists(dir_ / "env" / "sweep_fock.csv"));
  const auto sweep = gramtomo::io::json::parse(slurp(dir_ / "env" / "sweep_fock.json"));
  EXPECT_EQ(sweep["config"]["noise"]["seed"], 9);
  EXPECT_EQ(sweep["config"]["reconstruction"]["trials"], 2);
  EXPECT_EQ(sweep["entries"].size(), 4u);

  ASSERT_EQ(run("frames-check --format csv --out " + (dir_ / "flag").string(), env), 0);
  EXPECT_TRUE(fs::exists(dir_ / "flag" / "frames_report.csv"));
}

TEST_F(Cli, StabilityEmitsPerTrialWignerGrids) {
  write("cfg.json", R"({"wigner": {"resolution": 9}})");
  ASSERT_EQ(run("stability --config " + (dir_ / "cfg.json").string() + " --trials 2 --out " + (dir_ / "s").string()), 0)
      << stderr_text();
  EXPECT_TRUE(fs::exists(dir_ / "s" / "stability_gram_d3.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "s" / "stability_gram_d3_wigner_trial1.csv"));
}

TEST_F(Cli, DimsSetsTheSingleDimensionOfStabilityAndReconstruct) {
  write("cfg.json", R"({"wigner": {"resolution": 9}})");
  const std::string cfg = " --config " + (dir_ / "cfg.json").string();
  ASSERT_EQ(run("stability" + cfg + " --trials 2 --dims 2 --basis fock --out " + (dir_ / "s").string()), 0)
      << stderr_text();
  EXPECT_TRUE(fs::exists(dir_ / "s" / "stability_fock_d2.csv"));
  ASSERT_EQ(run("reconstruct" + cfg + " --dims 4 --format json --out " + (dir_ / "r").string()), 0) << stderr_text();
  const auto report = gramtomo::io::json::parse(slurp(dir_ / "r" / "reconstruction.json"));
  EXPECT_EQ(report["reconstruction_dim"], 4);
  EXPECT_EQ(run("reconstruct --dims 2,3 --out " + (dir_ / "bad").string()), 1);
  EXPECT_FALSE(fs::exists(dir_ / "bad"));
}
