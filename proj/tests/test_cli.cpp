// Drives the koopid executable as a subprocess and checks exit codes and output.
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string output;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(KOOPID_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (fgets(buf.data(), buf.size(), pipe)) r.output += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "koopid_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const nlohmann::json& doc) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << doc.dump(2);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json small(const fs::path& out) {
  return {{"version", 1},
          {"seed", 3},
          {"excitation", {{"tu", 3.0}, {"lo", -2.0}, {"hi", 2.0}}},
          {"generation", {{"trials", 1}, {"duration", 30.0}}},
          {"dataset", {{"filter_window", 0.0}, {"velocity_filter_window", 0.0}, {"val_count", 2}, {"val_duration", 5.0}}},
          {"basis", {{"w", {1, 3}}}},
          {"paths", {{"out", out.string()}}}};
}

}  // namespace

TEST(Cli, PipelineSucceedsAndIsRepeatable) {
  const fs::path dir = scratch("pipeline");
  const auto cfg = write_config(dir, small(dir / "out"));
  const Result first = run("pipeline --config " + cfg.string());
  ASSERT_EQ(first.code, 0) << first.output;
  EXPECT_NE(first.output.find("N = 20"), std::string::npos);
  const std::string table = slurp(dir / "out" / "comparison.txt");
  EXPECT_FALSE(table.empty());
  ASSERT_EQ(run("pipeline --config " + cfg.string()).code, 0);
  EXPECT_EQ(slurp(dir / "out" / "comparison.txt"), table);
}

TEST(Cli, StagesRunSeparately) {
  const fs::path dir = scratch("stages");
  const auto cfg = write_config(dir, small(dir / "out"));
  ASSERT_EQ(run("generate --config " + cfg.string()).code, 0);
  const std::string data = (dir / "out" / "data" / "trial_01.csv").string();
  const Result ident = run("identify --config " + cfg.string() + " " + data);
  ASSERT_EQ(ident.code, 0) << ident.output;
  const Result eval = run("evaluate --config " + cfg.string() + " --model " +
                          (dir / "out" / "models" / "model_w3.json").string() + " " + data);
  ASSERT_EQ(eval.code, 0) << eval.output;
  EXPECT_TRUE(fs::exists(dir / "out" / "reports" / "report_w3.json"));
  const Result cmp = run("compare " + (dir / "out" / "reports" / "report_w3.json").string());
  EXPECT_EQ(cmp.code, 0) << cmp.output;
  EXPECT_NE(cmp.output.find("Koopman (w=3)"), std::string::npos);
}

TEST(Cli, OverridesApply) {
  const fs::path dir = scratch("overrides");
  const auto cfg = write_config(dir, small(dir / "ignored"));
  const fs::path out = dir / "elsewhere";
  const Result r = run("generate --config " + cfg.string() + " --out " + out.string() + " --seed 99 --tu 2.5");
  ASSERT_EQ(r.code, 0) << r.output;
  const auto manifest = nlohmann::json::parse(slurp(out / "data" / "manifest.json"));
  EXPECT_EQ(manifest["seed"], 99);
  EXPECT_EQ(manifest["trials"][0]["tu"], 2.5);
}

TEST(Cli, ConfigErrorsExitTwo) {
  const fs::path dir = scratch("config_error");
  auto doc = small(dir / "out");
  doc["generation"]["duration"] = 0.0;
  const auto cfg = write_config(dir, doc);
  const Result r = run("generate --config " + cfg.string());
  EXPECT_EQ(r.code, 2) << r.output;
  EXPECT_EQ(run("pipeline").code, 2);
  EXPECT_EQ(run("pipeline --config " + (dir / "missing.json").string()).code, 2);
  doc = small(dir / "out");
  doc.erase("version");
  EXPECT_EQ(run("generate --config " + write_config(dir, doc).string()).code, 2);
}

TEST(Cli, DataErrorsExitThree) {
  const fs::path dir = scratch("data_error");
  const auto cfg = write_config(dir, small(dir / "out"));
  const Result r = run("identify --config " + cfg.string() + " " + (dir / "absent.csv").string());
  EXPECT_EQ(r.code, 3) << r.output;
  EXPECT_NE(r.output.find("absent.csv"), std::string::npos);
}

TEST(Cli, NumericalFailureExitsFour) {
  // a 2 s trial at Ts = 0.5 with a wildly oscillating input leaves too few
  // snapshots for a real logarithm of the cubic model
  const fs::path dir = scratch("numerical");
  const fs::path csv = dir / "tiny.csv";
  std::ofstream(csv) << "t,x1,x2,u1\n0,1,0,0\n0.5,-1,0.5,1\n1,0.9,-0.4,-1\n1.5,-0.8,0.3,1\n2,0.7,-0.2,-1\n";
  auto doc = small(dir / "out");
  doc["dataset"] = {{"ts", 0.5}, {"filter_window", 0.0}, {"velocity_filter_window", 0.0}, {"val_count", 0}};
  doc["basis"] = {{"w", 1}};
  doc["simulation"] = {{"step", 0.05}};
  const auto cfg = write_config(dir, doc);
  const Result r = run("identify --config " + cfg.string() + " " + csv.string());
  EXPECT_EQ(r.code, 4) << r.output;
  EXPECT_NE(r.output.find("more system measurements can be taken"), std::string::npos);
  EXPECT_NE(r.output.find("eigenvalues"), std::string::npos);
}

TEST(Cli, ComparePublishedRowsFixture) {
  const Result r = run(std::string("compare ") + KOOPID_FIXTURE_DIR + "/published_nrmse.json");
  ASSERT_EQ(r.code, 0) << r.output;
  const std::string row = r.output.substr(r.output.find('\n') + 1);
  EXPECT_EQ(row.rfind("Koopman", 0), 0u);
  EXPECT_NE(row.substr(0, row.find('\n')).find("2.1"), std::string::npos);
}
