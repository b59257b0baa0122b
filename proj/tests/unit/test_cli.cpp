#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string output;
};

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("hjlab_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

Result run(const std::string& args, const fs::path& dir) {
  const auto log = dir / "log.txt";
  const std::string cmd = std::string(HJLAB_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(log)};
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const auto p = dir / "config.ini";
  std::ofstream(p) << text;
  return p;
}

const char* kFree = R"([model]
kind = mechanical
dim = 1
V = 0

[solver]
v_max = 28
v_res = 561

[effective]
method = both
P_lo = -1
P_hi = 1
P_res = 3
cell_res = 64
dt = 1/64
T = 10
harmonics = 4
tol_xmethod = 0.03
)";

}  // namespace

TEST(Cli, Help) {
  const auto dir = scratch("help");
  const auto r = run("--help", dir);
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.output.find("homogenize"), std::string::npos);
  EXPECT_NE(r.output.find("--threads"), std::string::npos);
}

TEST(Cli, MissingSubcommandIsAUsageError) {
  const auto dir = scratch("nosub");
  EXPECT_EQ(run("--config x.ini", dir).code, 2);
}

TEST(Cli, MissingRequiredKeyNamesTheKey) {
  const auto dir = scratch("missing");
  const auto cfg = write_config(dir, "[model]\ndim = 1\nV = 0\n");
  const auto r = run("--config " + cfg.string() + " --out " + (dir / "out").string() + " legendre", dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("kind"), std::string::npos) << r.output;
}

TEST(Cli, UnknownKeyReportsItsLine) {
  const auto dir = scratch("unknown");
  const auto cfg = write_config(dir, "[model]\nkind = mechanical\n\ncolour = blue\n");
  const auto r = run("--config " + cfg.string() + " legendre", dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find(":4:"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("colour"), std::string::npos) << r.output;
}

TEST(Cli, UnknownSectionAndBadExpression) {
  const auto dir = scratch("section");
  auto cfg = write_config(dir, "[modle]\nkind = mechanical\n");
  auto r = run("--config " + cfg.string() + " legendre", dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find(":1:"), std::string::npos) << r.output;
  cfg = write_config(dir, "[model]\nkind = mechanical\ndim = 1\nV = cos(2*pi*x\n");
  r = run("--config " + cfg.string() + " legendre", dir);
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, EffectiveHFreeParticleWritesArtifacts) {
  const auto dir = scratch("effh");
  const auto cfg = write_config(dir, kFree);
  const auto out = dir / "out";
  const auto r = run("--config " + cfg.string() + " --out " + out.string() + " --threads 2 effective-h", dir);
  ASSERT_EQ(r.code, 0) << r.output;
  const auto csv = slurp(out / "effective_h.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "P1,hbar_longtime,hbar_infsup,gap,residual");
  const auto manifest = slurp(out / "manifest.json");
  EXPECT_NE(manifest.find("\"config_hash\""), std::string::npos);
  EXPECT_NE(manifest.find("fnv1a64:"), std::string::npos);
  EXPECT_NE(manifest.find("\"wall_seconds\""), std::string::npos);
  EXPECT_NE(manifest.find("\"versions\""), std::string::npos);
  EXPECT_TRUE(fs::exists(out / "summary.txt"));
}

TEST(Cli, LegendreWritesTableAndConstants) {
  const auto dir = scratch("legendre");
  const auto cfg = write_config(dir, "[model]\nkind = mechanical\ndim = 1\nV = cos(2*pi*x)\n\n[solver]\nx_res = 32\n");
  const auto out = dir / "out";
  const auto r = run("--config " + cfg.string() + " --out " + out.string() + " legendre", dir);
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_TRUE(fs::exists(out / "lagrangian.csv"));
  const auto constants = slurp(out / "constants.csv");
  EXPECT_NE(constants.find("a0"), std::string::npos);
}

TEST(Cli, ShippedConfigsParse) {
  for (const auto& e : fs::directory_iterator(HJLAB_CONFIG_DIR)) {
    if (e.path().extension() != ".ini") continue;
    const auto text = slurp(e.path());
    EXPECT_EQ(text.find("\t"), std::string::npos) << e.path();
    EXPECT_NE(text.find("[model]"), std::string::npos) << e.path();
  }
}
