#include <gtest/gtest.h>
#include <json.hpp>

#include "kloosterlab/io_cache.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

// stdout only; stderr is folded in when `merge` is set
CliRun run(const std::string& args, bool merge = false) {
  const std::string cmd = std::string(KLOOSTERLAB_CLI_PATH) + " " + args + (merge ? " 2>&1" : " 2>/dev/null");
  CliRun r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::vector<std::vector<std::string>> csv(const std::string& text) {
  std::istringstream in(text);
  return kloosterlab::read_csv(in);
}

// |value| of the single data row
double modulus_of(const CliRun& r) {
  const auto rows = csv(r.out);
  EXPECT_EQ(rows.size(), 2u) << r.out;
  if (rows.size() < 2) return std::nan("");
  return std::hypot(std::stod(rows[1][4]), std::stod(rows[1][5]));
}

// value_re of the single data row
double value_of(const CliRun& r) {
  const auto rows = csv(r.out);
  EXPECT_EQ(rows.size(), 2u) << r.out;
  if (rows.size() < 2) return std::nan("");
  return std::stod(rows[1][4]);
}

std::string param(const std::string& joined, const std::string& key) {
  std::istringstream in(joined);
  std::string item;
  while (std::getline(in, item, ';'))
    if (item.rfind(key + "=", 0) == 0) return item.substr(key.size() + 1);
  return {};
}

class TempDir {
public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("kloosterlab_cli_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

private:
  fs::path path_;
};

} // namespace

TEST(Cli, EvalExamples) {
  const CliRun r = run("eval --a 1 --m 6");
  ASSERT_EQ(r.code, 0);
  const auto rows = csv(r.out);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1][0], "eval");
  EXPECT_NEAR(std::stod(rows[1][4]), -0.40824829, 1e-8);
  EXPECT_EQ(rows[1][6], "weil");
  EXPECT_EQ(std::stod(rows[1][7]), 4.0);
  EXPECT_NEAR(std::stod(param(rows[1][1], "star")), 0.10206207, 1e-8);
  EXPECT_NEAR(value_of(run("eval --a 0 --m 6")), 0.40824829, 1e-8);
  EXPECT_EQ(value_of(run("eval --a 1 --m 1")), 1.0);
}

TEST(Cli, HorizontalExamples) {
  EXPECT_NEAR(value_of(run("horizontal --a 1 --weight unit --M 3")), 1.12975651, 1e-8);
  EXPECT_NEAR(value_of(run("horizontal --a 1 --weight moebius --M 3")), 0.87024349, 1e-8);
  EXPECT_NEAR(value_of(run("horizontal --a 1 --abs --M 3")), 2.28445705, 1e-8);
  const CliRun k = run("horizontal --a 1 --weight kfree:2 --M 1 --envelope kfree");
  ASSERT_EQ(k.code, 0);
  const auto rows = csv(k.out);
  EXPECT_EQ(std::stod(rows[1][4]), 1.0);
  EXPECT_EQ(std::stod(rows[1][7]), 2.0);
}

TEST(Cli, DyadicGridOneRowPerPoint) {
  const CliRun r = run("horizontal --a 1 --M 5000 --dyadic --envelope linnik-selberg");
  ASSERT_EQ(r.code, 0);
  const auto rows = csv(r.out);
  ASSERT_EQ(rows.size(), 4u); // header, 1024, 2048, 4096
  EXPECT_EQ(rows[1][2], "1024");
  EXPECT_EQ(rows[3][2], "4096");
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i][6], "linnik-selberg");
  EXPECT_EQ(run("horizontal --a 1 --M 500 --dyadic").code, 2);
}

TEST(Cli, VerticalAndCorrelate) {
  EXPECT_NEAR(value_of(run("vertical --m 10007 --weight unit --N 10007")), 0.0, 1e-8);
  EXPECT_NEAR(value_of(run("vertical --m 6 --N 1")), -0.40824829, 1e-8);
  const double t = value_of(run("vertical --m 1009 --weight thue-morse --N 700 --path table"));
  const double e = value_of(run("vertical --m 1009 --weight thue-morse --N 700 --path per-entry"));
  EXPECT_NEAR(t, e, 1e-10);
  EXPECT_NEAR(modulus_of(run("correlate --product --p 7 --shifts 0 --b 1")), 2.64575131, 1e-7);
  const CliRun c = run("correlate --product --p 10007 --shifts 0,1 --envelope complete");
  ASSERT_EQ(c.code, 0);
  const auto rows = csv(c.out);
  EXPECT_EQ(param(rows[1][1], "normal"), "true");
  EXPECT_EQ(rows[1][6], "complete");
  const CliRun m = run("correlate --moment --a 1 --shifts 0,2 --exponents 2,2 --M 500");
  ASSERT_EQ(m.code, 0);
  EXPECT_GE(value_of(m), 0.0);
  EXPECT_NE(csv(m.out)[1][9].find("all-even"), std::string::npos);
}

TEST(Cli, OtherSubcommands) {
  EXPECT_NEAR(value_of(run("ap --a 1 --q 2 --M 3")), 0.70710678, 1e-8);
  EXPECT_EQ(value_of(run("digital --p 101 --r 10 --s 0")), 0.0);
  EXPECT_NEAR(value_of(run("bilinear --m 6 --alpha 1 --beta 1")), -0.40824829, 1e-8);
}

TEST(Cli, JsonOutput) {
  const CliRun r = run("--format json eval --a 1 --m 6");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  ASSERT_EQ(j.size(), 1u);
  EXPECT_NEAR(j[0]["value_re"].get<double>(), -0.40824829, 1e-8);
  // global flags may follow the subcommand
  EXPECT_EQ(run("eval --a 1 --m 6 --format json --deterministic").out,
            run("--format json --deterministic eval --a 1 --m 6").out);
}

TEST(Cli, DeterministicRunsAreByteIdentical) {
  const std::string args = "--deterministic --seed 7 horizontal --a 2 --weight moebius --M 4096 --dyadic --envelope linnik-selberg";
  const CliRun a = run(args), b = run(args + " --threads 4");
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  const auto rows = csv(a.out);
  EXPECT_EQ(rows[1][10], "7");
  EXPECT_EQ(rows[1][12], "");
}

TEST(Cli, OutputFileAndConfig) {
  TempDir dir;
  const fs::path conf = dir.path() / "run.conf";
  std::ofstream(conf) << "format = json\ndeterministic = true\n";
  const fs::path out = dir.path() / "out.json";
  const CliRun r = run("--config " + conf.string() + " --output " + out.string() + " eval --a 1 --m 6");
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  std::ifstream in(out);
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j[0]["timestamp"], "");
  // explicit flag wins over the file
  EXPECT_EQ(csv(run("--config " + conf.string() + " --format csv eval --a 1 --m 6").out).size(), 2u);
}

TEST(Cli, CacheDirectoryIsWrittenOnlyWhenConfigured) {
  TempDir dir;
  const fs::path cache = dir.path() / "cache";
  ASSERT_EQ(run("--cache-dir " + cache.string() + " vertical --m 1009 --N 1009").code, 0);
  EXPECT_TRUE(fs::exists(cache / "table_1009.kltb"));
  ASSERT_EQ(run("--cache-dir " + cache.string() + " vertical --m 1009 --N 1009").code, 0);
}

TEST(Cli, ErrorsExitWithCodeTwo) {
  const CliRun bad = run("eval --a 1 --m 0", true);
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.out.find("kloosterlab:"), std::string::npos);
  EXPECT_EQ(run("horizontal --a 1 --weight kfree:1 --M 10").code, 2);
  EXPECT_EQ(run("ap --a 1 --q 1 --alpha -0.75 --M 10").code, 2);
  EXPECT_EQ(run("correlate --product --p 9 --shifts 0").code, 2);
  EXPECT_EQ(run("--theta 0.9 eval --a 1 --m 6").code, 2);
  EXPECT_NE(run("").code, 0);
  EXPECT_NE(run("nonsense").code, 0);
}

TEST(Cli, VerifySmallLimits) {
  const CliRun r = run("verify weil --max-m 200 --samples 50");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
  const CliRun i = run("verify identities --max-m 150 --twisted-max-p 60");
  EXPECT_EQ(i.code, 0) << i.out;
  const CliRun o = run("verify oracles --samples 50 --prime-powers 11 --dft-max-m 150");
  EXPECT_EQ(o.code, 0) << o.out;
}

TEST(Cli, Version) {
  const CliRun r = run("--version", true);
  EXPECT_NE(r.out.find("kloosterlab"), std::string::npos);
}
