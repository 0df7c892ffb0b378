#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "hmflow/harness.hpp"

using namespace hmflow;
namespace fs = std::filesystem;

namespace {

const char* kMinimal =
    "domain.n = 16\n"
    "target.kind = spider\n"
    "init.kind = degree_map\n"
    "solver.kind = mm\n";

template <class F>
void expect_config_error(F f, const std::string& fragment) {
  try {
    f();
    FAIL() << "accepted, expected: " << fragment;
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::config_invalid);
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Fresh working directory per test, removed afterwards.
class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("hmflow_") + info->name() + "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  void write(const std::string& name, const std::string& text) { std::ofstream(dir_ / name) << text; }

  int cli(const std::string& args, const std::string& env = "") {
    const std::string cmd =
        "cd '" + dir_.string() + "' && " + env + " '" + HMFLOW_CLI + "' " + args + " > cli.log 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path dir_;
};

const char* kSmallRun =
    "domain.n = 24\n"
    "target.kind = circle\n"
    "init.kind = degree_map\n"
    "init.amplitude = 0.5\n"
    "solver.kind = wed\n"
    "wed.eps = 0.05\n"
    "wed.tau = 0.005\n"
    "wed.t_max = 0.25\n"
    "diagnostics.energy = true\n"
    "output.dir = out\n";

}  // namespace

TEST(Config, AppliesDefaultsAndIgnoresComments) {
  const RunConfig c = parse_config(std::string("# header\n\n") + kMinimal + "mm.tau = 0.02   # trailing\n");
  EXPECT_EQ(c.integer("domain.n"), 16);
  EXPECT_EQ(c.real("mm.tau"), 0.02);
  EXPECT_EQ(c.integer("mm.steps"), 100);
  EXPECT_EQ(c.word("target.kind"), "spider");
  EXPECT_TRUE(c.flag("diagnostics.energy"));
  EXPECT_EQ(c.reals("sweep.eps"), (std::vector<double>{0.2, 0.1, 0.05}));
  EXPECT_EQ(c.values.size(), config_schema().size());
  EXPECT_NE(c.echo().find("domain.n = 16\n"), std::string::npos);
  EXPECT_EQ(config_domain(c).size(), 16);
  EXPECT_DOUBLE_EQ(config_domain(c).h, 2.0 * kPi / 16);
  EXPECT_EQ(config_target(c), TargetKind::spider(3));
}

TEST(Config, RejectsMalformedInput) {
  const std::string m = kMinimal;
  expect_config_error([&] { parse_config(m + "bogus.key = 1\n", "f.cfg"); }, "f.cfg:5: unknown key bogus.key");
  expect_config_error([&] { parse_config(m + "domain.n = 32\n", "f.cfg"); }, "f.cfg:5: duplicate key domain.n");
  expect_config_error([&] { parse_config(m + "just words\n", "f.cfg"); }, "expected key = value");
  expect_config_error([&] { parse_config("target.kind = spider\ninit.kind = constant\nsolver.kind = mm\n"); },
                      "domain.n: required key missing");
  expect_config_error([&] { parse_config(m + "mm.steps = 2.5\n"); }, "expected an integer");
  expect_config_error([&] { parse_config(m + "mm.tau = fast\n"); }, "expected a finite number");
  expect_config_error([&] { parse_config(m + "mm.tau = nan\n"); }, "expected a finite number");
  expect_config_error([&] { parse_config(m + "output.trajectory = yes\n"); }, "expected true or false");
  expect_config_error([&] { parse_config(m + "wed.fill = zero\n"); }, "expected one of minimizing_movement, constant");
  expect_config_error([&] { parse_config(m + "sweep.eps = 0.1, x\n"); }, "comma separated");
  expect_config_error([&] { parse_config(m + "mm.tau = -1\n"); }, "mm.tau: must be positive");
  expect_config_error([&] { parse_config(m + "domain.dim = 3\n"); }, "domain.dim: must be 1 or 2");
  expect_config_error([&] { parse_config(m + "sweep.eps = 0.1, 0\n"); }, "sweep.eps");
  try {
    load_config("/nonexistent/x.cfg");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::config_not_found);
  }
}

TEST(Config, SetChecksAndRollsBack) {
  RunConfig c = parse_config(kMinimal);
  c.set("mm.tau", "0.5");
  EXPECT_EQ(c.real("mm.tau"), 0.5);
  expect_config_error([&] { c.set("mm.tau", "-2"); }, "must be positive");
  EXPECT_EQ(c.real("mm.tau"), 0.5);
  expect_config_error([&] { c.set("mm.nope", "1"); }, "unknown key");
  expect_config_error([&] { c.set("mm.steps", "x"); }, "expected an integer");
}

TEST(Config, ShippedConfigsParse) {
  int count = 0;
  for (const auto& e : fs::directory_iterator(fs::path(HMFLOW_SOURCE_DIR) / "configs")) {
    if (e.path().extension() != ".cfg") continue;
    EXPECT_NO_THROW(load_config(e.path())) << e.path();
    ++count;
  }
  EXPECT_GE(count, 5);
}

TEST_F(Cli, MissingConfigExitsTwoWithoutArtifacts) {
  EXPECT_EQ(cli("run nothere.cfg"), 2);
  EXPECT_FALSE(fs::exists(dir_ / "out"));
  EXPECT_EQ(cli("bogus"), 2);
  EXPECT_EQ(cli(""), 2);
}

TEST_F(Cli, InvalidConfigExitsTwoWithoutArtifacts) {
  write("bad.cfg", std::string(kSmallRun) + "wed.tau = 0\n");
  EXPECT_EQ(cli("run bad.cfg"), 2);
  EXPECT_EQ(cli("validate --config-only bad.cfg"), 2);
  EXPECT_FALSE(fs::exists(dir_ / "out"));
  EXPECT_NE(slurp(dir_ / "cli.log").find("duplicate key wed.tau"), std::string::npos);
  write("good.cfg", kSmallRun);
  EXPECT_EQ(cli("validate --config-only good.cfg"), 0);
  EXPECT_FALSE(fs::exists(dir_ / "out"));
}

TEST_F(Cli, RunWritesArtifactsAndManifest) {
  write("small.cfg", kSmallRun);
  ASSERT_EQ(cli("run small.cfg"), 0) << slurp(dir_ / "cli.log");
  for (const char* f : {"energy.csv", "wed_objective.csv", "validation.csv", "initial.csv", "final.csv", "plot.gp",
                        "manifest.json"})
    EXPECT_TRUE(fs::exists(dir_ / "out" / f)) << f;
  const auto m = nlohmann::json::parse(slurp(dir_ / "out" / "manifest.json"));
  EXPECT_EQ(m["status"], "ok");
  EXPECT_EQ(m["exit_code"], 0);
  EXPECT_EQ(m["command"], "run");
  EXPECT_EQ(m["versions"]["hmflow"], harness::kVersion);
  // the energy file starts at E0 of the discrete degree-one loop
  std::istringstream energy(slurp(dir_ / "out" / "energy.csv"));
  std::string header, first;
  std::getline(energy, header);
  std::getline(energy, first);
  EXPECT_EQ(header, "k,t,E,step_dissipation");
  EXPECT_EQ(first.rfind("0,0,", 0), 0u) << first;
}

TEST_F(Cli, OutputsAreBitwiseReproducibleAcrossRunsAndThreads) {
  write("small.cfg", kSmallRun);
  ASSERT_EQ(cli("run small.cfg"), 0);
  const std::string a = slurp(dir_ / "out" / "energy.csv"), fa = slurp(dir_ / "out" / "final.csv");
  ASSERT_EQ(cli("run small.cfg"), 0);
  EXPECT_EQ(slurp(dir_ / "out" / "energy.csv"), a);
  ASSERT_EQ(cli("run small.cfg", "HMFLOW_THREADS=4"), 0);
  EXPECT_EQ(slurp(dir_ / "out" / "energy.csv"), a);
  EXPECT_EQ(slurp(dir_ / "out" / "final.csv"), fa);
}

TEST_F(Cli, FailedChecksExitOne) {
  // a starved inner solver cannot reach the tolerance
  write("starved.cfg", std::string(kMinimal) + "mm.inner_max_sweeps = 1\nmm.tau = 1\noutput.dir = out\n");
  EXPECT_EQ(cli("run starved.cfg"), 1);
  const auto m = nlohmann::json::parse(slurp(dir_ / "out" / "manifest.json"));
  EXPECT_EQ(m["status"], "failed");
  EXPECT_TRUE(m.contains("error"));
}

TEST_F(Cli, OtherSubcommandsProduceTheirTables) {
  write("tent.cfg",
        "domain.n = 32\ntarget.kind = spider\ninit.kind = degree_map\nsolver.kind = wed\n"
        "wed.eps = 0.05\nwed.tau = 0.005\nwed.t_max = 0.4\nmm.tau = 0.02\nmm.steps = 3000\n"
        "sweep.eps = 0.2, 0.1\noutput.dir = out\n");
  ASSERT_EQ(cli("frequency tent.cfg --z0 8 --t0 0.3 --rmin 0.2 --rmax 0.5 --nr 4"), 0) << slurp(dir_ / "cli.log");
  EXPECT_TRUE(fs::exists(dir_ / "out" / "frequency.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "augmented_frequency.csv"));
  ASSERT_EQ(cli("sweep-eps tent.cfg"), 0) << slurp(dir_ / "cli.log");
  std::istringstream vf(slurp(dir_ / "out" / "value_function.csv"));
  std::string line;
  int rows = -1;
  while (std::getline(vf, line)) ++rows;
  EXPECT_EQ(rows, 2);
  ASSERT_EQ(cli("harmonic-limit tent.cfg"), 0) << slurp(dir_ / "cli.log");
  EXPECT_TRUE(fs::exists(dir_ / "out" / "limit.csv"));
  EXPECT_EQ(cli("frequency tent.cfg --nr 1"), 2);
}

TEST_F(Cli, MatchesGoldenEnergyTables) {
  // golden tables were produced by this build's solver; they pin the numerics
  const fs::path golden = fs::path(HMFLOW_SOURCE_DIR) / "tests" / "golden";
  for (const char* name : {"circle_small", "spider_small"}) {
    write("g.cfg", slurp(golden / (std::string(name) + ".cfg")));
    ASSERT_EQ(cli("run g.cfg"), 0) << name;
    std::istringstream got(slurp(dir_ / "out" / "energy.csv")), want(slurp(golden / (std::string(name) + "_energy.csv")));
    std::string g, w;
    int rows = 0;
    while (std::getline(want, w)) {
      ASSERT_TRUE(static_cast<bool>(std::getline(got, g))) << name;
      if (rows++ == 0) {
        EXPECT_EQ(g, w);
        continue;
      }
      std::istringstream gs(g), ws(w);
      std::string gc, wc;
      while (std::getline(ws, wc, ',')) {
        ASSERT_TRUE(static_cast<bool>(std::getline(gs, gc, ',')));
        const double a = std::stod(gc), b = std::stod(wc);
        EXPECT_NEAR(a, b, 1e-9 * std::max(1.0, std::abs(b))) << name << " row " << rows;
      }
    }
    EXPECT_GT(rows, 5);
  }
}
