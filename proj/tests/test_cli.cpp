#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "oracles.hpp"
#include "persuasion/cli.hpp"

namespace fs = std::filesystem;
using namespace persuasion;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "persuasion");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = persuasion::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("persuasion_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, SolveFixture) {
  auto r = invoke({"solve", oracle::fixture_path(), "--method", "myop", "-o", path("rep.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "6.000000\n");
  const auto rep = Json::parse(read_file(path("rep.json")));
  EXPECT_EQ(rep["method"], "myop");
  EXPECT_NEAR(rep["principal_payoff"].get<double>(), 6.0, 1e-9);

  r = invoke({"solve", oracle::fixture_path(), "--method", "nosig-fs"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "0.000000\n");
}

TEST_F(Cli, ThreatMatchesAm) {
  const auto inst = path("inst.json");
  ASSERT_EQ(invoke({"generate", "random", "--states", "5", "--actions", "4", "--thetas", "3", "--terminals", "1",
                 "--seed", "7", "-o", inst}).code,
            0);
  const auto threat = invoke({"solve", inst, "--method", "threat"});
  const auto am = invoke({"solve", inst, "--method", "am"});
  ASSERT_EQ(threat.code, 0) << threat.err;
  ASSERT_EQ(am.code, 0) << am.err;
  EXPECT_NEAR(std::stod(threat.out), std::stod(am.out), 1e-6);
}

TEST_F(Cli, GenerateFamilies) {
  auto r = invoke({"generate", "random", "--states", "10", "--actions", "10", "--thetas", "10", "--terminals", "5",
                "--beta", "0", "--seed", "7", "-o", path("inst.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("|S|=10"), std::string::npos);
  EXPECT_NE(r.out.find("seed=7"), std::string::npos);
  RandomSpec spec;
  spec.seed = 7;
  EXPECT_EQ(read_file(path("inst.json")), serialize_instance(gen_random(spec)));

  r = invoke({"generate", "roadnav", "--nodes", "20", "--edges", "100", "--thetas", "3", "--seed", "1", "-o",
           path("road.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load_instance(path("road.json")).num_states(), 20u);

  write_file(path("k3.edges"), "3 3\n0 1\n1 2\n0 2\n");
  r = invoke({"generate", "indset", "--graph", path("k3.edges"), "--gamma-tilde", "0.4", "-o", path("k3.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load_instance(path("k3.json")).num_states(), 10u);
  const auto mapping = Json::parse(read_file(path("k3.mapping.json")));
  EXPECT_EQ(mapping["vertices"].size(), 3u);
  EXPECT_EQ(mapping["terminal"], 9);
}

TEST_F(Cli, Evaluate) {
  const auto r = invoke({"evaluate", oracle::fixture_path(), "--method", "threat", "--rollouts", "2000", "--seed", "3",
                      "-o", path("ev.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = Json::parse(read_file(path("ev.json")));
  EXPECT_NEAR(j["exact"]["principal_payoff"].get<double>(), 6.0, 1e-9);
  EXPECT_EQ(j["rollout"]["samples"], 2000);
}

TEST_F(Cli, ExperimentIsThreadIndependent) {
  const std::vector<std::string> base{"experiment", "--family", "random", "--grid", "0:0.5:1", "--instances", "3",
                                      "--states", "4", "--actions", "3", "--thetas", "3", "--terminals", "1",
                                      "--seed", "5"};
  auto one = base, four = base;
  one.insert(one.end(), {"--threads", "1", "-o", path("a.dat")});
  four.insert(four.end(), {"--threads", "4", "-o", path("b.dat")});
  ASSERT_EQ(invoke(one).code, 0);
  ASSERT_EQ(invoke(four).code, 0);
  const auto a = read_file(path("a.dat"));
  EXPECT_EQ(a, read_file(path("b.dat")));
  EXPECT_EQ(a.substr(0, a.find('\n')), dat_header());
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 4);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(invoke({}).code, persuasion::cli::kUsage);
  EXPECT_EQ(invoke({"--help"}).code, persuasion::cli::kOk);
  EXPECT_EQ(invoke({"solve", oracle::fixture_path(), "--method", "telepathy"}).code, persuasion::cli::kUsage);
  EXPECT_EQ(invoke({"generate", "random", "--beta", "3"}).code, persuasion::cli::kUsage);
  EXPECT_EQ(invoke({"experiment", "--grid", "1:0:2"}).code, persuasion::cli::kUsage);

  const auto missing = invoke({"solve", path("absent.json")});
  EXPECT_EQ(missing.code, persuasion::cli::kIo);
  EXPECT_NE(missing.err.find("IoError"), std::string::npos);

  write_file(path("broken.json"), "{\"states\": [");
  const auto broken = invoke({"solve", path("broken.json")});
  EXPECT_EQ(broken.code, persuasion::cli::kIo);
  EXPECT_NE(broken.err.find("ParseError"), std::string::npos);
}

TEST_F(Cli, ComputationFailureNamesKind) {
  // An absurdly small recovery tolerance turns rounding noise into a failure.
  const auto inst = path("inst.json");
  ASSERT_EQ(invoke({"generate", "random", "--seed", "3", "-o", inst}).code, 0);
  const auto r = invoke({"solve", inst, "--method", "myop", "--tol-recovery", "-1"});
  EXPECT_EQ(r.code, persuasion::cli::kComputation);
  EXPECT_NE(r.err.find("RecoveryMismatch"), std::string::npos);
}
