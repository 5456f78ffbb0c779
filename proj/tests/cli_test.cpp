#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli_app.hpp"

namespace fs = std::filesystem;
using scdens::cli::json;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = scdens::cli::run(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("scdens_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string file(const std::string& name, const std::string& content) {
    auto p = (dir_ / name).string();
    std::ofstream(p) << content;
    return p;
  }
  std::string path(const std::string& name) { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, FitTwoPointsIsUniform) {
  auto r = call({"fit", file("d.txt", "x\n0\n1\n")});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = json::parse(r.out);
  EXPECT_EQ(j["version"], 1);
  EXPECT_EQ(j["n"], 2);
  EXPECT_TRUE(j["converged"].get<bool>());
  EXPECT_NEAR(j["raw_integral"].get<double>(), 1, 1e-8);
  EXPECT_NEAR(j["phi"][0].get<double>(), j["phi"][1].get<double>(), 1e-6);
}

TEST_F(CliTest, BadDataFiles) {
  auto r = call({"fit", file("e.txt", "")});
  EXPECT_EQ(r.code, 1);
  r = call({"fit", file("b.txt", "1\n2\nabc\n")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find(":3:"), std::string::npos) << r.err;
  r = call({"fit", path("missing.txt")});
  EXPECT_EQ(r.code, 1);
}

TEST_F(CliTest, SampleThenFit) {
  auto data = path("s.txt");
  auto r = call({"sample", "--n", "300", "--seed", "4", "--dist", "gaussian", "--out", data});
  ASSERT_EQ(r.code, 0) << r.err;
  auto again = path("s2.txt");
  call({"sample", "--n", "300", "--seed", "4", "--dist", "gaussian", "--out", again});
  std::ifstream a(data), b(again);
  std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
  EXPECT_EQ(sa, sb);
  r = call({"fit", data});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["n"], 300);
}

TEST_F(CliTest, SeedIsRequired) {
  EXPECT_EQ(call({"sample", "--n", "10"}).code, 1);
  EXPECT_EQ(call({"envelope-check"}).code, 1);
  auto cfg = file("c.json", R"({"version":1})");
  EXPECT_EQ(call({"rate-study", cfg, "--out", path("x")}).code, 1);
}

TEST_F(CliTest, RateStudyConfigErrors) {
  auto r = call({"rate-study", file("c.json", R"({"version":1,"replications":0})"), "--seed", "1", "--out", path("x")});
  EXPECT_EQ(r.code, 1);
  r = call({"rate-study", file("u.json", R"({"version":1,"colour":"red"})"), "--seed", "1", "--out", path("x")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("colour"), std::string::npos);
  r = call({"rate-study", file("v.json", R"({"n_grid":[100,200,400]})"), "--seed", "1", "--out", path("x")});
  EXPECT_EQ(r.code, 1);
  r = call({"rate-study", file("w.json", R"({"version":2})"), "--seed", "1", "--out", path("x")});
  EXPECT_EQ(r.code, 1);
}

TEST_F(CliTest, SmallRateStudyWritesOutputs) {
  auto cfg = file("c.json", R"({"version":1,"n_grid":[100,200,400],"replications":4,"metrics":["hellinger","l1"]})");
  auto r = call({"rate-study", cfg, "--seed", "9", "--out", path("rs"), "--format", "csv,json,svg"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(path("rs_raw.csv")));
  EXPECT_TRUE(fs::exists(path("rs.svg")));
  std::ifstream f(path("rs_summary.json"));
  auto j = json::parse(f);
  EXPECT_EQ(j["per_n"].size(), 3u);
  EXPECT_LT(j["slopes"]["hellinger"]["slope"].get<double>(), 0);
}

TEST_F(CliTest, EntropyStudyDefault) {
  auto r = call({"entropy-study", "--seed", "2", "--out", path("es")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream csv(path("es.csv"));
  std::string line;
  int rows = -1;
  while (std::getline(csv, line)) ++rows;
  EXPECT_GE(rows, 4);
  std::ifstream f(path("es.json"));
  auto j = json::parse(f);
  EXPECT_NEAR(j["exponent"].get<double>(), 0.5, 0.1);
}

TEST_F(CliTest, EnvelopeCheck) {
  auto r = call({"envelope-check", "--s", "-0.5", "--M", "1", "--members", "50", "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = json::parse(r.out);
  EXPECT_NEAR(j["L"].get<double>(), std::sqrt(2.0) - 1, 1e-12);
  EXPECT_EQ(j["violations"], 0);
}

TEST_F(CliTest, NonexistenceVerdict) {
  auto r = call({"nonexistence-demo"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("likelihood unbounded: yes"), std::string::npos);
  r = call({"nonexistence-demo", "--threshold", "100"});
  EXPECT_NE(r.out.find("likelihood unbounded: no"), std::string::npos);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(call({}).code, 1);
  EXPECT_EQ(call({"frobnicate"}).code, 1);
  EXPECT_EQ(call({"fit"}).code, 1);
  EXPECT_EQ(call({"--help"}).code, 0);
}
