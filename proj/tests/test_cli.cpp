#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <sys/wait.h>

#include "klvote/cli.hpp"
#include "klvote/records.hpp"
#include "oracles/alg1_oracle.hpp"
#include "oracles/eval_fixture.hpp"

namespace klvote {
namespace {

namespace fs = std::filesystem;

const std::string kData = KLVOTE_TEST_DATA;

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("klvote_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string write(const std::string& name, const std::string& content) const {
    std::ofstream(path(name), std::ios::binary) << content;
    return path(name);
  }
  std::string fixture_files() const {
    std::string d, g;
    for (const auto& x : testing_support::fixture_dets())
      d += serialize(DetectionRecord{x.image_id, x.class_id, x.box, x.score, std::nullopt}) + "\n";
    for (const auto& x : testing_support::fixture_gts())
      g += serialize(GroundTruthRecord{x.image_id, x.class_id, x.box}) + "\n";
    write("gt.jsonl", g);
    return write("det.jsonl", d);
  }

  fs::path dir_;
};

TEST_F(CliTest, SuppressEmptyInput) {
  const auto in = write("empty.jsonl", "");
  const CliResult r = cli({"suppress", "--in", in, "--out", path("o.jsonl")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(path("o.jsonl")));
  EXPECT_EQ(slurp(path("o.jsonl")), "");
}

TEST_F(CliTest, SuppressVotingWithoutVar) {
  const auto in = write("d.jsonl",
                        "{\"image_id\":1,\"category_id\":1,\"bbox\":[0,0,1,1],\"score\":0.5,\"var\":[1,1,1,1]}\n"
                        "{\"image_id\":1,\"category_id\":1,\"bbox\":[0,0,1,1],\"score\":0.4}\n");
  const CliResult r = cli({"suppress", "--in", in, "--out", path("o.jsonl")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
  EXPECT_EQ(cli({"suppress", "--in", in, "--out", path("o.jsonl"), "--vote", "off"}).code, 0);
}

TEST_F(CliTest, SuppressParseErrorNamesLine) {
  const auto in = write("d.jsonl", "{\"image_id\":1,\"category_id\":1,\"bbox\":[0,0,1,1],\"score\":0.5}\n{oops\n");
  const CliResult r = cli({"suppress", "--in", in, "--out", path("o.jsonl"), "--vote", "off"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
}

TEST_F(CliTest, BadConfigExitsThree) {
  const auto cfg = write("c.cfg", "no_such_key=1\n");
  const auto in = write("e.jsonl", "");
  EXPECT_EQ(cli({"suppress", "--in", in, "--out", path("o.jsonl"), "--config", cfg}).code, 3);
  EXPECT_EQ(cli({"suppress", "--in", in, "--out", path("o.jsonl"), "--soft", "sideways"}).code, 3);
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
  EXPECT_EQ(cli({"eval", "--det", "x"}).code, 2);
}

TEST_F(CliTest, SuppressCountsTable) {
  const CliResult r = cli({"suppress", "--in", kData + "/suppress_in.jsonl", "--out", path("o.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("category_id", 0), 0u) << r.out;
}

TEST_F(CliTest, SuppressGoldenByteIdentical) {
  const CliResult r = cli({"suppress", "--in", kData + "/suppress_in.jsonl", "--out", path("o.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(path("o.jsonl")), slurp(kData + "/suppress_golden.jsonl"));
}

// The committed golden file is itself checked against the straight-line oracle.
TEST(Golden, AgreesWithOracle) {
  const auto in = read_detections(kData + "/suppress_in.jsonl");
  const auto golden = read_detections(kData + "/suppress_golden.jsonl");
  ASSERT_EQ(in.size(), 50u);

  std::map<std::pair<std::int64_t, int>, std::vector<oracle::Det>> groups;
  for (const auto& r : in) {
    oracle::Det d{{r.bbox.x1, r.bbox.y1, r.bbox.x2, r.bbox.y2}, r.score, {(*r.var)[0], (*r.var)[1], (*r.var)[2], (*r.var)[3]}};
    groups[{r.image_id, r.category_id}].push_back(d);
  }
  std::map<std::pair<std::int64_t, int>, std::vector<const DetectionRecord*>> got;
  for (const auto& r : golden) got[{r.image_id, r.category_id}].push_back(&r);

  std::size_t total = 0;
  for (const auto& [key, dets] : groups) {
    auto want = oracle::alg1(dets, oracle::kGaussian, 0.5, 0.5, true, 0.02, 0.001);
    std::stable_sort(want.begin(), want.end(), [](const auto& a, const auto& b) { return a.s > b.s; });
    const auto& have = got[key];
    ASSERT_EQ(have.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
      const Box& b = have[i]->bbox;
      EXPECT_NEAR(b.x1, want[i].b[0], 1e-9);
      EXPECT_NEAR(b.y1, want[i].b[1], 1e-9);
      EXPECT_NEAR(b.x2, want[i].b[2], 1e-9);
      EXPECT_NEAR(b.y2, want[i].b[3], 1e-9);
      EXPECT_NEAR(have[i]->score, want[i].s, 1e-12);
      EXPECT_EQ((*have[i]->var)[0], dets[want[i].m].c[0]);
    }
    total += want.size();
  }
  EXPECT_EQ(total, golden.size());
}

TEST_F(CliTest, EvalFixtureGolden) {
  const auto det = fixture_files();
  const CliResult r = cli({"eval", "--det", det, "--gt", path("gt.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string json = slurp(det + ".metrics.json");
  for (const auto& [name, v] : testing_support::fixture_expected()) {
    const auto at = json.find("\"" + name + "\":");
    ASSERT_NE(at, std::string::npos) << name;
    EXPECT_NEAR(std::stod(json.substr(at + name.size() + 3)), v, 1e-9) << name;
  }
  EXPECT_NE(r.out.find("AP90"), std::string::npos);
}

TEST_F(CliTest, EvalPerfect) {
  fixture_files();
  std::string d;
  for (const auto& g : read_ground_truth(path("gt.jsonl")))
    d += serialize(DetectionRecord{g.image_id, g.category_id, g.bbox, 1.0, std::nullopt}) + "\n";
  write("perfect.jsonl", d);
  ASSERT_EQ(cli({"eval", "--det", path("perfect.jsonl"), "--gt", path("gt.jsonl"), "--out", path("m.json")}).code, 0);
  EXPECT_NE(slurp(path("m.json")).find("\"AP\":1,"), std::string::npos) << slurp(path("m.json"));
}

TEST_F(CliTest, EvalMissingGt) {
  const auto det = fixture_files();
  const CliResult r = cli({"eval", "--det", det, "--gt", path("absent.jsonl")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("absent.jsonl"), std::string::npos);
}

TEST_F(CliTest, EvalIdMismatch) {
  fixture_files();
  const auto det = write("bad.jsonl", "{\"image_id\":99,\"category_id\":1,\"bbox\":[0,0,1,1],\"score\":0.5}\n");
  EXPECT_EQ(cli({"eval", "--det", det, "--gt", path("gt.jsonl")}).code, 4);
}

TEST_F(CliTest, Gradcheck) {
  const CliResult ok = cli({"gradcheck"});
  EXPECT_EQ(ok.code, 0) << ok.out;
  EXPECT_NE(ok.out.find("quadratic"), std::string::npos);
  const CliResult none = cli({"gradcheck", "--cases", "0"});
  EXPECT_EQ(none.code, 0);
  EXPECT_NE(none.err.find("warning"), std::string::npos);
  const CliResult bad = cli({"gradcheck", "--cases", "50", "--perturb", "1e-3"});
  EXPECT_EQ(bad.code, 5);
  EXPECT_NE(bad.out.find("worst case"), std::string::npos);
}

TEST_F(CliTest, TrainToySmall) {
  const auto cfg = write("t.cfg", "noise_stds=0.05,0.3\nn_samples=2000\n");
  const CliResult r = cli({"train-toy", "--config", cfg, "--out", path("t.json")});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(slurp(path("t.json")).find("\"rank_agreement\":true"), std::string::npos);
}

TEST_F(CliTest, TrainToyDivergenceExitsSix) {
  const auto cfg = write("t.cfg", "noise_stds=0.1\nn_samples=10\ntrue_coord=1e308\n");
  EXPECT_EQ(cli({"train-toy", "--config", cfg}).code, 6);
}

TEST_F(CliTest, SweepZeroEqualsPlainEval) {
  const std::string det = kData + "/suppress_in.jsonl";
  const std::string gt = kData + "/suppress_gt.jsonl";
  ASSERT_EQ(cli({"sweep-sigma-t", "--det", det, "--gt", gt, "--grid", "0", "--out", path("s.json")}).code, 0);
  ASSERT_EQ(cli({"suppress", "--in", det, "--out", path("nv.jsonl"), "--vote", "off"}).code, 0);
  ASSERT_EQ(cli({"eval", "--det", path("nv.jsonl"), "--gt", gt, "--out", path("m.json")}).code, 0);
  const std::string sweep = slurp(path("s.json"));
  const std::string m = slurp(path("m.json"));
  for (const std::string name : {"AP", "AP50", "AP75", "AP80", "AP90"}) {
    const std::string key = "\"" + name + "\":";
    const auto a = sweep.find(key), b = m.find(key);
    ASSERT_NE(a, std::string::npos);
    ASSERT_NE(b, std::string::npos);
    EXPECT_EQ(std::stod(sweep.substr(a + key.size())), std::stod(m.substr(b + key.size()))) << name;
  }
}

TEST_F(CliTest, SweepVotingRaisesAp90) {
  const CliResult r = cli({"sweep-sigma-t", "--det", kData + "/voting_det.jsonl", "--gt", kData + "/voting_gt.jsonl",
                     "--grid", "0,0.02", "--out", path("s.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string s = slurp(path("s.json"));
  const auto first = s.find("\"AP90\":");
  const auto second = s.find("\"AP90\":", first + 1);
  ASSERT_NE(second, std::string::npos);
  EXPECT_LT(std::stod(s.substr(first + 7)), std::stod(s.substr(second + 7)));
}

TEST_F(CliTest, EverySubcommandDeterministic) {
  const auto det = fixture_files();
  const auto toy = write("t.cfg", "noise_stds=0.1,0.2\nn_samples=1000\n");
  const std::vector<std::vector<std::string>> cmds{
      {"suppress", "--in", kData + "/suppress_in.jsonl", "--out", path("OUT")},
      {"eval", "--det", det, "--gt", path("gt.jsonl"), "--out", path("OUT")},
      {"gradcheck", "--seed", "3", "--cases", "200"},
      {"train-toy", "--config", toy, "--out", path("OUT")},
      {"sweep-sigma-t", "--det", kData + "/voting_det.jsonl", "--gt", kData + "/voting_gt.jsonl", "--out", path("OUT")},
  };
  for (const auto& c : cmds) {
    const CliResult a = cli(c);
    const std::string fa = fs::exists(path("OUT")) ? slurp(path("OUT")) : "";
    fs::remove(path("OUT"));
    const CliResult b = cli(c);
    const std::string fb = fs::exists(path("OUT")) ? slurp(path("OUT")) : "";
    fs::remove(path("OUT"));
    EXPECT_EQ(a.code, b.code) << c[0];
    EXPECT_EQ(a.out, b.out) << c[0];
    EXPECT_EQ(fa, fb) << c[0];
  }
}

TEST(Binary, ExitCodeReachesShell) {
  const std::string exe = KLVOTE_CLI;
  EXPECT_EQ(std::system((exe + " gradcheck --cases 10 > /dev/null").c_str()), 0);
  const int status = std::system((exe + " gradcheck --cases 10 --perturb 1e-2 > /dev/null").c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 5);
}

}  // namespace
}  // namespace klvote
