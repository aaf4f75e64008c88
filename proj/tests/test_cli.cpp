#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "cli.hpp"
#include "helpers.hpp"
#include "respq/io.hpp"

using namespace respq;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "respq");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("respq_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void ok(const Run& r) { ASSERT_EQ(r.code, 0) << r.err; }

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) files[e.path().filename().string()] = read_file(e.path());
  return files;
}

// One candidate plus GT, 60 s at 20 Hz.
void write_single_method(const fs::path& dir) {
  SeededRng rng(9);
  auto gt = respq::testing::tone(0.25, 20.0, 1200);
  auto m = gt;
  respq::testing::add_inband_noise(m, 20.0, 0.1, 0.5, 10.0, rng);
  write_file_atomic(dir / "signals.csv", render_signals(std::vector<Stream>{{"r", "GT", gt}, {"r", "cam", m}}));
  write_file_atomic(dir / "meta.csv", render_meta(std::vector<StreamMeta>{{"r", 20.0, "GT", "GT"}, {"r", 20.0, "NLM", "cam"}}));
}

}  // namespace

TEST(Cli, EstimateRowCount) {
  const auto dir = scratch("rows");
  write_single_method(dir);
  ok(cli({"estimate", "--in", dir.string()}));
  const auto rr = parse_rr(read_file(dir / "rr.csv"));
  const std::size_t windows = 51;  // (60 - 10) / 1 + 1
  std::size_t candidate = 0, gt = 0;
  for (const auto& r : rr) (r.method_id == "GT" ? gt : candidate)++;
  EXPECT_EQ(candidate, 1 * std::size(kAllEstimators) * windows);
  EXPECT_EQ(gt, windows);
  // errors.csv covers the configured estimator only.
  EXPECT_EQ(parse_errors(read_file(dir / "errors.csv")).size(), windows);
}

TEST(Cli, MalformedHeaderNamesLineOne) {
  const auto dir = scratch("header");
  write_file_atomic(dir / "signals.csv", "recording,method,index,value\nr,m,0,1\n");
  const auto r = cli({"estimate", "--in", dir.string()});
  EXPECT_NE(r.code, 0);
  EXPECT_EQ(r.err.rfind("error: ParseError: ", 0), 0u) << r.err;
  EXPECT_NE(r.err.find("signals.csv:1:"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir / "rr.csv"));
}

TEST(Cli, ConfigAndInputErrors) {
  const auto dir = scratch("config");
  write_single_method(dir);
  write_file_atomic(dir / "run.cfg", "windows_s = 10\n");
  auto r = cli({"estimate", "--in", dir.string(), "--config", (dir / "run.cfg").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error: ConfigError: windows_s", 0), 0u) << r.err;

  r = cli({"quality", "--in", (dir / "nowhere").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error: MissingInput: ", 0), 0u) << r.err;

  r = cli({"synth", "--preset", "nope", "--out", dir.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("nope"), std::string::npos);

  EXPECT_NE(cli({"fuse", "--scenario", "XYZ"}).code, 0);
  EXPECT_NE(cli({}).code, 0);
  EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST(Cli, SynthEstimateQualityAreDeterministic) {
  std::map<std::string, std::string> first;
  for (int run = 0; run < 2; ++run) {
    const auto dir = scratch("det" + std::to_string(run));
    ok(cli({"synth", "--preset", "disjoint-failure", "--recordings", "2", "--seed", "5", "--out", dir.string()}));
    ok(cli({"estimate", "--in", dir.string()}));
    ok(cli({"quality", "--in", dir.string()}));
    const auto files = snapshot(dir);
    EXPECT_EQ(files.size(), 6u);
    if (run == 0) first = files;
    else EXPECT_TRUE(files == first);
  }
  const auto other = scratch("det_seed");
  ok(cli({"synth", "--preset", "disjoint-failure", "--recordings", "2", "--seed", "6", "--out", other.string()}));
  EXPECT_NE(read_file(other / "signals.csv"), first["signals.csv"]);
}

TEST(Cli, FullWorkflow) {
  const auto train = scratch("wf_train"), test = scratch("wf_test"), models = scratch("wf_models");
  ok(cli({"synth", "--preset", "disjoint-failure", "--recordings", "2", "--seed", "1", "--out", train.string()}));
  ok(cli({"synth", "--preset", "disjoint-failure", "--recordings", "1", "--seed", "2", "--out", test.string()}));
  for (const auto& d : {train, test}) ok(cli({"estimate", "--in", d.string()}));
  ok(cli({"quality", "--in", train.string()}));
  ok(cli({"quality", "--in", test.string(), "--stats", (train / "normalization.csv").string()}));
  EXPECT_EQ(read_file(test / "normalization.csv"), read_file(train / "normalization.csv"));

  const auto search = cli({"subset-search", "--in", train.string()});
  ok(search);
  EXPECT_NE(search.out.find("ALL: "), std::string::npos);
  ok(cli({"train", "--in", train.string(), "--out", models.string()}));
  for (const char* f : {"methods_ALL.txt", "scaler_ALL.txt", "regressor_ALL.txt", "classifier_ALL.txt", "baseline.csv", "subset.csv"})
    EXPECT_TRUE(fs::exists(models / f)) << f;

  ok(cli({"fuse", "--in", test.string(), "--train", models.string(), "--subset", (train / "subset.csv").string()}));
  const auto results = parse_results(read_file(test / "results.csv"));
  std::vector<std::string> names;
  for (const auto& r : results) names.push_back(r.strategy);
  EXPECT_EQ(names, (std::vector<std::string>{"Baseline", "FMM", "SMM", "Trainset-SMM", "Regressor", "Classifier", "GT-MAE", "GT-SMM"}));
  for (const auto& r : results) EXPECT_GE(r.mae_bpm, results[6].mae_bpm - 1e-12) << r.strategy;

  ok(cli({"filter", "--in", test.string()}));
  const auto filter = parse_filter(read_file(test / "filter.csv"));
  std::map<std::string, std::vector<FilterRow>> by_score;
  for (const auto& f : filter) by_score[f.score].push_back(f);
  EXPECT_EQ(by_score.size(), 3u);
  const std::size_t windows = by_score["GT"].front().window_count;
  for (const auto& [score, rows] : by_score) {
    ASSERT_EQ(rows.size(), 6u) << score;
    for (std::size_t i = 0; i < 6; ++i) {
      EXPECT_DOUBLE_EQ(rows[i].q, 0.1 * static_cast<double>(i));
      EXPECT_NEAR(rows[i].coverage, 1.0 - rows[i].q, 1.0 / static_cast<double>(windows) + 1e-12);
    }
  }

  ok(cli({"sweep", "--in", test.string()}));
  const auto heat = parse_heatmap_csv(read_file(test / "heatmap_ALL.csv"));
  EXPECT_EQ(heat.method_ids.size(), 2u);
  EXPECT_NE(read_file(test / "heatmap_ALL.svg").find("class=\"best\""), std::string::npos);

  ok(cli({"report", "--in", test.string()}));
  const auto md = read_file(test / "report.md");
  EXPECT_NE(md.find("Trainset-SMM"), std::string::npos);
  EXPECT_NE(md.find("50 %"), std::string::npos);
  EXPECT_TRUE(fs::exists(test / "results.svg"));

  // Models trained on a different method list are refused.
  const auto single = scratch("wf_single");
  write_single_method(single);
  ok(cli({"estimate", "--in", single.string()}));
  ok(cli({"quality", "--in", single.string()}));
  const auto r = cli({"fuse", "--in", single.string(), "--train", models.string()});
  EXPECT_EQ(r.err.rfind("error: ShapeMismatch", 0), 0u) << r.err;
}
