// Acceptance runner: one PASS/FAIL line per criterion.
//
// Usage: acceptance [--expect-red 1,2,3]
// Exit status is 0 when every criterion passes, or when the only failures are
// the ones listed with --expect-red. Listed criteria still print FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

#include "cli.hpp"
#include "helpers.hpp"
#include "oracles.hpp"
#include "respq/aggregate.hpp"
#include "respq/error.hpp"
#include "respq/io.hpp"
#include "respq/pipeline.hpp"
#include "respq/predict.hpp"
#include "respq/spectral.hpp"
#include "respq/sqi.hpp"
#include "respq/synth.hpp"
#include "respq/text.hpp"

using namespace respq;
using respq::testing::make_segment;
using respq::testing::tone;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v, int digits = 2) { return format_fixed(v, digits); }

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

constexpr BandLimits kBand{0.1, 0.5};

// Single in-band sinusoid corpus shared by criteria 1 and 2.
struct ToneCase {
  double f0, fs;
  Segment seg;
};

std::vector<ToneCase> tone_corpus() {
  SeededRng rng(20240611);
  const double rates[] = {20.0, 30.0, 61.0};
  std::vector<ToneCase> out;
  for (int i = 0; i < 100; ++i) {
    const double f0 = rng.uniform(0.12, 0.48);
    const double fs = rates[i % 3];
    // 40 s through the pipeline band-pass; the middle 10 s window is the segment.
    auto x = tone(f0, fs, static_cast<std::size_t>(40.0 * fs), rng.uniform(0.0, 2.0 * std::numbers::pi));
    respq::testing::add_inband_noise(x, fs, kBand.hi_hz - kBand.lo_hz, 0.5, rng.uniform(10.0, 20.0), rng);
    const auto filtered = bandpass(TimeSeries(std::move(x), fs), kBand);
    const auto start = filtered.samples().begin() + static_cast<std::ptrdiff_t>(15.0 * fs);
    std::vector<double> window(start, start + static_cast<std::ptrdiff_t>(10.0 * fs));
    out.push_back({f0, fs, detrend(make_segment(std::move(window), fs))});
  }
  return out;
}

Outcome criterion_music() {
  const auto corpus = tone_corpus();
  Stopwatch sw;
  int hits = 0;
  std::vector<double> f_hat;
  for (const auto& c : corpus) {
    const double f = spectrum_rr(music_pseudospectrum(c.seg, {}), kBand) / 60.0;
    f_hat.push_back(f);
    hits += std::abs(f - c.f0) <= 0.01;
  }
  const double t = sw.seconds();
  int oracle_hits = 0, agree = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const double bin = corpus[i].fs / (2.0 * 4096);
    const double f = oracle::music_dense_argmax(corpus[i].seg.samples, corpus[i].fs, 2, kBand.lo_hz, kBand.hi_hz, bin / 4.0);
    oracle_hits += std::abs(f - corpus[i].f0) <= 0.01;
    agree += std::abs(f - f_hat[i]) <= 1.01 * bin;
  }
  return {hits >= 98 && t < 5.0, std::to_string(hits) + "/100 within 0.01 Hz (need >= 98); dense-scan oracle " +
                                     std::to_string(oracle_hits) + "/100, implementation agrees with oracle on " + std::to_string(agree) +
                                     "/100; " + fmt(t) + " s (< 5 s)"};
}

Outcome criterion_agreement() {
  const auto corpus = tone_corpus();
  const EstimatorConfig cfg;
  const Estimator order[] = {Estimator::FFT, Estimator::WELCH, Estimator::MUSIC};
  std::map<std::string, int> within;
  int peak_ok = 0;
  for (const auto& c : corpus) {
    double rr[3];
    for (int e = 0; e < 3; ++e) rr[e] = estimate_rr(c.seg, order[e], cfg, kBand).rr_bpm;
    for (int a = 0; a < 3; ++a)
      for (int b = a + 1; b < 3; ++b)
        within[std::string(to_string(order[a])) + "-" + std::string(to_string(order[b]))] += std::abs(rr[a] - rr[b]) <= 0.6;
    // Fewer than two detected breaths counts as a disagreement.
    double peak = std::nan("");
    try {
      peak = peak_rr(c.seg, kBand);
    } catch (const Error&) {
    }
    peak_ok += std::abs(peak - rr[0]) <= 1.5 && std::abs(peak - rr[1]) <= 1.5;
  }
  bool pass = peak_ok >= 95;
  std::string detail;
  for (const auto& [pair, n] : within) {
    pass = pass && n >= 95;
    detail += pair + " " + std::to_string(n) + "/100, ";
  }
  return {pass, detail + "peak vs fft/welch " + std::to_string(peak_ok) + "/100 (each need >= 95)"};
}

Outcome criterion_sqi() {
  const double fs = 20.0, f0 = 0.25;
  const auto x = tone(f0, fs, 200, std::numbers::pi / 2.0, 0.5);
  const auto q = compute_quality_vector(make_segment(x, fs), kBand);
  auto v = [&](Metric m) { return q.values[static_cast<std::size_t>(m)]; };
  std::vector<std::string> failed;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) failed.push_back(what);
  };
  const double mobility = 2.0 * std::sin(std::numbers::pi * f0 / fs);
  check(std::abs(v(Metric::ZCR) - 5.0 / 199.0) <= 1e-12, "zcr " + sci(v(Metric::ZCR) - 5.0 / 199.0));
  check(std::abs(v(Metric::HJORTH_M) - mobility) <= 1e-3, "hjorth_m off by " + sci(v(Metric::HJORTH_M) - mobility));
  check(std::abs(v(Metric::SKEW)) <= 1e-6, "skew " + sci(v(Metric::SKEW)));
  check(std::abs(v(Metric::KURT) + 1.5) <= 0.02, "kurt " + fmt(v(Metric::KURT), 4));
  check(v(Metric::PI) >= 0.95, "pi " + fmt(v(Metric::PI), 4));
  check(v(Metric::BPR) >= 0.95, "bpr " + fmt(v(Metric::BPR), 4));
  check(v(Metric::IPR) <= 0.05, "ipr " + fmt(v(Metric::IPR), 4));
  double worst = 0.0;
  for (double c : {1e-3, 0.5, 3.7, 250.0}) {
    auto y = x;
    for (double& s : y) s *= c;
    const auto qs = compute_quality_vector(make_segment(y, fs), kBand);
    for (std::size_t k = 0; k < kMetricCount; ++k)
      worst = std::max(worst, std::abs(qs.values[k] - q.values[k]) / std::max(1.0, std::abs(q.values[k])));
  }
  check(worst <= 1e-9, "scaling drift " + sci(worst));
  std::string detail = "zcr " + sci(std::abs(v(Metric::ZCR) - 5.0 / 199.0)) + " off, hjorth_m " + fmt(v(Metric::HJORTH_M), 6) + " vs " +
                       fmt(mobility, 6) + ", skew " + sci(v(Metric::SKEW)) + ", kurt " + fmt(v(Metric::KURT), 3) + ", pi " +
                       fmt(v(Metric::PI), 3) + ", bpr " + fmt(v(Metric::BPR), 3) + ", ipr " + fmt(v(Metric::IPR), 4) +
                       ", scaling drift " + sci(worst);
  if (!failed.empty()) {
    detail += "; failed:";
    for (const auto& f : failed) detail += " [" + f + "]";
  }
  return {failed.empty(), detail};
}

MethodCandidateSet random_set(SeededRng& rng, std::size_t methods, std::size_t windows) {
  MethodCandidateSet s;
  s.recording_id = "r";
  for (std::size_t w = 0; w < windows; ++w) s.gt_rr.push_back(rng.uniform(8.0, 25.0));
  for (std::size_t m = 0; m < methods; ++m) {
    MethodSeries ms;
    ms.method_id = "m" + std::to_string(m);
    for (auto& r : ms.rr) {
      r.resize(windows);
      for (std::size_t w = 0; w < windows; ++w) r[w] = s.gt_rr[w] + rng.normal() * 3.0;
    }
    for (std::size_t w = 0; w < windows; ++w) {
      QualityVector q;
      for (double& v : q.values) v = std::floor(rng.uniform() * 16.0) / 16.0;
      q.stage = QualityStage::NORMALIZED;
      ms.raw.push_back(q), ms.oriented.push_back(q), ms.normalized.push_back(q);
    }
    s.methods.push_back(std::move(ms));
  }
  return s;
}

Outcome criterion_subset() {
  SeededRng rng(4);
  int matched = 0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t arity = 3 + rng.index(2), methods = 2 + rng.index(2), windows = 1 + rng.index(30);
    SelectionProblem problem(windows, methods, arity);
    std::vector<std::vector<std::vector<double>>> metrics(windows, std::vector<std::vector<double>>(methods));
    std::vector<std::vector<double>> errors(windows, std::vector<double>(methods));
    for (std::size_t w = 0; w < windows; ++w)
      for (std::size_t m = 0; m < methods; ++m) {
        errors[w][m] = std::floor(rng.uniform(0.0, 8.0) * 4.0) / 4.0;
        problem.set_error(w, m, errors[w][m]);
        std::vector<double> v(arity);
        for (double& x : v) x = std::floor(rng.uniform() * 8.0) / 8.0;
        metrics[w][m] = v;
        problem.set_metrics(w, m, v);
      }
    const auto r = subset_search(problem);
    const auto o = oracle::brute_subset_search(metrics, errors, static_cast<int>(arity));
    matched += r.mask.indices() == std::vector<std::size_t>(o.included.begin(), o.included.end()) && r.mae_bpm == o.mae;
  }
  int equal = 0;
  for (int t = 0; t < 20; ++t) {
    const auto s = random_set(rng, 2 + rng.index(2), 30);
    const std::vector<FusionTrace> a{fuse(s, {.kind = FusionKind::FMM}, Estimator::WELCH)};
    const std::vector<FusionTrace> b{fuse(s, {.kind = FusionKind::SMM, .mask = MetricMask::all()}, Estimator::WELCH)};
    equal += evaluate_traces(a).mae_bpm == evaluate_traces(b).mae_bpm;
  }
  return {matched == 20 && equal == 20,
          "search = brute force on " + std::to_string(matched) + "/20 instances, SMM(full) = FMM on " + std::to_string(equal) + "/20"};
}

PipelineConfig fast_config() {
  PipelineConfig cfg;
  cfg.configured_estimator_only = true;
  return cfg;
}

MethodCandidateSet to_set(const Benchmark& b, const PipelineConfig& cfg) {
  std::vector<CandidateInput> in;
  for (std::size_t m = 0; m < b.candidates.size(); ++m) in.push_back({b.candidates[m], b.group_tags[m]});
  return build_candidate_set(b.recording_id, in, b.gt, cfg);
}

// Training split and held-out split for one seeded run, normalized with the training stats.
struct Split {
  std::vector<MethodCandidateSet> train, test;
};

Split make_split(std::string_view preset, std::uint64_t run, std::size_t n_train, std::size_t n_test) {
  Split s;
  const auto cfg = fast_config();
  for (std::size_t i = 0; i < n_train + n_test; ++i) {
    auto set = to_set(make_benchmark(preset, mix_seed(run, i), "rec" + std::to_string(i)), cfg);
    (i < n_train ? s.train : s.test).push_back(std::move(set));
  }
  const auto stats = fit_dataset_normalization(s.train, "train");
  for (auto& set : s.train) apply_normalization(set, stats);
  for (auto& set : s.test) apply_normalization(set, stats);
  return s;
}

double method_mae(std::span<const MethodCandidateSet> sets, std::size_t m) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& s : sets)
    for (std::size_t w = 0; w < s.windows(); ++w) {
      const double e = s.abs_error(m, w, Estimator::WELCH);
      if (std::isnan(e)) continue;
      total += e;
      ++n;
    }
  return total / static_cast<double>(n);
}

std::vector<FusionTrace> fuse_all(std::span<const MethodCandidateSet> sets, const FusionStrategy& st,
                                  const WindowErrorPredictor* reg = nullptr) {
  std::vector<FusionTrace> out;
  for (const auto& s : sets) out.push_back(fuse(s, st, Estimator::WELCH, reg));
  return out;
}

// MAE of `a` and `b` over the windows both count.
std::pair<double, double> paired_mae(const std::vector<FusionTrace>& a, const std::vector<FusionTrace>& b) {
  double ta = 0.0, tb = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < a.size(); ++t)
    for (std::size_t w = 0; w < a[t].rows.size(); ++w) {
      if (!a[t].rows[w].counted() || !b[t].rows[w].counted()) continue;
      ta += a[t].rows[w].abs_error, tb += b[t].rows[w].abs_error, ++n;
    }
  return {ta / static_cast<double>(n), tb / static_cast<double>(n)};
}

Outcome criterion_oracle() {
  const auto presets = preset_names();
  TrainConfig quick;
  quick.epochs = 30;
  int violations = 0, filter_violations = 0, comparisons = 0;
  for (std::uint64_t run = 0; run < 50; ++run) {
    const auto split = make_split(presets[run % presets.size()], 5000 + run, 1, 1);
    const auto reg = train_regressor_predictor(split.train, Estimator::WELCH, quick);
    const auto cls = train_classifier_predictor(split.train, Estimator::WELCH, quick);
    const auto train_mask = subset_search(selection_problem(split.train, Estimator::WELCH)).mask;
    const auto eval_mask = subset_search(selection_problem(split.test, Estimator::WELCH)).mask;
    const std::vector<FusionStrategy> others{
        {.kind = FusionKind::BASELINE, .baseline = baseline_select(split.train)},
        {.kind = FusionKind::FMM},
        {.kind = FusionKind::SMM, .mask = train_mask},
        {.kind = FusionKind::TRAINSET_SMM, .mask = train_mask},
        {.kind = FusionKind::REGRESSOR, .regressor = reg},
        {.kind = FusionKind::CLASSIFIER, .classifier = cls},
        {.kind = FusionKind::ORACLE_GT_SMM, .mask = eval_mask},
    };
    const auto oracle = fuse_all(split.test, {.kind = FusionKind::ORACLE_GT_MAE});
    for (const auto& st : others) {
      const auto traces = fuse_all(split.test, st, reg.get());
      const auto [o, x] = paired_mae(oracle, traces);
      violations += o > x;
      ++comparisons;
      const auto sweep = filter_sweep(traces, FilterScore::GT);
      for (std::size_t i = 1; i < sweep.size(); ++i) filter_violations += sweep[i].report.mae_bpm > sweep[i - 1].report.mae_bpm;
    }
  }
  return {violations == 0 && filter_violations == 0, "oracle beaten in " + std::to_string(violations) + "/" + std::to_string(comparisons) +
                                                          " comparisons over 50 runs; GT-filter increases " +
                                                          std::to_string(filter_violations) + " (need 0 and 0)"};
}

Outcome criterion_fusion_gain() {
  Stopwatch sw;
  int wins = 0;
  double worst_ratio = 0.0;
  for (std::uint64_t run = 0; run < 50; ++run) {
    const auto split = make_split("disjoint-failure", 9000 + run, 8, 1);
    const auto reg = train_regressor_predictor(split.train, Estimator::WELCH);
    const auto traces = fuse_all(split.test, {.kind = FusionKind::REGRESSOR, .regressor = reg});
    const double fused = evaluate_traces(traces).mae_bpm;
    const double single = std::min(method_mae(split.test, 0), method_mae(split.test, 1));
    wins += fused <= 0.8 * single;
    worst_ratio = std::max(worst_ratio, fused / single);
  }
  const double t = sw.seconds();
  return {wins >= 45 && t < 60.0, std::to_string(wins) + "/50 runs at <= 0.8 x best single method (need >= 45), worst ratio " +
                                      fmt(worst_ratio) + "; " + fmt(t, 1) + " s (< 60 s)"};
}

Outcome criterion_predictors() {
  SeededRng rng(7);
  auto random_matrix = [&](Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
    return m;
  };
  auto worst_gradient = [&](auto model, auto loss) {
    std::vector<double> grad;
    loss(model, &grad);
    double worst = 0.0;
    for (int k = 0; k < 30; ++k) {
      const std::size_t i = rng.index(grad.size());
      const double keep = model.parameter(i);
      model.parameter(i) = keep + 1e-5;
      const double up = loss(model, nullptr);
      model.parameter(i) = keep - 1e-5;
      const double down = loss(model, nullptr);
      model.parameter(i) = keep;
      const double fd = (up - down) / 2e-5;
      worst = std::max(worst, std::abs(grad[i] - fd) / std::max({std::abs(grad[i]), std::abs(fd), 1e-7}));
    }
    return worst;
  };
  const auto x = random_matrix(40, 10);
  const Eigen::VectorXd y = random_matrix(40, 1).col(0);
  auto reg = init_regressor({10, 32, 16, 1}, 3);
  for (auto& b : reg.biases) b.setConstant(0.05);
  const double g_reg = worst_gradient(reg, [&](const RegressorModel& m, std::vector<double>* g) { return regressor_loss(m, x, y, g); });
  std::vector<int> labels(40);
  for (auto& l : labels) l = static_cast<int>(rng.index(3));
  ClassifierModel cls;
  {
    TrainConfig one;
    one.epochs = 1;
    cls = train_classifier(x, labels, 3, one);
  }
  const double g_cls = worst_gradient(cls, [&](const ClassifierModel& m, std::vector<double>* g) { return classifier_loss(m, x, labels, g); });

  const auto xl = random_matrix(400, 10);
  Eigen::VectorXd w(10);
  for (Eigen::Index i = 0; i < 10; ++i) w(i) = rng.uniform(-1.0, 1.0);
  const Eigen::VectorXd yl = (xl * w).array() + 2.0;
  const auto fit = train_regressor(xl, yl);
  const double mse = (predict_mae(fit, xl) - yl).squaredNorm() / static_cast<double>(yl.size());
  const double var = (yl.array() - yl.mean()).square().mean();

  class Perfect final : public WindowErrorPredictor {
   public:
    double predict_error(const MethodCandidateSet& s, std::size_t m, std::size_t win) const override {
      return s.abs_error(m, win, Estimator::WELCH);
    }
  };
  const auto perfect = std::make_shared<Perfect>();
  int identical = 0;
  for (int t = 0; t < 20; ++t) {
    const auto s = random_set(rng, 3, 30);
    const auto a = fuse(s, {.kind = FusionKind::ORACLE_GT_MAE}, Estimator::WELCH);
    const auto b = fuse(s, {.kind = FusionKind::REGRESSOR, .regressor = perfect}, Estimator::WELCH);
    bool same = a.rows.size() == b.rows.size();
    for (std::size_t i = 0; same && i < a.rows.size(); ++i)
      same = a.rows[i].chosen == b.rows[i].chosen && a.rows[i].fused_rr == b.rows[i].fused_rr && a.rows[i].abs_error == b.rows[i].abs_error;
    identical += same;
  }
  return {g_reg < 1e-4 && g_cls < 1e-4 && mse < 0.01 * var && identical == 20,
          "gradient rel. error regressor " + sci(g_reg) + ", classifier " + sci(g_cls) + " (< 1e-4); linear fit MSE " +
              fmt(100.0 * mse / var, 3) + " % of variance (< 1 %); perfect predictor = oracle on " + std::to_string(identical) + "/20"};
}

struct CliRun {
  int code;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "respq");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, err.str()};
}

// synth -> estimate -> quality -> subset-search -> fuse -> filter -> sweep -> report in `dir`.
std::string run_workflow(const fs::path& dir) {
  fs::remove_all(dir);
  const std::string d = dir.string();
  const std::vector<std::vector<std::string>> steps{
      {"synth", "--preset", "disjoint-failure", "--recordings", "2", "--seed", "11", "--out", d},
      {"estimate", "--in", d},
      {"quality", "--in", d},
      {"subset-search", "--in", d},
      {"fuse", "--in", d, "--subset", (dir / "subset.csv").string()},
      {"filter", "--in", d},
      {"sweep", "--in", d},
      {"report", "--in", d},
  };
  for (const auto& s : steps) {
    const auto r = cli(s);
    if (r.code != 0) return s.front() + " failed: " + r.err;
  }
  return {};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) files[e.path().filename().string()] = read_file(e.path());
  return files;
}

// Parses and re-renders one CSV output; empty result means the text came back unchanged.
std::optional<bool> round_trips(const std::string& name, const std::string& text) {
  std::string again;
  if (name == "signals.csv") again = render_signals(parse_signals(text));
  else if (name == "meta.csv") again = render_meta(parse_meta(text));
  else if (name == "rr.csv") again = render_rr(parse_rr(text));
  else if (name == "errors.csv") again = render_errors(parse_errors(text));
  else if (name == "quality.csv") again = render_quality(parse_quality(text));
  else if (name == "normalization.csv") again = render_normalization(parse_normalization(text));
  else if (name == "subset.csv") again = render_subsets(parse_subsets(text));
  else if (name == "results.csv") again = render_results(parse_results(text));
  else if (name == "traces.csv") again = render_traces(parse_traces(text));
  else if (name == "filter.csv") again = render_filter(parse_filter(text));
  else if (name.starts_with("heatmap_") && name.ends_with(".csv")) again = render_heatmap_csv(parse_heatmap_csv(text));
  else return std::nullopt;
  return again == text;
}

fs::path scratch_root() { return fs::temp_directory_path() / "respq_acceptance"; }

Outcome criterion_determinism() {
  const auto a = scratch_root() / "a", b = scratch_root() / "b";
  for (const auto& d : {a, b})
    if (auto e = run_workflow(d); !e.empty()) return {false, e};
  const auto fa = snapshot(a), fb = snapshot(b);
  std::size_t identical = 0, csv = 0, svg = 0, round = 0, unchecked = 0;
  for (const auto& [name, text] : fa) {
    identical += fb.count(name) && fb.at(name) == text;
    svg += name.ends_with(".svg");
    if (!name.ends_with(".csv")) continue;
    ++csv;
    const auto r = round_trips(name, text);
    if (!r) ++unchecked;
    else round += *r;
  }
  const bool pass = fa.size() == fb.size() && identical == fa.size() && round == csv && unchecked == 0 && svg >= 2;
  return {pass, std::to_string(identical) + "/" + std::to_string(fa.size()) + " files byte-identical (" + std::to_string(csv) +
                    " CSV, " + std::to_string(svg) + " SVG); " + std::to_string(round) + "/" + std::to_string(csv) +
                    " CSV files round-trip exactly"};
}

Outcome criterion_filter_grid() {
  const auto dir = scratch_root() / "a";
  if (!fs::exists(dir / "filter.csv"))
    if (auto e = run_workflow(dir); !e.empty()) return {false, e};
  const auto rows = parse_filter(read_file(dir / "filter.csv"));
  std::map<std::string, std::vector<FilterRow>> by_score;
  for (const auto& r : rows) by_score[r.score].push_back(r);
  bool pass = !by_score.empty();
  double worst = 0.0, slack = 0.0;
  std::string labels;
  for (const auto& [score, list] : by_score) {
    pass = pass && list.size() == kFilterGrid.size();
    if (list.size() != kFilterGrid.size()) continue;
    // Total windows from the unfiltered point.
    const double total = std::round(static_cast<double>(list[0].window_count) / list[0].coverage);
    slack = 1.0 / total;
    for (std::size_t i = 0; i < list.size(); ++i) {
      pass = pass && list[i].q == kFilterGrid[i];
      worst = std::max(worst, std::abs(list[i].coverage - (1.0 - list[i].q)));
    }
  }
  pass = pass && worst <= slack + 1e-12;
  const auto md = read_file(dir / "report.md");
  pass = pass && md.find("| 0 % |") != std::string::npos && md.find("| 50 % |") != std::string::npos;
  for (const auto& [score, list] : by_score) labels += score + " " + std::to_string(list.size()) + " points, ";
  return {pass, labels + "max |coverage - (1 - q)| " + fmt(worst, 4) + " (one window = " + fmt(slack, 4) + ")"};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expect_red;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--expect-red" && i + 1 < argc) {
      for (auto part : split(argv[++i], ',')) expect_red.insert(std::stoi(std::string(trim(part))));
    } else {
      std::cerr << "usage: acceptance [--expect-red N,M,...]\n";
      return 2;
    }
  }

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"MUSIC correctness", criterion_music},
      {"estimator agreement", criterion_agreement},
      {"SQI analytic suite", criterion_sqi},
      {"subset-search equivalence", criterion_subset},
      {"oracle invariants", criterion_oracle},
      {"fusion beats best single method", criterion_fusion_gain},
      {"predictor correctness", criterion_predictors},
      {"determinism and CSV round trip", criterion_determinism},
      {"filtering sweep shape", criterion_filter_grid},
  };
  int unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << id << " " << criteria[i].first << ": " << o.detail
              << (!o.pass && expect_red.count(id) ? " [expected]" : "") << std::endl;
    unexpected += !o.pass && !expect_red.count(id);
  }
  fs::remove_all(scratch_root());
  return unexpected == 0 ? 0 : 1;
}
