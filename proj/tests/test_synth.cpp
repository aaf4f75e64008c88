#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "respq/error.hpp"
#include "respq/pipeline.hpp"
#include "respq/synth.hpp"

using namespace respq;

namespace {

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

double method_mae(const MethodCandidateSet& s, std::size_t m) {
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t w = 0; w < s.windows(); ++w) {
    const double e = s.abs_error(m, w, Estimator::WELCH);
    if (std::isnan(e)) continue;
    total += e;
    ++n;
  }
  return total / static_cast<double>(n);
}

}  // namespace

TEST(Respiration, ConstantToneAtTwentyHertz) {
  BreathProfile p;
  p.knots = {{0.0, 0.25}};
  p.sample_rate_hz = 20.0;
  const auto x = gen_respiration(p, 4);
  EXPECT_EQ(x.size(), 1200u);
  respq::testing::expect_tone_rate(gt_rr_series(x, fast_config()), 15.0, 20.0);
}

TEST(Respiration, RampRaisesRate) {
  BreathProfile p;
  p.knots = {{0.0, 0.2}, {60.0, 0.3}};
  p.sample_rate_hz = 20.0;
  const auto rr = gt_rr_series(gen_respiration(p, 4), fast_config());
  EXPECT_LT(rr.front(), rr.back());
}

TEST(Respiration, PhaseIsContinuousAcrossKnots) {
  BreathProfile p;
  p.knots = {{0.0, 0.2}, {20.0, 0.4}, {40.0, 0.15}};
  p.ramp = false;
  const double eps = 1e-9;
  for (double t : {20.0, 40.0}) EXPECT_NEAR(p.phase_at(t - eps), p.phase_at(t + eps), 1e-6);
  EXPECT_NEAR(p.phase_at(30.0), 2.0 * std::numbers::pi * (0.2 * 20.0 + 0.4 * 10.0), 1e-9);
}

TEST(Respiration, SeedDeterminesSamples) {
  const BreathProfile p;
  const auto a = gen_respiration(p, 11), b = gen_respiration(p, 11), c = gen_respiration(p, 12);
  EXPECT_TRUE(std::equal(a.samples().begin(), a.samples().end(), b.samples().begin()));
  EXPECT_FALSE(std::equal(a.samples().begin(), a.samples().end(), c.samples().begin()));
}

TEST(Respiration, OutOfBandProfileRejected) {
  BreathProfile p;
  p.knots = {{0.0, 0.25}, {30.0, 0.6}};
  try {
    gen_respiration(p, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ProfileOutOfBand);
  }
}

TEST(Candidates, HighSnrTracksGroundTruth) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    BreathProfile p;
    p.knots = {{0.0, 0.15 + 0.05 * static_cast<double>(seed)}};
    const auto gt = gen_respiration(p, seed);
    CorruptionSpec spec;
    spec.methods.push_back({.method_id = "hi", .snr_db = 20.0, .seed = seed + 100});
    const auto cands = gen_candidates(gt, p, spec);
    const std::vector<CandidateInput> in{{cands[0], "NLM"}};
    const auto s = build_candidate_set("r", in, gt, fast_config());
    std::size_t good = 0;
    for (std::size_t w = 0; w < s.windows(); ++w) good += s.abs_error(0, w, Estimator::WELCH) < 1.0;
    EXPECT_GE(static_cast<double>(good), 0.95 * static_cast<double>(s.windows()));
  }
}

TEST(Candidates, DropoutIsNoiseOnly) {
  BreathProfile p;
  const auto gt = gen_respiration(p, 1);
  CorruptionSpec spec;
  spec.methods.push_back({.method_id = "d", .snr_db = 200.0, .dropouts = {{0.0, 20.0}}, .seed = 3});
  const auto x = gen_candidates(gt, p, spec)[0];
  const auto clean = resample(gt, 30.0, {.anti_alias = true});
  const auto s = x.samples();
  const auto c = clean.samples();
  // Inside the dropout: white noise at the 0 dB in-band level, no trace of the tone.
  const double sigma0 = inband_noise_sigma(1.0, 0.0, 30.0, {});
  double power = 0.0, cross = 0.0;
  for (std::size_t i = 0; i < 600; ++i) power += s[i] * s[i], cross += s[i] * c[i];
  EXPECT_NEAR(std::sqrt(power / 600.0), sigma0, 0.1 * sigma0);
  EXPECT_LT(std::abs(cross / 600.0), 0.1 * sigma0);
  // Outside it the corrupted series is the clean one.
  for (std::size_t i = 600; i < s.size(); ++i) EXPECT_NEAR(s[i], c[i], 1e-6);
}

TEST(Candidates, VeryLowSnrBehavesLikeNoise) {
  // Band-limited noise puts the spectral peak roughly uniformly over the band,
  // so the mean error approaches that of a uniform guess (about 5 bpm for GT
  // 15 bpm over 6-30 bpm); a working estimator would be well under 1 bpm.
  double total = 0.0;
  std::size_t n = 0;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    BreathProfile p;
    const auto gt = gen_respiration(p, seed);
    CorruptionSpec spec;
    spec.methods.push_back({.method_id = "lo", .snr_db = -20.0, .seed = seed + 7});
    const std::vector<CandidateInput> in{{gen_candidates(gt, p, spec)[0], "NLM"}};
    const auto s = build_candidate_set("r", in, gt, fast_config());
    for (std::size_t w = 0; w < s.windows(); w += 10, ++n) total += s.abs_error(0, w, Estimator::WELCH);
  }
  EXPECT_GT(total / static_cast<double>(n), 2.5);
}

TEST(Presets, DeterministicAndNamed) {
  for (auto name : preset_names()) {
    const auto a = make_benchmark(name, 5), b = make_benchmark(name, 5);
    ASSERT_EQ(a.candidates.size(), b.candidates.size());
    for (std::size_t m = 0; m < a.candidates.size(); ++m)
      EXPECT_TRUE(std::equal(a.candidates[m].samples().begin(), a.candidates[m].samples().end(), b.candidates[m].samples().begin()));
    EXPECT_EQ(a.group_tags, b.group_tags);
  }
  EXPECT_THROW(make_benchmark("nope", 1), Error);
}

TEST(Presets, DisjointFailureOracleBeatsEachMethod) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = to_set(make_benchmark("disjoint-failure", seed), fast_config());
    const std::vector<FusionTrace> t{fuse(s, {.kind = FusionKind::ORACLE_GT_MAE}, Estimator::WELCH)};
    const double oracle = evaluate_traces(t).mae_bpm;
    EXPECT_LT(oracle, std::min(method_mae(s, 0), method_mae(s, 1)));
  }
}

TEST(Presets, DropoutWindowsScoreWorse) {
  // Windows fully inside method A's dropout [0, 20) s are 0..10; fully clean ones start at 20.
  int separated = 0;
  const int runs = 100;
  for (int seed = 0; seed < runs; ++seed) {
    auto sets = std::vector<MethodCandidateSet>{to_set(make_benchmark("disjoint-failure", static_cast<std::uint64_t>(seed)), fast_config())};
    apply_normalization(sets[0], fit_dataset_normalization(sets));
    const auto& a = sets[0].methods[0];
    double bad = 0.0, good = 0.0;
    std::size_t nb = 0, ng = 0;
    for (std::size_t w = 0; w < a.normalized.size(); ++w) {
      if (!a.normalized[w]) continue;
      const double f = fmm(*a.normalized[w]);
      if (w <= 10) bad += f, ++nb;
      if (w >= 20) good += f, ++ng;
    }
    separated += bad / static_cast<double>(nb) > good / static_cast<double>(ng);
  }
  EXPECT_GE(separated, 90);
}
