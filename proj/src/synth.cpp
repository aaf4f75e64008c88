#include "respq/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "respq/error.hpp"
#include "respq/predict.hpp"

namespace respq {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

double BreathProfile::frequency_at(double t) const {
  if (t <= knots.front().first) return knots.front().second;
  for (std::size_t k = 1; k < knots.size(); ++k) {
    const auto [t1, f1] = knots[k];
    if (t < t1) {
      const auto [t0, f0] = knots[k - 1];
      return ramp ? f0 + (f1 - f0) * (t - t0) / (t1 - t0) : f0;
    }
  }
  return knots.back().second;
}

double BreathProfile::phase_at(double t) const {
  // Exact integral of the piecewise linear (or constant) trajectory.
  double acc = 0.0;
  double t_prev = 0.0;
  double f_prev = frequency_at(0.0);
  auto add = [&](double t_next) {
    const double f_next = ramp ? frequency_at(t_next) : f_prev;
    acc += 0.5 * (f_prev + f_next) * (t_next - t_prev);
    t_prev = t_next;
  };
  for (const auto& [tk, fk] : knots) {
    if (tk <= t_prev) continue;
    if (tk >= t) break;
    add(tk);
    f_prev = fk;
  }
  add(t);
  return kTwoPi * acc;
}

void BreathProfile::validate(const BandLimits& band) const {
  if (knots.empty()) throw Error(ErrorCode::InvalidArgument, "breath profile needs at least one knot");
  for (std::size_t k = 1; k < knots.size(); ++k)
    if (!(knots[k].first > knots[k - 1].first)) throw Error(ErrorCode::InvalidArgument, "profile knot times must increase");
  for (const auto& [t, f] : knots) {
    if (!(f >= band.lo_hz && f <= band.hi_hz)) {
      throw Error(ErrorCode::ProfileOutOfBand, "profile frequency " + std::to_string(f) + " Hz at t=" + std::to_string(t) +
                                                   " s is outside [" + std::to_string(band.lo_hz) + ", " +
                                                   std::to_string(band.hi_hz) + "] Hz");
    }
  }
  if (!(duration_s > 0.0) || !(sample_rate_hz > 0.0) || !(amplitude > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "profile duration, rate and amplitude must be positive");
  }
}

TimeSeries gen_respiration(const BreathProfile& profile, std::uint64_t seed, std::string id) {
  profile.validate();
  SeededRng rng(seed);
  const double phase0 = rng.uniform(0.0, kTwoPi);
  const auto n = static_cast<std::size_t>(std::llround(profile.duration_s * profile.sample_rate_hz));
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / profile.sample_rate_hz;
    x[i] = profile.amplitude * std::sin(profile.phase_at(t) + phase0);
  }
  return TimeSeries(std::move(x), profile.sample_rate_hz, std::move(id));
}

double inband_noise_sigma(double amplitude, double snr_db, double sample_rate_hz, const BandLimits& band) {
  const double signal_power = amplitude * amplitude / 2.0;
  const double inband_noise = signal_power / std::pow(10.0, snr_db / 10.0);
  return std::sqrt(inband_noise * (sample_rate_hz / 2.0) / (band.hi_hz - band.lo_hz));
}

std::vector<TimeSeries> gen_candidates(const TimeSeries& clean, const BreathProfile& profile, const CorruptionSpec& spec) {
  if (spec.methods.empty()) throw Error(ErrorCode::InvalidArgument, "corruption spec has no methods");
  std::vector<TimeSeries> out;
  for (const auto& mc : spec.methods) {
    const auto base = resample(clean, mc.sample_rate_hz, {.anti_alias = clean.sample_rate_hz() > mc.sample_rate_hz});
    SeededRng rng(mc.seed);
    const double fs = mc.sample_rate_hz;
    const double sigma = inband_noise_sigma(profile.amplitude, mc.snr_db, fs, spec.band);
    const double dropout_sigma = inband_noise_sigma(profile.amplitude, 0.0, fs, spec.band);
    const double drift_phase = rng.uniform(0.0, kTwoPi);
    std::vector<double> x(base.samples().begin(), base.samples().end());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double t = static_cast<double>(i) / fs;
      const double noise = rng.normal();
      const bool dropped = std::any_of(mc.dropouts.begin(), mc.dropouts.end(),
                                       [&](const Interval& iv) { return t >= iv.start_s && t < iv.end_s; });
      if (dropped) {
        x[i] = dropout_sigma * noise;
        continue;
      }
      // Quadratic distortion: 2 (x/A)^2 - 1 = -cos(2a) for x = A sin(a).
      const double u = x[i] / profile.amplitude;
      x[i] += mc.harmonic_level * profile.amplitude * (2.0 * u * u - 1.0);
      x[i] += mc.drift_amplitude * std::sin(kTwoPi * mc.drift_hz * t + drift_phase) + sigma * noise;
    }
    out.emplace_back(std::move(x), fs, mc.method_id);
  }
  return out;
}

std::vector<std::string_view> preset_names() { return {"uniform-noise", "disjoint-failure", "drift", "ramp"}; }

Benchmark make_benchmark(std::string_view preset, std::uint64_t seed, std::string recording_id) {
  SeededRng rng(mix_seed(seed, 0));
  BreathProfile profile;
  profile.knots = {{0.0, rng.uniform(0.15, 0.4)}};
  CorruptionSpec spec;
  auto method = [&](std::string id, std::string tag, double snr_db) {
    MethodCorruption mc;
    mc.method_id = std::move(id);
    mc.group_tag = std::move(tag);
    mc.snr_db = snr_db;
    mc.seed = mix_seed(seed, spec.methods.size() + 1);
    spec.methods.push_back(mc);
    return &spec.methods.back();
  };
  if (preset == "uniform-noise") {
    method("m1", "NLM", 10.0);
    method("m2", "NLM", 5.0);
    method("m3", "DLM", 0.0);
  } else if (preset == "disjoint-failure") {
    method("A", "NLM", 15.0)->dropouts = {{0.0, 20.0}};
    method("B", "DLM", 15.0)->dropouts = {{40.0, 60.0}};
  } else if (preset == "drift") {
    method("m1", "NLM", 10.0);
    method("m2", "NLM", 10.0)->drift_amplitude = 2.0;
    auto* m3 = method("m3", "DLM", 10.0);
    m3->drift_amplitude = 5.0;
    m3->harmonic_level = 0.3;
  } else if (preset == "ramp") {
    profile.knots = {{0.0, 0.2}, {profile.duration_s, 0.35}};
    method("m1", "NLM", 15.0);
    method("m2", "NLM", 5.0);
    method("m3", "DLM", 0.0);
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown preset '" + std::string(preset) + "'");
  }
  Benchmark b{std::move(recording_id), gen_respiration(profile, mix_seed(seed, 1000)), {}, {}};
  b.candidates = gen_candidates(b.gt, profile, spec);
  for (const auto& mc : spec.methods) b.group_tags.push_back(mc.group_tag);
  return b;
}

}  // namespace respq
