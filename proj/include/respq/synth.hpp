#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "respq/signal.hpp"

namespace respq {

/// Breathing frequency trajectory through (time_s, freq_hz) knots, held
/// constant before the first and after the last knot.
struct BreathProfile {
  std::vector<std::pair<double, double>> knots{{0.0, 0.25}};
  /// Linear interpolation between knots; false holds each knot until the next.
  bool ramp = true;
  double amplitude = 1.0;
  double duration_s = 60.0;
  double sample_rate_hz = 100.0;

  double frequency_at(double t) const;
  /// 2 pi times the integral of f from 0 to t.
  double phase_at(double t) const;
  void validate(const BandLimits& band = {}) const;
};

/// Phase-continuous sinusoid following the profile; the seed sets the start phase.
/// Throws ProfileOutOfBand.
TimeSeries gen_respiration(const BreathProfile& profile, std::uint64_t seed, std::string id = "GT");

struct Interval {
  double start_s = 0.0;
  double end_s = 0.0;
};

struct MethodCorruption {
  std::string method_id;
  std::string group_tag = "NLM";
  double sample_rate_hz = 30.0;
  /// White noise level, defined by its power inside the band.
  double snr_db = 20.0;
  double drift_amplitude = 0.0;
  double drift_hz = 0.02;
  /// Spans replaced by noise alone.
  std::vector<Interval> dropouts;
  double harmonic_level = 0.0;
  std::uint64_t seed = 0;
};

struct CorruptionSpec {
  std::vector<MethodCorruption> methods;
  BandLimits band;
};

/// White noise standard deviation giving `snr_db` in-band SNR for a sinusoid
/// of the given amplitude.
double inband_noise_sigma(double amplitude, double snr_db, double sample_rate_hz, const BandLimits& band);

/// One corrupted series per method, resampled from the clean signal.
std::vector<TimeSeries> gen_candidates(const TimeSeries& clean, const BreathProfile& profile, const CorruptionSpec& spec);

struct Benchmark {
  std::string recording_id;
  TimeSeries gt;
  std::vector<TimeSeries> candidates;
  std::vector<std::string> group_tags;
};

/// Preset names: uniform-noise, disjoint-failure, drift, ramp.
Benchmark make_benchmark(std::string_view preset, std::uint64_t seed, std::string recording_id = "rec000");
std::vector<std::string_view> preset_names();

}  // namespace respq
