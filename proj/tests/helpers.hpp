#pragma once

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "respq/predict.hpp"
#include "respq/signal.hpp"

namespace respq::testing {

inline Segment make_segment(std::vector<double> x, double fs, std::string id = "m") {
  Segment s;
  s.method_id = std::move(id);
  s.samples = std::move(x);
  s.sample_rate_hz = fs;
  return s;
}

/// amp * sin(2 pi f (n + offset) / fs + phase), n = 0..count-1.
inline std::vector<double> tone(double f, double fs, std::size_t count, double phase = 0.0, double offset = 0.0,
                                double amp = 1.0) {
  std::vector<double> x(count);
  for (std::size_t n = 0; n < count; ++n)
    x[n] = amp * std::sin(2.0 * std::numbers::pi * f * (static_cast<double>(n) + offset) / fs + phase);
  return x;
}

/// White Gaussian noise whose power inside a band of width `band_hz` equals
/// `signal_power / 10^(snr_db/10)`.
inline void add_inband_noise(std::vector<double>& x, double fs, double band_hz, double signal_power, double snr_db,
                             SeededRng& rng) {
  const double inband_noise = signal_power / std::pow(10.0, snr_db / 10.0);
  const double sigma = std::sqrt(inband_noise * (fs / 2.0) / band_hz);
  for (double& v : x) v += sigma * rng.normal();
}

/// Clean-tone RR check for the default Welch chain. Interior windows must land
/// within one FFT grid step (plus 0.1 bpm of taper bias) of the truth; the
/// three windows at each end see the band-pass edge transient and get 1.5 bpm.
inline void expect_tone_rate(const std::vector<double>& rr, double bpm, double fs, int n_fft = 4096) {
  const double grid = 60.0 * fs / n_fft + 0.1;
  for (std::size_t w = 0; w < rr.size(); ++w) {
    const bool edge = w < 3 || w + 3 >= rr.size();
    EXPECT_NEAR(rr[w], bpm, edge ? 1.5 : grid) << "window " << w;
  }
}

}  // namespace respq::testing
