#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

#include "respq/error.hpp"
#include "respq/predict.hpp"
#include "respq/signal.hpp"

using namespace respq;

namespace {

std::vector<double> sine(double f, double fs, std::size_t n, double amp = 1.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / fs);
  return x;
}

double rms(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

// |H(f)|^2 of a biquad cascade evaluated directly from its coefficients.
double cascade_power_gain(const std::vector<Biquad>& sections, double f, double fs) {
  const std::complex<double> z1 = std::polar(1.0, -2.0 * std::numbers::pi * f / fs);
  std::complex<double> h = 1.0;
  for (const auto& s : sections) h *= (s.b0 + s.b1 * z1 + s.b2 * z1 * z1) / (1.0 + s.a1 * z1 + s.a2 * z1 * z1);
  return std::norm(h);
}

// Ratio of output to input RMS over the central half, away from the edges.
double central_rms_ratio(std::span<const double> in, std::span<const double> out) {
  const std::size_t q = in.size() / 4;
  return rms(out.subspan(q, 2 * q)) / rms(in.subspan(q, 2 * q));
}

}  // namespace

TEST(TimeSeries, RejectsInvalidConstruction) {
  EXPECT_THROW(TimeSeries({}, 20.0), Error);
  EXPECT_THROW(TimeSeries({1.0}, 0.0), Error);
  EXPECT_THROW(TimeSeries({1.0, NAN}, 20.0), Error);
  try {
    TimeSeries({1.0}, -1.0);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonPositiveRate);
  }
}

TEST(Resample, HalvesSampleCount) {
  const TimeSeries ts(std::vector<double>(400, 0.5), 40.0);
  const auto out = resample(ts, 20.0);
  EXPECT_EQ(out.size(), 200u);
  EXPECT_DOUBLE_EQ(out.sample_rate_hz(), 20.0);
}

TEST(Resample, ConstantStaysConstant) {
  for (double rate : {7.0, 20.0, 61.0, 250.0}) {
    const TimeSeries ts(std::vector<double>(333, -2.25), 30.0);
    const auto out = resample(ts, rate);
    for (double v : out.samples()) EXPECT_DOUBLE_EQ(v, -2.25);
  }
}

TEST(Resample, SineMatchesClosedFormOnNewGrid) {
  const TimeSeries ts(sine(0.25, 256.0, 256 * 30), 256.0);
  const auto out = resample(ts, 20.0);
  EXPECT_NEAR(out.duration_s(), ts.duration_s(), 1.0 / 20.0);
  double worst = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double t = static_cast<double>(k) / 20.0;
    worst = std::max(worst, std::abs(out.samples()[k] - std::sin(2.0 * std::numbers::pi * 0.25 * t)));
  }
  EXPECT_LT(worst, 1e-3);
}

TEST(Resample, RejectsNonPositiveRate) {
  const TimeSeries ts(std::vector<double>(10, 1.0), 10.0);
  EXPECT_THROW(resample(ts, 0.0), Error);
  EXPECT_THROW(resample(ts, -5.0), Error);
}

TEST(Resample, AntiAliasOptionSuppressesOutOfBandTone) {
  // 9 Hz tone sampled at 100 Hz aliases to 1 Hz at 10 Hz; the prefilter removes it.
  auto x = sine(9.0, 100.0, 6000);
  const auto plain = resample(TimeSeries(x, 100.0), 10.0);
  const auto filtered = resample(TimeSeries(x, 100.0), 10.0, {.anti_alias = true});
  EXPECT_GT(rms(plain.samples()), 0.3);
  EXPECT_LT(rms(filtered.samples().subspan(100, 400)), 0.01);
}

TEST(Bandpass, PassbandToneWithinOneDecibel) {
  const BandLimits band{0.1, 0.5};
  const auto x = sine(0.25, 20.0, 1200);
  const auto y = bandpass(TimeSeries(x, 20.0), band);
  const double ratio = central_rms_ratio(x, y.samples());
  // Forward-backward filtering squares the magnitude response.
  const double oracle = cascade_power_gain(butterworth_bandpass(4, 0.1, 0.5, 20.0), 0.25, 20.0);
  EXPECT_NEAR(ratio, oracle, 0.01);
  EXPECT_LT(std::abs(20.0 * std::log10(ratio)), 1.0);
}

TEST(Bandpass, StopbandToneAttenuatedTwentyDecibels) {
  const auto x = sine(1.5, 20.0, 1200);
  const auto y = bandpass(TimeSeries(x, 20.0), {0.1, 0.5});
  const double ratio = central_rms_ratio(x, y.samples());
  EXPECT_LT(20.0 * std::log10(ratio), -20.0);
  EXPECT_LT(cascade_power_gain(butterworth_bandpass(4, 0.1, 0.5, 20.0), 1.5, 20.0), 0.01);
}

TEST(Bandpass, ZeroInZeroOut) {
  const auto y = bandpass(TimeSeries(std::vector<double>(1200, 0.0), 20.0), {0.1, 0.5});
  for (double v : y.samples()) EXPECT_EQ(v, 0.0);
}

TEST(Bandpass, ZeroPhaseCrossCorrelationPeaksAtLagZero) {
  const auto x = sine(0.3, 20.0, 1200);
  const auto y = bandpass(TimeSeries(x, 20.0), {0.1, 0.5});
  int best_lag = 0;
  double best = -1e300;
  for (int lag = -30; lag <= 30; ++lag) {
    double acc = 0.0;
    for (int i = 300; i < 900; ++i) acc += x[static_cast<std::size_t>(i)] * y.samples()[static_cast<std::size_t>(i + lag)];
    if (acc > best) {
      best = acc;
      best_lag = lag;
    }
  }
  EXPECT_EQ(best_lag, 0);
}

TEST(Bandpass, IsLinear) {
  SeededRng rng(7);
  std::vector<double> a(1500), b(1500), mix(1500);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = rng.normal();
    b[i] = rng.normal();
    mix[i] = 2.5 * a[i] - 0.75 * b[i];
  }
  const BandLimits band{0.1, 0.5};
  const auto fa = bandpass(TimeSeries(a, 25.0), band);
  const auto fb = bandpass(TimeSeries(b, 25.0), band);
  const auto fm = bandpass(TimeSeries(mix, 25.0), band);
  double scale = 0.0;
  for (double v : fm.samples()) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < mix.size(); ++i) {
    EXPECT_NEAR(fm.samples()[i], 2.5 * fa.samples()[i] - 0.75 * fb.samples()[i], 1e-9 * scale);
  }
}

TEST(Bandpass, RejectsBadBandAndShortSignals) {
  const TimeSeries ts(std::vector<double>(1200, 1.0), 20.0);
  EXPECT_THROW(bandpass(ts, {0.5, 0.1}), Error);
  EXPECT_THROW(bandpass(ts, {0.1, 10.0}), Error);
  EXPECT_THROW(bandpass(ts, {0.0, 0.5}), Error);
  try {
    bandpass(TimeSeries(std::vector<double>(100, 1.0), 20.0), {0.1, 0.5});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SignalTooShort);
  }
}

TEST(Segment, SixtySecondsGivesFiftyOneWindows) {
  const TimeSeries ts(sine(0.2, 20.0, 1200), 20.0, "m");
  const auto segs = segment(ts, {});
  ASSERT_EQ(segs.size(), 51u);
  for (std::size_t w = 0; w < segs.size(); ++w) {
    EXPECT_EQ(segs[w].size(), 200u);
    EXPECT_EQ(segs[w].window_index, w);
    EXPECT_DOUBLE_EQ(segs[w].start_time_s, static_cast<double>(w));
    EXPECT_EQ(segs[w].method_id, "m");
  }
}

TEST(Segment, BoundaryAndTooShort) {
  EXPECT_EQ(segment(TimeSeries(std::vector<double>(200, 1.0), 20.0), {}).size(), 1u);
  try {
    segment(TimeSeries(std::vector<double>(190, 1.0), 20.0), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SignalShorterThanWindow);
  }
}

TEST(Segment, WindowsAreExactSlices) {
  std::vector<double> x(700);
  std::iota(x.begin(), x.end(), 0.0);
  const auto segs = segment(TimeSeries(x, 30.0), {10.0, 2.0});
  for (const auto& s : segs) {
    const auto start = static_cast<std::size_t>(std::llround(s.start_time_s * 30.0));
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s.samples[i], x[start + i]);
  }
}

TEST(Segment, CountDependsOnlyOnDuration) {
  const auto base = TimeSeries(sine(0.3, 61.0, 61 * 45), 61.0);
  for (double rate : {10.0, 20.0, 30.0, 61.0}) {
    const auto r = resample(base, rate);
    EXPECT_EQ(segment(r, {}).size(), 36u) << rate;
  }
}

TEST(Detrend, RemovesMean) {
  Segment s;
  s.samples = {1, 2, 3};
  EXPECT_EQ(detrend(s).samples, (std::vector<double>{-1, 0, 1}));
  s.samples = {-1, 0, 1};
  EXPECT_EQ(detrend(s).samples, s.samples);
  s.samples = std::vector<double>(17, 4.2);
  for (double v : detrend(s).samples) EXPECT_NEAR(v, 0.0, 1e-12);
}
