#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace respq {

/// Uniformly sampled real-valued signal. Construction validates the invariants
/// (non-empty, finite samples, finite positive rate).
class TimeSeries {
 public:
  TimeSeries(std::vector<double> samples, double sample_rate_hz, std::string id = {});

  std::span<const double> samples() const noexcept { return samples_; }
  double sample_rate_hz() const noexcept { return sample_rate_hz_; }
  const std::string& id() const noexcept { return id_; }
  std::size_t size() const noexcept { return samples_.size(); }
  double duration_s() const noexcept { return static_cast<double>(samples_.size()) / sample_rate_hz_; }

 private:
  std::vector<double> samples_;
  double sample_rate_hz_;
  std::string id_;
};

struct BandLimits {
  double lo_hz = 0.1;
  double hi_hz = 0.5;

  double lo_bpm() const noexcept { return 60.0 * lo_hz; }
  double hi_bpm() const noexcept { return 60.0 * hi_hz; }
  /// Throws BandOutOfRange unless 0 < lo < hi < fs/2.
  void validate_for(double sample_rate_hz) const;
};

struct WindowingConfig {
  double window_s = 10.0;
  double step_s = 1.0;

  void validate() const;
  std::size_t window_samples(double sample_rate_hz) const;
  /// Number of whole windows that fit in `duration_s`.
  std::size_t window_count(double duration_s) const;
};

struct Segment {
  std::string method_id;
  std::size_t window_index = 0;
  double start_time_s = 0.0;
  std::vector<double> samples;
  double sample_rate_hz = 1.0;

  std::size_t size() const noexcept { return samples.size(); }
};

struct ResampleOptions {
  /// Zero-phase Butterworth low-pass at 0.45 x target rate before decimation.
  bool anti_alias = false;
};

TimeSeries resample(const TimeSeries& ts, double target_rate_hz, ResampleOptions opts = {});

/// Number of samples the band-pass needs to settle; reflection padding is
/// three times this and the input must be at least that long.
std::size_t bandpass_settling_samples(const BandLimits& band, double sample_rate_hz);

TimeSeries bandpass(const TimeSeries& ts, const BandLimits& band);

std::vector<Segment> segment(const TimeSeries& ts, const WindowingConfig& cfg);

/// Mean removal.
Segment detrend(Segment seg);

// Second-order sections of a digital Butterworth design.
struct Biquad {
  double b0, b1, b2, a1, a2;
};

std::vector<Biquad> butterworth_bandpass(int order, double lo_hz, double hi_hz, double sample_rate_hz);
std::vector<Biquad> butterworth_lowpass(int order, double cutoff_hz, double sample_rate_hz);

/// Forward-backward filtering with odd reflection padding of `pad` samples.
std::vector<double> filtfilt(std::span<const Biquad> sections, std::span<const double> x, std::size_t pad);

}  // namespace respq
