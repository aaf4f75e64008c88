#include "respq/signal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

#include "respq/error.hpp"

namespace respq {

namespace {

using cplx = std::complex<double>;

constexpr int kBandpassOrder = 4;

// Analog Butterworth prototype poles on the unit circle, left half-plane.
std::vector<cplx> prototype_poles(int order) {
  std::vector<cplx> poles;
  poles.reserve(order);
  for (int k = 1; k <= order; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + order - 1) / (2.0 * order);
    poles.push_back(std::polar(1.0, theta));
  }
  return poles;
}

cplx bilinear(cplx s, double fs2) { return (fs2 + s) / (fs2 - s); }

// Pairs conjugate digital poles into denominators; numerators are filled in
// by the caller. Poles with negative imaginary part are implied by their
// conjugates; a lone real pole becomes a first-order section.
std::vector<Biquad> pole_sections(const std::vector<cplx>& zpoles) {
  std::vector<Biquad> out;
  std::vector<double> real_poles;
  for (const cplx& p : zpoles) {
    if (std::abs(p.imag()) < 1e-14) {
      real_poles.push_back(p.real());
    } else if (p.imag() > 0) {
      out.push_back({0, 0, 0, -2.0 * p.real(), std::norm(p)});
    }
  }
  for (std::size_t i = 0; i < real_poles.size(); i += 2) {
    if (i + 1 < real_poles.size()) {
      out.push_back({0, 0, 0, -(real_poles[i] + real_poles[i + 1]), real_poles[i] * real_poles[i + 1]});
    } else {
      out.push_back({0, 0, 0, -real_poles[i], 0.0});
    }
  }
  return out;
}

cplx section_response(const Biquad& s, double omega) {
  const cplx z1 = std::polar(1.0, -omega);
  const cplx z2 = z1 * z1;
  return (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
}

// Scales every section equally so the cascade has unit magnitude at omega.
void normalize_gain(std::vector<Biquad>& sections, double omega) {
  cplx h = 1.0;
  for (const auto& s : sections) h *= section_response(s, omega);
  const double per_section = std::pow(std::abs(h), 1.0 / static_cast<double>(sections.size()));
  for (auto& s : sections) {
    s.b0 /= per_section;
    s.b1 /= per_section;
    s.b2 /= per_section;
  }
}

void sosfilt_inplace(std::span<const Biquad> sections, std::vector<double>& x) {
  if (x.empty()) return;
  // Steady-state initial conditions for a step of height x[0].
  double level = x.front();
  std::vector<std::pair<double, double>> state;
  state.reserve(sections.size());
  for (const auto& s : sections) {
    const double den = 1.0 + s.a1 + s.a2;
    const double gain = std::abs(den) > 1e-300 ? (s.b0 + s.b1 + s.b2) / den : 0.0;
    const double y = gain * level;
    state.emplace_back(y - s.b0 * level, s.b2 * level - s.a2 * y);
    level = y;
  }
  for (double& v : x) {
    double in = v;
    for (std::size_t k = 0; k < sections.size(); ++k) {
      const auto& s = sections[k];
      auto& [z1, z2] = state[k];
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      in = out;
    }
    v = in;
  }
}

double checked_rate(double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw Error(ErrorCode::NonPositiveRate, "sample rate must be finite and > 0");
  return r;
}

}  // namespace

TimeSeries::TimeSeries(std::vector<double> samples, double sample_rate_hz, std::string id)
    : samples_(std::move(samples)), sample_rate_hz_(checked_rate(sample_rate_hz)), id_(std::move(id)) {
  if (samples_.empty()) throw Error(ErrorCode::EmptySignal, "time series '" + id_ + "' has no samples");
  for (double v : samples_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite sample in '" + id_ + "'");
  }
}

void BandLimits::validate_for(double sample_rate_hz) const {
  if (!(lo_hz > 0.0) || !(lo_hz < hi_hz) || !(hi_hz < sample_rate_hz / 2.0)) {
    throw Error(ErrorCode::BandOutOfRange, "band [" + std::to_string(lo_hz) + ", " + std::to_string(hi_hz) +
                                               "] Hz invalid for fs=" + std::to_string(sample_rate_hz));
  }
}

void WindowingConfig::validate() const {
  if (!(window_s > 0.0) || !(step_s > 0.0) || step_s > window_s) {
    throw Error(ErrorCode::InvalidArgument, "windowing requires window_s > 0 and 0 < step_s <= window_s");
  }
}

std::size_t WindowingConfig::window_samples(double sample_rate_hz) const {
  return static_cast<std::size_t>(std::llround(window_s * sample_rate_hz));
}

std::size_t WindowingConfig::window_count(double duration_s) const {
  // Tolerance absorbs durations like 59.999999 produced by N / fs.
  const double span = (duration_s - window_s) / step_s;
  if (span < -1e-9) return 0;
  return static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
}

TimeSeries resample(const TimeSeries& ts, double target_rate_hz, ResampleOptions opts) {
  if (!(target_rate_hz > 0.0) || !std::isfinite(target_rate_hz)) {
    throw Error(ErrorCode::NonPositiveRate, "target rate must be finite and > 0");
  }
  const double fs = ts.sample_rate_hz();
  std::vector<double> src(ts.samples().begin(), ts.samples().end());
  if (opts.anti_alias && target_rate_hz < fs && src.size() > 1) {
    const double cutoff = 0.45 * target_rate_hz;
    const auto lp = butterworth_lowpass(kBandpassOrder, cutoff, fs);
    const auto settle = static_cast<std::size_t>(std::ceil(fs / cutoff));
    src = filtfilt(lp, src, std::min(3 * settle, src.size() - 1));
  }
  const auto out_n = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(ts.duration_s() * target_rate_hz)));
  std::vector<double> out(out_n);
  const double ratio = fs / target_rate_hz;
  const std::size_t last = src.size() - 1;
  for (std::size_t k = 0; k < out_n; ++k) {
    const double pos = static_cast<double>(k) * ratio;
    const auto i = static_cast<std::size_t>(std::floor(pos));
    if (i >= last) {
      out[k] = src[last];
      continue;
    }
    const double frac = pos - static_cast<double>(i);
    out[k] = src[i] + frac * (src[i + 1] - src[i]);
  }
  return TimeSeries(std::move(out), target_rate_hz, ts.id());
}

std::vector<Biquad> butterworth_bandpass(int order, double lo_hz, double hi_hz, double fs) {
  const double fs2 = 2.0 * fs;
  const double w1 = fs2 * std::tan(std::numbers::pi * lo_hz / fs);
  const double w2 = fs2 * std::tan(std::numbers::pi * hi_hz / fs);
  const double bw = w2 - w1;
  const double w0sq = w1 * w2;

  std::vector<cplx> zpoles;
  for (const cplx& p : prototype_poles(order)) {
    const cplx a = p * bw / 2.0;
    const cplx root = std::sqrt(a * a - w0sq);
    zpoles.push_back(bilinear(a + root, fs2));
    zpoles.push_back(bilinear(a - root, fs2));
  }
  auto sections = pole_sections(zpoles);
  // One zero at z = 1 and one at z = -1 per section.
  for (auto& s : sections) {
    s.b0 = 1.0;
    s.b1 = 0.0;
    s.b2 = -1.0;
  }
  const double center = 2.0 * std::atan(std::sqrt(w0sq) / fs2);
  normalize_gain(sections, center);
  return sections;
}

std::vector<Biquad> butterworth_lowpass(int order, double cutoff_hz, double fs) {
  const double fs2 = 2.0 * fs;
  const double wc = fs2 * std::tan(std::numbers::pi * cutoff_hz / fs);
  std::vector<cplx> zpoles;
  for (const cplx& p : prototype_poles(order)) zpoles.push_back(bilinear(p * wc, fs2));
  auto sections = pole_sections(zpoles);
  for (auto& s : sections) {
    if (s.a2 == 0.0) {
      s.b0 = 1.0;
      s.b1 = 1.0;
      s.b2 = 0.0;
    } else {
      s.b0 = 1.0;
      s.b1 = 2.0;
      s.b2 = 1.0;
    }
  }
  normalize_gain(sections, 0.0);
  return sections;
}

std::vector<double> filtfilt(std::span<const Biquad> sections, std::span<const double> x, std::size_t pad) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  pad = std::min(pad, n - 1);
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  sosfilt_inplace(sections, ext);
  std::reverse(ext.begin(), ext.end());
  sosfilt_inplace(sections, ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

std::size_t bandpass_settling_samples(const BandLimits& band, double sample_rate_hz) {
  return static_cast<std::size_t>(std::ceil(sample_rate_hz / band.lo_hz));
}

TimeSeries bandpass(const TimeSeries& ts, const BandLimits& band) {
  const double fs = ts.sample_rate_hz();
  band.validate_for(fs);
  const std::size_t pad = 3 * bandpass_settling_samples(band, fs);
  if (ts.size() < pad) {
    throw Error(ErrorCode::SignalTooShort, "band-pass needs at least " + std::to_string(pad) + " samples, got " +
                                               std::to_string(ts.size()));
  }
  const auto sections = butterworth_bandpass(kBandpassOrder, band.lo_hz, band.hi_hz, fs);
  return TimeSeries(filtfilt(sections, ts.samples(), pad), fs, ts.id());
}

std::vector<Segment> segment(const TimeSeries& ts, const WindowingConfig& cfg) {
  cfg.validate();
  const double fs = ts.sample_rate_hz();
  const std::size_t count = cfg.window_count(ts.duration_s());
  const std::size_t len = cfg.window_samples(fs);
  if (count == 0 || len == 0 || len > ts.size()) {
    throw Error(ErrorCode::SignalShorterThanWindow, "signal '" + ts.id() + "' lasts " + std::to_string(ts.duration_s()) +
                                                        " s, window is " + std::to_string(cfg.window_s) + " s");
  }
  std::vector<Segment> out;
  out.reserve(count);
  const auto samples = ts.samples();
  for (std::size_t w = 0; w < count; ++w) {
    const double start_s = static_cast<double>(w) * cfg.step_s;
    const auto start = std::min(static_cast<std::size_t>(std::llround(start_s * fs)), ts.size() - len);
    Segment seg;
    seg.method_id = ts.id();
    seg.window_index = w;
    seg.start_time_s = start_s;
    seg.samples.assign(samples.begin() + static_cast<std::ptrdiff_t>(start),
                       samples.begin() + static_cast<std::ptrdiff_t>(start + len));
    seg.sample_rate_hz = fs;
    out.push_back(std::move(seg));
  }
  return out;
}

Segment detrend(Segment seg) {
  if (seg.samples.empty()) return seg;
  const double mean = std::accumulate(seg.samples.begin(), seg.samples.end(), 0.0) / static_cast<double>(seg.size());
  for (double& v : seg.samples) v -= mean;
  return seg;
}

}  // namespace respq
