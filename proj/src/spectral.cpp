#include "respq/spectral.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <unsupported/Eigen/FFT>

#include "respq/error.hpp"

namespace respq {

namespace {

std::vector<std::complex<double>> padded_fft(std::span<const double> x, int n_fft) {
  std::vector<double> buf(static_cast<std::size_t>(n_fft), 0.0);
  std::copy(x.begin(), x.end(), buf.begin());
  std::vector<std::complex<double>> out;
  Eigen::FFT<double> fft;
  fft.fwd(out, buf);
  return out;
}

double sample_stddev(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / n);
}

// Local maxima, plateaus resolved to their middle sample.
std::vector<std::size_t> local_maxima(std::span<const double> x) {
  std::vector<std::size_t> peaks;
  const std::size_t n = x.size();
  std::size_t i = 1;
  while (i + 1 < n) {
    if (x[i - 1] < x[i]) {
      std::size_t ahead = i + 1;
      while (ahead + 1 < n && x[ahead] == x[i]) ++ahead;
      if (x[ahead] < x[i]) {
        peaks.push_back((i + ahead - 1) / 2);
        i = ahead;
        continue;
      }
    }
    ++i;
  }
  return peaks;
}

// Topographic prominence: height above the higher of the two lowest points
// reached before meeting a taller sample (or the signal edge) on each side.
double prominence(std::span<const double> x, std::size_t peak) {
  const double h = x[peak];
  double left_min = h;
  for (std::size_t i = peak; i-- > 0;) {
    if (x[i] > h) break;
    left_min = std::min(left_min, x[i]);
  }
  double right_min = h;
  for (std::size_t i = peak + 1; i < x.size(); ++i) {
    if (x[i] > h) break;
    right_min = std::min(right_min, x[i]);
  }
  return h - std::max(left_min, right_min);
}

// Keeps taller peaks first and drops any closer than `distance` samples to a kept one.
std::vector<std::size_t> enforce_distance(std::span<const double> x, std::vector<std::size_t> peaks,
                                          std::size_t distance) {
  std::vector<std::size_t> order(peaks.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[peaks[a]] > x[peaks[b]]; });
  std::vector<bool> keep(peaks.size(), true);
  for (std::size_t oi : order) {
    if (!keep[oi]) continue;
    for (std::size_t j = 0; j < peaks.size(); ++j) {
      if (j == oi || !keep[j]) continue;
      const std::size_t gap = peaks[j] > peaks[oi] ? peaks[j] - peaks[oi] : peaks[oi] - peaks[j];
      if (gap < distance) keep[j] = false;
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < peaks.size(); ++j)
    if (keep[j]) out.push_back(peaks[j]);
  return out;
}

}  // namespace

std::string_view to_string(Estimator e) noexcept {
  switch (e) {
    case Estimator::FFT: return "fft";
    case Estimator::WELCH: return "welch";
    case Estimator::MUSIC: return "music";
    case Estimator::PEAK: return "peak";
  }
  return "unknown";
}

Estimator parse_estimator(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (Estimator e : kAllEstimators)
    if (to_string(e) == lower) return e;
  throw Error(ErrorCode::ConfigError, "estimator: unknown value '" + std::string(name) + "'");
}

Eigen::MatrixXd autocorr_toeplitz(std::span<const double> x, int lags) {
  const auto n = x.size();
  if (lags < 1 || n <= static_cast<std::size_t>(lags)) {
    throw Error(ErrorCode::SegmentTooShort, "autocorrelation needs N > M (N=" + std::to_string(n) +
                                                ", M=" + std::to_string(lags) + ")");
  }
  std::vector<double> r(static_cast<std::size_t>(lags));
  for (std::size_t k = 0; k < r.size(); ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) acc += x[i] * x[i + k];
    r[k] = acc / static_cast<double>(n);
  }
  Eigen::MatrixXd t(lags, lags);
  for (int i = 0; i < lags; ++i)
    for (int j = 0; j < lags; ++j) t(i, j) = r[static_cast<std::size_t>(std::abs(i - j))];
  return t;
}

SubspaceDecomposition decompose_subspace(const Eigen::MatrixXd& r, int p) {
  const auto dim = static_cast<int>(r.rows());
  if (p < 1 || p >= dim) throw Error(ErrorCode::InvalidArgument, "model order must satisfy 1 <= p < M");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(r);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::EigenFailure, "symmetric eigen-decomposition did not converge");
  // Eigen returns eigenvalues in ascending order.
  return {solver.eigenvalues(), solver.eigenvectors().leftCols(dim - p)};
}

Spectrum music_pseudospectrum(const Segment& seg, const MusicConfig& cfg) {
  if (cfg.p < 1 || cfg.n_fft < 1) throw Error(ErrorCode::InvalidArgument, "MUSIC needs p >= 1 and n_fft >= 1");
  const int m = cfg.lags();
  const Eigen::MatrixXd r = autocorr_toeplitz(seg.samples, m);
  if (r.norm() < 1e-12 * static_cast<double>(seg.size())) {
    throw Error(ErrorCode::DegenerateAutocorrelation, "autocorrelation matrix is numerically zero");
  }
  const auto sub = decompose_subspace(r, cfg.p);
  const Eigen::MatrixXd& noise = sub.noise_basis;

  const double fs = seg.sample_rate_hz;
  Spectrum out;
  out.estimator = Estimator::MUSIC;
  out.freqs_hz.resize(static_cast<std::size_t>(cfg.n_fft));
  out.power.resize(static_cast<std::size_t>(cfg.n_fft));
  for (int i = 0; i < cfg.n_fft; ++i) {
    const double f = static_cast<double>(i) / cfg.n_fft * fs / 2.0;
    // Noise basis is real, so (E^H a)_k = sum_m E_mk (cos - j sin).
    double denom = 0.0;
    for (int k = 0; k < noise.cols(); ++k) {
      double re = 0.0;
      double im = 0.0;
      for (int mm = 0; mm < m; ++mm) {
        const double phase = 2.0 * std::numbers::pi * mm * f / fs;
        re += noise(mm, k) * std::cos(phase);
        im -= noise(mm, k) * std::sin(phase);
      }
      denom += re * re + im * im;
    }
    out.freqs_hz[static_cast<std::size_t>(i)] = f;
    out.power[static_cast<std::size_t>(i)] = denom < 1.0 / kMusicCeiling ? kMusicCeiling : std::min(1.0 / denom, kMusicCeiling);
  }
  return out;
}

Spectrum fft_periodogram(const Segment& seg, int n_fft) {
  const std::size_t n = seg.size();
  if (n < 2) throw Error(ErrorCode::SegmentTooShort, "periodogram needs at least 2 samples");
  if (n_fft < static_cast<int>(n)) {
    throw Error(ErrorCode::InvalidArgument, "n_fft (" + std::to_string(n_fft) + ") must be >= N (" + std::to_string(n) + ")");
  }
  const auto spec = padded_fft(seg.samples, n_fft);
  const std::size_t bins = static_cast<std::size_t>(n_fft) / 2 + 1;
  Spectrum out;
  out.estimator = Estimator::FFT;
  out.freqs_hz.resize(bins);
  out.power.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    out.freqs_hz[k] = static_cast<double>(k) * seg.sample_rate_hz / n_fft;
    out.power[k] = std::norm(spec[k]) / static_cast<double>(n);
  }
  return out;
}

Spectrum welch(const Segment& seg, const WelchConfig& cfg) {
  const double fs = seg.sample_rate_hz;
  const auto len = static_cast<std::size_t>(std::llround(cfg.subsegment_s * fs));
  if (len < 2 || len > seg.size()) {
    throw Error(ErrorCode::SubsegmentTooLong, "Welch subsegment of " + std::to_string(len) + " samples does not fit " +
                                                  std::to_string(seg.size()));
  }
  if (!(cfg.overlap_fraction >= 0.0 && cfg.overlap_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "Welch overlap must lie in [0, 1)");
  }
  if (cfg.n_fft < static_cast<int>(len)) throw Error(ErrorCode::InvalidArgument, "Welch n_fft shorter than subsegment");
  const auto hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(len * (1.0 - cfg.overlap_fraction))));

  std::vector<double> taper(len);
  double taper_energy = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    taper[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(len));
    taper_energy += taper[i] * taper[i];
  }

  const std::size_t bins = static_cast<std::size_t>(cfg.n_fft) / 2 + 1;
  Spectrum out;
  out.estimator = Estimator::WELCH;
  out.freqs_hz.resize(bins);
  out.power.assign(bins, 0.0);
  for (std::size_t k = 0; k < bins; ++k) out.freqs_hz[k] = static_cast<double>(k) * fs / cfg.n_fft;

  std::size_t count = 0;
  std::vector<double> buf(len);
  for (std::size_t start = 0; start + len <= seg.size(); start += hop) {
    for (std::size_t i = 0; i < len; ++i) buf[i] = seg.samples[start + i] * taper[i];
    const auto spec = padded_fft(buf, cfg.n_fft);
    for (std::size_t k = 0; k < bins; ++k) out.power[k] += std::norm(spec[k]) / taper_energy;
    ++count;
  }
  for (double& v : out.power) v /= static_cast<double>(count);
  return out;
}

double spectrum_rr(const Spectrum& spec, const BandLimits& band) {
  std::size_t best = spec.freqs_hz.size();
  for (std::size_t i = 0; i < spec.freqs_hz.size(); ++i) {
    const double f = spec.freqs_hz[i];
    if (f < band.lo_hz || f > band.hi_hz) continue;
    if (best == spec.freqs_hz.size() || spec.power[i] > spec.power[best]) best = i;
  }
  if (best == spec.freqs_hz.size()) throw Error(ErrorCode::EmptyBand, "no spectral grid point inside the band");
  return 60.0 * spec.freqs_hz[best];
}

double peak_rr(const Segment& seg, const BandLimits& band) {
  const std::span<const double> x = seg.samples;
  if (x.size() < 3) throw Error(ErrorCode::InsufficientPeaks, "segment too short for peak detection");
  const double fs = seg.sample_rate_hz;
  const double min_prominence = 0.2 * sample_stddev(x);

  std::vector<std::size_t> peaks;
  for (std::size_t p : local_maxima(x))
    if (prominence(x, p) >= min_prominence && prominence(x, p) > 0.0) peaks.push_back(p);
  const auto distance = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(fs / band.hi_hz)));
  peaks = enforce_distance(x, std::move(peaks), distance);
  if (peaks.size() < 2) throw Error(ErrorCode::InsufficientPeaks, std::to_string(peaks.size()) + " peak(s) detected");

  std::vector<double> intervals;
  for (std::size_t i = 1; i < peaks.size(); ++i) intervals.push_back(static_cast<double>(peaks[i] - peaks[i - 1]) / fs);
  std::sort(intervals.begin(), intervals.end());
  const std::size_t mid = intervals.size() / 2;
  const double median = intervals.size() % 2 ? intervals[mid] : 0.5 * (intervals[mid - 1] + intervals[mid]);
  return std::clamp(60.0 / median, band.lo_bpm(), band.hi_bpm());
}

RrEstimate estimate_rr(const Segment& seg, Estimator estimator, const EstimatorConfig& cfg, const BandLimits& band) {
  RrEstimate out{seg.method_id, seg.window_index, estimator, 0.0};
  switch (estimator) {
    case Estimator::FFT: out.rr_bpm = spectrum_rr(fft_periodogram(seg, cfg.fft_n), band); break;
    case Estimator::WELCH: out.rr_bpm = spectrum_rr(welch(seg, cfg.welch), band); break;
    case Estimator::MUSIC: out.rr_bpm = spectrum_rr(music_pseudospectrum(seg, cfg.music), band); break;
    case Estimator::PEAK: out.rr_bpm = peak_rr(seg, band); break;
  }
  return out;
}

}  // namespace respq
