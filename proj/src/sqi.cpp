#include "respq/sqi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "respq/error.hpp"

namespace respq {

namespace {

constexpr std::array<std::string_view, kMetricCount> kNames{"ZCR", "Hjorth-M", "Hjorth-C", "SNR", "IPR",
                                                            "BPR", "KURT",     "SKEW",     "PI",  "TMCC"};
constexpr std::array<std::string_view, kMetricCount> kKeys{"zcr", "hjorth_m", "hjorth_c", "snr_db", "ipr",
                                                           "bpr", "kurt",     "skew",     "pi",     "tmcc"};

double mean_of(std::span<const double> x) { return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size()); }

double variance_of(std::span<const double> x) {
  const double m = mean_of(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size());
}

std::vector<double> diff(std::span<const double> x) {
  std::vector<double> d;
  d.reserve(x.size() - 1);
  for (std::size_t i = 1; i < x.size(); ++i) d.push_back(x[i] - x[i - 1]);
  return d;
}

// Zero-mean normalized correlation of two equal-length spans; 0 if either is flat.
double pearson(std::span<const double> a, std::span<const double> b) {
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

double band_power(const Spectrum& s, double lo, double hi) {
  double acc = 0.0;
  for (std::size_t i = 0; i < s.freqs_hz.size(); ++i)
    if (s.freqs_hz[i] >= lo && s.freqs_hz[i] <= hi) acc += s.power[i];
  return acc;
}

}  // namespace

std::string_view metric_name(Metric m) noexcept { return kNames[static_cast<std::size_t>(m)]; }
std::string_view metric_name(std::size_t index) noexcept { return index < kMetricCount ? kNames[index] : "?"; }
std::string_view metric_key(std::size_t index) noexcept { return index < kMetricCount ? kKeys[index] : "?"; }

std::optional<std::size_t> metric_index_from_name(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kMetricCount; ++i)
    if (kNames[i] == name || kKeys[i] == name) return i;
  return std::nullopt;
}

std::string_view to_string(QualityStage s) noexcept {
  switch (s) {
    case QualityStage::RAW: return "raw";
    case QualityStage::ORIENTED: return "oriented";
    case QualityStage::NORMALIZED: return "normalized";
  }
  return "unknown";
}

Periodicity periodicity(std::span<const double> x, const BandLimits& band, double fs, double max_lag_fraction) {
  const std::size_t n = x.size();
  const auto lo_lag = static_cast<std::size_t>(std::ceil(fs / band.hi_hz));
  const auto hi_lag = std::min(static_cast<std::size_t>(std::floor(fs / band.lo_hz)),
                               static_cast<std::size_t>(std::floor(max_lag_fraction * static_cast<double>(n))));
  Periodicity best{};
  bool found = false;
  double best_biased = 0.0;
  for (std::size_t lag = std::max<std::size_t>(lo_lag, 1); lag <= hi_lag && lag < n; ++lag) {
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) {
      sxy += x[i] * x[i + lag];
      sxx += x[i] * x[i];
      syy += x[i + lag] * x[i + lag];
    }
    const double r = (sxx > 0.0 && syy > 0.0) ? sxy / std::sqrt(sxx * syy) : 0.0;
    // The 1/N estimator decays with lag, so its argmax favours the fundamental
    // over multiples of the period.
    if (!found || r > best.index) best.index = r;
    if (!found || sxy > best_biased) {
      best_biased = sxy;
      best.lag = lag;
    }
    found = true;
  }
  return best;
}

double temporal_mean_cross_correlation(std::span<const double> x, std::size_t period, double search_fraction) {
  const std::size_t n = x.size();
  if (period == 0 || 2 * period > n) {
    const std::size_t half = n / 2;
    if (half < 2) return 0.0;
    return pearson(x.subspan(0, half), x.subspan(half, half));
  }
  const std::size_t cycles = n / period;
  const auto search = static_cast<std::ptrdiff_t>(std::floor(search_fraction * static_cast<double>(period)));
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cycles; ++k) {
    const auto ref = x.subspan(k * period, period);
    double best = -1.0;
    for (std::ptrdiff_t s = -search; s <= search; ++s) {
      const auto start = static_cast<std::ptrdiff_t>((k + 1) * period) + s;
      if (start < 0 || static_cast<std::size_t>(start) + period > n) continue;
      best = std::max(best, pearson(ref, x.subspan(static_cast<std::size_t>(start), period)));
    }
    total += best;
  }
  return total / static_cast<double>(cycles - 1);
}

QualityVector compute_quality_vector(const Segment& seg, const BandLimits& band, const QualityConfig& cfg) {
  const std::span<const double> x = seg.samples;
  const std::size_t n = x.size();
  if (n < 3) throw Error(ErrorCode::ZeroVarianceSegment, "segment too short for quality metrics");
  const double fs = seg.sample_rate_hz;

  const double var_x = variance_of(x);
  const auto dx = diff(x);
  const auto ddx = diff(dx);
  const double var_dx = variance_of(dx);
  const double var_ddx = variance_of(ddx);
  if (!(var_x > 0.0) || !(var_dx > 0.0)) {
    throw Error(ErrorCode::ZeroVarianceSegment, "segment '" + seg.method_id + "' window " +
                                                    std::to_string(seg.window_index) + " has zero variance");
  }

  QualityVector q;
  q.stage = QualityStage::RAW;

  std::size_t crossings = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (std::signbit(x[i]) != std::signbit(x[i - 1])) ++crossings;
  q[Metric::ZCR] = static_cast<double>(crossings) / static_cast<double>(n - 1);

  const double mobility = std::sqrt(var_dx / var_x);
  q[Metric::HJORTH_M] = mobility;
  q[Metric::HJORTH_C] = std::sqrt(var_ddx / var_dx) / mobility;

  const Spectrum spec = welch(seg, cfg.welch);
  const double peak_hz = spectrum_rr(spec, band) / 60.0;
  double signal = 0.0, in_band = 0.0;
  for (std::size_t i = 0; i < spec.freqs_hz.size(); ++i) {
    const double f = spec.freqs_hz[i];
    if (f < band.lo_hz || f > band.hi_hz) continue;
    in_band += spec.power[i];
    if (std::abs(f - peak_hz) <= cfg.snr_halfwidth_hz) signal += spec.power[i];
  }
  // Floor the noise term at 1e-12 of the signal so a noiseless tone reads 120 dB.
  const double noise = std::max(in_band - signal, 1e-12 * signal);
  q[Metric::SNR] = 10.0 * std::log10(signal / noise);
  const double total = std::accumulate(spec.power.begin(), spec.power.end(), 0.0);
  q[Metric::IPR] = (total - in_band) / total;
  const double reference = band_power(spec, cfg.reference_band.lo_hz, std::min(cfg.reference_band.hi_hz, fs / 2.0));
  q[Metric::BPR] = reference > 0.0 ? in_band / reference : 0.0;

  const double mean = mean_of(x);
  double m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - mean;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m3 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  q[Metric::KURT] = m4 / (var_x * var_x) - 3.0;
  q[Metric::SKEW] = m3 / std::pow(var_x, 1.5);

  const Periodicity per = periodicity(x, band, fs, cfg.max_lag_fraction);
  q[Metric::PI] = per.index;
  q[Metric::TMCC] = temporal_mean_cross_correlation(x, per.lag, cfg.tmcc_search_fraction);
  return q;
}

QualityVector orient(const QualityVector& raw, const PreferenceTable& prefs) {
  if (raw.stage != QualityStage::RAW) {
    throw Error(ErrorCode::WrongStage, "orient expects a raw vector, got " + std::string(to_string(raw.stage)));
  }
  QualityVector out = raw;
  for (std::size_t i = 0; i < kMetricCount; ++i) {
    switch (prefs.direction[i]) {
      case Preference::LOWER_BETTER: break;
      case Preference::HIGHER_BETTER: out.values[i] = -raw.values[i]; break;
      case Preference::ZERO_BETTER: out.values[i] = std::abs(raw.values[i]); break;
    }
  }
  out.stage = QualityStage::ORIENTED;
  return out;
}

NormalizationStats fit_normalization(std::span<const QualityVector> population, std::string population_id) {
  if (population.empty()) throw Error(ErrorCode::EmptyPopulation, "normalization population is empty");
  NormalizationStats stats;
  stats.population_id = std::move(population_id);
  stats.min = population.front().values;
  stats.max = population.front().values;
  for (const auto& qv : population) {
    if (qv.stage != QualityStage::ORIENTED) throw Error(ErrorCode::WrongStage, "normalization population must be oriented");
    for (std::size_t i = 0; i < kMetricCount; ++i) {
      stats.min[i] = std::min(stats.min[i], qv.values[i]);
      stats.max[i] = std::max(stats.max[i], qv.values[i]);
    }
  }
  return stats;
}

QualityVector normalize(const QualityVector& oriented, const NormalizationStats& stats) {
  if (oriented.stage != QualityStage::ORIENTED) {
    throw Error(ErrorCode::WrongStage, "normalize expects an oriented vector, got " + std::string(to_string(oriented.stage)));
  }
  QualityVector out;
  out.stage = QualityStage::NORMALIZED;
  for (std::size_t i = 0; i < kMetricCount; ++i) {
    const double span = stats.max[i] - stats.min[i];
    out.values[i] = span > 0.0 ? std::clamp((oriented.values[i] - stats.min[i]) / span, 0.0, 1.0) : 0.5;
  }
  return out;
}

}  // namespace respq
