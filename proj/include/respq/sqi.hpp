#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "respq/signal.hpp"
#include "respq/spectral.hpp"

namespace respq {

inline constexpr std::size_t kMetricCount = 10;

/// Metric order used everywhere: in-memory layout, CSV columns, mask bits.
enum class Metric : std::size_t { ZCR, HJORTH_M, HJORTH_C, SNR, IPR, BPR, KURT, SKEW, PI, TMCC };

/// Display names ("Hjorth-M", "BPR", ...).
std::string_view metric_name(Metric m) noexcept;
std::string_view metric_name(std::size_t index) noexcept;
/// Lower-case identifiers used as CSV column stems ("hjorth_m", ...).
std::string_view metric_key(std::size_t index) noexcept;
std::optional<std::size_t> metric_index_from_name(std::string_view name) noexcept;

enum class QualityStage { RAW, ORIENTED, NORMALIZED };

std::string_view to_string(QualityStage s) noexcept;

struct QualityVector {
  std::array<double, kMetricCount> values{};
  QualityStage stage = QualityStage::RAW;

  double& operator[](Metric m) noexcept { return values[static_cast<std::size_t>(m)]; }
  double operator[](Metric m) const noexcept { return values[static_cast<std::size_t>(m)]; }
};

enum class Preference { LOWER_BETTER, HIGHER_BETTER, ZERO_BETTER };

struct PreferenceTable {
  std::array<Preference, kMetricCount> direction{
      Preference::LOWER_BETTER,   // zcr
      Preference::LOWER_BETTER,   // hjorth_m
      Preference::HIGHER_BETTER,  // hjorth_c
      Preference::HIGHER_BETTER,  // snr
      Preference::LOWER_BETTER,   // ipr
      Preference::HIGHER_BETTER,  // bpr
      Preference::ZERO_BETTER,    // kurt
      Preference::ZERO_BETTER,    // skew
      Preference::HIGHER_BETTER,  // pi
      Preference::HIGHER_BETTER,  // tmcc
  };
};

struct NormalizationStats {
  std::array<double, kMetricCount> min{};
  std::array<double, kMetricCount> max{};
  std::string population_id;
};

struct QualityConfig {
  /// Spectral metrics use one Hann-tapered periodogram over the whole window
  /// by default; shorter subsegments leak too much power out of band.
  WelchConfig welch{10.0, 0.5, 4096};
  /// BPR denominator band.
  BandLimits reference_band{0.05, 1.0};
  double snr_halfwidth_hz = 0.05;
  /// Longest PI lag as a fraction of the segment length.
  double max_lag_fraction = 0.75;
  double tmcc_search_fraction = 0.25;
};

/// Ten RAW metrics of a detrended, band-passed segment. Throws
/// ZeroVarianceSegment when moments or Hjorth ratios are undefined.
QualityVector compute_quality_vector(const Segment& seg, const BandLimits& band, const QualityConfig& cfg = {});

/// Periodicity index (peak overlap-normalized autocorrelation) and the
/// dominant period in samples (argmax of the 1/N autocorrelation). lag is 0
/// when the admissible lag range is empty.
struct Periodicity {
  double index = 0.0;
  std::size_t lag = 0;
};
Periodicity periodicity(std::span<const double> x, const BandLimits& band, double sample_rate_hz,
                        double max_lag_fraction = 0.75);

double temporal_mean_cross_correlation(std::span<const double> x, std::size_t period, double search_fraction = 0.25);

QualityVector orient(const QualityVector& raw, const PreferenceTable& prefs = {});

NormalizationStats fit_normalization(std::span<const QualityVector> population, std::string population_id = {});

QualityVector normalize(const QualityVector& oriented, const NormalizationStats& stats);

}  // namespace respq
