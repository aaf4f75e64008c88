#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "respq/signal.hpp"

namespace respq {

/// Declaration order is the tie-break order used by baseline selection.
enum class Estimator { FFT, WELCH, MUSIC, PEAK };

inline constexpr Estimator kAllEstimators[] = {Estimator::FFT, Estimator::WELCH, Estimator::MUSIC, Estimator::PEAK};

std::string_view to_string(Estimator e) noexcept;
/// Accepts lower or upper case names; throws ConfigError otherwise.
Estimator parse_estimator(std::string_view name);

struct Spectrum {
  std::vector<double> freqs_hz;
  std::vector<double> power;
  Estimator estimator = Estimator::FFT;
};

struct MusicConfig {
  int p = 2;
  int n_fft = 4096;

  int lags() const noexcept { return 2 * p; }
};

struct SubspaceDecomposition {
  Eigen::VectorXd eigenvalues;  // ascending
  Eigen::MatrixXd noise_basis;  // M x (M - p), orthonormal columns
};

struct WelchConfig {
  double subsegment_s = 5.0;
  double overlap_fraction = 0.5;
  int n_fft = 4096;
};

struct EstimatorConfig {
  MusicConfig music;
  WelchConfig welch;
  int fft_n = 4096;
};

struct RrEstimate {
  std::string method_id;
  std::size_t window_index = 0;
  Estimator estimator = Estimator::WELCH;
  double rr_bpm = 0.0;
};

/// Biased (1/N) autocorrelation lags 0..M-1 arranged as a symmetric Toeplitz matrix.
Eigen::MatrixXd autocorr_toeplitz(std::span<const double> x, int lags);

/// Eigen-decomposition of a symmetric matrix; the `dim - p` eigenvectors with
/// the smallest eigenvalues span the noise subspace.
SubspaceDecomposition decompose_subspace(const Eigen::MatrixXd& r, int p);

inline constexpr double kMusicCeiling = 1e12;

/// Single-channel MUSIC pseudo-spectrum on the grid f_i = i/n_fft * fs/2,
/// i = 0..n_fft-1, with steering a_m(f) = exp(-j 2 pi m f / fs).
Spectrum music_pseudospectrum(const Segment& seg, const MusicConfig& cfg = {});

/// One-sided |X(f)|^2 / N on the zero-padded grid k * fs / n_fft, k = 0..n_fft/2.
Spectrum fft_periodogram(const Segment& seg, int n_fft = 4096);

/// Average of periodic-Hann tapered subsegment periodograms, each scaled by 1/sum(w^2).
Spectrum welch(const Segment& seg, const WelchConfig& cfg = {});

/// 60 x the in-band argmax frequency; ties go to the lowest frequency.
double spectrum_rr(const Spectrum& spec, const BandLimits& band);

/// Median inter-peak interval of prominent local maxima, clamped to the band.
double peak_rr(const Segment& seg, const BandLimits& band);

/// Runs one estimator on a detrended segment.
RrEstimate estimate_rr(const Segment& seg, Estimator estimator, const EstimatorConfig& cfg, const BandLimits& band);

}  // namespace respq
