#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "respq/pipeline.hpp"

namespace respq {

/// Flat key=value run configuration. Blank lines and lines starting with '#'
/// are ignored; unknown keys and bad values raise ConfigError naming the key.
struct RunConfig {
  double window_s = 10.0;
  double step_s = 1.0;
  double band_lo_hz = 0.1;
  double band_hi_hz = 0.5;
  Estimator estimator = Estimator::WELCH;
  int music_p = 2;
  int music_nfft = 4096;
  double welch_subsegment_s = 5.0;
  double welch_overlap = 0.5;
  int nfft = 4096;
  std::uint64_t seed = 42;
  /// "dataset" (one min/max over every recording) or "recording".
  std::string normalization_scope = "dataset";
  double filter_fraction = 0.0;
  double sqi_welch_subsegment_s = 10.0;
  int train_epochs = 200;
  double train_learning_rate = 1e-3;
  int train_batch_size = 32;

  PipelineConfig pipeline() const;
  TrainConfig training() const;
};

RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string render_run_config(const RunConfig& cfg);

/// Whole file as bytes; MissingInput when it cannot be opened.
std::string read_file(const std::filesystem::path& path);
/// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Comma-separated text with an exact header. Fields containing a comma or a
/// double quote are quoted ("" escapes a quote).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// 1-based source line of each row, for error messages.
  std::vector<std::size_t> lines;
};

/// Throws ParseError naming `source` and the line number. `header` must match
/// exactly unless `optional_trailing` columns are missing from the end.
CsvTable parse_csv(std::string_view text, std::span<const std::string_view> header, std::string_view source,
                   std::size_t optional_trailing = 0);
std::string render_csv(std::span<const std::string_view> header, std::span<const std::vector<std::string>> rows);

// Signals and per-stream metadata.

struct Stream {
  std::string recording_id;
  std::string method_id;
  std::vector<double> samples;
};

/// Rows grouped by (recording, method) in first-seen order; sample_index must
/// run 0, 1, 2, ... per stream and values must be finite.
std::vector<Stream> parse_signals(std::string_view text, std::string_view source = "signals.csv");
std::string render_signals(std::span<const Stream> streams);

inline constexpr std::array<std::string_view, 4> kGroupTags{"NLM", "DLM", "MOTION", "GT"};

/// Empty method_id applies the row to every stream of the recording; the GT
/// stream is then the one whose method_id is "GT".
struct StreamMeta {
  std::string recording_id;
  double sample_rate_hz = 0.0;
  std::string group_tag;
  std::string method_id;
};

std::vector<StreamMeta> parse_meta(std::string_view text, std::string_view source = "meta.csv");
std::string render_meta(std::span<const StreamMeta> meta);

struct Recording {
  std::string recording_id;
  std::optional<TimeSeries> gt;
  std::vector<CandidateInput> candidates;
};

/// Joins signals with their metadata. Throws MissingInput for a stream
/// without metadata, ParseError for bad tags or rates.
std::vector<Recording> assemble_recordings(std::span<const Stream> streams, std::span<const StreamMeta> meta);

/// Estimation and quality scoring for every recording, then normalization at
/// the configured scope. Recordings without GT get NaN gt_rr.
std::vector<MethodCandidateSet> process_recordings(std::span<const Recording> recordings, const RunConfig& cfg,
                                                   const std::optional<NormalizationStats>& frozen = std::nullopt);

// Per-window tables.

struct RrRow {
  std::string recording_id;
  std::string method_id;
  Estimator estimator = Estimator::WELCH;
  std::size_t window_index = 0;
  double rr_bpm = 0.0;
};

/// Candidates for every estimator, then GT rows (method "GT") for `gt_estimator`.
std::vector<RrRow> rr_rows(std::span<const MethodCandidateSet> sets, Estimator gt_estimator);
std::vector<RrRow> parse_rr(std::string_view text, std::string_view source = "rr.csv");
std::string render_rr(std::span<const RrRow> rows);

struct ErrorRow {
  std::string recording_id;
  std::string method_id;
  std::size_t window_index = 0;
  double abs_error_bpm = 0.0;
};

std::vector<ErrorRow> error_rows(std::span<const MethodCandidateSet> sets, Estimator e);
std::vector<ErrorRow> parse_errors(std::string_view text, std::string_view source = "errors.csv");
std::string render_errors(std::span<const ErrorRow> rows);

struct QualityRow {
  std::string recording_id;
  std::string method_id;
  std::size_t window_index = 0;
  /// False when the metrics are undefined; the value columns are then nan.
  bool valid = false;
  std::array<double, kMetricCount> raw{};
  std::array<double, kMetricCount> oriented{};
  std::array<double, kMetricCount> normalized{};
};

std::vector<QualityRow> quality_rows(std::span<const MethodCandidateSet> sets);
std::vector<QualityRow> parse_quality(std::string_view text, std::string_view source = "quality.csv");
std::string render_quality(std::span<const QualityRow> rows);

/// Rebuilds candidate sets from rr, quality and metadata tables. Methods keep
/// their first-seen order; GT comes from the "GT" rows (or the stream tagged
/// GT) for `gt_estimator`.
std::vector<MethodCandidateSet> assemble_sets(std::span<const StreamMeta> meta, std::span<const RrRow> rr,
                                              std::span<const QualityRow> quality, Estimator gt_estimator);

/// Stacked selection problem over the normalized quality and error tables.
/// Only methods whose group tag passes `scenario` are kept.
SelectionProblem selection_problem_from_rows(std::span<const QualityRow> quality, std::span<const ErrorRow> errors,
                                             std::span<const StreamMeta> meta, std::string_view scenario);

NormalizationStats parse_normalization(std::string_view text, std::string_view source = "normalization.csv");
std::string render_normalization(const NormalizationStats& stats);

// Reports.

struct ResultRow {
  std::string strategy;
  std::string scenario;
  double mae_bpm = 0.0;
  /// NaN when undefined (constant series).
  double pcc = 0.0;
  double coverage = 1.0;
};

ResultRow result_row(std::string strategy, std::string scenario, const EvalReport& r);
std::vector<ResultRow> parse_results(std::string_view text, std::string_view source = "results.csv");
std::string render_results(std::span<const ResultRow> rows);

struct TraceCsvRow {
  std::string strategy;
  std::string scenario;
  std::string recording_id;
  std::size_t window_index = 0;
  /// Empty when nothing was chosen.
  std::string method_id;
  double rr_bpm = 0.0;
  double gt_rr_bpm = 0.0;
  double abs_error_bpm = 0.0;
  double fmm_score = 0.0;
  double predicted_error = 0.0;
};

std::vector<TraceCsvRow> trace_rows(std::span<const FusionTrace> traces, std::string_view scenario);
/// Traces of one (strategy, scenario), grouped by recording. Candidate RRs and
/// scores are not stored, so only the chosen method and its values come back.
std::vector<FusionTrace> traces_from_rows(std::span<const TraceCsvRow> rows, std::string_view strategy,
                                          std::string_view scenario);
std::vector<TraceCsvRow> parse_traces(std::string_view text, std::string_view source = "traces.csv");
std::string render_traces(std::span<const TraceCsvRow> rows);

struct FilterRow {
  std::string score;
  std::string scenario;
  double q = 0.0;
  double mae_bpm = 0.0;
  double pcc = 0.0;
  double coverage = 1.0;
  std::size_t window_count = 0;
};

std::vector<FilterRow> parse_filter(std::string_view text, std::string_view source = "filter.csv");
std::string render_filter(std::span<const FilterRow> rows);

struct SubsetRow {
  std::string scenario;
  MetricMask mask;
  double mae_bpm = 0.0;
  std::string population;
};

/// Metrics column is the display-name list, e.g. "Hjorth-M, BPR, PI".
std::vector<SubsetRow> parse_subsets(std::string_view text, std::string_view source = "subset.csv");
std::string render_subsets(std::span<const SubsetRow> rows);

struct BaselineRow {
  std::string scenario;
  BaselineChoice choice;
};

std::vector<BaselineRow> parse_baselines(std::string_view text, std::string_view source = "baseline.csv");
std::string render_baselines(std::span<const BaselineRow> rows);

/// Two blocks (mae_bpm, then pcc) of one row per method and one column per
/// estimator; undefined PCC is nan.
std::string render_heatmap_csv(const SweepReport& sweep);
SweepReport parse_heatmap_csv(std::string_view text, std::string_view source = "heatmap.csv");

/// Methods down, estimators across, MAE printed in each cell; the best cell
/// carries a heavy outline.
std::string heatmap_svg(const SweepReport& sweep, std::string_view title);
/// Horizontal MAE bars, one per result row.
std::string results_svg(std::span<const ResultRow> rows, std::string_view title);
/// Markdown tables; undefined PCC prints as "0.00*".
std::string render_report(std::span<const ResultRow> results, std::span<const FilterRow> filter);

/// Fixed-point rendering with `digits` decimals, locale independent.
std::string format_fixed(double v, int digits);

}  // namespace respq
