#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "respq/aggregate.hpp"
#include "respq/predict.hpp"
#include "respq/signal.hpp"
#include "respq/spectral.hpp"
#include "respq/sqi.hpp"

namespace respq {

struct PipelineConfig {
  WindowingConfig windowing;
  BandLimits band;
  EstimatorConfig estimators;
  /// Estimator used for GT, window errors, fusion and filtering.
  Estimator estimator = Estimator::WELCH;
  QualityConfig quality;
  /// Skip the other estimators (their RR stays NaN) when only `estimator` is needed.
  bool configured_estimator_only = false;
};

/// One candidate respiration signal after estimation and quality scoring.
struct MethodSeries {
  std::string method_id;
  std::string group_tag;
  /// rr[e][w]: RR in bpm for estimator e (kAllEstimators order), NaN when estimation failed.
  std::array<std::vector<double>, 4> rr;
  std::vector<std::optional<QualityVector>> raw;
  std::vector<std::optional<QualityVector>> oriented;
  std::vector<std::optional<QualityVector>> normalized;

  const std::vector<double>& rr_for(Estimator e) const { return rr[static_cast<std::size_t>(e)]; }
};

struct MethodCandidateSet {
  std::string recording_id;
  std::vector<MethodSeries> methods;
  std::vector<double> gt_rr;

  std::size_t windows() const noexcept { return gt_rr.size(); }
  std::optional<std::size_t> method_index(std::string_view id) const;
  /// |rr - gt| for one method, NaN where either side is missing.
  double abs_error(std::size_t method, std::size_t window, Estimator e) const;
};

/// Bandpass, segment, detrend and estimate with every estimator; RAW quality
/// vectors are oriented but not yet normalized.
MethodSeries process_method(const TimeSeries& signal, const PipelineConfig& cfg, std::string group_tag = {});

/// GT RR per window through the candidate chain. Throws GridMismatch when the
/// GT does not cover one window or disagrees with `expected_windows`.
std::vector<double> gt_rr_series(const TimeSeries& gt, const PipelineConfig& cfg,
                                 std::optional<std::size_t> expected_windows = std::nullopt);

struct CandidateInput {
  TimeSeries signal;
  std::string group_tag;
};

/// The GT is resampled to the first candidate's rate before estimation.
MethodCandidateSet build_candidate_set(std::string recording_id, std::span<const CandidateInput> candidates,
                                       const TimeSeries& gt, const PipelineConfig& cfg);

/// Min/max over every valid oriented vector of every set ("dataset" scope).
NormalizationStats fit_dataset_normalization(std::span<const MethodCandidateSet> sets, std::string population_id = {});
void apply_normalization(MethodCandidateSet& set, const NormalizationStats& stats);

/// Keeps the methods whose group tag matches `scenario`; "ALL" keeps everything.
MethodCandidateSet filter_scenario(const MethodCandidateSet& set, std::string_view scenario);

/// Windows of all sets stacked in order; metrics are the normalized vectors.
SelectionProblem selection_problem(std::span<const MethodCandidateSet> sets, Estimator e);

struct BaselineChoice {
  std::string method_id;
  Estimator estimator = Estimator::WELCH;
  double mae_bpm = 0.0;
};

/// Lowest pooled MAE over (method, estimator); ties go to the earlier method,
/// then the earlier estimator.
BaselineChoice baseline_select(std::span<const MethodCandidateSet> train);

/// Predicted absolute error of one (method, window) candidate; NaN = no prediction.
class WindowErrorPredictor {
 public:
  virtual ~WindowErrorPredictor() = default;
  virtual double predict_error(const MethodCandidateSet& set, std::size_t method, std::size_t window) const = 0;
};

/// Predicted best method index for one window.
class WindowMethodClassifier {
 public:
  virtual ~WindowMethodClassifier() = default;
  virtual std::optional<std::size_t> predict_method(const MethodCandidateSet& set, std::size_t window) const = 0;
};

/// Regressor over one candidate's z-scored oriented metrics.
class RegressorPredictor final : public WindowErrorPredictor {
 public:
  RegressorPredictor(StandardScaler scaler, RegressorModel model) : scaler_(std::move(scaler)), model_(std::move(model)) {}
  double predict_error(const MethodCandidateSet& set, std::size_t method, std::size_t window) const override;
  const StandardScaler& scaler() const noexcept { return scaler_; }
  const RegressorModel& model() const noexcept { return model_; }

 private:
  StandardScaler scaler_;
  RegressorModel model_;
};

/// Softmax classifier over every method's z-scored oriented metrics, concatenated
/// in method order. Invalid vectors contribute zeros (the training mean).
class ClassifierPredictor final : public WindowMethodClassifier {
 public:
  ClassifierPredictor(StandardScaler scaler, ClassifierModel model) : scaler_(std::move(scaler)), model_(std::move(model)) {}
  std::optional<std::size_t> predict_method(const MethodCandidateSet& set, std::size_t window) const override;
  const StandardScaler& scaler() const noexcept { return scaler_; }
  const ClassifierModel& model() const noexcept { return model_; }

 private:
  StandardScaler scaler_;
  ClassifierModel model_;
};

struct TrainingTable {
  Eigen::MatrixXd features;
  Eigen::VectorXd targets;
};

/// One row per (window, method) with a valid oriented vector and a finite error.
TrainingTable regressor_table(std::span<const MethodCandidateSet> sets, Estimator e);
StandardScaler fit_quality_scaler(std::span<const MethodCandidateSet> sets);
std::shared_ptr<RegressorPredictor> train_regressor_predictor(std::span<const MethodCandidateSet> sets, Estimator e,
                                                              const TrainConfig& cfg = {});
/// Windows where every method has a finite error; labels are argmin errors.
std::shared_ptr<ClassifierPredictor> train_classifier_predictor(std::span<const MethodCandidateSet> sets, Estimator e,
                                                                const TrainConfig& cfg = {});

enum class FusionKind { BASELINE, FMM, SMM, TRAINSET_SMM, REGRESSOR, CLASSIFIER, ORACLE_GT_MAE, ORACLE_GT_SMM };

std::string_view to_string(FusionKind k) noexcept;

struct FusionStrategy {
  FusionKind kind = FusionKind::FMM;
  std::optional<MetricMask> mask;
  std::optional<BaselineChoice> baseline;
  std::shared_ptr<const WindowErrorPredictor> regressor;
  std::shared_ptr<const WindowMethodClassifier> classifier;
  /// Report label; defaults to the kind name.
  std::string label;

  std::string name() const { return label.empty() ? std::string(to_string(kind)) : label; }
};

struct TraceRow {
  std::size_t window_index = 0;
  std::vector<double> candidate_rr;
  /// Selection score per candidate (composite, predicted or true error); NaN = invalid.
  std::vector<double> scores;
  std::optional<std::size_t> chosen;
  double fused_rr = 0.0;
  double gt_rr = 0.0;
  double abs_error = 0.0;
  /// FMM composite and predicted error of the chosen candidate, when available.
  double fmm_score = 0.0;
  double predicted_error = 0.0;

  /// Chosen, with finite RR and GT.
  bool counted() const;
};

struct FusionTrace {
  std::string strategy;
  std::string recording_id;
  std::vector<std::string> method_ids;
  std::vector<TraceRow> rows;
};

/// `regressor_for_scores` is only used to fill TraceRow::predicted_error.
FusionTrace fuse(const MethodCandidateSet& set, const FusionStrategy& strategy, Estimator estimator,
                 const WindowErrorPredictor* regressor_for_scores = nullptr);

/// Indices (ascending) kept after dropping the ceil(q n) highest scores; ties
/// drop the higher index first. Throws FractionOutOfRange.
std::vector<std::size_t> filter_segments(std::span<const double> badness, double q);

struct EvalReport {
  double mae_bpm = 0.0;
  double pcc = 0.0;
  bool pcc_defined = false;
  std::size_t window_count = 0;
  double coverage = 1.0;
};

/// Throws EmptySeries.
EvalReport evaluate(std::span<const double> est, std::span<const double> gt);

/// Pools counted windows of all traces; coverage = counted / total windows.
EvalReport evaluate_traces(std::span<const FusionTrace> traces);

enum class FilterScore { FMM, REGRESSOR, GT };
std::string_view to_string(FilterScore s) noexcept;

struct FilterPoint {
  double q = 0.0;
  EvalReport report;
};

inline constexpr std::array<double, 6> kFilterGrid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};

/// Drops windows pooled over all traces by the given badness score. Windows
/// that are not counted, or have no score, are removed first and reduce coverage.
std::vector<FilterPoint> filter_sweep(std::span<const FusionTrace> traces, FilterScore score,
                                      std::span<const double> grid = kFilterGrid);

struct SweepReport {
  std::vector<std::string> method_ids;
  /// cells[m][e], estimators in kAllEstimators order.
  std::vector<std::array<EvalReport, 4>> cells;
  std::size_t best_method = 0;
  Estimator best_estimator = Estimator::FFT;
};

/// Per (method, estimator) accuracy pooled over sets; methods matched by id
/// in first-seen order. Best = lowest MAE, ties to the earlier cell.
SweepReport sweep_report(std::span<const MethodCandidateSet> sets);

/// Worker count: RESPQ_THREADS when set and positive, else hardware concurrency.
std::size_t worker_count();
/// Runs fn(i) for i in [0, n); results must be written by index.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace respq
