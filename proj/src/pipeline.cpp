#include "respq/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <thread>

#include "respq/error.hpp"

namespace respq {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_same_methods(std::span<const MethodCandidateSet> sets) {
  if (sets.empty()) throw Error(ErrorCode::InsufficientData, "no candidate sets");
  for (const auto& s : sets) {
    if (s.methods.size() != sets.front().methods.size()) throw Error(ErrorCode::ShapeMismatch, "candidate sets differ in method count");
    for (std::size_t m = 0; m < s.methods.size(); ++m)
      if (s.methods[m].method_id != sets.front().methods[m].method_id)
        throw Error(ErrorCode::ShapeMismatch, "candidate sets differ in method order at '" + s.methods[m].method_id + "'");
  }
}

Eigen::RowVectorXd oriented_row(const QualityVector& q) {
  Eigen::RowVectorXd r(static_cast<Eigen::Index>(kMetricCount));
  for (std::size_t i = 0; i < kMetricCount; ++i) r(static_cast<Eigen::Index>(i)) = q.values[i];
  return r;
}

Eigen::RowVectorXd classifier_row(const MethodCandidateSet& set, std::size_t w, const StandardScaler& scaler) {
  const auto k = static_cast<Eigen::Index>(kMetricCount);
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(k * static_cast<Eigen::Index>(set.methods.size()));
  for (std::size_t m = 0; m < set.methods.size(); ++m) {
    const auto& q = set.methods[m].oriented[w];
    if (!q) continue;
    row.segment(static_cast<Eigen::Index>(m) * k, k) = scaler.transform(oriented_row(*q));
  }
  return row;
}

double pearson_or_nan(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return kNaN;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace

std::optional<std::size_t> MethodCandidateSet::method_index(std::string_view id) const {
  for (std::size_t m = 0; m < methods.size(); ++m)
    if (methods[m].method_id == id) return m;
  return std::nullopt;
}

double MethodCandidateSet::abs_error(std::size_t method, std::size_t window, Estimator e) const {
  const double rr = methods[method].rr_for(e)[window];
  const double gt = gt_rr[window];
  if (!std::isfinite(rr) || !std::isfinite(gt)) return kNaN;
  return std::abs(rr - gt);
}

MethodSeries process_method(const TimeSeries& signal, const PipelineConfig& cfg, std::string group_tag) {
  const auto filtered = bandpass(signal, cfg.band);
  const auto segments = segment(filtered, cfg.windowing);
  MethodSeries out;
  out.method_id = signal.id();
  out.group_tag = std::move(group_tag);
  for (auto& r : out.rr) r.assign(segments.size(), kNaN);
  out.raw.assign(segments.size(), std::nullopt);
  out.oriented.assign(segments.size(), std::nullopt);
  out.normalized.assign(segments.size(), std::nullopt);
  parallel_for(segments.size(), [&](std::size_t w) {
    const Segment seg = detrend(segments[w]);
    for (std::size_t e = 0; e < std::size(kAllEstimators); ++e) {
      if (cfg.configured_estimator_only && kAllEstimators[e] != cfg.estimator) continue;
      try {
        out.rr[e][w] = estimate_rr(seg, kAllEstimators[e], cfg.estimators, cfg.band).rr_bpm;
      } catch (const Error&) {
      }
    }
    try {
      out.raw[w] = compute_quality_vector(seg, cfg.band, cfg.quality);
      out.oriented[w] = orient(*out.raw[w]);
    } catch (const Error&) {
    }
  });
  return out;
}

std::vector<double> gt_rr_series(const TimeSeries& gt, const PipelineConfig& cfg, std::optional<std::size_t> expected_windows) {
  cfg.windowing.validate();
  if (gt.size() < cfg.windowing.window_samples(gt.sample_rate_hz())) {
    throw Error(ErrorCode::GridMismatch, "ground truth covers " + std::to_string(gt.duration_s()) + " s, shorter than one window");
  }
  const auto segments = segment(bandpass(gt, cfg.band), cfg.windowing);
  if (expected_windows && segments.size() != *expected_windows) {
    throw Error(ErrorCode::GridMismatch, "ground truth has " + std::to_string(segments.size()) + " windows, candidates have " +
                                             std::to_string(*expected_windows));
  }
  std::vector<double> out(segments.size(), kNaN);
  parallel_for(segments.size(), [&](std::size_t w) {
    try {
      out[w] = estimate_rr(detrend(segments[w]), cfg.estimator, cfg.estimators, cfg.band).rr_bpm;
    } catch (const Error&) {
    }
  });
  return out;
}

MethodCandidateSet build_candidate_set(std::string recording_id, std::span<const CandidateInput> candidates, const TimeSeries& gt,
                                       const PipelineConfig& cfg) {
  if (candidates.empty()) throw Error(ErrorCode::InsufficientData, "recording '" + recording_id + "' has no candidate signals");
  MethodCandidateSet set;
  set.recording_id = std::move(recording_id);
  for (const auto& c : candidates) {
    set.methods.push_back(process_method(c.signal, cfg, c.group_tag));
    if (set.methods.back().oriented.size() != set.methods.front().oriented.size()) {
      throw Error(ErrorCode::GridMismatch, "method '" + c.signal.id() + "' has a different window count");
    }
  }
  const double rate = candidates.front().signal.sample_rate_hz();
  const TimeSeries aligned = gt.sample_rate_hz() == rate ? gt : resample(gt, rate, {.anti_alias = gt.sample_rate_hz() > rate});
  set.gt_rr = gt_rr_series(aligned, cfg, set.methods.front().oriented.size());
  return set;
}

NormalizationStats fit_dataset_normalization(std::span<const MethodCandidateSet> sets, std::string population_id) {
  std::vector<QualityVector> population;
  for (const auto& s : sets)
    for (const auto& m : s.methods)
      for (const auto& q : m.oriented)
        if (q) population.push_back(*q);
  return fit_normalization(population, std::move(population_id));
}

void apply_normalization(MethodCandidateSet& set, const NormalizationStats& stats) {
  for (auto& m : set.methods)
    for (std::size_t w = 0; w < m.oriented.size(); ++w)
      m.normalized[w] = m.oriented[w] ? std::optional(normalize(*m.oriented[w], stats)) : std::nullopt;
}

MethodCandidateSet filter_scenario(const MethodCandidateSet& set, std::string_view scenario) {
  if (scenario == "ALL") return set;
  MethodCandidateSet out;
  out.recording_id = set.recording_id;
  out.gt_rr = set.gt_rr;
  for (const auto& m : set.methods)
    if (m.group_tag == scenario) out.methods.push_back(m);
  if (out.methods.empty()) {
    throw Error(ErrorCode::InsufficientData, "recording '" + set.recording_id + "' has no methods in scenario " + std::string(scenario));
  }
  return out;
}

SelectionProblem selection_problem(std::span<const MethodCandidateSet> sets, Estimator e) {
  require_same_methods(sets);
  std::size_t windows = 0;
  for (const auto& s : sets) windows += s.windows();
  SelectionProblem p(windows, sets.front().methods.size(), kMetricCount);
  std::size_t row = 0;
  for (const auto& s : sets) {
    for (std::size_t w = 0; w < s.windows(); ++w, ++row) {
      for (std::size_t m = 0; m < s.methods.size(); ++m) {
        p.set_error(row, m, s.abs_error(m, w, e));
        const auto& q = s.methods[m].normalized[w];
        if (q) p.set_metrics(row, m, q->values);
      }
    }
  }
  return p;
}

SweepReport sweep_report(std::span<const MethodCandidateSet> sets) {
  SweepReport r;
  for (const auto& s : sets)
    for (const auto& m : s.methods)
      if (std::find(r.method_ids.begin(), r.method_ids.end(), m.method_id) == r.method_ids.end()) r.method_ids.push_back(m.method_id);
  r.cells.resize(r.method_ids.size());
  double best = std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t mi = 0; mi < r.method_ids.size(); ++mi) {
    for (std::size_t e = 0; e < std::size(kAllEstimators); ++e) {
      std::vector<double> est, gt;
      for (const auto& s : sets) {
        const auto m = s.method_index(r.method_ids[mi]);
        if (!m) continue;
        for (std::size_t w = 0; w < s.windows(); ++w) {
          if (std::isnan(s.abs_error(*m, w, kAllEstimators[e]))) continue;
          est.push_back(s.methods[*m].rr[e][w]);
          gt.push_back(s.gt_rr[w]);
        }
      }
      EvalReport& cell = r.cells[mi][e];
      if (est.empty()) {
        cell.mae_bpm = std::numeric_limits<double>::infinity();
        cell.coverage = 0.0;
        continue;
      }
      cell = evaluate(est, gt);
      if (cell.mae_bpm < best) {
        best = cell.mae_bpm;
        r.best_method = mi;
        r.best_estimator = kAllEstimators[e];
        found = true;
      }
    }
  }
  if (!found && !r.method_ids.empty()) r.best_estimator = kAllEstimators[0];
  return r;
}

BaselineChoice baseline_select(std::span<const MethodCandidateSet> train) {
  const auto sweep = sweep_report(train);
  const auto& cell = sweep.method_ids.empty() ? EvalReport{} : sweep.cells[sweep.best_method][static_cast<std::size_t>(sweep.best_estimator)];
  if (sweep.method_ids.empty() || cell.window_count == 0) {
    throw Error(ErrorCode::InsufficientData, "no (method, estimator) pair has a window with both estimate and ground truth");
  }
  return {sweep.method_ids[sweep.best_method], sweep.best_estimator, cell.mae_bpm};
}

double RegressorPredictor::predict_error(const MethodCandidateSet& set, std::size_t method, std::size_t window) const {
  const auto& q = set.methods[method].oriented[window];
  if (!q) return kNaN;
  return predict_mae(model_, scaler_.transform(oriented_row(*q)))(0);
}

std::optional<std::size_t> ClassifierPredictor::predict_method(const MethodCandidateSet& set, std::size_t window) const {
  if (static_cast<int>(set.methods.size()) != model_.classes()) {
    throw Error(ErrorCode::ShapeMismatch, "classifier trained for " + std::to_string(model_.classes()) + " methods, set has " +
                                              std::to_string(set.methods.size()));
  }
  return static_cast<std::size_t>(predict_best_method(model_, classifier_row(set, window, scaler_)).front());
}

StandardScaler fit_quality_scaler(std::span<const MethodCandidateSet> sets) {
  std::vector<Eigen::RowVectorXd> rows;
  for (const auto& s : sets)
    for (const auto& m : s.methods)
      for (const auto& q : m.oriented)
        if (q) rows.push_back(oriented_row(*q));
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(kMetricCount));
  for (std::size_t i = 0; i < rows.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = rows[i];
  return fit_scaler(x);
}

TrainingTable regressor_table(std::span<const MethodCandidateSet> sets, Estimator e) {
  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> targets;
  for (const auto& s : sets)
    for (std::size_t w = 0; w < s.windows(); ++w)
      for (std::size_t m = 0; m < s.methods.size(); ++m) {
        const auto& q = s.methods[m].oriented[w];
        const double err = s.abs_error(m, w, e);
        if (!q || std::isnan(err)) continue;
        rows.push_back(oriented_row(*q));
        targets.push_back(err);
      }
  TrainingTable t;
  t.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(kMetricCount));
  t.targets.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    t.features.row(static_cast<Eigen::Index>(i)) = rows[i];
    t.targets(static_cast<Eigen::Index>(i)) = targets[i];
  }
  return t;
}

std::shared_ptr<RegressorPredictor> train_regressor_predictor(std::span<const MethodCandidateSet> sets, Estimator e,
                                                              const TrainConfig& cfg) {
  auto scaler = fit_quality_scaler(sets);
  const auto table = regressor_table(sets, e);
  auto model = train_regressor(scaler.transform(table.features), table.targets, cfg);
  return std::make_shared<RegressorPredictor>(std::move(scaler), std::move(model));
}

std::shared_ptr<ClassifierPredictor> train_classifier_predictor(std::span<const MethodCandidateSet> sets, Estimator e,
                                                                const TrainConfig& cfg) {
  require_same_methods(sets);
  auto scaler = fit_quality_scaler(sets);
  const std::size_t methods = sets.front().methods.size();
  std::vector<Eigen::RowVectorXd> rows;
  std::vector<Eigen::RowVectorXd> errors;
  for (const auto& s : sets)
    for (std::size_t w = 0; w < s.windows(); ++w) {
      Eigen::RowVectorXd err(static_cast<Eigen::Index>(methods));
      bool complete = true;
      for (std::size_t m = 0; m < methods; ++m) {
        err(static_cast<Eigen::Index>(m)) = s.abs_error(m, w, e);
        complete = complete && !std::isnan(err(static_cast<Eigen::Index>(m)));
      }
      if (!complete) continue;
      rows.push_back(classifier_row(s, w, scaler));
      errors.push_back(err);
    }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(methods * kMetricCount));
  Eigen::MatrixXd err(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(methods));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = rows[i];
    err.row(static_cast<Eigen::Index>(i)) = errors[i];
  }
  const auto labels = argmin_labels(err);
  auto model = train_classifier(x, labels, static_cast<int>(methods), cfg);
  return std::make_shared<ClassifierPredictor>(std::move(scaler), std::move(model));
}

std::string_view to_string(FusionKind k) noexcept {
  switch (k) {
    case FusionKind::BASELINE: return "Baseline";
    case FusionKind::FMM: return "FMM";
    case FusionKind::SMM: return "SMM";
    case FusionKind::TRAINSET_SMM: return "Trainset-SMM";
    case FusionKind::REGRESSOR: return "Regressor";
    case FusionKind::CLASSIFIER: return "Classifier";
    case FusionKind::ORACLE_GT_MAE: return "GT-MAE";
    case FusionKind::ORACLE_GT_SMM: return "GT-SMM";
  }
  return "?";
}

bool TraceRow::counted() const { return chosen.has_value() && std::isfinite(fused_rr) && std::isfinite(gt_rr); }

FusionTrace fuse(const MethodCandidateSet& set, const FusionStrategy& strategy, Estimator estimator,
                 const WindowErrorPredictor* regressor_for_scores) {
  const bool masked = strategy.kind == FusionKind::SMM || strategy.kind == FusionKind::TRAINSET_SMM ||
                      strategy.kind == FusionKind::ORACLE_GT_SMM;
  if (masked && !strategy.mask) throw Error(ErrorCode::MissingMask, strategy.name() + " needs a metric mask");
  if (strategy.kind == FusionKind::REGRESSOR && !strategy.regressor) throw Error(ErrorCode::MissingModel, "regressor fusion needs a model");
  if (strategy.kind == FusionKind::CLASSIFIER && !strategy.classifier) throw Error(ErrorCode::MissingModel, "classifier fusion needs a model");
  if (strategy.kind == FusionKind::BASELINE && !strategy.baseline) throw Error(ErrorCode::MissingModel, "baseline fusion needs a baseline choice");
  if (strategy.kind == FusionKind::REGRESSOR && !regressor_for_scores) regressor_for_scores = strategy.regressor.get();

  std::optional<std::size_t> baseline_method;
  Estimator rr_estimator = estimator;
  if (strategy.kind == FusionKind::BASELINE) {
    baseline_method = set.method_index(strategy.baseline->method_id);
    if (!baseline_method) throw Error(ErrorCode::MissingInput, "baseline method '" + strategy.baseline->method_id + "' not in recording");
    rr_estimator = strategy.baseline->estimator;
  }

  FusionTrace trace;
  trace.strategy = strategy.name();
  trace.recording_id = set.recording_id;
  for (const auto& m : set.methods) trace.method_ids.push_back(m.method_id);
  const std::size_t methods = set.methods.size();
  for (std::size_t w = 0; w < set.windows(); ++w) {
    TraceRow row;
    row.window_index = w;
    row.gt_rr = set.gt_rr[w];
    row.candidate_rr.resize(methods);
    row.scores.assign(methods, kNaN);
    for (std::size_t m = 0; m < methods; ++m) row.candidate_rr[m] = set.methods[m].rr_for(rr_estimator)[w];
    for (std::size_t m = 0; m < methods; ++m) {
      const auto& q = set.methods[m].normalized[w];
      switch (strategy.kind) {
        case FusionKind::FMM:
          if (q) row.scores[m] = fmm(*q);
          break;
        case FusionKind::SMM:
        case FusionKind::TRAINSET_SMM:
        case FusionKind::ORACLE_GT_SMM:
          if (q) row.scores[m] = smm(*q, *strategy.mask);
          break;
        case FusionKind::REGRESSOR: row.scores[m] = strategy.regressor->predict_error(set, m, w); break;
        case FusionKind::ORACLE_GT_MAE: row.scores[m] = set.abs_error(m, w, estimator); break;
        case FusionKind::BASELINE:
        case FusionKind::CLASSIFIER: break;
      }
    }
    if (strategy.kind == FusionKind::BASELINE) {
      row.chosen = baseline_method;
    } else if (strategy.kind == FusionKind::CLASSIFIER) {
      row.chosen = strategy.classifier->predict_method(set, w);
    } else {
      row.chosen = try_select_by_score(row.scores);
    }
    row.fused_rr = row.chosen ? row.candidate_rr[*row.chosen] : kNaN;
    row.abs_error = std::abs(row.fused_rr - row.gt_rr);
    row.fmm_score = kNaN;
    row.predicted_error = kNaN;
    if (row.chosen) {
      if (const auto& q = set.methods[*row.chosen].normalized[w]) row.fmm_score = fmm(*q);
      if (regressor_for_scores) row.predicted_error = regressor_for_scores->predict_error(set, *row.chosen, w);
    }
    trace.rows.push_back(std::move(row));
  }
  return trace;
}

std::vector<std::size_t> filter_segments(std::span<const double> badness, double q) {
  if (!(q >= 0.0 && q <= 0.5)) throw Error(ErrorCode::FractionOutOfRange, "filter fraction must lie in [0, 0.5]");
  for (double b : badness)
    if (!std::isfinite(b)) throw Error(ErrorCode::InvalidArgument, "filter scores must be finite");
  const std::size_t n = badness.size();
  const auto drop = static_cast<std::size_t>(std::max(0.0, std::ceil(q * static_cast<double>(n) - 1e-9)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (badness[a] != badness[b]) return badness[a] > badness[b];
    return a > b;
  });
  std::vector<std::size_t> kept(order.begin() + static_cast<std::ptrdiff_t>(std::min(drop, n)), order.end());
  std::sort(kept.begin(), kept.end());
  return kept;
}

EvalReport evaluate(std::span<const double> est, std::span<const double> gt) {
  if (est.size() != gt.size()) throw Error(ErrorCode::ShapeMismatch, "estimate and ground truth differ in length");
  if (est.empty()) throw Error(ErrorCode::EmptySeries, "no windows to evaluate");
  EvalReport r;
  double total = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) total += std::abs(est[i] - gt[i]);
  r.mae_bpm = total / static_cast<double>(est.size());
  const double pcc = pearson_or_nan(est, gt);
  r.pcc_defined = !std::isnan(pcc);
  r.pcc = r.pcc_defined ? pcc : 0.0;
  r.window_count = est.size();
  return r;
}

EvalReport evaluate_traces(std::span<const FusionTrace> traces) {
  std::vector<double> est, gt;
  std::size_t total = 0;
  for (const auto& t : traces)
    for (const auto& row : t.rows) {
      ++total;
      if (!row.counted()) continue;
      est.push_back(row.fused_rr);
      gt.push_back(row.gt_rr);
    }
  auto r = evaluate(est, gt);
  r.coverage = static_cast<double>(est.size()) / static_cast<double>(total);
  return r;
}

std::string_view to_string(FilterScore s) noexcept {
  switch (s) {
    case FilterScore::FMM: return "FMM";
    case FilterScore::REGRESSOR: return "Regressor";
    case FilterScore::GT: return "GT";
  }
  return "?";
}

std::vector<FilterPoint> filter_sweep(std::span<const FusionTrace> traces, FilterScore score, std::span<const double> grid) {
  std::vector<const TraceRow*> rows;
  for (const auto& t : traces)
    for (const auto& r : t.rows) rows.push_back(&r);
  std::vector<double> badness(rows.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const TraceRow& r = *rows[i];
    double b = kNaN;
    if (r.counted()) {
      switch (score) {
        case FilterScore::FMM: b = r.fmm_score; break;
        case FilterScore::REGRESSOR: b = r.predicted_error; break;
        case FilterScore::GT: b = r.abs_error; break;
      }
    }
    badness[i] = b;
    if (std::isfinite(b)) worst = std::max(worst, std::abs(b));
  }
  // Unusable windows rank above every real score so they are dropped first.
  for (double& b : badness)
    if (!std::isfinite(b)) b = 2.0 * worst + 1.0;
  std::vector<FilterPoint> out;
  for (double q : grid) {
    const auto kept = filter_segments(badness, q);
    std::vector<double> est, gt;
    for (std::size_t i : kept) {
      if (!rows[i]->counted()) continue;
      est.push_back(rows[i]->fused_rr);
      gt.push_back(rows[i]->gt_rr);
    }
    FilterPoint p{q, evaluate(est, gt)};
    p.report.coverage = static_cast<double>(est.size()) / static_cast<double>(rows.size());
    out.push_back(p);
  }
  return out;
}

std::size_t worker_count() {
  if (const char* env = std::getenv("RESPQ_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

namespace {
thread_local bool t_inside_pool = false;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  // Nested calls run inline so the outer pool alone bounds the thread count.
  const std::size_t workers = t_inside_pool ? 1 : std::min(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      t_inside_pool = true;
      for (std::size_t i = next++; i < n && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace respq
