#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "respq/sqi.hpp"

namespace respq {

/// Bit i set means metric i participates. `arity` is the number of metrics
/// the mask ranges over (10 for full quality vectors).
struct MetricMask {
  std::uint32_t bits = 0;
  std::size_t arity = kMetricCount;

  static MetricMask all(std::size_t arity = kMetricCount);
  static MetricMask of(std::initializer_list<std::size_t> indices, std::size_t arity = kMetricCount);

  bool includes(std::size_t i) const noexcept { return (bits >> i) & 1u; }
  std::size_t popcount() const noexcept;
  std::vector<std::size_t> indices() const;
  /// "Hjorth-M, BPR, PI" for full-arity masks, "m0, m2" otherwise.
  std::string names() const;

  friend bool operator==(const MetricMask&, const MetricMask&) = default;
};

/// Search order: fewer metrics first, then lexicographic on the ascending
/// index list ({0,1} < {0,2} < {1,2}).
bool mask_precedes(const MetricMask& a, const MetricMask& b);

/// All masks of popcount >= min_popcount, in search order.
std::vector<MetricMask> enumerate_masks(std::size_t arity, std::size_t min_popcount = 2);

double fmm(const QualityVector& qv);
double smm(const QualityVector& qv, const MetricMask& mask);

/// Argmin over finite scores (NaN marks an invalid candidate); ties go to the
/// lowest index. Throws NoValidCandidates.
std::size_t select_by_score(std::span<const double> scores);
std::optional<std::size_t> try_select_by_score(std::span<const double> scores) noexcept;

/// Per-(window, method) metric values and absolute RR errors. Invalid quality
/// vectors and missing errors are stored as NaN.
class SelectionProblem {
 public:
  SelectionProblem(std::size_t windows, std::size_t methods, std::size_t metrics);

  std::size_t windows() const noexcept { return windows_; }
  std::size_t methods() const noexcept { return methods_; }
  std::size_t metrics() const noexcept { return metrics_; }

  void set_metrics(std::size_t w, std::size_t m, std::span<const double> values);
  void set_invalid(std::size_t w, std::size_t m);
  void set_error(std::size_t w, std::size_t m, double abs_error_bpm);

  double metric(std::size_t w, std::size_t m, std::size_t k) const { return values_[(w * methods_ + m) * metrics_ + k]; }
  double error(std::size_t w, std::size_t m) const { return errors_[w * methods_ + m]; }
  bool valid(std::size_t w, std::size_t m) const { return valid_[w * methods_ + m]; }

  /// Mean of the masked metrics, NaN for invalid entries.
  double score(std::size_t w, std::size_t m, const MetricMask& mask) const;

 private:
  std::size_t windows_, methods_, metrics_;
  std::vector<double> values_;
  std::vector<double> errors_;
  std::vector<bool> valid_;
};

struct SubsetResult {
  MetricMask mask;
  double mae_bpm = 0.0;
  std::string source_population;
};

/// MAE of per-window score selection under `mask`. Windows without a valid
/// candidate, or whose selected method has no error, are skipped; returns
/// +inf when nothing is left.
double selection_mae(const SelectionProblem& problem, const MetricMask& mask);

/// Exhaustive search over every mask with two or more metrics.
SubsetResult subset_search(const SelectionProblem& problem, std::string source_population = {});

/// Applies a frozen mask to another population.
double transfer_subset(const SubsetResult& result, const SelectionProblem& target);

}  // namespace respq
