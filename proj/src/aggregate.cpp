#include "respq/aggregate.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "respq/error.hpp"

namespace respq {

MetricMask MetricMask::all(std::size_t arity) { return {static_cast<std::uint32_t>((1u << arity) - 1u), arity}; }

MetricMask MetricMask::of(std::initializer_list<std::size_t> indices, std::size_t arity) {
  MetricMask m{0, arity};
  for (std::size_t i : indices) m.bits |= 1u << i;
  return m;
}

std::size_t MetricMask::popcount() const noexcept { return static_cast<std::size_t>(std::popcount(bits)); }

std::vector<std::size_t> MetricMask::indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < arity; ++i)
    if (includes(i)) out.push_back(i);
  return out;
}

std::string MetricMask::names() const {
  std::string out;
  for (std::size_t i : indices()) {
    if (!out.empty()) out += ", ";
    out += arity == kMetricCount ? std::string(metric_name(i)) : "m" + std::to_string(i);
  }
  return out;
}

bool mask_precedes(const MetricMask& a, const MetricMask& b) {
  if (a.popcount() != b.popcount()) return a.popcount() < b.popcount();
  const auto ia = a.indices();
  const auto ib = b.indices();
  return std::lexicographical_compare(ia.begin(), ia.end(), ib.begin(), ib.end());
}

std::vector<MetricMask> enumerate_masks(std::size_t arity, std::size_t min_popcount) {
  std::vector<MetricMask> out;
  for (std::uint32_t bits = 1; bits < (1u << arity); ++bits) {
    MetricMask m{bits, arity};
    if (m.popcount() >= min_popcount) out.push_back(m);
  }
  std::sort(out.begin(), out.end(), mask_precedes);
  return out;
}

double fmm(const QualityVector& qv) { return smm(qv, MetricMask::all()); }

double smm(const QualityVector& qv, const MetricMask& mask) {
  if (qv.stage != QualityStage::NORMALIZED) throw Error(ErrorCode::WrongStage, "composite scores need normalized vectors");
  if (mask.popcount() == 0) throw Error(ErrorCode::EmptyMask, "metric mask selects nothing");
  if (mask.arity != kMetricCount) throw Error(ErrorCode::ArityMismatch, "mask arity differs from quality vector");
  double acc = 0.0;
  for (std::size_t i : mask.indices()) acc += qv.values[i];
  return acc / static_cast<double>(mask.popcount());
}

std::optional<std::size_t> try_select_by_score(std::span<const double> scores) noexcept {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) continue;
    if (!best || scores[i] < scores[*best]) best = i;
  }
  return best;
}

std::size_t select_by_score(std::span<const double> scores) {
  if (auto idx = try_select_by_score(scores)) return *idx;
  throw Error(ErrorCode::NoValidCandidates, "no candidate has a valid score");
}

SelectionProblem::SelectionProblem(std::size_t windows, std::size_t methods, std::size_t metrics)
    : windows_(windows),
      methods_(methods),
      metrics_(metrics),
      values_(windows * methods * metrics, std::numeric_limits<double>::quiet_NaN()),
      errors_(windows * methods, std::numeric_limits<double>::quiet_NaN()),
      valid_(windows * methods, false) {
  if (metrics == 0 || metrics > 31) throw Error(ErrorCode::InvalidArgument, "metric count must be in 1..31");
}

void SelectionProblem::set_metrics(std::size_t w, std::size_t m, std::span<const double> values) {
  if (values.size() != metrics_) throw Error(ErrorCode::ArityMismatch, "metric vector has wrong length");
  std::copy(values.begin(), values.end(), values_.begin() + static_cast<std::ptrdiff_t>((w * methods_ + m) * metrics_));
  valid_[w * methods_ + m] = true;
}

void SelectionProblem::set_invalid(std::size_t w, std::size_t m) { valid_[w * methods_ + m] = false; }

void SelectionProblem::set_error(std::size_t w, std::size_t m, double abs_error_bpm) { errors_[w * methods_ + m] = abs_error_bpm; }

double SelectionProblem::score(std::size_t w, std::size_t m, const MetricMask& mask) const {
  if (!valid(w, m)) return std::numeric_limits<double>::quiet_NaN();
  double acc = 0.0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < metrics_; ++k) {
    if (!mask.includes(k)) continue;
    acc += metric(w, m, k);
    ++used;
  }
  return acc / static_cast<double>(used);
}

double selection_mae(const SelectionProblem& problem, const MetricMask& mask) {
  if (mask.arity != problem.metrics()) throw Error(ErrorCode::ArityMismatch, "mask arity differs from problem metrics");
  if (mask.popcount() == 0) throw Error(ErrorCode::EmptyMask, "metric mask selects nothing");
  std::vector<double> scores(problem.methods());
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t w = 0; w < problem.windows(); ++w) {
    for (std::size_t m = 0; m < problem.methods(); ++m) scores[m] = problem.score(w, m, mask);
    const auto pick = try_select_by_score(scores);
    if (!pick) continue;
    const double err = problem.error(w, *pick);
    if (!std::isfinite(err)) continue;
    total += err;
    ++counted;
  }
  return counted ? total / static_cast<double>(counted) : std::numeric_limits<double>::infinity();
}

SubsetResult subset_search(const SelectionProblem& problem, std::string source_population) {
  if (problem.windows() < 1 || problem.methods() < 2 || problem.metrics() < 2) {
    throw Error(ErrorCode::InsufficientData, "subset search needs >= 1 window, >= 2 methods and >= 2 metrics");
  }
  SubsetResult best;
  best.source_population = std::move(source_population);
  best.mae_bpm = std::numeric_limits<double>::infinity();
  bool have = false;
  // Masks arrive in tie-break order, so only a strictly lower MAE replaces.
  for (const MetricMask& mask : enumerate_masks(problem.metrics(), 2)) {
    const double mae = selection_mae(problem, mask);
    if (!have || mae < best.mae_bpm) {
      best.mask = mask;
      best.mae_bpm = mae;
      have = true;
    }
  }
  return best;
}

double transfer_subset(const SubsetResult& result, const SelectionProblem& target) {
  if (result.mask.arity != target.metrics()) {
    throw Error(ErrorCode::ArityMismatch, "mask covers " + std::to_string(result.mask.arity) + " metrics, target has " +
                                              std::to_string(target.metrics()));
  }
  return selection_mae(target, result.mask);
}

}  // namespace respq
