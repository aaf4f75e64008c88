#include "cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "respq/error.hpp"
#include "respq/io.hpp"
#include "respq/synth.hpp"
#include "respq/text.hpp"

namespace respq {

namespace {

namespace fs = std::filesystem;

struct Common {
  std::string config;
  std::string in = ".";
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> scenarios{"ALL"};

  RunConfig run_config() const {
    RunConfig cfg = config.empty() ? RunConfig{} : load_run_config(config);
    if (seed) cfg.seed = *seed;
    return cfg;
  }
  fs::path in_dir() const { return in; }
  fs::path out_dir() const { return out.empty() ? fs::path(in) : fs::path(out); }
};

void add_common(CLI::App& cmd, Common& c, bool with_input = true, bool with_scenario = true) {
  cmd.add_option("--config", c.config, "key = value run configuration");
  if (with_input) cmd.add_option("--in", c.in, "input directory")->capture_default_str();
  cmd.add_option("--out", c.out, "output directory (defaults to --in)");
  cmd.add_option("--seed", c.seed, "overrides the configured seed");
  if (with_scenario) {
    cmd.add_option("--scenario", c.scenarios, "method group: ALL, NLM or DLM (repeatable)")
        ->check(CLI::IsMember({"ALL", "NLM", "DLM", "MOTION"}))
        ->capture_default_str();
  }
}

void write(std::ostream& log, const fs::path& path, std::string_view content) {
  write_file_atomic(path, content);
  log << "wrote " << path.generic_string() << "\n";
}

std::string padded(std::size_t i) {
  std::string s = std::to_string(i);
  return std::string(s.size() < 3 ? 3 - s.size() : 0, '0') + s;
}

std::vector<StreamMeta> load_meta(const fs::path& dir) { return parse_meta(read_file(dir / "meta.csv")); }

std::vector<MethodCandidateSet> load_sets(const fs::path& dir, const RunConfig& cfg, bool with_quality = true) {
  const auto meta = load_meta(dir);
  const auto rr = parse_rr(read_file(dir / "rr.csv"));
  const auto quality = with_quality ? parse_quality(read_file(dir / "quality.csv")) : std::vector<QualityRow>{};
  return assemble_sets(meta, rr, quality, cfg.estimator);
}

std::vector<MethodCandidateSet> in_scenario(std::span<const MethodCandidateSet> sets, std::string_view scenario) {
  std::vector<MethodCandidateSet> out;
  for (const auto& s : sets) out.push_back(filter_scenario(s, scenario));
  return out;
}

template <typename Row>
const Row& row_for(std::span<const Row> rows, std::string_view scenario, const fs::path& source) {
  for (const auto& r : rows)
    if (r.scenario == scenario) return r;
  throw Error(ErrorCode::MissingInput, source.generic_string() + " has no row for scenario " + std::string(scenario));
}

template <typename T, typename Reader>
T read_model(const fs::path& path, Reader reader) {
  std::istringstream is(read_file(path));
  return reader(is);
}

template <typename Writer, typename T>
std::string model_text(Writer writer, const T& value) {
  std::ostringstream os;
  writer(os, value);
  return os.str();
}

// Commands.

void cmd_synth(const Common& c, const std::string& preset, std::size_t recordings, std::ostream& log) {
  const RunConfig cfg = c.run_config();
  std::vector<Stream> streams;
  std::vector<StreamMeta> meta;
  for (std::size_t r = 0; r < recordings; ++r) {
    const auto b = make_benchmark(preset, mix_seed(cfg.seed, r), "rec" + padded(r));
    const auto gt = b.gt.samples();
    streams.push_back({b.recording_id, "GT", {gt.begin(), gt.end()}});
    meta.push_back({b.recording_id, b.gt.sample_rate_hz(), "GT", "GT"});
    for (std::size_t m = 0; m < b.candidates.size(); ++m) {
      const auto& x = b.candidates[m];
      streams.push_back({b.recording_id, x.id(), {x.samples().begin(), x.samples().end()}});
      meta.push_back({b.recording_id, x.sample_rate_hz(), b.group_tags[m], x.id()});
    }
  }
  write(log, c.out_dir() / "signals.csv", render_signals(streams));
  write(log, c.out_dir() / "meta.csv", render_meta(meta));
}

std::vector<MethodCandidateSet> process_inputs(const Common& c, const RunConfig& cfg,
                                               const std::optional<NormalizationStats>& frozen = std::nullopt) {
  const auto streams = parse_signals(read_file(c.in_dir() / "signals.csv"));
  const auto recordings = assemble_recordings(streams, load_meta(c.in_dir()));
  return process_recordings(recordings, cfg, frozen);
}

void cmd_estimate(const Common& c, std::ostream& log) {
  const RunConfig cfg = c.run_config();
  const auto sets = process_inputs(c, cfg);
  write(log, c.out_dir() / "rr.csv", render_rr(rr_rows(sets, cfg.estimator)));
  write(log, c.out_dir() / "errors.csv", render_errors(error_rows(sets, cfg.estimator)));
}

void cmd_quality(const Common& c, const std::string& stats_path, std::ostream& log) {
  const RunConfig cfg = c.run_config();
  std::optional<NormalizationStats> frozen;
  if (!stats_path.empty()) frozen = parse_normalization(read_file(stats_path), stats_path);
  const auto sets = process_inputs(c, cfg, frozen);
  write(log, c.out_dir() / "quality.csv", render_quality(quality_rows(sets)));
  if (frozen) {
    write(log, c.out_dir() / "normalization.csv", render_normalization(*frozen));
  } else if (cfg.normalization_scope == "dataset") {
    write(log, c.out_dir() / "normalization.csv", render_normalization(fit_dataset_normalization(sets, "dataset")));
  }
}

void cmd_subset_search(const Common& c, const std::string& population, std::ostream& log) {
  const auto quality = parse_quality(read_file(c.in_dir() / "quality.csv"));
  const auto errors = parse_errors(read_file(c.in_dir() / "errors.csv"));
  const auto meta = load_meta(c.in_dir());
  std::vector<SubsetRow> rows;
  for (const auto& scenario : c.scenarios) {
    const auto result = subset_search(selection_problem_from_rows(quality, errors, meta, scenario), population);
    rows.push_back({scenario, result.mask, result.mae_bpm, population});
    log << scenario << ": " << result.mask.names() << " (MAE " << format_fixed(result.mae_bpm, 2) << " bpm)\n";
  }
  write(log, c.out_dir() / "subset.csv", render_subsets(rows));
}

void cmd_train(const Common& c, std::ostream& log) {
  const RunConfig cfg = c.run_config();
  const auto all = load_sets(c.in_dir(), cfg);
  std::vector<BaselineRow> baselines;
  std::vector<SubsetRow> subsets;
  for (const auto& scenario : c.scenarios) {
    const auto sets = in_scenario(all, scenario);
    const auto reg = train_regressor_predictor(sets, cfg.estimator, cfg.training());
    const auto cls = train_classifier_predictor(sets, cfg.estimator, cfg.training());
    baselines.push_back({scenario, baseline_select(sets)});
    const auto subset = subset_search(selection_problem(sets, cfg.estimator), "train");
    subsets.push_back({scenario, subset.mask, subset.mae_bpm, "train"});
    std::string methods;
    for (const auto& m : sets.front().methods) methods += m.method_id + "\n";
    const auto dir = c.out_dir();
    write(log, dir / ("methods_" + scenario + ".txt"), methods);
    write(log, dir / ("scaler_" + scenario + ".txt"), model_text(write_scaler, reg->scaler()));
    write(log, dir / ("regressor_" + scenario + ".txt"), model_text(write_regressor, reg->model()));
    write(log, dir / ("classifier_" + scenario + ".txt"), model_text(write_classifier, cls->model()));
    log << scenario << ": baseline " << baselines.back().choice.method_id << "/" << to_string(baselines.back().choice.estimator)
        << ", subset " << subset.mask.names() << "\n";
  }
  write(log, c.out_dir() / "baseline.csv", render_baselines(baselines));
  write(log, c.out_dir() / "subset.csv", render_subsets(subsets));
  if (fs::exists(c.in_dir() / "normalization.csv") && c.in_dir() != c.out_dir()) {
    write(log, c.out_dir() / "normalization.csv", read_file(c.in_dir() / "normalization.csv"));
  }
}

void cmd_fuse(const Common& c, const std::string& train_dir, const std::string& subset_path, std::ostream& log) {
  const RunConfig cfg = c.run_config();
  const Estimator est = cfg.estimator;
  const auto all = load_sets(c.in_dir(), cfg);
  std::vector<ResultRow> results;
  std::vector<TraceCsvRow> traces_out;
  for (const auto& scenario : c.scenarios) {
    const auto sets = in_scenario(all, scenario);
    std::vector<FusionStrategy> strategies;
    std::shared_ptr<const WindowErrorPredictor> regressor;
    std::optional<FusionStrategy> baseline, trainset, reg, cls;
    if (!train_dir.empty()) {
      const fs::path dir = train_dir;
      const auto scaler = read_model<StandardScaler>(dir / ("scaler_" + scenario + ".txt"), read_scaler);
      regressor = std::make_shared<RegressorPredictor>(scaler, read_model<RegressorModel>(dir / ("regressor_" + scenario + ".txt"), read_regressor));
      auto classifier = std::make_shared<ClassifierPredictor>(
          scaler, read_model<ClassifierModel>(dir / ("classifier_" + scenario + ".txt"), read_classifier));
      std::vector<std::string> expected;
      for (auto line : split(read_file(dir / ("methods_" + scenario + ".txt")), '\n'))
        if (!trim(line).empty()) expected.emplace_back(trim(line));
      std::vector<std::string> actual;
      for (const auto& m : sets.front().methods) actual.push_back(m.method_id);
      if (expected != actual) throw Error(ErrorCode::ShapeMismatch, "models were trained on a different method list");
      const auto baselines = parse_baselines(read_file(dir / "baseline.csv"));
      const auto subsets = parse_subsets(read_file(dir / "subset.csv"));
      baseline = FusionStrategy{.kind = FusionKind::BASELINE, .baseline = row_for<BaselineRow>(baselines, scenario, dir / "baseline.csv").choice};
      trainset = FusionStrategy{.kind = FusionKind::TRAINSET_SMM, .mask = row_for<SubsetRow>(subsets, scenario, dir / "subset.csv").mask};
      reg = FusionStrategy{.kind = FusionKind::REGRESSOR, .regressor = regressor};
      cls = FusionStrategy{.kind = FusionKind::CLASSIFIER, .classifier = classifier};
    }
    if (baseline) strategies.push_back(*baseline);
    strategies.push_back({.kind = FusionKind::FMM});
    if (!subset_path.empty()) {
      const auto subsets = parse_subsets(read_file(subset_path), subset_path);
      strategies.push_back({.kind = FusionKind::SMM, .mask = row_for<SubsetRow>(subsets, scenario, subset_path).mask});
    }
    if (trainset) strategies.push_back(*trainset);
    if (reg) strategies.push_back(*reg);
    if (cls) strategies.push_back(*cls);
    strategies.push_back({.kind = FusionKind::ORACLE_GT_MAE});
    strategies.push_back({.kind = FusionKind::ORACLE_GT_SMM, .mask = subset_search(selection_problem(sets, est), "evaluation").mask});

    for (const auto& st : strategies) {
      std::vector<FusionTrace> traces;
      for (const auto& s : sets) traces.push_back(fuse(s, st, est, regressor.get()));
      EvalReport report;
      if (cfg.filter_fraction > 0.0) {
        const double grid[] = {cfg.filter_fraction};
        report = filter_sweep(traces, regressor ? FilterScore::REGRESSOR : FilterScore::FMM, grid).front().report;
      } else {
        report = evaluate_traces(traces);
      }
      results.push_back(result_row(st.name(), scenario, report));
      const auto rows = trace_rows(traces, scenario);
      traces_out.insert(traces_out.end(), rows.begin(), rows.end());
      log << scenario << " " << st.name() << ": MAE " << format_fixed(report.mae_bpm, 2) << " bpm, PCC "
          << (report.pcc_defined ? format_fixed(report.pcc, 2) : "0.00*") << "\n";
    }
  }
  write(log, c.out_dir() / "results.csv", render_results(results));
  write(log, c.out_dir() / "traces.csv", render_traces(traces_out));
}

void cmd_filter(const Common& c, std::string strategy, std::ostream& log) {
  const auto rows = parse_traces(read_file(c.in_dir() / "traces.csv"));
  if (strategy.empty()) {
    strategy = "FMM";
    for (const auto& r : rows)
      if (r.strategy == to_string(FusionKind::REGRESSOR)) strategy = r.strategy;
  }
  std::vector<FilterRow> out;
  for (const auto& scenario : c.scenarios) {
    const auto traces = traces_from_rows(rows, strategy, scenario);
    if (traces.empty()) throw Error(ErrorCode::MissingInput, "traces.csv has no " + strategy + " rows for scenario " + scenario);
    bool predicted = false;
    for (const auto& t : traces)
      for (const auto& r : t.rows) predicted = predicted || (r.counted() && std::isfinite(r.predicted_error));
    for (FilterScore score : {FilterScore::FMM, FilterScore::REGRESSOR, FilterScore::GT}) {
      if (score == FilterScore::REGRESSOR && !predicted) continue;
      for (const auto& p : filter_sweep(traces, score)) {
        out.push_back({std::string(to_string(score)), scenario, p.q, p.report.mae_bpm, p.report.pcc_defined ? p.report.pcc : std::nan(""),
                       p.report.coverage, p.report.window_count});
      }
    }
  }
  log << "filtering " << strategy << " traces\n";
  write(log, c.out_dir() / "filter.csv", render_filter(out));
}

void cmd_sweep(const Common& c, std::ostream& log) {
  const RunConfig cfg = c.run_config();
  const auto all = load_sets(c.in_dir(), cfg, false);
  for (const auto& scenario : c.scenarios) {
    const auto report = sweep_report(in_scenario(all, scenario));
    write(log, c.out_dir() / ("heatmap_" + scenario + ".csv"), render_heatmap_csv(report));
    write(log, c.out_dir() / ("heatmap_" + scenario + ".svg"), heatmap_svg(report, "Estimator sweep, " + scenario));
    log << scenario << ": best " << report.method_ids[report.best_method] << "/" << to_string(report.best_estimator) << "\n";
  }
}

void cmd_report(const Common& c, std::ostream& log) {
  const auto results = parse_results(read_file(c.in_dir() / "results.csv"));
  std::vector<FilterRow> filter;
  if (fs::exists(c.in_dir() / "filter.csv")) filter = parse_filter(read_file(c.in_dir() / "filter.csv"));
  write(log, c.out_dir() / "report.md", render_report(results, filter));
  write(log, c.out_dir() / "results.svg", results_svg(results, "Fusion strategies"));
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Respiratory-rate signal quality and fusion toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "respq 1.0");

  Common c;
  std::string preset, stats, population = "dataset", train_dir, subset_path, strategy;
  std::size_t recordings = 5;

  auto* synth = app.add_subcommand("synth", "generate a seeded synthetic benchmark");
  add_common(*synth, c, false, false);
  synth->add_option("--preset", preset, "uniform-noise, disjoint-failure, drift or ramp")->required();
  synth->add_option("--recordings", recordings, "number of recordings")->check(CLI::PositiveNumber)->capture_default_str();

  auto* estimate = app.add_subcommand("estimate", "per-window RR for every method and estimator");
  add_common(*estimate, c, true, false);
  auto* quality = app.add_subcommand("quality", "per-window quality metrics");
  add_common(*quality, c, true, false);
  quality->add_option("--stats", stats, "frozen normalization.csv to apply instead of refitting");
  auto* subset = app.add_subcommand("subset-search", "exhaustive metric subset search");
  add_common(*subset, c);
  subset->add_option("--population", population, "label stored with the result")->capture_default_str();
  auto* train = app.add_subcommand("train", "fit baseline, subset, regressor and classifier");
  add_common(*train, c);
  auto* fuse_cmd = app.add_subcommand("fuse", "run every fusion strategy");
  add_common(*fuse_cmd, c);
  fuse_cmd->add_option("--train", train_dir, "directory written by train");
  fuse_cmd->add_option("--subset", subset_path, "subset.csv used for SMM");
  auto* filter = app.add_subcommand("filter", "low-quality segment filtering sweep");
  add_common(*filter, c);
  filter->add_option("--strategy", strategy, "fusion strategy whose traces are filtered (default Regressor, else FMM)");
  auto* sweep = app.add_subcommand("sweep", "method x estimator accuracy heatmap");
  add_common(*sweep, c);
  auto* report = app.add_subcommand("report", "markdown tables and bar chart from results");
  add_common(*report, c, true, false);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*synth) cmd_synth(c, preset, recordings, out);
    else if (*estimate) cmd_estimate(c, out);
    else if (*quality) cmd_quality(c, stats, out);
    else if (*subset) cmd_subset_search(c, population, out);
    else if (*train) cmd_train(c, out);
    else if (*fuse_cmd) cmd_fuse(c, train_dir, subset_path, out);
    else if (*filter) cmd_filter(c, strategy, out);
    else if (*sweep) cmd_sweep(c, out);
    else if (*report) cmd_report(c, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: MissingInput: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: Internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace respq
