#include "respq/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "respq/error.hpp"
#include "respq/text.hpp"

namespace respq {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void parse_fail(std::string_view source, std::size_t line, const std::string& msg) {
  throw Error(ErrorCode::ParseError, std::string(source) + ":" + std::to_string(line) + ": " + msg);
}

// Typed access to one CSV row with line-numbered errors.
struct Fields {
  const std::vector<std::string>& f;
  std::string_view source;
  std::size_t line;

  const std::string& str(std::size_t i) const { return f[i]; }

  const std::string& id(std::size_t i, std::string_view what) const {
    if (f[i].empty()) parse_fail(source, line, "empty " + std::string(what));
    return f[i];
  }

  double num(std::size_t i) const {
    try {
      return parse_double(f[i]);
    } catch (const Error& e) {
      parse_fail(source, line, e.what());
    }
  }

  std::size_t index(std::size_t i) const {
    long long v = 0;
    try {
      v = parse_int(f[i]);
    } catch (const Error& e) {
      parse_fail(source, line, e.what());
    }
    if (v < 0) parse_fail(source, line, "negative index " + f[i]);
    return static_cast<std::size_t>(v);
  }

  Estimator estimator(std::size_t i) const {
    try {
      return parse_estimator(f[i]);
    } catch (const Error&) {
      parse_fail(source, line, "unknown estimator '" + f[i] + "'");
    }
  }
};

template <typename Row, typename Fn>
std::vector<Row> parse_rows(std::string_view text, std::span<const std::string_view> header, std::string_view source, Fn fn,
                            std::size_t optional_trailing = 0) {
  const auto table = parse_csv(text, header, source, optional_trailing);
  std::vector<Row> out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) out.push_back(fn(Fields{table.rows[r], source, table.lines[r]}));
  return out;
}

std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_fields(std::string_view line, std::string_view source, std::size_t line_no) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c != '"') {
        cur += c;
      } else if (i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else {
        quoted = false;
      }
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
      was_quoted = false;
    } else if (c == '"' && cur.empty() && !was_quoted) {
      quoted = was_quoted = true;
    } else {
      if (was_quoted) parse_fail(source, line_no, "text after closing quote");
      cur += c;
    }
  }
  if (quoted) parse_fail(source, line_no, "unterminated quote");
  out.push_back(std::move(cur));
  return out;
}

std::string join_header(std::span<const std::string_view> header) {
  std::string out;
  for (auto h : header) out += (out.empty() ? "" : ",") + std::string(h);
  return out;
}

std::string fmt(double v) { return format_double(v); }

const StreamMeta* find_meta(std::span<const StreamMeta> meta, std::string_view rec, std::string_view method) {
  const StreamMeta* fallback = nullptr;
  for (const auto& m : meta) {
    if (m.recording_id != rec) continue;
    if (m.method_id == method) return &m;
    if (m.method_id.empty()) fallback = &m;
  }
  return fallback;
}

bool is_gt(std::span<const StreamMeta> meta, std::string_view rec, std::string_view method) {
  const StreamMeta* m = find_meta(meta, rec, method);
  if (m && !m->method_id.empty()) return m->group_tag == "GT";
  return method == "GT";
}

std::string group_of(std::span<const StreamMeta> meta, std::string_view rec, std::string_view method) {
  const StreamMeta* m = find_meta(meta, rec, method);
  if (!m) {
    throw Error(ErrorCode::MissingInput, "no metadata for recording '" + std::string(rec) + "' method '" + std::string(method) + "'");
  }
  return m->group_tag;
}

template <typename T>
std::size_t first_seen(std::vector<T>& order, const T& key) {
  const auto it = std::find(order.begin(), order.end(), key);
  if (it != order.end()) return static_cast<std::size_t>(it - order.begin());
  order.push_back(key);
  return order.size() - 1;
}

constexpr std::string_view kRrHeader[] = {"recording_id", "method_id", "estimator", "window_index", "rr_bpm"};
constexpr std::string_view kErrorHeader[] = {"recording_id", "method_id", "window_index", "abs_error_bpm"};
constexpr std::string_view kSignalHeader[] = {"recording_id", "method_id", "sample_index", "value"};
constexpr std::string_view kMetaHeader[] = {"recording_id", "sample_rate_hz", "group_tag", "method_id"};
constexpr std::string_view kResultHeader[] = {"strategy", "scenario", "mae_bpm", "pcc", "coverage"};
constexpr std::string_view kTraceHeader[] = {"strategy",    "scenario",      "recording_id", "window_index", "method_id",
                                             "rr_bpm",      "gt_rr_bpm",     "abs_error_bpm", "fmm_score",   "predicted_error"};
constexpr std::string_view kFilterHeader[] = {"score", "scenario", "q", "mae_bpm", "pcc", "coverage", "window_count"};
constexpr std::string_view kSubsetHeader[] = {"scenario", "metrics", "mae_bpm", "population"};
constexpr std::string_view kBaselineHeader[] = {"scenario", "method_id", "estimator", "mae_bpm"};
constexpr std::string_view kNormHeader[] = {"metric", "min", "max", "population"};

std::vector<std::string> quality_header() {
  std::vector<std::string> h{"recording_id", "method_id", "window_index", "valid"};
  for (std::string_view stage : {"raw", "oriented", "normalized"})
    for (std::size_t k = 0; k < kMetricCount; ++k) h.push_back(std::string(stage) + "_" + std::string(metric_key(k)));
  return h;
}

std::vector<std::string> heatmap_header() {
  std::vector<std::string> h{"metric", "method_id"};
  for (Estimator e : kAllEstimators) h.emplace_back(to_string(e));
  return h;
}

std::vector<std::string_view> views(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string hex_color(double t) {
  // Light to dark blue.
  const double lo[3] = {247, 251, 255}, hi[3] = {8, 48, 107};
  t = std::clamp(t, 0.0, 1.0);
  std::string out = "#";
  const char* digits = "0123456789abcdef";
  for (int c = 0; c < 3; ++c) {
    const int v = static_cast<int>(std::lround(lo[c] + (hi[c] - lo[c]) * t));
    out += digits[v / 16];
    out += digits[v % 16];
  }
  return out;
}

std::string pcc_text(double pcc) { return std::isnan(pcc) ? "0.00*" : format_fixed(pcc, 2); }

}  // namespace

// Config.

PipelineConfig RunConfig::pipeline() const {
  PipelineConfig p;
  p.windowing = {window_s, step_s};
  p.band = {band_lo_hz, band_hi_hz};
  p.estimators.music = {music_p, music_nfft};
  p.estimators.welch = {welch_subsegment_s, welch_overlap, nfft};
  p.estimators.fft_n = nfft;
  p.estimator = estimator;
  p.quality.welch = {sqi_welch_subsegment_s, welch_overlap, nfft};
  return p;
}

TrainConfig RunConfig::training() const {
  TrainConfig t;
  t.seed = seed;
  t.epochs = train_epochs;
  t.learning_rate = train_learning_rate;
  t.batch_size = train_batch_size;
  return t;
}

RunConfig parse_run_config(std::string_view text) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) parse_fail("config", line_no, "expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw Error(ErrorCode::ConfigError, key + ": given twice");
    auto bad = [&](const std::string& why) { throw Error(ErrorCode::ConfigError, key + ": " + why + " (got '" + std::string(value) + "')"); };
    auto num = [&](double lo, double hi, bool lo_open) {
      double v = 0.0;
      try {
        v = parse_double(value);
      } catch (const Error&) {
        bad("not a number");
      }
      if (!std::isfinite(v) || v > hi || (lo_open ? v <= lo : v < lo)) bad("out of range");
      return v;
    };
    auto integer = [&](long long lo) {
      long long v = 0;
      try {
        v = parse_int(value);
      } catch (const Error&) {
        bad("not an integer");
      }
      if (v < lo || v > std::numeric_limits<int>::max()) bad("out of range");
      return static_cast<int>(v);
    };
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (key == "window_s") cfg.window_s = num(0, inf, true);
    else if (key == "step_s") cfg.step_s = num(0, inf, true);
    else if (key == "band_lo_hz") cfg.band_lo_hz = num(0, inf, true);
    else if (key == "band_hi_hz") cfg.band_hi_hz = num(0, inf, true);
    else if (key == "estimator") {
      try {
        cfg.estimator = parse_estimator(value);
      } catch (const Error&) {
        bad("expected fft, welch, music or peak");
      }
    } else if (key == "music_p") cfg.music_p = integer(1);
    else if (key == "music_nfft") cfg.music_nfft = integer(16);
    else if (key == "welch_subsegment_s") cfg.welch_subsegment_s = num(0, inf, true);
    else if (key == "welch_overlap") {
      cfg.welch_overlap = num(0, 1, false);
      if (cfg.welch_overlap >= 1.0) bad("must be below 1");
    } else if (key == "nfft") cfg.nfft = integer(16);
    else if (key == "seed") {
      std::uint64_t v = 0;
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc{} || ptr != value.data() + value.size() || value.empty()) bad("not an unsigned integer");
      cfg.seed = v;
    } else if (key == "normalization_scope") {
      if (value != "dataset" && value != "recording") bad("expected dataset or recording");
      cfg.normalization_scope = std::string(value);
    } else if (key == "filter_fraction") cfg.filter_fraction = num(0, 0.5, false);
    else if (key == "sqi_welch_subsegment_s") cfg.sqi_welch_subsegment_s = num(0, inf, true);
    else if (key == "train_epochs") cfg.train_epochs = integer(1);
    else if (key == "train_learning_rate") cfg.train_learning_rate = num(0, inf, true);
    else if (key == "train_batch_size") cfg.train_batch_size = integer(1);
    else throw Error(ErrorCode::ConfigError, key + ": unknown key");
  }
  if (!(cfg.band_lo_hz < cfg.band_hi_hz)) throw Error(ErrorCode::ConfigError, "band_hi_hz: must exceed band_lo_hz");
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) { return parse_run_config(read_file(path)); }

std::string render_run_config(const RunConfig& c) {
  std::ostringstream os;
  os << "window_s = " << fmt(c.window_s) << "\nstep_s = " << fmt(c.step_s) << "\nband_lo_hz = " << fmt(c.band_lo_hz)
     << "\nband_hi_hz = " << fmt(c.band_hi_hz) << "\nestimator = " << to_string(c.estimator) << "\nmusic_p = " << c.music_p
     << "\nmusic_nfft = " << c.music_nfft << "\nwelch_subsegment_s = " << fmt(c.welch_subsegment_s)
     << "\nwelch_overlap = " << fmt(c.welch_overlap) << "\nnfft = " << c.nfft << "\nseed = " << c.seed
     << "\nnormalization_scope = " << c.normalization_scope << "\nfilter_fraction = " << fmt(c.filter_fraction)
     << "\nsqi_welch_subsegment_s = " << fmt(c.sqi_welch_subsegment_s) << "\ntrain_epochs = " << c.train_epochs
     << "\ntrain_learning_rate = " << fmt(c.train_learning_rate) << "\ntrain_batch_size = " << c.train_batch_size << "\n";
  return os.str();
}

// Files.

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingInput, "cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::MissingInput, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::MissingInput, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

CsvTable parse_csv(std::string_view text, std::span<const std::string_view> header, std::string_view source,
                   std::size_t optional_trailing) {
  CsvTable t;
  auto lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) parse_fail(source, 1, "missing header, expected '" + join_header(header) + "'");
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = lines[i];
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::size_t line_no = i + 1;
    auto fields = split_fields(line, source, line_no);
    if (i == 0) {
      const bool ok = fields.size() <= header.size() && fields.size() + optional_trailing >= header.size() &&
                      std::equal(fields.begin(), fields.end(), header.begin());
      if (!ok) parse_fail(source, 1, "expected header '" + join_header(header) + "'");
      t.header = std::move(fields);
      continue;
    }
    if (line.empty()) parse_fail(source, line_no, "empty line");
    if (fields.size() != t.header.size()) {
      parse_fail(source, line_no, "expected " + std::to_string(t.header.size()) + " fields, found " + std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.lines.push_back(line_no);
  }
  return t;
}

std::string render_csv(std::span<const std::string_view> header, std::span<const std::vector<std::string>> rows) {
  std::string out = join_header(header) + "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += quote(row[i]);
    }
    out += '\n';
  }
  return out;
}

// Signals.

std::vector<Stream> parse_signals(std::string_view text, std::string_view source) {
  const auto table = parse_csv(text, kSignalHeader, source);
  std::vector<Stream> out;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const Fields f{table.rows[r], source, table.lines[r]};
    const auto key = std::make_pair(f.id(0, "recording_id"), f.id(1, "method_id"));
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      out.push_back({key.first, key.second, {}});
    }
    Stream& s = out[it->second];
    const std::size_t i = f.index(2);
    if (i != s.samples.size()) {
      parse_fail(source, f.line, "sample_index " + std::to_string(i) + " for " + key.first + "/" + key.second + ", expected " +
                                     std::to_string(s.samples.size()));
    }
    const double v = f.num(3);
    if (!std::isfinite(v)) parse_fail(source, f.line, "non-finite sample value");
    s.samples.push_back(v);
  }
  return out;
}

std::string render_signals(std::span<const Stream> streams) {
  std::string out = join_header(kSignalHeader) + "\n";
  for (const auto& s : streams) {
    const std::string prefix = quote(s.recording_id) + "," + quote(s.method_id) + ",";
    for (std::size_t i = 0; i < s.samples.size(); ++i) out += prefix + std::to_string(i) + "," + fmt(s.samples[i]) + "\n";
  }
  return out;
}

std::vector<StreamMeta> parse_meta(std::string_view text, std::string_view source) {
  return parse_rows<StreamMeta>(
      text, kMetaHeader, source,
      [&](const Fields& f) {
        StreamMeta m;
        m.recording_id = f.id(0, "recording_id");
        m.sample_rate_hz = f.num(1);
        if (!(m.sample_rate_hz > 0.0) || !std::isfinite(m.sample_rate_hz)) parse_fail(source, f.line, "sample_rate_hz must be positive");
        m.group_tag = f.str(2);
        if (std::find(kGroupTags.begin(), kGroupTags.end(), m.group_tag) == kGroupTags.end()) {
          parse_fail(source, f.line, "group_tag '" + m.group_tag + "' not one of NLM, DLM, MOTION, GT");
        }
        if (f.f.size() > 3) m.method_id = f.str(3);
        return m;
      },
      1);
}

std::string render_meta(std::span<const StreamMeta> meta) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& m : meta) rows.push_back({m.recording_id, fmt(m.sample_rate_hz), m.group_tag, m.method_id});
  return render_csv(kMetaHeader, rows);
}

std::vector<Recording> assemble_recordings(std::span<const Stream> streams, std::span<const StreamMeta> meta) {
  std::vector<Recording> out;
  std::vector<std::string> order;
  for (const auto& s : streams) {
    const StreamMeta* m = find_meta(meta, s.recording_id, s.method_id);
    if (!m) {
      throw Error(ErrorCode::MissingInput, "no metadata for recording '" + s.recording_id + "' method '" + s.method_id + "'");
    }
    const std::size_t r = first_seen(order, s.recording_id);
    if (r == out.size()) out.push_back({s.recording_id, std::nullopt, {}});
    Recording& rec = out[r];
    TimeSeries ts(s.samples, m->sample_rate_hz, s.method_id);
    if (is_gt(meta, s.recording_id, s.method_id)) {
      if (rec.gt) throw Error(ErrorCode::ParseError, "recording '" + s.recording_id + "' has two GT streams");
      rec.gt = std::move(ts);
    } else {
      if (s.method_id == "GT") throw Error(ErrorCode::ParseError, "method id 'GT' is reserved for ground truth");
      rec.candidates.push_back({std::move(ts), m->group_tag});
    }
  }
  for (const auto& rec : out)
    if (rec.candidates.empty()) throw Error(ErrorCode::InsufficientData, "recording '" + rec.recording_id + "' has no candidate streams");
  return out;
}

std::vector<MethodCandidateSet> process_recordings(std::span<const Recording> recordings, const RunConfig& cfg,
                                                   const std::optional<NormalizationStats>& frozen) {
  const auto pc = cfg.pipeline();
  std::vector<MethodCandidateSet> sets(recordings.size());
  parallel_for(recordings.size(), [&](std::size_t r) {
    const Recording& rec = recordings[r];
    if (rec.gt) {
      sets[r] = build_candidate_set(rec.recording_id, rec.candidates, *rec.gt, pc);
      return;
    }
    MethodCandidateSet s;
    s.recording_id = rec.recording_id;
    for (const auto& c : rec.candidates) s.methods.push_back(process_method(c.signal, pc, c.group_tag));
    s.gt_rr.assign(s.methods.front().oriented.size(), kNaN);
    sets[r] = std::move(s);
  });
  if (frozen) {
    for (auto& s : sets) apply_normalization(s, *frozen);
  } else if (cfg.normalization_scope == "recording") {
    for (auto& s : sets) apply_normalization(s, fit_dataset_normalization(std::span(&s, 1), s.recording_id));
  } else {
    const auto stats = fit_dataset_normalization(sets, "dataset");
    for (auto& s : sets) apply_normalization(s, stats);
  }
  return sets;
}

// RR, errors, quality.

std::vector<RrRow> rr_rows(std::span<const MethodCandidateSet> sets, Estimator gt_estimator) {
  std::vector<RrRow> out;
  for (const auto& s : sets) {
    for (const auto& m : s.methods)
      for (std::size_t e = 0; e < std::size(kAllEstimators); ++e)
        for (std::size_t w = 0; w < m.rr[e].size(); ++w) out.push_back({s.recording_id, m.method_id, kAllEstimators[e], w, m.rr[e][w]});
    for (std::size_t w = 0; w < s.gt_rr.size(); ++w) out.push_back({s.recording_id, "GT", gt_estimator, w, s.gt_rr[w]});
  }
  return out;
}

std::vector<RrRow> parse_rr(std::string_view text, std::string_view source) {
  return parse_rows<RrRow>(text, kRrHeader, source, [](const Fields& f) {
    return RrRow{f.id(0, "recording_id"), f.id(1, "method_id"), f.estimator(2), f.index(3), f.num(4)};
  });
}

std::string render_rr(std::span<const RrRow> rows) {
  std::string out = join_header(kRrHeader) + "\n";
  for (const auto& r : rows) {
    out += quote(r.recording_id) + "," + quote(r.method_id) + "," + std::string(to_string(r.estimator)) + "," +
           std::to_string(r.window_index) + "," + fmt(r.rr_bpm) + "\n";
  }
  return out;
}

std::vector<ErrorRow> error_rows(std::span<const MethodCandidateSet> sets, Estimator e) {
  std::vector<ErrorRow> out;
  for (const auto& s : sets)
    for (std::size_t m = 0; m < s.methods.size(); ++m)
      for (std::size_t w = 0; w < s.windows(); ++w) out.push_back({s.recording_id, s.methods[m].method_id, w, s.abs_error(m, w, e)});
  return out;
}

std::vector<ErrorRow> parse_errors(std::string_view text, std::string_view source) {
  return parse_rows<ErrorRow>(text, kErrorHeader, source, [](const Fields& f) {
    return ErrorRow{f.id(0, "recording_id"), f.id(1, "method_id"), f.index(2), f.num(3)};
  });
}

std::string render_errors(std::span<const ErrorRow> rows) {
  std::string out = join_header(kErrorHeader) + "\n";
  for (const auto& r : rows)
    out += quote(r.recording_id) + "," + quote(r.method_id) + "," + std::to_string(r.window_index) + "," + fmt(r.abs_error_bpm) + "\n";
  return out;
}

std::vector<QualityRow> quality_rows(std::span<const MethodCandidateSet> sets) {
  std::vector<QualityRow> out;
  for (const auto& s : sets)
    for (const auto& m : s.methods)
      for (std::size_t w = 0; w < m.oriented.size(); ++w) {
        QualityRow r{s.recording_id, m.method_id, w, false, {}, {}, {}};
        r.raw.fill(kNaN);
        r.oriented.fill(kNaN);
        r.normalized.fill(kNaN);
        if (m.oriented[w]) {
          r.valid = true;
          if (w < m.raw.size() && m.raw[w]) r.raw = m.raw[w]->values;
          r.oriented = m.oriented[w]->values;
          if (m.normalized[w]) r.normalized = m.normalized[w]->values;
        }
        out.push_back(r);
      }
  return out;
}

std::vector<QualityRow> parse_quality(std::string_view text, std::string_view source) {
  const auto header = quality_header();
  const auto hv = views(header);
  return parse_rows<QualityRow>(text, hv, source, [&](const Fields& f) {
    QualityRow r;
    r.recording_id = f.id(0, "recording_id");
    r.method_id = f.id(1, "method_id");
    r.window_index = f.index(2);
    if (f.str(3) != "0" && f.str(3) != "1") parse_fail(source, f.line, "valid must be 0 or 1");
    r.valid = f.str(3) == "1";
    for (std::size_t k = 0; k < kMetricCount; ++k) {
      r.raw[k] = f.num(4 + k);
      r.oriented[k] = f.num(4 + kMetricCount + k);
      r.normalized[k] = f.num(4 + 2 * kMetricCount + k);
    }
    return r;
  });
}

std::string render_quality(std::span<const QualityRow> rows) {
  std::string out = join_header(views(quality_header())) + "\n";
  for (const auto& r : rows) {
    out += quote(r.recording_id) + "," + quote(r.method_id) + "," + std::to_string(r.window_index) + "," + (r.valid ? "1" : "0");
    for (const auto* block : {&r.raw, &r.oriented, &r.normalized})
      for (double v : *block) out += "," + fmt(v);
    out += "\n";
  }
  return out;
}

std::vector<MethodCandidateSet> assemble_sets(std::span<const StreamMeta> meta, std::span<const RrRow> rr,
                                              std::span<const QualityRow> quality, Estimator gt_estimator) {
  std::vector<std::string> recs;
  std::vector<std::vector<std::string>> methods;
  std::vector<std::size_t> windows;
  auto locate = [&](const std::string& rec) {
    const std::size_t r = first_seen(recs, rec);
    if (r == methods.size()) methods.emplace_back(), windows.push_back(0);
    return r;
  };
  for (const auto& row : rr) {
    const std::size_t r = locate(row.recording_id);
    windows[r] = std::max(windows[r], row.window_index + 1);
    if (row.method_id != "GT") first_seen(methods[r], row.method_id);
  }
  std::vector<MethodCandidateSet> sets(recs.size());
  for (std::size_t r = 0; r < recs.size(); ++r) {
    sets[r].recording_id = recs[r];
    sets[r].gt_rr.assign(windows[r], kNaN);
    for (const auto& id : methods[r]) {
      MethodSeries m;
      m.method_id = id;
      m.group_tag = group_of(meta, recs[r], id);
      for (auto& v : m.rr) v.assign(windows[r], kNaN);
      m.raw.assign(windows[r], std::nullopt);
      m.oriented.assign(windows[r], std::nullopt);
      m.normalized.assign(windows[r], std::nullopt);
      sets[r].methods.push_back(std::move(m));
    }
  }
  for (const auto& row : rr) {
    const std::size_t r = locate(row.recording_id);
    if (row.method_id == "GT") {
      if (row.estimator == gt_estimator) sets[r].gt_rr[row.window_index] = row.rr_bpm;
      continue;
    }
    const auto m = *sets[r].method_index(row.method_id);
    sets[r].methods[m].rr[static_cast<std::size_t>(row.estimator)][row.window_index] = row.rr_bpm;
  }
  for (const auto& q : quality) {
    const auto it = std::find(recs.begin(), recs.end(), q.recording_id);
    if (it == recs.end()) throw Error(ErrorCode::MissingInput, "quality rows for recording '" + q.recording_id + "' have no RR rows");
    auto& set = sets[static_cast<std::size_t>(it - recs.begin())];
    const auto m = set.method_index(q.method_id);
    if (!m || q.window_index >= set.windows()) {
      throw Error(ErrorCode::MissingInput, "quality row " + q.recording_id + "/" + q.method_id + "/" + std::to_string(q.window_index) +
                                               " has no matching RR rows");
    }
    if (!q.valid) continue;
    auto& ms = set.methods[*m];
    ms.raw[q.window_index] = QualityVector{q.raw, QualityStage::RAW};
    ms.oriented[q.window_index] = QualityVector{q.oriented, QualityStage::ORIENTED};
    ms.normalized[q.window_index] = QualityVector{q.normalized, QualityStage::NORMALIZED};
  }
  return sets;
}

SelectionProblem selection_problem_from_rows(std::span<const QualityRow> quality, std::span<const ErrorRow> errors,
                                             std::span<const StreamMeta> meta, std::string_view scenario) {
  auto keep = [&](const std::string& rec, const std::string& method) {
    return scenario == "ALL" || group_of(meta, rec, method) == scenario;
  };
  std::vector<std::string> recs, methods;
  std::vector<std::size_t> windows;
  auto note = [&](const std::string& rec, const std::string& method, std::size_t w) {
    const std::size_t r = first_seen(recs, rec);
    if (r == windows.size()) windows.push_back(0);
    windows[r] = std::max(windows[r], w + 1);
    if (keep(rec, method)) first_seen(methods, method);
  };
  for (const auto& q : quality) note(q.recording_id, q.method_id, q.window_index);
  for (const auto& e : errors) note(e.recording_id, e.method_id, e.window_index);
  if (methods.empty()) throw Error(ErrorCode::InsufficientData, "no methods in scenario " + std::string(scenario));
  std::vector<std::size_t> offset(recs.size(), 0);
  std::size_t total = 0;
  for (std::size_t r = 0; r < recs.size(); ++r) offset[r] = total, total += windows[r];
  SelectionProblem p(total, methods.size(), kMetricCount);
  auto row_of = [&](const std::string& rec, std::size_t w) {
    return offset[static_cast<std::size_t>(std::find(recs.begin(), recs.end(), rec) - recs.begin())] + w;
  };
  auto method_of = [&](const std::string& id) -> std::optional<std::size_t> {
    const auto it = std::find(methods.begin(), methods.end(), id);
    if (it == methods.end()) return std::nullopt;
    return static_cast<std::size_t>(it - methods.begin());
  };
  for (std::size_t w = 0; w < total; ++w)
    for (std::size_t m = 0; m < methods.size(); ++m) p.set_error(w, m, kNaN);
  for (const auto& q : quality) {
    const auto m = method_of(q.method_id);
    if (!m || !keep(q.recording_id, q.method_id) || !q.valid) continue;
    p.set_metrics(row_of(q.recording_id, q.window_index), *m, q.normalized);
  }
  for (const auto& e : errors) {
    const auto m = method_of(e.method_id);
    if (!m || !keep(e.recording_id, e.method_id)) continue;
    p.set_error(row_of(e.recording_id, e.window_index), *m, e.abs_error_bpm);
  }
  return p;
}

NormalizationStats parse_normalization(std::string_view text, std::string_view source) {
  const auto table = parse_csv(text, kNormHeader, source);
  if (table.rows.size() != kMetricCount) parse_fail(source, table.rows.size() + 1, "expected one row per metric");
  NormalizationStats s;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const Fields f{table.rows[r], source, table.lines[r]};
    const auto k = metric_index_from_name(f.str(0));
    if (!k || *k != r) parse_fail(source, f.line, "expected metric " + std::string(metric_key(r)));
    s.min[r] = f.num(1);
    s.max[r] = f.num(2);
    s.population_id = f.str(3);
  }
  return s;
}

std::string render_normalization(const NormalizationStats& stats) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t k = 0; k < kMetricCount; ++k)
    rows.push_back({std::string(metric_key(k)), fmt(stats.min[k]), fmt(stats.max[k]), stats.population_id});
  return render_csv(kNormHeader, rows);
}

// Reports.

ResultRow result_row(std::string strategy, std::string scenario, const EvalReport& r) {
  return {std::move(strategy), std::move(scenario), r.mae_bpm, r.pcc_defined ? r.pcc : kNaN, r.coverage};
}

std::vector<ResultRow> parse_results(std::string_view text, std::string_view source) {
  return parse_rows<ResultRow>(text, kResultHeader, source, [](const Fields& f) {
    return ResultRow{f.id(0, "strategy"), f.id(1, "scenario"), f.num(2), f.num(3), f.num(4)};
  });
}

std::string render_results(std::span<const ResultRow> rows) {
  std::vector<std::vector<std::string>> out;
  for (const auto& r : rows) out.push_back({r.strategy, r.scenario, fmt(r.mae_bpm), fmt(r.pcc), fmt(r.coverage)});
  return render_csv(kResultHeader, out);
}

std::vector<TraceCsvRow> trace_rows(std::span<const FusionTrace> traces, std::string_view scenario) {
  std::vector<TraceCsvRow> out;
  for (const auto& t : traces)
    for (const auto& r : t.rows) {
      out.push_back({t.strategy, std::string(scenario), t.recording_id, r.window_index, r.chosen ? t.method_ids[*r.chosen] : "",
                     r.fused_rr, r.gt_rr, r.abs_error, r.fmm_score, r.predicted_error});
    }
  return out;
}

std::vector<FusionTrace> traces_from_rows(std::span<const TraceCsvRow> rows, std::string_view strategy, std::string_view scenario) {
  std::vector<FusionTrace> out;
  std::vector<std::string> recs;
  for (const auto& r : rows) {
    if (r.strategy != strategy || r.scenario != scenario) continue;
    const std::size_t i = first_seen(recs, r.recording_id);
    if (i == out.size()) out.push_back({std::string(strategy), r.recording_id, {}, {}});
    FusionTrace& t = out[i];
    TraceRow row;
    row.window_index = r.window_index;
    if (!r.method_id.empty()) row.chosen = first_seen(t.method_ids, r.method_id);
    row.fused_rr = r.rr_bpm;
    row.gt_rr = r.gt_rr_bpm;
    row.abs_error = r.abs_error_bpm;
    row.fmm_score = r.fmm_score;
    row.predicted_error = r.predicted_error;
    t.rows.push_back(std::move(row));
  }
  return out;
}

std::vector<TraceCsvRow> parse_traces(std::string_view text, std::string_view source) {
  return parse_rows<TraceCsvRow>(text, kTraceHeader, source, [](const Fields& f) {
    return TraceCsvRow{f.id(0, "strategy"), f.id(1, "scenario"), f.id(2, "recording_id"), f.index(3), f.str(4),
                       f.num(5),           f.num(6),           f.num(7),                f.num(8),   f.num(9)};
  });
}

std::string render_traces(std::span<const TraceCsvRow> rows) {
  std::string out = join_header(kTraceHeader) + "\n";
  for (const auto& r : rows) {
    out += quote(r.strategy) + "," + quote(r.scenario) + "," + quote(r.recording_id) + "," + std::to_string(r.window_index) + "," +
           quote(r.method_id) + "," + fmt(r.rr_bpm) + "," + fmt(r.gt_rr_bpm) + "," + fmt(r.abs_error_bpm) + "," + fmt(r.fmm_score) +
           "," + fmt(r.predicted_error) + "\n";
  }
  return out;
}

std::vector<FilterRow> parse_filter(std::string_view text, std::string_view source) {
  return parse_rows<FilterRow>(text, kFilterHeader, source, [](const Fields& f) {
    return FilterRow{f.id(0, "score"), f.id(1, "scenario"), f.num(2), f.num(3), f.num(4), f.num(5), f.index(6)};
  });
}

std::string render_filter(std::span<const FilterRow> rows) {
  std::vector<std::vector<std::string>> out;
  for (const auto& r : rows)
    out.push_back({r.score, r.scenario, fmt(r.q), fmt(r.mae_bpm), fmt(r.pcc), fmt(r.coverage), std::to_string(r.window_count)});
  return render_csv(kFilterHeader, out);
}

std::vector<SubsetRow> parse_subsets(std::string_view text, std::string_view source) {
  return parse_rows<SubsetRow>(text, kSubsetHeader, source, [&](const Fields& f) {
    SubsetRow r;
    r.scenario = f.id(0, "scenario");
    for (auto name : split(f.str(1), ',')) {
      const auto k = metric_index_from_name(trim(name));
      if (!k) parse_fail(source, f.line, "unknown metric '" + std::string(trim(name)) + "'");
      r.mask.bits |= 1u << *k;
    }
    if (r.mask.popcount() == 0) parse_fail(source, f.line, "empty metric list");
    r.mae_bpm = f.num(2);
    r.population = f.str(3);
    return r;
  });
}

std::string render_subsets(std::span<const SubsetRow> rows) {
  std::vector<std::vector<std::string>> out;
  for (const auto& r : rows) out.push_back({r.scenario, r.mask.names(), fmt(r.mae_bpm), r.population});
  return render_csv(kSubsetHeader, out);
}

std::vector<BaselineRow> parse_baselines(std::string_view text, std::string_view source) {
  return parse_rows<BaselineRow>(text, kBaselineHeader, source, [](const Fields& f) {
    return BaselineRow{f.id(0, "scenario"), {f.id(1, "method_id"), f.estimator(2), f.num(3)}};
  });
}

std::string render_baselines(std::span<const BaselineRow> rows) {
  std::vector<std::vector<std::string>> out;
  for (const auto& r : rows)
    out.push_back({r.scenario, r.choice.method_id, std::string(to_string(r.choice.estimator)), fmt(r.choice.mae_bpm)});
  return render_csv(kBaselineHeader, out);
}

std::string render_heatmap_csv(const SweepReport& sweep) {
  std::vector<std::vector<std::string>> rows;
  for (std::string_view metric : {"mae_bpm", "pcc"})
    for (std::size_t m = 0; m < sweep.method_ids.size(); ++m) {
      std::vector<std::string> row{std::string(metric), sweep.method_ids[m]};
      for (const auto& cell : sweep.cells[m])
        row.push_back(fmt(metric == "mae_bpm" ? cell.mae_bpm : (cell.pcc_defined ? cell.pcc : kNaN)));
      rows.push_back(std::move(row));
    }
  return render_csv(views(heatmap_header()), rows);
}

SweepReport parse_heatmap_csv(std::string_view text, std::string_view source) {
  const auto header = heatmap_header();
  const auto table = parse_csv(text, views(header), source);
  SweepReport r;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const Fields f{table.rows[i], source, table.lines[i]};
    const bool mae = f.str(0) == "mae_bpm";
    if (!mae && f.str(0) != "pcc") parse_fail(source, f.line, "metric must be mae_bpm or pcc");
    const std::size_t m = first_seen(r.method_ids, f.id(1, "method_id"));
    if (m == r.cells.size()) r.cells.emplace_back();
    for (std::size_t e = 0; e < std::size(kAllEstimators); ++e) {
      const double v = f.num(2 + e);
      if (mae) {
        r.cells[m][e].mae_bpm = v;
      } else {
        r.cells[m][e].pcc_defined = !std::isnan(v);
        r.cells[m][e].pcc = std::isnan(v) ? 0.0 : v;
      }
    }
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < r.cells.size(); ++m)
    for (std::size_t e = 0; e < std::size(kAllEstimators); ++e)
      if (r.cells[m][e].mae_bpm < best) best = r.cells[m][e].mae_bpm, r.best_method = m, r.best_estimator = kAllEstimators[e];
  return r;
}

std::string format_fixed(double v, int digits) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, digits);
  if (ec != std::errc{}) return fmt(v);
  return {buf, end};
}

std::string heatmap_svg(const SweepReport& sweep, std::string_view title) {
  constexpr int kCellW = 110, kCellH = 40, kLeft = 140, kTop = 70;
  const int cols = static_cast<int>(std::size(kAllEstimators));
  const int rows = static_cast<int>(sweep.method_ids.size());
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& row : sweep.cells)
    for (const auto& c : row)
      if (std::isfinite(c.mae_bpm)) lo = std::min(lo, c.mae_bpm), hi = std::max(hi, c.mae_bpm);
  const int width = kLeft + cols * kCellW + 20, height = kTop + rows * kCellH + 20;
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\" font-family=\"sans-serif\" font-size=\"13\">\n"
     << "<text x=\"" << kLeft << "\" y=\"24\" font-size=\"16\">" << xml_escape(title) << " (MAE, bpm)</text>\n";
  for (int e = 0; e < cols; ++e)
    os << "<text x=\"" << kLeft + e * kCellW + kCellW / 2 << "\" y=\"" << kTop - 10 << "\" text-anchor=\"middle\">"
       << to_string(kAllEstimators[e]) << "</text>\n";
  for (int m = 0; m < rows; ++m) {
    const int y = kTop + m * kCellH;
    os << "<text x=\"" << kLeft - 10 << "\" y=\"" << y + kCellH / 2 + 5 << "\" text-anchor=\"end\">"
       << xml_escape(sweep.method_ids[static_cast<std::size_t>(m)]) << "</text>\n";
    for (int e = 0; e < cols; ++e) {
      const double v = sweep.cells[static_cast<std::size_t>(m)][static_cast<std::size_t>(e)].mae_bpm;
      const double t = std::isfinite(v) && hi > lo ? (v - lo) / (hi - lo) : 0.0;
      const int x = kLeft + e * kCellW;
      const bool best = static_cast<std::size_t>(m) == sweep.best_method && kAllEstimators[e] == sweep.best_estimator;
      os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << kCellW << "\" height=\"" << kCellH << "\" fill=\""
         << (std::isfinite(v) ? hex_color(t) : std::string("#dddddd")) << "\" stroke=\"#ffffff\" stroke-width=\"1\"/>\n";
      os << "<text x=\"" << x + kCellW / 2 << "\" y=\"" << y + kCellH / 2 + 5 << "\" text-anchor=\"middle\" fill=\""
         << (t > 0.5 ? "#ffffff" : "#000000") << "\">" << format_fixed(v, 2) << "</text>\n";
      if (best)
        os << "<rect class=\"best\" x=\"" << x + 2 << "\" y=\"" << y + 2 << "\" width=\"" << kCellW - 4 << "\" height=\"" << kCellH - 4
           << "\" fill=\"none\" stroke=\"#000000\" stroke-width=\"3\"/>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

std::string results_svg(std::span<const ResultRow> rows, std::string_view title) {
  constexpr int kBarH = 24, kGap = 8, kLeft = 200, kTop = 44, kBarMax = 400;
  double hi = 0.0;
  for (const auto& r : rows)
    if (std::isfinite(r.mae_bpm)) hi = std::max(hi, r.mae_bpm);
  const int height = kTop + static_cast<int>(rows.size()) * (kBarH + kGap) + 20;
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kLeft + kBarMax + 90 << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"13\">\n"
     << "<text x=\"10\" y=\"24\" font-size=\"16\">" << xml_escape(title) << " (MAE, bpm)</text>\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const int y = kTop + static_cast<int>(i) * (kBarH + kGap);
    const int w = std::isfinite(r.mae_bpm) && hi > 0.0 ? static_cast<int>(std::lround(kBarMax * r.mae_bpm / hi)) : 0;
    os << "<text x=\"" << kLeft - 8 << "\" y=\"" << y + kBarH / 2 + 5 << "\" text-anchor=\"end\">" << xml_escape(r.strategy) << " ("
       << xml_escape(r.scenario) << ")</text>\n"
       << "<rect x=\"" << kLeft << "\" y=\"" << y << "\" width=\"" << w << "\" height=\"" << kBarH << "\" fill=\"#3a6ea5\"/>\n"
       << "<text x=\"" << kLeft + w + 6 << "\" y=\"" << y + kBarH / 2 + 5 << "\">" << format_fixed(r.mae_bpm, 2) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string render_report(std::span<const ResultRow> results, std::span<const FilterRow> filter) {
  std::ostringstream os;
  bool undefined = false;
  os << "# Results\n\n| Strategy | Scenario | MAE (bpm) | PCC | Coverage |\n|---|---|---:|---:|---:|\n";
  for (const auto& r : results) {
    undefined = undefined || std::isnan(r.pcc);
    os << "| " << r.strategy << " | " << r.scenario << " | " << format_fixed(r.mae_bpm, 2) << " | " << pcc_text(r.pcc) << " | "
       << format_fixed(r.coverage, 2) << " |\n";
  }
  if (!filter.empty()) {
    os << "\n# Low-quality segment filtering\n\nMAE (bpm) / PCC after dropping the worst q of windows.\n\n| Score | Scenario |";
    std::vector<double> grid;
    for (const auto& f : filter)
      if (std::find(grid.begin(), grid.end(), f.q) == grid.end()) grid.push_back(f.q);
    for (double q : grid) os << " " << format_fixed(100.0 * q, 0) << " % |";
    os << "\n|---|---|";
    for (std::size_t i = 0; i < grid.size(); ++i) os << "---:|";
    os << "\n";
    std::vector<std::pair<std::string, std::string>> keys;
    for (const auto& f : filter)
      if (std::find(keys.begin(), keys.end(), std::make_pair(f.score, f.scenario)) == keys.end()) keys.emplace_back(f.score, f.scenario);
    for (const auto& [score, scenario] : keys) {
      os << "| " << score << " | " << scenario << " |";
      for (double q : grid) {
        const auto it = std::find_if(filter.begin(), filter.end(),
                                     [&](const FilterRow& f) { return f.score == score && f.scenario == scenario && f.q == q; });
        if (it == filter.end()) {
          os << " - |";
          continue;
        }
        undefined = undefined || std::isnan(it->pcc);
        os << " " << format_fixed(it->mae_bpm, 2) << " / " << pcc_text(it->pcc) << " |";
      }
      os << "\n";
    }
  }
  if (undefined) os << "\n\\* PCC undefined (constant series), shown as 0.00.\n";
  return os.str();
}

}  // namespace respq
