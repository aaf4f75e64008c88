#include "respq/predict.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "respq/error.hpp"
#include "respq/text.hpp"

namespace respq {

// ---------------------------------------------------------------------------
// Random numbers

double SeededRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double SeededRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * M_PI * u2);
  has_spare_ = true;
  return r * std::cos(2.0 * M_PI * u2);
}

std::size_t SeededRng::index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Scaler

StandardScaler fit_scaler(const Eigen::MatrixXd& features) {
  if (features.rows() < 2) throw Error(ErrorCode::TooFewSamples, "scaler needs at least 2 samples");
  StandardScaler s;
  s.mean = features.colwise().mean().transpose();
  s.std.resize(features.cols());
  s.constant.assign(static_cast<std::size_t>(features.cols()), false);
  for (Eigen::Index c = 0; c < features.cols(); ++c) {
    const double var = (features.col(c).array() - s.mean(c)).square().mean();
    const double sd = std::sqrt(var);
    if (!(sd > 1e-12 * std::max(1.0, std::abs(s.mean(c))))) {
      s.constant[static_cast<std::size_t>(c)] = true;
      s.std(c) = 1.0;
      s.mean(c) = 0.0;
    } else {
      s.std(c) = sd;
    }
  }
  return s;
}

Eigen::MatrixXd StandardScaler::transform(const Eigen::MatrixXd& x) const {
  if (x.cols() != mean.size()) throw Error(ErrorCode::ShapeMismatch, "scaler arity mismatch");
  return (x.rowwise() - mean.transpose()).array().rowwise() / std.transpose().array();
}

Eigen::MatrixXd StandardScaler::inverse_transform(const Eigen::MatrixXd& z) const {
  if (z.cols() != mean.size()) throw Error(ErrorCode::ShapeMismatch, "scaler arity mismatch");
  return (z.array().rowwise() * std.transpose().array()).matrix().rowwise() + mean.transpose();
}

void TrainConfig::validate() const {
  if (epochs <= 0 || !(learning_rate > 0.0) || batch_size <= 0 || !(validation_fraction >= 0.0 && validation_fraction <= 0.5)) {
    throw Error(ErrorCode::InvalidArgument, "train config needs positive epochs/learning rate/batch and validation in [0, 0.5]");
  }
}

namespace {

// Adam state over a flat parameter vector.
struct Adam {
  explicit Adam(std::size_t n, double lr) : m(n, 0.0), v(n, 0.0), rate(lr) {}
  std::vector<double> m, v;
  double rate;
  long step = 0;

  template <typename Param>
  void apply(const std::vector<double>& grad, Param&& param) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++step;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
    for (std::size_t i = 0; i < grad.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
      v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
      param(i) -= rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }
};

std::vector<std::size_t> shuffled(std::size_t n, SeededRng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
  return idx;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

Eigen::VectorXd take_rows(const Eigen::VectorXd& y, std::span<const std::size_t> rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(rows[i]));
  return out;
}

// Splits a seeded permutation into (train, validation).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_rows(std::size_t n, double fraction, SeededRng& rng) {
  auto idx = shuffled(n, rng);
  const auto hold = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  std::vector<std::size_t> val(idx.end() - static_cast<std::ptrdiff_t>(hold), idx.end());
  idx.resize(n - hold);
  std::sort(idx.begin(), idx.end());
  std::sort(val.begin(), val.end());
  return {idx, val};
}

}  // namespace

// ---------------------------------------------------------------------------
// Regressor

std::size_t RegressorModel::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  return n;
}

double& RegressorModel::parameter(std::size_t index) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const auto nw = static_cast<std::size_t>(weights[l].size());
    if (index < nw) return weights[l].data()[index];
    index -= nw;
    const auto nb = static_cast<std::size_t>(biases[l].size());
    if (index < nb) return biases[l].data()[index];
    index -= nb;
  }
  throw Error(ErrorCode::InvalidArgument, "parameter index out of range");
}

double RegressorModel::parameter(std::size_t index) const { return const_cast<RegressorModel*>(this)->parameter(index); }

RegressorModel init_regressor(std::vector<int> layers, std::uint64_t seed) {
  if (layers.size() < 2 || layers.back() != 1) throw Error(ErrorCode::ShapeMismatch, "regressor needs >= 2 layers ending in 1");
  RegressorModel model;
  model.layers = std::move(layers);
  SeededRng rng(seed);
  for (std::size_t l = 0; l + 1 < model.layers.size(); ++l) {
    const int fan_in = model.layers[l];
    const int fan_out = model.layers[l + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-limit, limit);
    Eigen::VectorXd b(fan_out);
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = rng.uniform(-limit, limit);
    model.weights.push_back(std::move(w));
    model.biases.push_back(std::move(b));
  }
  model.meta.seed = seed;
  return model;
}

namespace {

// Activations per layer, columns are samples.
std::vector<Eigen::MatrixXd> forward(const RegressorModel& model, const Eigen::MatrixXd& x) {
  std::vector<Eigen::MatrixXd> acts;
  acts.push_back(x.transpose());
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    Eigen::MatrixXd z = (model.weights[l] * acts.back()).colwise() + model.biases[l];
    if (l + 1 < model.weights.size()) z = z.cwiseMax(0.0);
    acts.push_back(std::move(z));
  }
  return acts;
}

void check_regressor_input(const RegressorModel& model, const Eigen::MatrixXd& x) {
  if (model.weights.empty() || x.cols() != model.input_arity()) {
    throw Error(ErrorCode::ShapeMismatch, "features have " + std::to_string(x.cols()) + " columns, model expects " +
                                              std::to_string(model.input_arity()));
  }
}

}  // namespace

double regressor_loss(const RegressorModel& model, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<double>* grad) {
  check_regressor_input(model, x);
  if (y.size() != x.rows()) throw Error(ErrorCode::ShapeMismatch, "targets and features differ in length");
  const auto acts = forward(model, x);
  const double n = static_cast<double>(x.rows());
  const Eigen::RowVectorXd resid = acts.back().row(0) - y.transpose();
  const double loss = resid.squaredNorm() / n;
  if (!grad) return loss;

  grad->assign(model.parameter_count(), 0.0);
  const std::size_t layers = model.weights.size();
  std::vector<std::size_t> offsets(layers);
  std::size_t off = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    offsets[l] = off;
    off += static_cast<std::size_t>(model.weights[l].size() + model.biases[l].size());
  }
  Eigen::MatrixXd delta = (2.0 / n) * resid;
  for (std::size_t l = layers; l-- > 0;) {
    const Eigen::MatrixXd gw = delta * acts[l].transpose();
    const Eigen::VectorXd gb = delta.rowwise().sum();
    std::copy(gw.data(), gw.data() + gw.size(), grad->begin() + static_cast<std::ptrdiff_t>(offsets[l]));
    std::copy(gb.data(), gb.data() + gb.size(), grad->begin() + static_cast<std::ptrdiff_t>(offsets[l] + gw.size()));
    if (l > 0) {
      Eigen::MatrixXd back = model.weights[l].transpose() * delta;
      delta = back.array() * (acts[l].array() > 0.0).cast<double>();
    }
  }
  return loss;
}

RegressorModel train_regressor(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets, const TrainConfig& cfg,
                               std::vector<int> hidden) {
  cfg.validate();
  if (targets.size() != features.rows()) throw Error(ErrorCode::ShapeMismatch, "targets and features differ in length");
  if (features.rows() < 10) throw Error(ErrorCode::TooFewSamples, "regressor needs at least 10 samples");
  std::vector<int> layers{static_cast<int>(features.cols())};
  layers.insert(layers.end(), hidden.begin(), hidden.end());
  layers.push_back(1);
  RegressorModel model = init_regressor(std::move(layers), cfg.seed);

  SeededRng rng(mix_seed(cfg.seed, 1));
  const auto [train_rows, val_rows] = split_rows(static_cast<std::size_t>(features.rows()), cfg.validation_fraction, rng);
  Adam adam(model.parameter_count(), cfg.learning_rate);
  std::vector<double> grad;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = shuffled(train_rows.size(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      std::vector<std::size_t> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size)); ++i)
        batch.push_back(train_rows[order[i]]);
      const double loss = regressor_loss(model, take_rows(features, batch), take_rows(targets, batch), &grad);
      if (!std::isfinite(loss)) throw Error(ErrorCode::NonFiniteLoss, "loss diverged at epoch " + std::to_string(epoch));
      adam.apply(grad, [&](std::size_t i) -> double& { return model.parameter(i); });
    }
  }
  model.meta = {cfg.seed, cfg.epochs, cfg.learning_rate, cfg.batch_size,
                regressor_loss(model, take_rows(features, train_rows), take_rows(targets, train_rows)), 0.0};
  if (!val_rows.empty()) model.meta.validation_loss = regressor_loss(model, take_rows(features, val_rows), take_rows(targets, val_rows));
  if (!std::isfinite(model.meta.final_loss)) throw Error(ErrorCode::NonFiniteLoss, "final loss is not finite");
  return model;
}

Eigen::VectorXd predict_mae(const RegressorModel& model, const Eigen::MatrixXd& features) {
  check_regressor_input(model, features);
  return forward(model, features).back().row(0).transpose();
}

// ---------------------------------------------------------------------------
// Classifier

double& ClassifierModel::parameter(std::size_t index) {
  const auto nw = static_cast<std::size_t>(weights.size());
  if (index < nw) return weights.data()[index];
  if (index - nw < static_cast<std::size_t>(bias.size())) return bias.data()[index - nw];
  throw Error(ErrorCode::InvalidArgument, "parameter index out of range");
}

std::vector<int> argmin_labels(const Eigen::MatrixXd& window_errors) {
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(window_errors.rows()));
  for (Eigen::Index r = 0; r < window_errors.rows(); ++r) {
    int best = -1;
    for (Eigen::Index c = 0; c < window_errors.cols(); ++c) {
      const double e = window_errors(r, c);
      if (!std::isfinite(e)) continue;
      if (best < 0 || e < window_errors(r, best)) best = static_cast<int>(c);
    }
    labels.push_back(best);
  }
  return labels;
}

Eigen::MatrixXd predict_proba(const ClassifierModel& model, const Eigen::MatrixXd& features) {
  if (features.cols() != model.input_arity()) {
    throw Error(ErrorCode::ShapeMismatch, "features have " + std::to_string(features.cols()) + " columns, model expects " +
                                              std::to_string(model.input_arity()));
  }
  Eigen::MatrixXd logits = (features * model.weights.transpose()).rowwise() + model.bias.transpose();
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double mx = logits.row(r).maxCoeff();
    logits.row(r) = (logits.row(r).array() - mx).exp();
    logits.row(r) /= logits.row(r).sum();
  }
  return logits;
}

double classifier_loss(const ClassifierModel& model, const Eigen::MatrixXd& x, std::span<const int> labels,
                       std::vector<double>* grad) {
  if (static_cast<Eigen::Index>(labels.size()) != x.rows()) throw Error(ErrorCode::ShapeMismatch, "labels and features differ in length");
  const Eigen::MatrixXd prob = predict_proba(model, x);
  const double n = static_cast<double>(x.rows());
  double loss = 0.0;
  Eigen::MatrixXd delta = prob;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const int y = labels[static_cast<std::size_t>(r)];
    loss -= std::log(std::max(prob(r, y), 1e-300));
    delta(r, y) -= 1.0;
  }
  loss /= n;
  if (grad) {
    delta /= n;
    const Eigen::MatrixXd gw = delta.transpose() * x;  // classes x inputs
    const Eigen::VectorXd gb = delta.colwise().sum().transpose();
    grad->assign(model.parameter_count(), 0.0);
    std::copy(gw.data(), gw.data() + gw.size(), grad->begin());
    std::copy(gb.data(), gb.data() + gb.size(), grad->begin() + gw.size());
  }
  return loss;
}

ClassifierModel train_classifier(const Eigen::MatrixXd& features, std::span<const int> labels, int classes,
                                 const TrainConfig& cfg) {
  cfg.validate();
  if (static_cast<Eigen::Index>(labels.size()) != features.rows()) throw Error(ErrorCode::ShapeMismatch, "labels and features differ in length");
  if (features.rows() < 10) throw Error(ErrorCode::TooFewSamples, "classifier needs at least 10 windows");
  for (int y : labels)
    if (y < 0 || y >= classes) throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(y) + " outside [0, " + std::to_string(classes) + ")");

  ClassifierModel model;
  model.weights = Eigen::MatrixXd::Zero(classes, features.cols());
  SeededRng rng(mix_seed(cfg.seed, 2));
  const auto [train_rows, val_rows] = split_rows(static_cast<std::size_t>(features.rows()), cfg.validation_fraction, rng);
  // Bias starts at add-one smoothed log class frequencies.
  model.bias = Eigen::VectorXd::Ones(classes);
  for (std::size_t r : train_rows) model.bias(labels[r]) += 1.0;
  model.bias = (model.bias / static_cast<double>(train_rows.size() + static_cast<std::size_t>(classes))).array().log();
  auto labels_of = [&](std::span<const std::size_t> rows) {
    std::vector<int> out;
    for (std::size_t r : rows) out.push_back(labels[r]);
    return out;
  };
  Adam adam(model.parameter_count(), cfg.learning_rate);
  std::vector<double> grad;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = shuffled(train_rows.size(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      std::vector<std::size_t> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size)); ++i)
        batch.push_back(train_rows[order[i]]);
      const double loss = classifier_loss(model, take_rows(features, batch), labels_of(batch), &grad);
      if (!std::isfinite(loss)) throw Error(ErrorCode::NonFiniteLoss, "loss diverged at epoch " + std::to_string(epoch));
      adam.apply(grad, [&](std::size_t i) -> double& { return model.parameter(i); });
    }
  }
  model.meta = {cfg.seed, cfg.epochs, cfg.learning_rate, cfg.batch_size,
                classifier_loss(model, take_rows(features, train_rows), labels_of(train_rows)), 0.0};
  if (!val_rows.empty()) model.meta.validation_loss = classifier_loss(model, take_rows(features, val_rows), labels_of(val_rows));
  return model;
}

std::vector<int> predict_best_method(const ClassifierModel& model, const Eigen::MatrixXd& features) {
  const Eigen::MatrixXd prob = predict_proba(model, features);
  std::vector<int> out;
  for (Eigen::Index r = 0; r < prob.rows(); ++r) {
    int best = 0;
    for (Eigen::Index c = 1; c < prob.cols(); ++c)
      if (prob(r, c) > prob(r, best)) best = static_cast<int>(c);
    out.push_back(best);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

void write_block(std::ostream& os, const std::string& name, const Eigen::MatrixXd& m) {
  os << name << " = " << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) os << (c ? " " : "") << format_double(m(r, c));
    os << '\n';
  }
}

void write_meta(std::ostream& os, const TrainMeta& meta) {
  os << "seed = " << meta.seed << '\n'
     << "epochs = " << meta.epochs << '\n'
     << "learning_rate = " << format_double(meta.learning_rate) << '\n'
     << "batch_size = " << meta.batch_size << '\n'
     << "final_loss = " << format_double(meta.final_loss) << '\n'
     << "validation_loss = " << format_double(meta.validation_loss) << '\n';
}

// Line-oriented reader for the format above.
class ModelReader {
 public:
  explicit ModelReader(std::istream& is) : is_(is) {}

  std::pair<std::string, std::string> entry() {
    std::string line;
    while (std::getline(is_, line)) {
      ++line_no_;
      const auto t = trim(line);
      if (t.empty() || t.front() == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string_view::npos) fail("expected 'key = value'");
      return {std::string(trim(t.substr(0, eq))), std::string(trim(t.substr(eq + 1)))};
    }
    fail("unexpected end of model file");
  }

  std::string expect(const std::string& key) {
    auto [k, v] = entry();
    if (k != key) fail("expected key '" + key + "', found '" + k + "'");
    return v;
  }

  Eigen::MatrixXd block(const std::string& key) {
    std::istringstream dims(expect(key));
    Eigen::Index rows = 0, cols = 0;
    if (!(dims >> rows >> cols) || rows < 0 || cols < 0) fail("bad block dimensions for '" + key + "'");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      std::string line;
      if (!std::getline(is_, line)) fail("truncated block '" + key + "'");
      ++line_no_;
      std::istringstream ls(line);
      std::string tok;
      for (Eigen::Index c = 0; c < cols; ++c) {
        if (!(ls >> tok)) fail("short row in block '" + key + "'");
        m(r, c) = parse_double(tok);
      }
    }
    return m;
  }

  TrainMeta meta() {
    TrainMeta m;
    m.seed = static_cast<std::uint64_t>(std::stoull(expect("seed")));
    m.epochs = static_cast<int>(parse_int(expect("epochs")));
    m.learning_rate = parse_double(expect("learning_rate"));
    m.batch_size = static_cast<int>(parse_int(expect("batch_size")));
    m.final_loss = parse_double(expect("final_loss"));
    m.validation_loss = parse_double(expect("validation_loss"));
    return m;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::ParseError, "model line " + std::to_string(line_no_) + ": " + what);
  }

 private:
  std::istream& is_;
  int line_no_ = 0;
};

}  // namespace

void write_scaler(std::ostream& os, const StandardScaler& s) {
  os << "kind = scaler\n";
  write_block(os, "mean", s.mean.transpose());
  write_block(os, "std", s.std.transpose());
  Eigen::MatrixXd flags(1, static_cast<Eigen::Index>(s.constant.size()));
  for (std::size_t i = 0; i < s.constant.size(); ++i) flags(0, static_cast<Eigen::Index>(i)) = s.constant[i] ? 1.0 : 0.0;
  write_block(os, "constant", flags);
}

StandardScaler read_scaler(std::istream& is) {
  ModelReader r(is);
  if (r.expect("kind") != "scaler") r.fail("expected a scaler section");
  StandardScaler s;
  s.mean = r.block("mean").row(0).transpose();
  s.std = r.block("std").row(0).transpose();
  const Eigen::MatrixXd flags = r.block("constant");
  for (Eigen::Index i = 0; i < flags.cols(); ++i) s.constant.push_back(flags(0, i) != 0.0);
  if (s.std.size() != s.mean.size() || static_cast<Eigen::Index>(s.constant.size()) != s.mean.size()) r.fail("scaler blocks disagree in size");
  return s;
}

void write_regressor(std::ostream& os, const RegressorModel& m) {
  os << "kind = regressor\nlayers =";
  for (int l : m.layers) os << ' ' << l;
  os << '\n';
  write_meta(os, m.meta);
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    write_block(os, "weights." + std::to_string(l), m.weights[l]);
    write_block(os, "bias." + std::to_string(l), m.biases[l].transpose());
  }
}

RegressorModel read_regressor(std::istream& is) {
  ModelReader r(is);
  if (r.expect("kind") != "regressor") r.fail("expected a regressor section");
  RegressorModel m;
  m.layers.clear();
  std::istringstream ls(r.expect("layers"));
  for (int v; ls >> v;) m.layers.push_back(v);
  if (m.layers.size() < 2) r.fail("regressor needs at least two layers");
  m.meta = r.meta();
  for (std::size_t l = 0; l + 1 < m.layers.size(); ++l) {
    m.weights.push_back(r.block("weights." + std::to_string(l)));
    m.biases.push_back(r.block("bias." + std::to_string(l)).row(0).transpose());
    if (m.weights[l].rows() != m.layers[l + 1] || m.weights[l].cols() != m.layers[l] || m.biases[l].size() != m.layers[l + 1]) {
      r.fail("layer " + std::to_string(l) + " shape disagrees with 'layers'");
    }
  }
  return m;
}

void write_classifier(std::ostream& os, const ClassifierModel& m) {
  os << "kind = classifier\n";
  write_meta(os, m.meta);
  write_block(os, "weights", m.weights);
  write_block(os, "bias", m.bias.transpose());
}

ClassifierModel read_classifier(std::istream& is) {
  ModelReader r(is);
  if (r.expect("kind") != "classifier") r.fail("expected a classifier section");
  ClassifierModel m;
  m.meta = r.meta();
  m.weights = r.block("weights");
  m.bias = r.block("bias").row(0).transpose();
  if (m.bias.size() != m.weights.rows()) r.fail("bias length differs from class count");
  return m;
}

}  // namespace respq
