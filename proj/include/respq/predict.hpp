#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

namespace respq {

/// Per-column z-scoring. Columns with zero spread are flagged and passed
/// through unscaled (std treated as 1, mean not subtracted).
struct StandardScaler {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;
  std::vector<bool> constant;

  Eigen::Index arity() const noexcept { return mean.size(); }
  Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd inverse_transform(const Eigen::MatrixXd& z) const;
};

StandardScaler fit_scaler(const Eigen::MatrixXd& features);

struct TrainConfig {
  std::uint64_t seed = 42;
  int epochs = 200;
  double learning_rate = 1e-3;
  int batch_size = 32;
  double validation_fraction = 0.0;

  void validate() const;
};

struct TrainMeta {
  std::uint64_t seed = 0;
  int epochs = 0;
  double learning_rate = 0.0;
  int batch_size = 0;
  double final_loss = 0.0;
  double validation_loss = 0.0;
};

/// Feedforward network with rectifier hidden layers and a linear scalar output.
struct RegressorModel {
  std::vector<int> layers{10, 32, 16, 1};
  std::vector<Eigen::MatrixXd> weights;  // weights[l] is layers[l+1] x layers[l]
  std::vector<Eigen::VectorXd> biases;
  TrainMeta meta;

  int input_arity() const noexcept { return layers.front(); }
  std::size_t parameter_count() const;
  /// Flat parameter access in layer order (weights column-major, then bias).
  double& parameter(std::size_t index);
  double parameter(std::size_t index) const;
};

/// Multinomial logistic regression over concatenated per-method features.
struct ClassifierModel {
  Eigen::MatrixXd weights;  // classes x inputs
  Eigen::VectorXd bias;     // classes
  TrainMeta meta;

  int input_arity() const noexcept { return static_cast<int>(weights.cols()); }
  int classes() const noexcept { return static_cast<int>(weights.rows()); }
  std::size_t parameter_count() const { return static_cast<std::size_t>(weights.size() + bias.size()); }
  double& parameter(std::size_t index);
};

/// Small, platform-independent generator helpers so seeded training and
/// synthesis reproduce bit-for-bit everywhere.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}
  double uniform();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  std::size_t index(std::size_t n);  // [0, n)
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

RegressorModel init_regressor(std::vector<int> layers, std::uint64_t seed);

/// Mean squared error over rows and its gradient (flat, parameter order).
double regressor_loss(const RegressorModel& model, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      std::vector<double>* grad = nullptr);

RegressorModel train_regressor(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets, const TrainConfig& cfg = {},
                               std::vector<int> hidden = {32, 16});

Eigen::VectorXd predict_mae(const RegressorModel& model, const Eigen::MatrixXd& features);

/// Labels = index of the smallest error per row; ties go to the lowest index.
std::vector<int> argmin_labels(const Eigen::MatrixXd& window_errors);

/// Mean cross-entropy and its gradient (weights column-major, then bias).
double classifier_loss(const ClassifierModel& model, const Eigen::MatrixXd& x, std::span<const int> labels,
                       std::vector<double>* grad = nullptr);

ClassifierModel train_classifier(const Eigen::MatrixXd& features, std::span<const int> labels, int classes,
                                 const TrainConfig& cfg = {});

/// Row-wise softmax probabilities.
Eigen::MatrixXd predict_proba(const ClassifierModel& model, const Eigen::MatrixXd& features);
std::vector<int> predict_best_method(const ClassifierModel& model, const Eigen::MatrixXd& features);

// Flat text serialization: key = value lines plus whitespace-separated
// blocks, every number written with 17 significant digits.
void write_scaler(std::ostream& os, const StandardScaler& s);
void write_regressor(std::ostream& os, const RegressorModel& m);
void write_classifier(std::ostream& os, const ClassifierModel& m);
StandardScaler read_scaler(std::istream& is);
RegressorModel read_regressor(std::istream& is);
ClassifierModel read_classifier(std::istream& is);

}  // namespace respq
