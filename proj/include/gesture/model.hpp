#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gesture/audio.hpp"
#include "gesture/common.hpp"
#include "gesture/constants.hpp"

namespace gesture {

enum class Precision { Float64, Float32 };

struct ModelConfig {
  int input_dim = 16;
  int ff_size = constants::kFeedForwardSize;
  int hidden_size = constants::kHiddenSize;
  double input_dropout = constants::kInputDropout;
  double output_dropout = constants::kOutputDropout;
  double learning_rate = constants::kLearningRate;
  int epochs = constants::kEpochsOther;
  int batch_size = constants::kBatchSize;
  std::uint64_t seed = 0;
  // Arithmetic used inside train(); stored weights are always float64.
  Precision precision = Precision::Float32;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

/// Epochs for a parameter: 70 for velocity and initial acceleration, 140 otherwise.
int default_epochs(ParamKind p);

/// Min-max scaling of the two per-hand targets.
struct Normalizer {
  std::array<double, 2> min{0.0, 0.0};
  std::array<double, 2> max{0.0, 0.0};
  double epsilon = 1e-12;
  bool fitted = false;

  static Normalizer fit(std::span<const std::array<double, 2>> targets);
  double span(int hand) const;
  std::array<double, 2> apply(const std::array<double, 2>& v) const;
  std::array<double, 2> invert(const std::array<double, 2>& y) const;
  bool operator==(const Normalizer&) const = default;
};

enum class Tensor : int {
  InNormGamma,
  InNormBeta,
  FfWeight,
  FfBias,
  FwdInput,
  FwdRecurrent,
  FwdBias,
  BwdInput,
  BwdRecurrent,
  BwdBias,
  OutNormGamma,
  OutNormBeta,
  OutWeight,
  OutBias,
  // running statistics, not trained
  InNormMean,
  InNormVar,
  OutNormMean,
  OutNormVar,
};
inline constexpr int kTrainableTensors = 14;
inline constexpr int kTensorCount = 18;
std::string_view tensor_name(int t);

using Matrix = Eigen::MatrixXd;
using TensorSet = std::array<Matrix, kTensorCount>;
using GradientSet = std::array<Matrix, kTrainableTensors>;

/// Expected shape of each tensor for a config (vectors are n x 1).
std::pair<int, int> tensor_shape(const ModelConfig& c, int t);

struct Network {
  ModelConfig config;
  TensorSet tensors;

  Matrix& operator[](Tensor t) { return tensors[static_cast<std::size_t>(t)]; }
  const Matrix& operator[](Tensor t) const { return tensors[static_cast<std::size_t>(t)]; }

  /// Uniform(-k, k), k = 1/sqrt(fan_in); norm gammas 1, betas 0, running var 1.
  static Network initialize(const ModelConfig& config);
  static Network zeros(const ModelConfig& config);
  void check_shapes() const;
  bool operator==(const Network&) const = default;
};

enum class Mode { Train, Infer };

/// Each entry is one window, T x D; all entries must share T.
using BatchInputs = std::span<const FeatureRows* const>;

struct ForwardOptions {
  Mode mode = Mode::Infer;
  std::uint64_t dropout_seed = 0;  // train mode only
  bool dropout = true;             // train mode only
};

/// 2 x B sigmoid outputs (row 0 left, row 1 right).
Eigen::Matrix2Xd forward(const Network& net, BatchInputs inputs, const ForwardOptions& options = {});

struct LossResult {
  double loss = 0.0;
  GradientSet gradients;
  Eigen::Matrix2Xd predictions;
  // Batch statistics of the two norm layers (train mode), for running-stat updates.
  Eigen::VectorXd in_mean, in_var, out_mean, out_var;
  long in_count = 0;
  long out_count = 0;
};

/// MSE over batch and both hands with full backpropagation through time.
/// Train mode with a fixed dropout seed makes this a deterministic function
/// of the weights.
LossResult loss_and_gradients(const Network& net, BatchInputs inputs, const Eigen::Matrix2Xd& targets,
                              const ForwardOptions& options = {Mode::Train, 0, true});
/// Same computation in single precision.
LossResult loss_and_gradients_f32(const Network& net, BatchInputs inputs, const Eigen::Matrix2Xd& targets,
                                  const ForwardOptions& options = {Mode::Train, 0, true});

struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;
  Network net;
  Normalizer normalizer;
  FeatureStandardizer standardizer;
  std::string target;       // parameter name
  std::string feature_set;  // feature set tag
  int epoch = 0;            // epoch whose weights are stored, 0 = initialization
  double validation_mse = 0.0;

  bool operator==(const Checkpoint& o) const {
    return net == o.net && normalizer == o.normalizer && standardizer.mean == o.standardizer.mean &&
           standardizer.scale == o.standardizer.scale && target == o.target && feature_set == o.feature_set &&
           epoch == o.epoch && validation_mse == o.validation_mse;
  }
};

/// "GPCK", u32 version, u64 header length, JSON header, then float64
/// little-endian tensor data in header order.
std::string encode_checkpoint(const Checkpoint& ck);
Checkpoint decode_checkpoint(std::string_view bytes);
void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

struct TrainingSet {
  std::vector<const FeatureRows*> inputs;
  std::vector<std::array<double, 2>> targets;  // already normalized
  std::size_t size() const { return inputs.size(); }
};

struct EpochLog {
  int epoch = 0;
  double train_mse = 0.0;
  double validation_mse = 0.0;
};

struct TrainResult {
  Network best;
  int best_epoch = 0;
  double best_validation_mse = 0.0;
  std::vector<EpochLog> log;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Adam with best-validation selection. Deterministic given config.seed.
TrainResult train(const ModelConfig& config, const TrainingSet& train_set, const TrainingSet& validation_set,
                  const EpochCallback& on_epoch = {});

/// Infer-mode MSE over a set, evaluated in batches.
double evaluate_mse(const Network& net, const TrainingSet& set, int batch_size = constants::kBatchSize);

/// Infer-mode outputs inverted through the normalizer into physical units.
std::vector<std::array<double, 2>> predict(const Checkpoint& ck, BatchInputs windows,
                                           int batch_size = constants::kBatchSize);

std::string write_training_log(std::span<const EpochLog> log);

}  // namespace gesture
