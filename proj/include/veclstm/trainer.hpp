#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

#include "veclstm/models.hpp"

namespace veclstm {

struct TrainConfig {
  int epochs = 20;
  int batch_size = 512;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double test_fraction = 0.2;
  double validation_fraction = 0.1;  // of the training split
  std::uint64_t seed = 42;

  void validate() const;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seeded shuffle of 0..n-1, then the first round(n * fraction) go to test.
SplitIndices train_test_split(std::size_t n, double test_fraction, std::uint64_t seed);

template <typename T>
std::vector<T> take(const std::vector<T>& values, std::span<const std::size_t> indices) {
  std::vector<T> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(values[i]);
  return out;
}

/// Per-feature (x - mean) / std with the population deviation. Features
/// are rows, samples are columns.
class StandardScaler {
 public:
  void fit(const Eigen::MatrixXd& samples);
  Eigen::MatrixXd transform(const Eigen::MatrixXd& samples) const;
  bool fitted() const { return fitted_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& scale() const { return scale_; }

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd scale_;  // 0 marks a constant feature
  bool fitted_ = false;
};

Eigen::VectorXd one_hot(int code, int classes = kNumClasses);
Eigen::MatrixXd one_hot(std::span<const int> codes, int classes = kNumClasses);

/// Indices of a class-balanced resample: every original index in order,
/// followed by seeded with-replacement draws from each minority class until
/// it matches the majority count.
std::vector<std::size_t> random_oversample(std::span<const int> labels, std::uint64_t seed);

struct AdamState {
  std::vector<Eigen::VectorXd> m;
  std::vector<Eigen::VectorXd> v;
  std::int64_t t = 0;
};

/// t += 1; m = b1 m + (1-b1) g; v = b2 v + (1-b2) g^2;
/// theta -= lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, const TrainConfig& config);

/// Supplies mini-batches for a fixed set of samples.
class BatchSource {
 public:
  virtual ~BatchSource() = default;

  virtual std::size_t size() const = 0;
  virtual const std::vector<int>& labels() const = 0;
  /// Called once before each training epoch.
  virtual void begin_epoch(int /*epoch*/) {}
  /// Rows index this source's samples, 0..size()-1.
  virtual Batch batch(std::span<const std::size_t> rows) const = 0;
};

/// Batches gathered from precomputed feature columns.
class TensorBatchSource : public BatchSource {
 public:
  /// `sequence` is features x samples (one time step); `grid` is G*G x
  /// samples in row-major heatmap order, or empty.
  TensorBatchSource(Eigen::MatrixXd sequence, Eigen::MatrixXd grid, std::vector<int> labels);

  std::size_t size() const override { return labels_.size(); }
  const std::vector<int>& labels() const override { return labels_; }
  Batch batch(std::span<const std::size_t> rows) const override;

 private:
  Eigen::MatrixXd sequence_;
  Eigen::MatrixXd grid_;
  std::vector<int> labels_;
  int grid_size_ = 0;
};

/// Splits a G*G x n block of row-major heatmaps into G positions of G
/// channels.
nn::Sequence<double> heatmaps_to_sequence(const Eigen::MatrixXd& heatmaps);

struct EpochStats {
  double loss = 0.0;
  double accuracy = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  double validation_accuracy = 0.0;
  double train_seconds = 0.0;
  double vectorization_seconds = 0.0;
};

/// Mini-batch Adam on softmax cross-entropy. Batch order is reshuffled each
/// epoch from the config seed; results are a pure function of the inputs.
TrainReport train_model(Model& model, BatchSource& train, BatchSource* validation, const TrainConfig& config);

/// Class probabilities for every sample of `source`, classes x samples.
Eigen::MatrixXd predict(const Model& model, const BatchSource& source, int batch_size);

std::vector<int> argmax_columns(const Eigen::MatrixXd& probs);

}  // namespace veclstm
