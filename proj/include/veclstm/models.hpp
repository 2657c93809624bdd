#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "veclstm/nn/activation.hpp"
#include "veclstm/nn/checkpoint.hpp"
#include "veclstm/nn/conv1d.hpp"
#include "veclstm/nn/dense.hpp"
#include "veclstm/nn/lstm.hpp"
#include "veclstm/types.hpp"

namespace veclstm {

enum class Architecture { LstmBaseline, VecLstm, Hybrid };

std::string_view to_string(Architecture arch);
/// Accepts the CLI names "lstm", "veclstm" and "hybrid".
std::optional<Architecture> parse_architecture(std::string_view name);

enum class LayerKind { Lstm, Conv1d, MaxPool1d, Flatten, Dense };

std::string_view to_string(LayerKind kind);

struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  int units = 0;   // LSTM units, conv filters or dense outputs
  int kernel = 0;  // conv width
  int pool = 0;    // pooling window
  nn::Activation activation = nn::Activation::Identity;
  bool return_sequences = false;

  bool operator==(const LayerSpec&) const = default;
};

/// Layer description of one of the three evaluated architectures. The
/// sequence branch consumes (timesteps, features); the optional grid branch
/// consumes a grid_size x grid_size heatmap read as grid_size positions of
/// grid_size channels. Branch outputs are concatenated before the head.
struct ModelSpec {
  Architecture architecture = Architecture::LstmBaseline;
  int timesteps = 1;
  int features = 1;
  int grid_size = 0;  // 0 when there is no grid branch
  std::vector<LayerSpec> sequence_branch;
  std::vector<LayerSpec> grid_branch;
  std::vector<LayerSpec> head;  // last layer produces the class logits
  nn::Activation lstm_emit = nn::Activation::Identity;
  std::uint64_t seed = 0;

  bool has_grid_branch() const { return grid_size > 0; }
  int output_width() const { return head.empty() ? 0 : head.back().units; }
  int sequence_width() const;
  int grid_width() const;
  std::vector<int> layer_widths() const;

  /// Same layers and inputs; the architecture label is ignored.
  bool same_structure(const ModelSpec& other) const;

  bool operator==(const ModelSpec&) const = default;
};

/// LSTM(100, sequences) -> LSTM(50) -> Dense(7) -> softmax over one time step.
ModelSpec build_lstm_stack(int features = 1);
ModelSpec build_veclstm(int features = 1);

struct HybridOptions {
  int features = 1;
  std::vector<int> lstm_units = {100, 50};
  int conv_filters = 64;
  int kernel = 3;
  int pool = 1;
  int grid_size = 10;
  int fusion_units = 64;
};

ModelSpec build_hybrid(const HybridOptions& options = {});

/// Closed-form count of every trainable scalar.
std::size_t param_count(const ModelSpec& spec);

std::string to_json(const ModelSpec& spec);

/// All parameter blocks of a model, in layer order.
struct ModelParams {
  std::vector<nn::LstmParams<double>> lstm;
  std::vector<nn::Conv1dParams<double>> conv;
  std::vector<nn::DenseParams<double>> dense;

  static ModelParams zeros(const ModelSpec& spec);

  /// Contiguous views over every block, in a fixed order shared by any two
  /// ModelParams built from the same spec.
  std::vector<Eigen::Map<Eigen::VectorXd>> flat_views();
  std::vector<Eigen::Map<const Eigen::VectorXd>> flat_views() const;

  std::size_t size() const;

  std::vector<nn::NamedBlock> named_blocks() const;
  void load_blocks(std::span<const nn::NamedBlock> blocks);

  bool operator==(const ModelParams& other) const;
};

/// Glorot-uniform weights and zero biases, fully determined by the seed.
ModelParams init_params(const ModelSpec& spec, std::uint64_t seed);

struct Batch {
  nn::Sequence<double> sequence;  // timesteps entries of features x batch
  nn::Sequence<double> grid;      // grid_size entries of grid_size x batch

  Eigen::Index size() const { return sequence.empty() ? 0 : sequence.front().cols(); }
};

struct LossAndGradient {
  double loss = 0.0;
  Eigen::MatrixXd probs;  // classes x batch
  ModelParams gradient;
};

class Model {
 public:
  Model(ModelSpec spec, ModelParams params);

  const ModelSpec& spec() const { return spec_; }
  const ModelParams& params() const { return params_; }
  ModelParams& params() { return params_; }

  /// Class probabilities, one column per sample.
  Eigen::MatrixXd forward(const Batch& batch) const;

  /// Mean cross-entropy against one-hot targets and its exact gradient.
  LossAndGradient loss_and_gradient(const Batch& batch, const Eigen::MatrixXd& targets) const;

 private:
  struct Trace;
  Eigen::MatrixXd logits(const Batch& batch, Trace* trace) const;
  void validate(const Batch& batch) const;

  ModelSpec spec_;
  ModelParams params_;
};

}  // namespace veclstm
