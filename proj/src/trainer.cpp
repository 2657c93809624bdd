#include "veclstm/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "veclstm/error.hpp"

namespace veclstm {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void TrainConfig::validate() const {
  auto fraction_ok = [](double f) { return f > 0.0 && f < 1.0; };
  if (epochs < 1) throw Error(ErrorKind::OutOfRange, "epochs must be >= 1");
  if (batch_size < 1) throw Error(ErrorKind::OutOfRange, "batch_size must be >= 1");
  if (!fraction_ok(test_fraction) || !fraction_ok(validation_fraction))
    throw Error(ErrorKind::OutOfRange, "split fractions must lie in (0, 1)");
  if (!(learning_rate > 0.0) || !(epsilon > 0.0) || beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
    throw Error(ErrorKind::OutOfRange, "invalid Adam hyperparameters");
}

SplitIndices train_test_split(std::size_t n, double test_fraction, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorKind::TooFewSamples, "train_test_split needs at least 2 samples");
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw Error(ErrorKind::OutOfRange, "test_fraction must lie in (0, 1)");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
  SplitIndices split;
  split.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  return split;
}

void StandardScaler::fit(const MatrixXd& samples) {
  if (samples.cols() == 0) throw Error(ErrorKind::EmptyInput, "StandardScaler::fit on no samples");
  const double n = static_cast<double>(samples.cols());
  mean_ = samples.rowwise().sum() / n;
  scale_.resize(samples.rows());
  for (Index r = 0; r < samples.rows(); ++r) {
    const double var = (samples.row(r).array() - mean_(r)).square().sum() / n;
    const double sd = std::sqrt(var);
    scale_(r) = sd < 1e-12 ? 0.0 : sd;
  }
  fitted_ = true;
}

MatrixXd StandardScaler::transform(const MatrixXd& samples) const {
  if (!fitted_) throw Error(ErrorKind::NotFitted, "StandardScaler used before fit");
  if (samples.rows() != mean_.size()) throw Error(ErrorKind::ShapeMismatch, "scaler feature count");
  MatrixXd out(samples.rows(), samples.cols());
  for (Index r = 0; r < samples.rows(); ++r) {
    if (scale_(r) == 0.0) out.row(r).setZero();
    else out.row(r) = (samples.row(r).array() - mean_(r)) / scale_(r);
  }
  return out;
}

VectorXd one_hot(int code, int classes) {
  if (code < 0 || code >= classes)
    throw Error(ErrorKind::OutOfRange, "label code " + std::to_string(code) + " outside [0, " +
                                           std::to_string(classes) + ")");
  VectorXd v = VectorXd::Zero(classes);
  v(code) = 1.0;
  return v;
}

MatrixXd one_hot(std::span<const int> codes, int classes) {
  MatrixXd m(classes, static_cast<Index>(codes.size()));
  for (std::size_t k = 0; k < codes.size(); ++k) m.col(static_cast<Index>(k)) = one_hot(codes[k], classes);
  return m;
}

std::vector<std::size_t> random_oversample(std::span<const int> labels, std::uint64_t seed) {
  if (labels.empty()) throw Error(ErrorKind::EmptyClassSet, "random_oversample on no samples");
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t k = 0; k < labels.size(); ++k) members[labels[k]].push_back(k);
  std::size_t majority = 0;
  for (const auto& [label, rows] : members) majority = std::max(majority, rows.size());

  std::vector<std::size_t> out(labels.size());
  std::iota(out.begin(), out.end(), 0);
  std::mt19937_64 rng(seed);
  for (const auto& [label, rows] : members) {
    std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
    for (std::size_t k = rows.size(); k < majority; ++k) out.push_back(rows[pick(rng)]);
  }
  return out;
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, const TrainConfig& config) {
  auto theta = params.flat_views();
  const auto g = grads.flat_views();
  if (theta.size() != g.size()) throw Error(ErrorKind::ShapeMismatch, "adam_step: gradient blocks");
  if (state.m.empty()) {
    for (const auto& block : theta) {
      state.m.push_back(VectorXd::Zero(block.size()));
      state.v.push_back(VectorXd::Zero(block.size()));
    }
  }
  if (state.m.size() != theta.size()) throw Error(ErrorKind::ShapeMismatch, "adam_step: state blocks");

  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double m_correction = 1.0 - std::pow(config.beta1, t);
  const double v_correction = 1.0 - std::pow(config.beta2, t);
  for (std::size_t k = 0; k < theta.size(); ++k) {
    if (g[k].size() != theta[k].size() || state.m[k].size() != theta[k].size())
      throw Error(ErrorKind::ShapeMismatch, "adam_step: block size");
    auto m = state.m[k].array();
    auto v = state.v[k].array();
    const auto grad = g[k].array();
    m = config.beta1 * m + (1.0 - config.beta1) * grad;
    v = config.beta2 * v + (1.0 - config.beta2) * grad.square();
    theta[k].array() -= config.learning_rate * (m / m_correction) / ((v / v_correction).sqrt() + config.epsilon);
  }
}

TensorBatchSource::TensorBatchSource(MatrixXd sequence, MatrixXd grid, std::vector<int> labels)
    : sequence_(std::move(sequence)), grid_(std::move(grid)), labels_(std::move(labels)) {
  if (sequence_.cols() != static_cast<Index>(labels_.size()))
    throw Error(ErrorKind::LengthMismatch, "feature columns and labels differ in count");
  if (grid_.size() > 0) {
    if (grid_.cols() != sequence_.cols()) throw Error(ErrorKind::LengthMismatch, "grid columns");
    grid_size_ = static_cast<int>(std::lround(std::sqrt(static_cast<double>(grid_.rows()))));
    if (grid_size_ * grid_size_ != grid_.rows())
      throw Error(ErrorKind::ShapeMismatch, "grid rows are not a square count");
  }
}

nn::Sequence<double> heatmaps_to_sequence(const MatrixXd& heatmaps) {
  const auto g = static_cast<Index>(std::lround(std::sqrt(static_cast<double>(heatmaps.rows()))));
  if (g * g != heatmaps.rows()) throw Error(ErrorKind::ShapeMismatch, "heatmap rows are not a square count");
  nn::Sequence<double> seq;
  seq.reserve(static_cast<std::size_t>(g));
  for (Index r = 0; r < g; ++r) seq.push_back(heatmaps.middleRows(r * g, g));
  return seq;
}

Batch TensorBatchSource::batch(std::span<const std::size_t> rows) const {
  const auto n = static_cast<Index>(rows.size());
  MatrixXd seq(sequence_.rows(), n);
  for (Index k = 0; k < n; ++k) seq.col(k) = sequence_.col(static_cast<Index>(rows[static_cast<std::size_t>(k)]));
  Batch b;
  b.sequence.push_back(std::move(seq));
  if (grid_size_ > 0) {
    MatrixXd grid(grid_.rows(), n);
    for (Index k = 0; k < n; ++k) grid.col(k) = grid_.col(static_cast<Index>(rows[static_cast<std::size_t>(k)]));
    b.grid = heatmaps_to_sequence(grid);
  }
  return b;
}

std::vector<int> argmax_columns(const MatrixXd& probs) {
  std::vector<int> out(static_cast<std::size_t>(probs.cols()));
  for (Index c = 0; c < probs.cols(); ++c) {
    Index best;
    probs.col(c).maxCoeff(&best);
    out[static_cast<std::size_t>(c)] = static_cast<int>(best);
  }
  return out;
}

MatrixXd predict(const Model& model, const BatchSource& source, int batch_size) {
  const std::size_t n = source.size();
  MatrixXd probs(model.spec().output_width(), static_cast<Index>(n));
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(n, start + static_cast<std::size_t>(batch_size));
    rows.resize(end - start);
    std::iota(rows.begin(), rows.end(), start);
    probs.middleCols(static_cast<Index>(start), static_cast<Index>(end - start)) = model.forward(source.batch(rows));
  }
  return probs;
}

TrainReport train_model(Model& model, BatchSource& train, BatchSource* validation, const TrainConfig& config) {
  config.validate();
  const std::size_t n = train.size();
  if (n == 0) throw Error(ErrorKind::EmptyDataset, "no training samples");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(config.seed);
  AdamState adam;
  TrainReport report;
  const auto& labels = train.labels();
  const auto batch_size = static_cast<std::size_t>(config.batch_size);

  const auto started = std::chrono::steady_clock::now();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    train.begin_epoch(epoch);
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += batch_size, ++batch_index) {
      const std::span<const std::size_t> rows(order.data() + start, std::min(n, start + batch_size) - start);
      std::vector<int> codes;
      codes.reserve(rows.size());
      for (auto r : rows) codes.push_back(labels[r]);
      try {
        const auto result = model.loss_and_gradient(train.batch(rows), one_hot(codes));
        loss_sum += result.loss * static_cast<double>(rows.size());
        const auto predicted = argmax_columns(result.probs);
        for (std::size_t k = 0; k < codes.size(); ++k) correct += predicted[k] == codes[k];
        adam_step(model.params(), result.gradient, adam, config);
      } catch (const Error& e) {
        throw Error(e.kind(), "epoch " + std::to_string(epoch) + " batch " + std::to_string(batch_index) +
                                  ": " + e.what());
      }
    }
    report.epochs.push_back({loss_sum / static_cast<double>(n), static_cast<double>(correct) / static_cast<double>(n)});
  }
  report.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  if (validation && validation->size() > 0) {
    validation->begin_epoch(config.epochs);
    const auto predicted = argmax_columns(predict(model, *validation, config.batch_size));
    std::size_t correct = 0;
    for (std::size_t k = 0; k < predicted.size(); ++k) correct += predicted[k] == validation->labels()[k];
    report.validation_accuracy = static_cast<double>(correct) / static_cast<double>(predicted.size());
  }
  return report;
}

}  // namespace veclstm
