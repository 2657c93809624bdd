#pragma once

#include <Eigen/Core>

#include <map>
#include <span>
#include <string>
#include <vector>

#include "veclstm/ingest.hpp"
#include "veclstm/metrics.hpp"
#include "veclstm/models.hpp"
#include "veclstm/trainer.hpp"
#include "veclstm/vectorizer.hpp"

namespace veclstm {

using GridTable = std::map<std::string, Eigen::VectorXd>;

/// Everything needed to turn a dataset row into model inputs: the metadata
/// scalar (one feature per time step) and, for the grid branch, the
/// flattened heatmap of the row's user.
struct FeatureContext {
  VectorizationConfig config;
  DensityLookup density;          // CellDensity metadata
  Eigen::VectorXd metadata;       // other metadata modes, one per dataset row
  GridTable user_grids;           // empty without a grid branch
};

FeatureContext fit_feature_context(std::span<const LabeledSample> rows, const VectorizationConfig& config,
                                   bool with_grid, const GridTable* stored_grids = nullptr);

/// Heatmap of each user's own points, as stored by the vector store.
GridTable user_heatmaps(std::span<const LabeledSample> rows, const VectorizationConfig& config);

/// 1 x which.size() matrix of metadata scalars.
Eigen::MatrixXd sequence_features(std::span<const LabeledSample> rows, std::span<const std::size_t> which,
                                  const FeatureContext& context);
/// G*G x which.size() matrix of user heatmaps.
Eigen::MatrixXd grid_features(std::span<const LabeledSample> rows, std::span<const std::size_t> which,
                              const FeatureContext& context);

/// Dataset row indices of each split. Validation is carved from the
/// training split; the training split is then oversampled.
struct ExperimentSplits {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

ExperimentSplits prepare_splits(const Dataset& dataset, const TrainConfig& config);

enum class FeaturePipeline {
  Precomputed,  // vectorize once, train on stored features
  OnTheFly,     // every batch derives its features from the raw rows
};

std::string_view to_string(FeaturePipeline pipeline);

/// Architecture -> pipeline used by `train`: the baseline LSTM runs without
/// precomputed vectors, the other two with them.
FeaturePipeline default_pipeline(Architecture arch);

struct ExperimentOptions {
  TrainConfig train;
  VectorizationConfig vectorization;
  RegressionTarget regression_target = RegressionTarget::ClassCodes;
  const GridTable* stored_grids = nullptr;
};

struct ExperimentResult {
  ModelSpec spec;
  FeaturePipeline pipeline = FeaturePipeline::Precomputed;
  ModelParams params;
  TrainReport report;
  MetricsBundle metrics;
  std::size_t train_samples = 0;
  std::size_t validation_samples = 0;
  std::size_t test_samples = 0;
};

/// split -> oversample -> scale -> train -> evaluate on the test split.
ExperimentResult run_experiment(const Dataset& dataset, const ModelSpec& spec, FeaturePipeline pipeline,
                                const ExperimentOptions& options);

struct BenchmarkReport {
  double t_novec = 0.0;
  double t_vec = 0.0;
  double t_vectorization = 0.0;
  double reduction_pct = 0.0;  // 100 * (t_novec - t_vec) / t_novec
};

struct BenchmarkResult {
  BenchmarkReport timing;
  ExperimentResult vectorized;
  ExperimentResult on_the_fly;
};

/// Trains `spec` twice through each feature pipeline, serially, and compares
/// their mean training wall-clock times. The per-pipeline reports carry
/// those means.
BenchmarkResult benchmark_pipelines(const Dataset& dataset, const ModelSpec& spec, const ExperimentOptions& options);

}  // namespace veclstm
