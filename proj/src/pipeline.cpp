#include "veclstm/pipeline.hpp"

#include <chrono>
#include <unordered_map>

#include "veclstm/error.hpp"

namespace veclstm {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<TrajectoryPoint> points_of(std::span<const LabeledSample> rows) {
  std::vector<TrajectoryPoint> points;
  points.reserve(rows.size());
  for (const auto& r : rows) points.push_back(to_point(r));
  return points;
}

DensityLookup fit_density(std::span<const LabeledSample> rows, int grid_size) {
  std::vector<double> lat(rows.size()), lon(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    lat[k] = rows[k].lat;
    lon[k] = rows[k].lon;
  }
  return DensityLookup::fit(lat, lon, grid_size);
}

VectorXd user_heatmap(std::span<const LabeledSample> rows, std::span<const std::size_t> members,
                      const VectorizationConfig& config) {
  std::vector<TrajectoryPoint> points;
  points.reserve(members.size());
  for (auto i : members) points.push_back(to_point(rows[i]));
  return vectorize_trajectory(points, config);
}

std::vector<int> labels_of(std::span<const LabeledSample> rows, std::span<const std::size_t> which) {
  std::vector<int> out;
  out.reserve(which.size());
  for (auto i : which) out.push_back(code(rows[i].label));
  return out;
}

struct Scalers {
  StandardScaler sequence;
  StandardScaler grid;
};

/// Features of `which` scaled with the training statistics.
struct ScaledFeatures {
  MatrixXd sequence;
  MatrixXd grid;
};

ScaledFeatures scaled(std::span<const LabeledSample> rows, std::span<const std::size_t> which,
                      const FeatureContext& context, const Scalers& scalers, bool with_grid) {
  ScaledFeatures out;
  out.sequence = scalers.sequence.transform(sequence_features(rows, which, context));
  if (with_grid) out.grid = scalers.grid.transform(grid_features(rows, which, context));
  return out;
}

// Derives every batch from the raw rows: the dataset-wide density table and
// the per-user heatmaps are rebuilt for each batch, with no state carried
// between batches.
class OnTheFlySource : public BatchSource {
 public:
  OnTheFlySource(std::span<const LabeledSample> rows, std::vector<std::size_t> members,
                 const VectorizationConfig& config, const Scalers& scalers, bool with_grid)
      : rows_(rows),
        members_(std::move(members)),
        labels_(labels_of(rows, members_)),
        config_(config),
        scalers_(scalers),
        with_grid_(with_grid) {
    for (std::size_t i = 0; i < rows_.size(); ++i) user_rows_[rows_[i].user].push_back(i);
  }

  std::size_t size() const override { return members_.size(); }
  const std::vector<int>& labels() const override { return labels_; }

  Batch batch(std::span<const std::size_t> local) const override {
    std::vector<std::size_t> which;
    which.reserve(local.size());
    for (auto r : local) which.push_back(members_[r]);

    FeatureContext context;
    context.config = config_;
    if (config_.metadata == MetadataFeature::CellDensity) {
      context.density = fit_density(rows_, config_.grid_size);
    } else {
      context.metadata = vectorize_metadata(points_of(rows_), config_);
    }
    if (with_grid_)
      for (auto i : which) {
        const auto& user = rows_[i].user;
        if (!context.user_grids.count(user))
          context.user_grids.emplace(user, user_heatmap(rows_, user_rows_.at(user), config_));
      }

    auto features = scaled(rows_, which, context, scalers_, with_grid_);
    Batch b;
    b.sequence.push_back(std::move(features.sequence));
    if (with_grid_) b.grid = heatmaps_to_sequence(features.grid);
    return b;
  }

 private:
  std::span<const LabeledSample> rows_;
  std::vector<std::size_t> members_;
  std::vector<int> labels_;
  VectorizationConfig config_;
  Scalers scalers_;
  bool with_grid_;
  std::unordered_map<std::string, std::vector<std::size_t>> user_rows_;
};

}  // namespace

GridTable user_heatmaps(std::span<const LabeledSample> rows, const VectorizationConfig& config) {
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < rows.size(); ++i) members[rows[i].user].push_back(i);
  GridTable grids;
  for (const auto& [user, idx] : members) grids.emplace(user, user_heatmap(rows, idx, config));
  return grids;
}

FeatureContext fit_feature_context(std::span<const LabeledSample> rows, const VectorizationConfig& config,
                                   bool with_grid, const GridTable* stored_grids) {
  if (rows.empty()) throw Error(ErrorKind::EmptyDataset, "no rows to vectorize");
  FeatureContext context;
  context.config = config;
  if (config.metadata == MetadataFeature::CellDensity) context.density = fit_density(rows, config.grid_size);
  else context.metadata = vectorize_metadata(points_of(rows), config);
  if (with_grid) context.user_grids = stored_grids ? *stored_grids : user_heatmaps(rows, config);
  return context;
}

MatrixXd sequence_features(std::span<const LabeledSample> rows, std::span<const std::size_t> which,
                           const FeatureContext& context) {
  MatrixXd out(1, static_cast<Index>(which.size()));
  const bool density = context.config.metadata == MetadataFeature::CellDensity;
  for (std::size_t k = 0; k < which.size(); ++k) {
    const auto& r = rows[which[k]];
    out(0, static_cast<Index>(k)) = density ? context.density(r.lat, r.lon)
                                            : context.metadata(static_cast<Index>(which[k]));
  }
  return out;
}

MatrixXd grid_features(std::span<const LabeledSample> rows, std::span<const std::size_t> which,
                       const FeatureContext& context) {
  const Index cells = static_cast<Index>(context.config.grid_size) * context.config.grid_size;
  MatrixXd out(cells, static_cast<Index>(which.size()));
  for (std::size_t k = 0; k < which.size(); ++k) {
    const auto it = context.user_grids.find(rows[which[k]].user);
    if (it == context.user_grids.end())
      throw Error(ErrorKind::ValidationError, "no heatmap for user '" + rows[which[k]].user + "'");
    if (it->second.size() != cells) throw Error(ErrorKind::ShapeMismatch, "stored heatmap has the wrong size");
    out.col(static_cast<Index>(k)) = it->second;
  }
  return out;
}

ExperimentSplits prepare_splits(const Dataset& dataset, const TrainConfig& config) {
  config.validate();
  const auto outer = train_test_split(dataset.rows.size(), config.test_fraction, config.seed);
  const auto inner = train_test_split(outer.train.size(), config.validation_fraction, config.seed + 1);
  ExperimentSplits s;
  s.test = outer.test;
  for (auto i : inner.test) s.validation.push_back(outer.train[i]);
  std::vector<std::size_t> train;
  for (auto i : inner.train) train.push_back(outer.train[i]);
  const auto labels = labels_of(dataset.rows, train);
  for (auto i : random_oversample(labels, config.seed + 2)) s.train.push_back(train[i]);
  return s;
}

std::string_view to_string(FeaturePipeline pipeline) {
  return pipeline == FeaturePipeline::Precomputed ? "vectorized" : "non_vectorized";
}

FeaturePipeline default_pipeline(Architecture arch) {
  return arch == Architecture::LstmBaseline ? FeaturePipeline::OnTheFly : FeaturePipeline::Precomputed;
}

ExperimentResult run_experiment(const Dataset& dataset, const ModelSpec& spec, FeaturePipeline pipeline,
                                const ExperimentOptions& options) {
  if (spec.features != 1 || spec.timesteps != 1)
    throw Error(ErrorKind::ShapeMismatch, "the trajectory pipeline feeds one metadata feature per sample");
  if (spec.has_grid_branch() && spec.grid_size != options.vectorization.grid_size)
    throw Error(ErrorKind::ShapeMismatch, "model grid size differs from the vectorization grid size");
  const std::span<const LabeledSample> rows = dataset.rows;
  const bool with_grid = spec.has_grid_branch();
  const ExperimentSplits splits = prepare_splits(dataset, options.train);

  ExperimentResult result;
  result.spec = spec;
  result.pipeline = pipeline;
  result.train_samples = splits.train.size();
  result.validation_samples = splits.validation.size();
  result.test_samples = splits.test.size();

  // Vectorization: one pass over the dataset. The on-the-fly pipeline uses
  // it only to fit the scalers, so only the precomputed path is timed.
  const auto vec_start = std::chrono::steady_clock::now();
  const FeatureContext context = fit_feature_context(rows, options.vectorization, with_grid, options.stored_grids);
  std::vector<std::size_t> all(rows.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const MatrixXd seq_all = sequence_features(rows, all, context);
  const MatrixXd grid_all = with_grid ? grid_features(rows, all, context) : MatrixXd();
  const double vectorization_seconds = seconds_since(vec_start);

  auto gather = [](const MatrixXd& m, std::span<const std::size_t> which) {
    MatrixXd out(m.rows(), static_cast<Index>(which.size()));
    for (std::size_t k = 0; k < which.size(); ++k) out.col(static_cast<Index>(k)) = m.col(static_cast<Index>(which[k]));
    return out;
  };

  Scalers scalers;
  scalers.sequence.fit(gather(seq_all, splits.train));
  if (with_grid) scalers.grid.fit(gather(grid_all, splits.train));

  Model model(spec, init_params(spec, options.train.seed));
  MatrixXd test_probs;
  if (pipeline == FeaturePipeline::Precomputed) {
    auto source_for = [&](std::span<const std::size_t> which) {
      return TensorBatchSource(scalers.sequence.transform(gather(seq_all, which)),
                               with_grid ? scalers.grid.transform(gather(grid_all, which)) : MatrixXd(),
                               labels_of(rows, which));
    };
    TensorBatchSource train = source_for(splits.train);
    TensorBatchSource validation = source_for(splits.validation);
    TensorBatchSource test = source_for(splits.test);
    result.report = train_model(model, train, &validation, options.train);
    result.report.vectorization_seconds = vectorization_seconds;
    test_probs = predict(model, test, options.train.batch_size);
  } else {
    const VectorizationConfig& vc = options.vectorization;
    OnTheFlySource train(rows, splits.train, vc, scalers, with_grid);
    OnTheFlySource validation(rows, splits.validation, vc, scalers, with_grid);
    OnTheFlySource test(rows, splits.test, vc, scalers, with_grid);
    result.report = train_model(model, train, &validation, options.train);
    result.report.vectorization_seconds = 0.0;
    test_probs = predict(model, test, options.train.batch_size);
  }

  result.metrics = evaluate(test_probs, labels_of(rows, splits.test), options.regression_target);
  result.params = model.params();
  return result;
}

BenchmarkResult benchmark_pipelines(const Dataset& dataset, const ModelSpec& spec, const ExperimentOptions& options) {
  // A B B A order so drift in machine speed hits both pipelines alike.
  BenchmarkResult r;
  r.on_the_fly = run_experiment(dataset, spec, FeaturePipeline::OnTheFly, options);
  r.vectorized = run_experiment(dataset, spec, FeaturePipeline::Precomputed, options);
  const auto vec2 = run_experiment(dataset, spec, FeaturePipeline::Precomputed, options);
  const auto novec2 = run_experiment(dataset, spec, FeaturePipeline::OnTheFly, options);
  r.timing.t_novec = 0.5 * (r.on_the_fly.report.train_seconds + novec2.report.train_seconds);
  r.timing.t_vec = 0.5 * (r.vectorized.report.train_seconds + vec2.report.train_seconds);
  r.timing.t_vectorization =
      0.5 * (r.vectorized.report.vectorization_seconds + vec2.report.vectorization_seconds);
  r.on_the_fly.report.train_seconds = r.timing.t_novec;
  r.vectorized.report.train_seconds = r.timing.t_vec;
  r.vectorized.report.vectorization_seconds = r.timing.t_vectorization;
  r.timing.reduction_pct =
      r.timing.t_novec > 0.0 ? 100.0 * (r.timing.t_novec - r.timing.t_vec) / r.timing.t_novec : 0.0;
  return r;
}

}  // namespace veclstm
