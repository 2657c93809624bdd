#pragma once

#include <json.hpp>

#include <vector>

#include "veclstm/metrics.hpp"
#include "veclstm/models.hpp"
#include "veclstm/pipeline.hpp"
#include "veclstm/trainer.hpp"
#include "veclstm/vectorizer.hpp"

namespace veclstm {

struct ModelOptions {
  std::vector<int> lstm_units = {100, 50};
  int conv_filters = 64;
  int kernel = 3;
  int pool = 1;
  int fusion_units = 64;
  nn::Activation lstm_output_activation = nn::Activation::Identity;
};

/// Every tunable of a run. Reports embed it in full.
struct RunSettings {
  TrainConfig train;
  VectorizationConfig vectorization;
  ModelOptions model;
  RegressionTarget regression_target = RegressionTarget::ClassCodes;
};

// Config files hold any subset of
//   {"train": {...}, "vectorization": {...}, "model": {...}, "metrics": {...}}
// with the field names used by settings_json. Unknown keys are rejected.
void apply_config(const nlohmann::json& config, RunSettings& settings);
nlohmann::json settings_json(const RunSettings& settings);

ModelSpec build_spec(Architecture arch, const RunSettings& settings);

nlohmann::json metrics_json(const MetricsBundle& metrics);
/// Epoch history and validation accuracy; wall-clock figures sit apart
/// under "timing".
nlohmann::json train_report_json(const TrainReport& report);
nlohmann::json benchmark_json(const BenchmarkReport& report);

}  // namespace veclstm
