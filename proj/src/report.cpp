#include "veclstm/report.hpp"

#include <initializer_list>
#include <set>
#include <string>

#include "veclstm/error.hpp"

namespace veclstm {

using nlohmann::json;

namespace {

std::string_view to_string(HeatmapMode m) { return m == HeatmapMode::Count ? "count" : "density"; }

std::string_view to_string(MetadataFeature f) {
  switch (f) {
    case MetadataFeature::CellDensity: return "cell_density";
    case MetadataFeature::Altitude: return "altitude";
    case MetadataFeature::Speed: return "speed";
  }
  return "cell_density";
}

std::string_view to_string(RegressionTarget t) {
  return t == RegressionTarget::ClassCodes ? "class_codes" : "probabilities";
}

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw Error(ErrorKind::Usage, "config: " + key + ": " + why);
}

void check_keys(const json& section, const std::string& name, const std::set<std::string>& allowed) {
  if (!section.is_object()) bad(name, "expected an object");
  for (const auto& [key, _] : section.items())
    if (!allowed.count(key)) bad(name + "." + key, "unknown key");
}

template <typename T>
void read(const json& section, const std::string& section_name, const char* key, T& target) {
  const auto it = section.find(key);
  if (it == section.end()) return;
  try {
    target = it->get<T>();
  } catch (const json::exception&) {
    bad(section_name + "." + key, "wrong type");
  }
}

template <typename Enum>
void read_enum(const json& section, const std::string& section_name, const char* key, Enum& target,
               std::initializer_list<Enum> values) {
  std::string text;
  if (!section.contains(key)) return;
  read(section, section_name, key, text);
  for (Enum v : values)
    if (to_string(v) == text) {
      target = v;
      return;
    }
  bad(section_name + "." + key, "unknown value '" + text + "'");
}

json roc_json(const RocCurve& curve) { return json{{"auc", curve.auc}, {"points", curve.points.size()}}; }

}  // namespace

void apply_config(const json& config, RunSettings& s) {
  check_keys(config, "config", {"train", "vectorization", "model", "metrics"});
  if (config.contains("train")) {
    const json& t = config["train"];
    check_keys(t, "train", {"epochs", "batch_size", "learning_rate", "beta1", "beta2", "epsilon", "test_fraction",
                            "validation_fraction", "seed"});
    read(t, "train", "epochs", s.train.epochs);
    read(t, "train", "batch_size", s.train.batch_size);
    read(t, "train", "learning_rate", s.train.learning_rate);
    read(t, "train", "beta1", s.train.beta1);
    read(t, "train", "beta2", s.train.beta2);
    read(t, "train", "epsilon", s.train.epsilon);
    read(t, "train", "test_fraction", s.train.test_fraction);
    read(t, "train", "validation_fraction", s.train.validation_fraction);
    read(t, "train", "seed", s.train.seed);
  }
  if (config.contains("vectorization")) {
    const json& v = config["vectorization"];
    check_keys(v, "vectorization", {"grid_size", "missing_default", "value_mode", "metadata"});
    read(v, "vectorization", "grid_size", s.vectorization.grid_size);
    read(v, "vectorization", "missing_default", s.vectorization.missing_default);
    read_enum(v, "vectorization", "value_mode", s.vectorization.value_mode, {HeatmapMode::Count, HeatmapMode::Density});
    read_enum(v, "vectorization", "metadata", s.vectorization.metadata,
              {MetadataFeature::CellDensity, MetadataFeature::Altitude, MetadataFeature::Speed});
  }
  if (config.contains("model")) {
    const json& m = config["model"];
    check_keys(m, "model", {"lstm_units", "conv_filters", "kernel", "pool", "fusion_units", "lstm_output_activation"});
    read(m, "model", "lstm_units", s.model.lstm_units);
    read(m, "model", "conv_filters", s.model.conv_filters);
    read(m, "model", "kernel", s.model.kernel);
    read(m, "model", "pool", s.model.pool);
    read(m, "model", "fusion_units", s.model.fusion_units);
    read_enum(m, "model", "lstm_output_activation", s.model.lstm_output_activation,
              {nn::Activation::Identity, nn::Activation::Relu});
  }
  if (config.contains("metrics")) {
    const json& m = config["metrics"];
    check_keys(m, "metrics", {"regression_target"});
    read_enum(m, "metrics", "regression_target", s.regression_target,
              {RegressionTarget::ClassCodes, RegressionTarget::Probabilities});
  }
  try {
    s.train.validate();
  } catch (const Error& e) {
    bad("train", e.what());
  }
  if (s.vectorization.grid_size < 1) bad("vectorization.grid_size", "must be >= 1");
  if (s.model.lstm_units.empty()) bad("model.lstm_units", "needs at least one layer");
  for (int u : s.model.lstm_units)
    if (u < 1) bad("model.lstm_units", "units must be >= 1");
}

json settings_json(const RunSettings& s) {
  return json{
      {"train",
       {{"epochs", s.train.epochs},
        {"batch_size", s.train.batch_size},
        {"learning_rate", s.train.learning_rate},
        {"beta1", s.train.beta1},
        {"beta2", s.train.beta2},
        {"epsilon", s.train.epsilon},
        {"test_fraction", s.train.test_fraction},
        {"validation_fraction", s.train.validation_fraction},
        {"seed", s.train.seed}}},
      {"vectorization",
       {{"grid_size", s.vectorization.grid_size},
        {"missing_default", s.vectorization.missing_default},
        {"value_mode", to_string(s.vectorization.value_mode)},
        {"metadata", to_string(s.vectorization.metadata)}}},
      {"model",
       {{"lstm_units", s.model.lstm_units},
        {"conv_filters", s.model.conv_filters},
        {"kernel", s.model.kernel},
        {"pool", s.model.pool},
        {"fusion_units", s.model.fusion_units},
        {"lstm_output_activation", nn::to_string(s.model.lstm_output_activation)}}},
      {"metrics", {{"regression_target", to_string(s.regression_target)}}},
  };
}

ModelSpec build_spec(Architecture arch, const RunSettings& s) {
  ModelSpec spec;
  if (arch == Architecture::Hybrid) {
    HybridOptions o;
    o.lstm_units = s.model.lstm_units;
    o.conv_filters = s.model.conv_filters;
    o.kernel = s.model.kernel;
    o.pool = s.model.pool;
    o.grid_size = s.vectorization.grid_size;
    o.fusion_units = s.model.fusion_units;
    spec = build_hybrid(o);
  } else {
    spec = arch == Architecture::VecLstm ? build_veclstm() : build_lstm_stack();
    const auto& units = s.model.lstm_units;
    spec.sequence_branch.clear();
    for (std::size_t k = 0; k < units.size(); ++k)
      spec.sequence_branch.push_back(
          LayerSpec{LayerKind::Lstm, units[k], 0, 0, nn::Activation::Tanh, k + 1 < units.size()});
  }
  spec.lstm_emit = s.model.lstm_output_activation;
  spec.seed = s.train.seed;
  return spec;
}

json metrics_json(const MetricsBundle& m) {
  json confusion = json::array();
  for (Eigen::Index r = 0; r < m.confusion.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.confusion.cols(); ++c) row.push_back(m.confusion(r, c));
    confusion.push_back(row);
  }
  json per_class = json::array();
  for (std::size_t c = 0; c < m.class_auc.size(); ++c) {
    json entry{{"class", c < kLabelNames.size() ? std::string(kLabelNames[c]) : std::to_string(c)}};
    entry["auc"] = m.class_auc[c] ? json(*m.class_auc[c]) : json(nullptr);
    per_class.push_back(entry);
  }
  return json{{"accuracy", m.accuracy},
              {"weighted_f1", m.weighted_f1},
              {"rmse", m.errors.rmse},
              {"mae", m.errors.mae},
              {"mse", m.errors.mse},
              {"regression_target", to_string(m.regression_target)},
              {"confusion", confusion},
              {"class_auc", per_class},
              {"micro_roc", roc_json(m.micro_roc)}};
}

json train_report_json(const TrainReport& r) {
  json epochs = json::array();
  for (std::size_t e = 0; e < r.epochs.size(); ++e)
    epochs.push_back({{"epoch", e}, {"loss", r.epochs[e].loss}, {"accuracy", r.epochs[e].accuracy}});
  return json{{"epochs", epochs},
              {"validation_accuracy", r.validation_accuracy},
              {"timing", {{"train_seconds", r.train_seconds}, {"vectorization_seconds", r.vectorization_seconds}}}};
}

json benchmark_json(const BenchmarkReport& r) {
  return json{{"t_novec", r.t_novec},
              {"t_vec", r.t_vec},
              {"t_vectorization", r.t_vectorization},
              {"reduction_pct", r.reduction_pct}};
}

}  // namespace veclstm
