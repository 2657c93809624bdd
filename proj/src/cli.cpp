#include "veclstm/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>

#include "veclstm/csv.hpp"
#include "veclstm/error.hpp"
#include "veclstm/ingest.hpp"
#include "veclstm/nn/checkpoint.hpp"
#include "veclstm/vecstore.hpp"

namespace veclstm::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Names the pipeline step that failed in error messages.
struct Stage {
  std::string name;
};

std::ofstream open_output(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_output(path);
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

Dataset load_dataset(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  return read_dataset_csv(in);
}

std::optional<std::string> store_descriptor(const RunConfig& config) {
  if (config.store) return config.store;
  if (const char* env = std::getenv("VECLSTM_STORE"); env && *env) return std::string(env);
  return std::nullopt;
}

json store_json(const StoreDescriptor& d) {
  return json{{"backend", d.backend == StoreBackend::Sql ? "sql" : "file"}, {"location", d.location}};
}

/// Most frequent label among a user's rows, lowest code on ties.
std::map<std::string, int> majority_labels(std::span<const LabeledSample> rows) {
  std::map<std::string, std::array<std::size_t, kNumClasses>> tallies;
  for (const auto& r : rows) ++tallies[r.user][code(r.label)];
  std::map<std::string, int> out;
  for (const auto& [user, t] : tallies)
    out[user] = static_cast<int>(std::max_element(t.begin(), t.end()) - t.begin());
  return out;
}

GridTable grids_from_store(VectorStore& store) {
  GridTable grids;
  for (const auto& r : store.fetch()) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(r.vector.size()));
    for (std::size_t k = 0; k < r.vector.size(); ++k) v(static_cast<Eigen::Index>(k)) = r.vector[k];
    grids[r.user] = std::move(v);  // later records replace earlier ones
  }
  return grids;
}

template <typename Fn>
int guarded(const char* command, Stage& stage, std::ostream& err, Fn&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << command << ": " << stage.name << ": " << e.what() << '\n';
    return e.kind() == ErrorKind::Usage ? kUsage : kFailure;
  } catch (const std::exception& e) {
    err << command << ": " << stage.name << ": " << e.what() << '\n';
    return kFailure;
  }
}

json run_header(const RunConfig& config, const ModelSpec& spec, FeaturePipeline pipeline) {
  return json{{"architecture", to_string(spec.architecture)},
              {"pipeline", to_string(pipeline)},
              {"config", settings_json(config.settings)},
              {"model", json::parse(to_json(spec))}};
}

void write_experiment(const fs::path& dir, const RunConfig& config, const ExperimentResult& r) {
  json metrics = run_header(config, r.spec, r.pipeline);
  metrics["samples"] = {{"train", r.train_samples}, {"validation", r.validation_samples}, {"test", r.test_samples}};
  metrics["metrics"] = metrics_json(r.metrics);
  write_json(dir / "metrics.json", metrics);

  json report = run_header(config, r.spec, r.pipeline);
  report["report"] = train_report_json(r.report);
  write_json(dir / "train_report.json", report);

  {
    auto out = open_output(dir / "confusion.csv");
    write_confusion_csv(out, r.metrics.confusion);
  }
  for (std::size_t c = 0; c < r.metrics.class_roc.size(); ++c) {
    if (!r.metrics.class_auc[c]) continue;
    auto out = open_output(dir / ("roc_class_" + std::string(kLabelNames[c]) + ".csv"));
    write_roc_csv(out, r.metrics.class_roc[c]);
  }
  {
    auto out = open_output(dir / "roc_micro.csv");
    write_roc_csv(out, r.metrics.micro_roc);
  }
  {
    auto out = open_output(dir / "checkpoint.vlnn", std::ios::out | std::ios::binary);
    nn::write_checkpoint(out, r.params.named_blocks());
    if (!out) throw Error(ErrorKind::Io, "checkpoint write failed");
  }
  auto spec_out = open_output(dir / "model_spec.json");
  spec_out << to_json(r.spec) << '\n';
}

}  // namespace

int cmd_ingest(const RunConfig& config, std::ostream& out, std::ostream& err) {
  Stage stage{"scan"};
  return guarded("ingest", stage, err, [&] {
    const fs::path target = config.output.empty() ? config.out_dir / "dataset.csv" : config.output;
    if (!fs::is_directory(config.input)) throw Error(ErrorKind::Io, "not a directory: " + config.input.string());
    const GeoLifeScan scan = scan_geolife(config.input, config.strict);
    for (const auto& issue : scan.issues) err << "warning: " << issue.file.string() << ": " << issue.message << '\n';

    stage.name = "build dataset";
    Dataset dataset;
    if (scan.labeled.empty()) err << "warning: no labeled points found\n";
    else dataset = build_dataset(scan.labeled, config.settings.vectorization);

    stage.name = "write dataset";
    auto file = open_output(target);
    write_dataset_csv(file, dataset);
    if (!file) throw Error(ErrorKind::Io, "write failed: " + target.string());

    std::array<std::size_t, kNumClasses> per_label{};
    for (const auto& r : dataset.rows) ++per_label[code(r.label)];
    out << "rows " << dataset.rows.size() << " users " << scan.users << " files " << scan.files << " issues "
        << scan.issues.size() << '\n';
    for (int c = 0; c < kNumClasses; ++c) out << "  " << kLabelNames[c] << ' ' << per_label[c] << '\n';
    out << "wrote " << target.string() << '\n';
    return kOk;
  });
}

int cmd_vectorize(const RunConfig& config, std::ostream& out, std::ostream& err) {
  Stage stage{"open store"};
  return guarded("vectorize", stage, err, [&] {
    const auto text = store_descriptor(config);
    if (!text) throw Error(ErrorKind::Usage, "no store given (--store or VECLSTM_STORE)");
    const StoreDescriptor descriptor = StoreDescriptor::parse(*text);
    const VectorizationConfig& vc = config.settings.vectorization;
    auto store = open_store(descriptor, vc.grid_size);
    store->init_schema();

    stage.name = "load dataset";
    const Dataset dataset = load_dataset(config.input);

    stage.name = "vectorize";
    const auto start = std::chrono::steady_clock::now();
    const FeatureContext context = fit_feature_context(dataset.rows, vc, true);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    stage.name = "store";
    const auto labels = majority_labels(dataset.rows);
    const auto now = std::chrono::duration_cast<std::chrono::seconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
    std::vector<VectorRecord> records;
    for (const auto& [user, grid] : context.user_grids) {
      VectorRecord r;
      r.user = user;
      r.label = labels.at(user);
      r.vector.assign(grid.data(), grid.data() + grid.size());
      r.created_at = now;
      records.push_back(std::move(r));
    }
    const std::size_t inserted = store->insert_batch(records);
    const std::size_t total = store->count();
    store->close();

    stage.name = "write report";
    write_json(config.out_dir / "vectorize_report.json",
               json{{"store", store_json(descriptor)},
                    {"samples", dataset.rows.size()},
                    {"users", context.user_grids.size()},
                    {"records_inserted", inserted},
                    {"store_count", total},
                    {"config", settings_json(config.settings)},
                    {"timing", {{"vectorization_seconds", seconds}}}});
    out << "inserted " << inserted << " records (store holds " << total << ")\n"
        << "vectorization_seconds " << csv::number(seconds) << '\n';
    return kOk;
  });
}

int cmd_train(const RunConfig& config, std::ostream& out, std::ostream& err) {
  Stage stage{"load dataset"};
  return guarded("train", stage, err, [&] {
    const Dataset dataset = load_dataset(config.input);

    stage.name = "build model";
    const ModelSpec spec = build_spec(config.arch, config.settings);
    const FeaturePipeline pipeline = config.pipeline.value_or(default_pipeline(config.arch));
    ExperimentOptions options;
    options.train = config.settings.train;
    options.vectorization = config.settings.vectorization;
    options.regression_target = config.settings.regression_target;

    GridTable stored;
    if (const auto text = store_descriptor(config); text && spec.has_grid_branch()) {
      stage.name = "read store";
      auto store = open_store(StoreDescriptor::parse(*text), options.vectorization.grid_size);
      store->init_schema();
      stored = grids_from_store(*store);
      store->close();
      options.stored_grids = &stored;
    }

    stage.name = "train";
    const ExperimentResult result = run_experiment(dataset, spec, pipeline, options);

    stage.name = "write reports";
    write_experiment(config.out_dir, config, result);
    out << to_string(spec.architecture) << " (" << to_string(pipeline) << ") test_acc "
        << csv::number(result.metrics.accuracy) << " weighted_f1 " << csv::number(result.metrics.weighted_f1)
        << " train_seconds " << csv::number(result.report.train_seconds) << '\n';
    return kOk;
  });
}

int cmd_bench(const RunConfig& config, std::ostream& out, std::ostream& err) {
  Stage stage{"load dataset"};
  return guarded("bench", stage, err, [&] {
    const Dataset dataset = load_dataset(config.input);
    ExperimentOptions options;
    options.train = config.settings.train;
    options.vectorization = config.settings.vectorization;
    options.regression_target = config.settings.regression_target;

    // The baseline LSTM and VecLSTM share one layer stack; they differ only
    // in the feature pipeline.
    stage.name = "lstm/veclstm";
    BenchmarkResult stack = benchmark_pipelines(dataset, build_spec(Architecture::VecLstm, config.settings), options);
    stack.on_the_fly.spec.architecture = Architecture::LstmBaseline;
    stage.name = "hybrid";
    const BenchmarkResult hybrid =
        benchmark_pipelines(dataset, build_spec(Architecture::Hybrid, config.settings), options);

    stage.name = "write reports";
    const std::vector<std::pair<std::string, const ExperimentResult*>> rows = {
        {"lstm/non_vectorized", &stack.on_the_fly},
        {"veclstm/vectorized", &stack.vectorized},
        {"hybrid/non_vectorized", &hybrid.on_the_fly},
        {"hybrid/vectorized", &hybrid.vectorized},
    };
    auto csv_out = open_output(config.out_dir / "bench.csv");
    csv_out << "variant,train_seconds,vectorize_seconds,val_acc,test_acc,weighted_f1,rmse,mae,mse\n";
    json json_rows = json::array();
    for (const auto& [variant, r] : rows) {
      const auto& m = r->metrics;
      csv_out << csv::field(variant) << ',' << csv::number(r->report.train_seconds) << ','
              << csv::number(r->report.vectorization_seconds) << ',' << csv::number(r->report.validation_accuracy)
              << ',' << csv::number(m.accuracy) << ',' << csv::number(m.weighted_f1) << ','
              << csv::number(m.errors.rmse) << ',' << csv::number(m.errors.mae) << ',' << csv::number(m.errors.mse)
              << '\n';
      json_rows.push_back({{"variant", variant},
                           {"architecture", to_string(r->spec.architecture)},
                           {"pipeline", to_string(r->pipeline)},
                           {"parameters", param_count(r->spec)},
                           {"train_seconds", r->report.train_seconds},
                           {"vectorize_seconds", r->report.vectorization_seconds},
                           {"val_acc", r->report.validation_accuracy},
                           {"test_acc", m.accuracy},
                           {"weighted_f1", m.weighted_f1},
                           {"rmse", m.errors.rmse},
                           {"mae", m.errors.mae},
                           {"mse", m.errors.mse}});
    }
    if (!csv_out) throw Error(ErrorKind::Io, "bench.csv write failed");

    json report{{"config", settings_json(config.settings)},
                {"samples", dataset.rows.size()},
                {"rows", json_rows},
                {"comparisons",
                 {{"lstm_vs_veclstm", benchmark_json(stack.timing)}, {"hybrid", benchmark_json(hybrid.timing)}}}};

    if (const auto text = store_descriptor(config)) {
      // Store workload: insert every user heatmap in one batch, then read
      // the whole table back.
      stage.name = "store workload";
      const StoreDescriptor descriptor = StoreDescriptor::parse(*text);
      auto store = open_store(descriptor, options.vectorization.grid_size);
      store->init_schema();
      const auto labels = majority_labels(dataset.rows);
      std::vector<VectorRecord> records;
      for (const auto& [user, grid] : user_heatmaps(dataset.rows, options.vectorization)) {
        VectorRecord r;
        r.user = user;
        r.label = labels.at(user);
        r.vector.assign(grid.data(), grid.data() + grid.size());
        records.push_back(std::move(r));
      }
      const auto t0 = std::chrono::steady_clock::now();
      store->insert_batch(records);
      const auto t1 = std::chrono::steady_clock::now();
      const auto fetched = store->fetch();
      const auto t2 = std::chrono::steady_clock::now();
      store->close();
      report["store_workload"] = {{"store", store_json(descriptor)},
                                  {"records_inserted", records.size()},
                                  {"records_fetched", fetched.size()},
                                  {"insert_seconds", std::chrono::duration<double>(t1 - t0).count()},
                                  {"fetch_seconds", std::chrono::duration<double>(t2 - t1).count()}};
    }
    write_json(config.out_dir / "bench.json", report);

    const std::pair<const char*, const BenchmarkReport*> comparisons[] = {{"lstm_vs_veclstm", &stack.timing},
                                                                          {"hybrid", &hybrid.timing}};
    for (const auto& [name, t] : comparisons)
      out << name << ": t_novec " << csv::number(t->t_novec) << " t_vec " << csv::number(t->t_vec)
          << " t_vectorization " << csv::number(t->t_vectorization) << " reduction_pct "
          << csv::number(t->reduction_pct) << '\n';
    return kOk;
  });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"GPS trajectory activity recognition toolkit", "veclstm"};
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig config;
  std::optional<std::uint64_t> seed;
  std::string config_file, arch_name, pipeline_name, store;
  app.add_option("--seed", seed, "random seed for splits, initialization and batch order");
  app.add_option("--config", config_file, "JSON file with setting overrides");
  app.add_option("--store", store, "vector store: sqlite:<path> or a file path");
  app.add_flag("--strict", config.strict, "treat per-file ingest problems as fatal");
  app.add_option("--out-dir", config.out_dir, "directory for reports");

  auto* ingest = app.add_subcommand("ingest", "GeoLife directory -> dataset CSV");
  ingest->add_option("geolife_dir", config.input)->required();
  ingest->add_option("-o,--output", config.output, "dataset CSV (default <out-dir>/dataset.csv)");
  auto* vectorize = app.add_subcommand("vectorize", "dataset CSV -> per-user heatmaps in the store");
  vectorize->add_option("dataset", config.input)->required();
  auto* train = app.add_subcommand("train", "train and evaluate one architecture");
  train->add_option("dataset", config.input)->required();
  train->add_option("--arch", arch_name, "lstm, veclstm or hybrid")->required();
  train->add_option("--pipeline", pipeline_name, "vectorized or non_vectorized");
  auto* bench = app.add_subcommand("bench", "timing comparison of the feature pipelines");
  bench->add_option("dataset", config.input)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) throw Error(ErrorKind::Usage, "cannot read config " + config_file);
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw Error(ErrorKind::Usage, "config " + config_file + ": " + e.what());
      }
      apply_config(j, config.settings);
    }
    if (seed) config.settings.train.seed = *seed;
    if (!store.empty()) config.store = store;
    if (train->parsed()) {
      const auto arch = parse_architecture(arch_name);
      if (!arch) throw Error(ErrorKind::Usage, "unknown architecture '" + arch_name + "'");
      config.arch = *arch;
      if (pipeline_name == "vectorized") config.pipeline = FeaturePipeline::Precomputed;
      else if (pipeline_name == "non_vectorized") config.pipeline = FeaturePipeline::OnTheFly;
      else if (!pipeline_name.empty()) throw Error(ErrorKind::Usage, "unknown pipeline '" + pipeline_name + "'");
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  if (ingest->parsed()) return cmd_ingest(config, out, err);
  if (vectorize->parsed()) return cmd_vectorize(config, out, err);
  if (train->parsed()) return cmd_train(config, out, err);
  return cmd_bench(config, out, err);
}

}  // namespace veclstm::cli
