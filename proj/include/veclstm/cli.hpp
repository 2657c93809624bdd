#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "veclstm/models.hpp"
#include "veclstm/pipeline.hpp"
#include "veclstm/report.hpp"

namespace veclstm::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2 };

struct RunConfig {
  std::filesystem::path input;
  std::filesystem::path output;  // ingest: dataset CSV to write
  std::filesystem::path out_dir = ".";
  std::optional<std::string> store;
  bool strict = false;
  Architecture arch = Architecture::VecLstm;
  std::optional<FeaturePipeline> pipeline;  // train: override the architecture default
  RunSettings settings;
};

int cmd_ingest(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_vectorize(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_train(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_bench(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parses argv (subcommand first) and dispatches.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace veclstm::cli
