#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lindy/estimation.hpp"
#include "lindy/eval.hpp"
#include "lindy/io.hpp"
#include "lindy/policies.hpp"

namespace lindy {

// Everything a subcommand needs. Relative paths in a config file are resolved
// against the file's directory.
struct RunConfig {
  std::filesystem::path model_path;
  std::filesystem::path theta_path;
  std::filesystem::path data_path;
  std::filesystem::path out_dir = ".";

  std::vector<PolicySpec> policies{PolicySpec{}};
  int K = 1000;
  std::vector<std::uint64_t> seeds{1};

  // evaluate: "synthetic", "replay", or "observed" (metrics of data_path as
  // recorded).
  std::string mode = "synthetic";
  ColumnMap columns;
  bool rescale_blocks = false;
  // Used when no model file supplies the target.
  std::optional<double> target;

  EmOptions em;
  double block_limit = kDefaultBlockLimit;
  int burn_in = 0;
  int histogram_bins = 50;
};

// Parses a JSON config; throws ValidationError on unknown policy names or
// bad field types.
RunConfig run_config_from_json(const Json& j, const std::filesystem::path& base_dir = ".");
RunConfig load_run_config(const std::filesystem::path& path);

// Each returns 0 on success, 1 on validation errors and 2 on numerical
// failures, printing the reason to stderr.
int cmd_simulate(const RunConfig& config);
int cmd_estimate(const RunConfig& config);
int cmd_evaluate(const RunConfig& config);
int cmd_export(const RunConfig& config);

int run_cli(int argc, char** argv);

}  // namespace lindy
