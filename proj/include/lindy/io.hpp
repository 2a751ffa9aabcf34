#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lindy/estimation.hpp"
#include "lindy/eval.hpp"
#include "lindy/kalman.hpp"
#include "lindy/model.hpp"

namespace lindy {

using Json = nlohmann::json;

constexpr int kFormatVersion = 1;

// Matrices are nested row-major arrays, vectors flat arrays.
Json matrix_to_json(const MatrixXd& m);
MatrixXd matrix_from_json(const Json& j, const std::string& field);
Json vector_to_json(const VectorXd& v);
VectorXd vector_from_json(const Json& j, const std::string& field);

struct ModelDocument {
  ModelParams mp;
  std::optional<GaussianPrior> prior;
};

Json model_to_json(const ModelParams& mp, const std::optional<GaussianPrior>& prior = {});
// Accepts either the full matrix form or {"scalar": {...}} with the fields of
// ScalarModelSpec (plus optional d0, beta0, sd_d0, sd_beta0, rho0 for the
// prior). Validates the result.
ModelDocument model_from_json(const Json& j);

Json theta_to_json(const ThetaEstimate& th);
ThetaEstimate theta_from_json(const Json& j);

Json belief_to_json(const BeliefState& b);
BeliefState belief_from_json(const Json& j);

Json metrics_to_json(const MetricsReport& r);
Json headtohead_to_json(const HeadToHeadResult& res);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

// Maps CSV columns onto BlockRecord fields. Price columns are multiplied by
// price_scale (e.g. 1e9 for gwei to wei). Negative usage is an error unless
// allow_negative_usage is set, which simulated linear-Gaussian data needs.
struct ColumnMap {
  std::string block = "block";
  std::vector<std::string> prices{"p_0"};
  std::vector<std::string> demands{"y_0"};
  double price_scale = 1.0;
  bool allow_negative_usage = false;

  static ColumnMap for_resources(int n);
};

struct BlockGap {
  std::int64_t after = 0;
  std::int64_t before = 0;
};

struct IngestResult {
  std::vector<BlockRecord> records;
  std::vector<BlockGap> gaps;
};

// Reads a comma-separated file with a header row. Throws ParseError (with
// the 1-based line) on malformed or negative values, MonotonicityError on
// duplicated or decreasing block numbers, and EmptyTrajectory when there are
// no data rows. With rescale_blocks the first block number becomes 0.
IngestResult ingest_csv(const std::filesystem::path& path, const ColumnMap& columns = {},
                        bool rescale_blocks = false);

// Writes block, p_i, y_i columns and, when states are given, d_i and
// B_i_j columns. Values carry 17 significant digits.
void write_trajectory_csv(const std::filesystem::path& path,
                          const std::vector<BlockRecord>& records,
                          const std::vector<HiddenState>* states = nullptr);

void write_em_trace_csv(const std::filesystem::path& path, const EmTrace& trace);

// One row per (policy, seed, regime, resource).
void write_headtohead_csv(const std::filesystem::path& path, const HeadToHeadResult& res);

// Equal-width histogram: columns bin_low, bin_high, count.
void write_histogram_csv(const std::filesystem::path& path, const std::vector<double>& values,
                         int bins);

// Named columns of equal length with a leading block column.
void write_columns_csv(const std::filesystem::path& path, const std::vector<std::int64_t>& blocks,
                       const std::vector<std::pair<std::string, std::vector<double>>>& columns);

std::string format_double(double v);

}  // namespace lindy
