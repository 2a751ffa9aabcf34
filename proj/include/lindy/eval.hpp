#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lindy/estimation.hpp"
#include "lindy/model.hpp"
#include "lindy/policies.hpp"

namespace lindy {

constexpr double kDefaultBlockLimit = 30e6;

// Per-resource performance metrics. Variances use the population (1/T)
// convention, so rmsd^2 = bias^2 + sd^2.
struct MetricsReport {
  std::string label;
  int blocks = 0;
  VectorXd bias;
  VectorXd sd;
  VectorXd rmsd;
  VectorXd phi95;
  VectorXd rmsu;
};

MetricsReport compute_metrics(std::span<const BlockRecord> records, const VectorXd& t,
                              const VectorXd& block_limit, const std::string& label = "");
MetricsReport compute_metrics(std::span<const BlockRecord> records, const VectorXd& t,
                              double block_limit = kDefaultBlockLimit,
                              const std::string& label = "");

// Metrics over the blocks with include[k] set. Price updates are counted for
// included blocks k >= 1 against block k-1.
MetricsReport compute_metrics_subset(std::span<const BlockRecord> records,
                                     const std::vector<bool>& include, const VectorXd& t,
                                     const VectorXd& block_limit, const std::string& label = "");

enum class Regime { Spike, Stable, Other };

std::string to_string(Regime r);

struct RegimeOptions {
  int window = 25;
  double spike_threshold = 20e6;
  double stable_low = 13.5e6;
  double stable_high = 16.5e6;
};

struct RegimeLabels {
  std::vector<Regime> labels;
  // Centered moving average; NaN for the edge blocks.
  std::vector<double> moving_average;

  std::vector<bool> mask(Regime r) const;
  std::size_t count(Regime r) const;
};

// Throws SeriesTooShort when the series is shorter than the window and
// ValidationError for an even window.
RegimeLabels classify_regimes(std::span<const double> gas, const RegimeOptions& options = {});

// First resource of each record.
std::vector<double> gas_series(std::span<const BlockRecord> records);

enum class EvalMode { Synthetic, Replay };

struct HeadToHeadConfig {
  ModelParams mp;
  std::vector<PolicySpec> policies;
  int K = 0;
  std::vector<std::uint64_t> seeds;
  EvalMode mode = EvalMode::Synthetic;

  // Belief the filter-based policies start from. Defaults to the stationary
  // distribution of mp.
  std::optional<GaussianPrior> prior;
  // Price posted for the first block. Defaults to equilibrium_price(mp).
  std::optional<VectorXd> p0;
  // Synthetic mode: initial hidden state. Defaults to a draw from the prior
  // that depends only on the seed.
  std::optional<HiddenState> x0;

  // Replay mode: historical records and the fit used to reconstruct demand.
  std::vector<BlockRecord> history;
  std::optional<ThetaEstimate> theta;

  double block_limit = kDefaultBlockLimit;
  // Leading blocks excluded from all metrics.
  int burn_in = 0;
  RegimeOptions regimes;
  bool keep_trajectories = false;
};

struct EvalCell {
  std::string policy;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  MetricsReport overall;
  std::optional<MetricsReport> spike;
  std::optional<MetricsReport> stable;
  std::vector<BlockRecord> trajectory;
};

struct PolicySummary {
  std::string policy;
  int runs_ok = 0;
  int runs_failed = 0;
  // Metrics averaged over the successful seeds.
  MetricsReport mean;
};

struct HeadToHeadResult {
  EvalMode mode = EvalMode::Synthetic;
  // Ordered by (policy, seed); in replay mode a "historical" row precedes the
  // policies.
  std::vector<EvalCell> cells;
  std::vector<PolicySummary> summary;

  const PolicySummary* find(const std::string& policy) const;
};

// Runs every policy on every seed. In synthetic mode all policies share the
// shocks of a seed. In replay mode the demand curve of each historical block
// is the smoothed estimate under theta and only the observation noise is
// resampled, so the counterfactual is model-based. A policy that throws is
// recorded as failed without affecting the others.
HeadToHeadResult run_headtohead(const HeadToHeadConfig& config);

// Signed relative change (candidate - baseline) / |baseline|.
double relative_change(double candidate, double baseline);

}  // namespace lindy
