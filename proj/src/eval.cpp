#include "lindy/eval.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "lindy/errors.hpp"
#include "lindy/kalman.hpp"

namespace lindy {

namespace {

constexpr std::uint64_t kInitialStateStream = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kReplayNoiseStream = 0xD1B54A32D192ED03ULL;

MetricsReport metrics_impl(std::span<const BlockRecord> records, const std::vector<bool>* include,
                           const VectorXd& t, const VectorXd& block_limit,
                           const std::string& label) {
  if (records.empty()) throw EmptyTrajectory("compute_metrics: no blocks");
  const Eigen::Index n = t.size();
  if (block_limit.size() != n) throw ValidationError("block limit has the wrong dimension");
  if (include != nullptr && include->size() != records.size()) {
    throw ValidationError("compute_metrics: mask length differs from trajectory length");
  }
  VectorXd sum = VectorXd::Zero(n);
  VectorXd sum_sq_dev = VectorXd::Zero(n);
  VectorXd near_full = VectorXd::Zero(n);
  VectorXd update_sq = VectorXd::Zero(n);
  int count = 0;
  int updates = 0;
  for (std::size_t k = 0; k < records.size(); ++k) {
    if (include != nullptr && !(*include)[k]) continue;
    const BlockRecord& r = records[k];
    if (r.y.size() != n || r.p.size() != n) {
      throw ValidationError("compute_metrics: record dimension differs from target");
    }
    ++count;
    sum += r.y;
    sum_sq_dev += (r.y - t).cwiseAbs2();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (r.y(i) > 0.95 * block_limit(i)) near_full(i) += 1.0;
    }
    if (k >= 1) {
      update_sq += (r.p - records[k - 1].p).cwiseAbs2();
      ++updates;
    }
  }
  if (count == 0) throw EmptyTrajectory("compute_metrics: no blocks selected");

  MetricsReport rep;
  rep.label = label;
  rep.blocks = count;
  const VectorXd mean = sum / count;
  rep.bias = mean - t;
  rep.rmsd = (sum_sq_dev / count).cwiseSqrt();
  VectorXd var = VectorXd::Zero(n);
  for (std::size_t k = 0; k < records.size(); ++k) {
    if (include != nullptr && !(*include)[k]) continue;
    var += (records[k].y - mean).cwiseAbs2();
  }
  rep.sd = (var / count).cwiseSqrt();
  rep.phi95 = near_full / count;
  rep.rmsu = updates > 0 ? VectorXd((update_sq / updates).cwiseSqrt()) : VectorXd::Zero(n);
  return rep;
}

void average_into(MetricsReport& acc, const MetricsReport& r, int count) {
  if (count == 1) {
    acc = r;
    return;
  }
  const double w = 1.0 / count;
  acc.bias += w * (r.bias - acc.bias);
  acc.sd += w * (r.sd - acc.sd);
  acc.rmsd += w * (r.rmsd - acc.rmsd);
  acc.phi95 += w * (r.phi95 - acc.phi95);
  acc.rmsu += w * (r.rmsu - acc.rmsu);
  acc.blocks += r.blocks;
}

// Fills the metric fields of a cell from its trajectory.
void score_cell(EvalCell& cell, std::span<const BlockRecord> traj,
                std::span<const BlockRecord> regime_source, const HeadToHeadConfig& cfg) {
  const auto skip = static_cast<std::size_t>(std::max(cfg.burn_in, 0));
  if (skip >= traj.size()) throw SeriesTooShort("burn-in covers the whole trajectory");
  const VectorXd limit = VectorXd::Constant(cfg.mp.n, cfg.block_limit);
  const std::span<const BlockRecord> scored = traj.subspan(skip);
  cell.overall = compute_metrics(scored, cfg.mp.t, limit, cell.policy);
  const std::vector<double> gas = gas_series(regime_source.subspan(skip));
  if (gas.size() < static_cast<std::size_t>(cfg.regimes.window)) return;
  const RegimeLabels labels = classify_regimes(gas, cfg.regimes);
  if (labels.count(Regime::Spike) > 0) {
    cell.spike = compute_metrics_subset(scored, labels.mask(Regime::Spike), cfg.mp.t, limit,
                                        cell.policy + "/spike");
  }
  if (labels.count(Regime::Stable) > 0) {
    cell.stable = compute_metrics_subset(scored, labels.mask(Regime::Stable), cfg.mp.t, limit,
                                         cell.policy + "/stable");
  }
}

std::vector<BlockRecord> replay_run(PricingPolicy& policy, const std::vector<VectorXd>& d_hat,
                                    const std::vector<MatrixXd>& B_hat,
                                    const std::vector<BlockRecord>& history,
                                    GaussianSampler& noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ kReplayNoiseStream);
  std::vector<BlockRecord> out;
  out.reserve(history.size());
  VectorXd p = policy.initial_price();
  for (std::size_t k = 0; k < history.size(); ++k) {
    if (!p.allFinite()) throw NumericalError(policy.name() + " produced a non-finite price");
    BlockRecord r;
    r.index = history[k].index;
    r.p = p;
    r.y = d_hat[k] + B_hat[k] * p + noise.draw(rng);
    out.push_back(r);
    if (k + 1 < history.size()) p = policy.next_price(out.back());
  }
  return out;
}

}  // namespace

MetricsReport compute_metrics(std::span<const BlockRecord> records, const VectorXd& t,
                              const VectorXd& block_limit, const std::string& label) {
  return metrics_impl(records, nullptr, t, block_limit, label);
}

MetricsReport compute_metrics(std::span<const BlockRecord> records, const VectorXd& t,
                              double block_limit, const std::string& label) {
  return metrics_impl(records, nullptr, t, VectorXd::Constant(t.size(), block_limit), label);
}

MetricsReport compute_metrics_subset(std::span<const BlockRecord> records,
                                     const std::vector<bool>& include, const VectorXd& t,
                                     const VectorXd& block_limit, const std::string& label) {
  return metrics_impl(records, &include, t, block_limit, label);
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::Spike:
      return "spike";
    case Regime::Stable:
      return "stable";
    case Regime::Other:
      return "other";
  }
  return "other";
}

std::vector<bool> RegimeLabels::mask(Regime r) const {
  std::vector<bool> out(labels.size());
  for (std::size_t k = 0; k < labels.size(); ++k) out[k] = labels[k] == r;
  return out;
}

std::size_t RegimeLabels::count(Regime r) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), r));
}

RegimeLabels classify_regimes(std::span<const double> gas, const RegimeOptions& options) {
  if (options.window < 1 || options.window % 2 == 0) {
    throw ValidationError("regime window must be a positive odd number");
  }
  const std::size_t w = static_cast<std::size_t>(options.window);
  if (gas.size() < w) {
    throw SeriesTooShort("series of " + std::to_string(gas.size()) +
                         " blocks is shorter than the window of " + std::to_string(w));
  }
  const std::size_t half = w / 2;
  RegimeLabels out;
  out.labels.assign(gas.size(), Regime::Other);
  out.moving_average.assign(gas.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = half; k + half < gas.size(); ++k) {
    double s = 0.0;
    for (std::size_t j = k - half; j <= k + half; ++j) s += gas[j];
    const double ma = s / static_cast<double>(w);
    out.moving_average[k] = ma;
    if (ma > options.spike_threshold) {
      out.labels[k] = Regime::Spike;
    } else if (ma >= options.stable_low && ma <= options.stable_high) {
      out.labels[k] = Regime::Stable;
    }
  }
  return out;
}

std::vector<double> gas_series(std::span<const BlockRecord> records) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const BlockRecord& r : records) out.push_back(r.y(0));
  return out;
}

const PolicySummary* HeadToHeadResult::find(const std::string& policy) const {
  for (const PolicySummary& s : summary) {
    if (s.policy == policy) return &s;
  }
  return nullptr;
}

HeadToHeadResult run_headtohead(const HeadToHeadConfig& cfg) {
  cfg.mp.validate();
  if (cfg.seeds.empty()) throw ValidationError("run_headtohead: no seeds");
  if (cfg.policies.empty()) throw ValidationError("run_headtohead: no policies");

  HeadToHeadResult res;
  res.mode = cfg.mode;

  // Model seen by the policies and, in replay mode, the reconstructed demand.
  ModelParams policy_mp = cfg.mp;
  GaussianPrior prior;
  VectorXd p0;
  std::vector<VectorXd> d_hat;
  std::vector<MatrixXd> B_hat;
  if (cfg.mode == EvalMode::Synthetic) {
    if (cfg.K < 2) throw ValidationError("run_headtohead: K must be >= 2");
    prior = cfg.prior ? *cfg.prior : stationary_prior(cfg.mp);
    p0 = cfg.p0 ? *cfg.p0 : equilibrium_price(cfg.mp);
  } else {
    if (cfg.history.size() < 2) throw EmptyTrajectory("replay needs at least two blocks");
    if (!cfg.theta) throw ValidationError("replay mode needs a fitted theta");
    policy_mp = cfg.theta->to_model(cfg.mp);
    policy_mp.validate();
    prior = cfg.prior ? *cfg.prior : cfg.theta->prior;
    p0 = cfg.p0 ? *cfg.p0 : cfg.history.front().p;
    const SmoothedTrajectory sm = smooth(cfg.history, cfg.theta->sp, cfg.theta->prior);
    const int n = cfg.mp.n;
    for (const VectorXd& x : sm.mean) {
      const HiddenState hs = HiddenState::from_stacked(x, n);
      d_hat.push_back(hs.d);
      B_hat.push_back(hs.B);
    }
    EvalCell hist;
    hist.policy = "historical";
    hist.ok = true;
    score_cell(hist, cfg.history, cfg.history, cfg);
    if (cfg.keep_trajectories) hist.trajectory = cfg.history;
    res.cells.push_back(std::move(hist));
  }

  for (const PolicySpec& spec : cfg.policies) {
    const std::string label = spec.label();
    for (std::uint64_t seed : cfg.seeds) {
      EvalCell cell;
      cell.policy = label;
      cell.seed = seed;
      try {
        std::unique_ptr<PricingPolicy> policy = make_policy(spec, policy_mp, prior, p0);
        std::vector<BlockRecord> traj;
        if (cfg.mode == EvalMode::Synthetic) {
          HiddenState x0;
          if (cfg.x0) {
            x0 = *cfg.x0;
          } else {
            std::mt19937_64 rng(seed ^ kInitialStateStream);
            GaussianSampler sampler(prior.cov);
            x0 = HiddenState::from_stacked(prior.mean + sampler.draw(rng), cfg.mp.n);
          }
          traj = simulate_truth(cfg.mp, x0, *policy, cfg.K, seed).records;
          score_cell(cell, traj, traj, cfg);
        } else {
          GaussianSampler noise(cfg.theta->sp.W_y);
          traj = replay_run(*policy, d_hat, B_hat, cfg.history, noise, seed);
          score_cell(cell, traj, cfg.history, cfg);
        }
        cell.ok = true;
        if (cfg.keep_trajectories) cell.trajectory = std::move(traj);
      } catch (const Error& e) {
        cell.ok = false;
        cell.error = e.what();
      }
      res.cells.push_back(std::move(cell));
    }
  }

  for (const EvalCell& cell : res.cells) {
    PolicySummary* s = nullptr;
    for (PolicySummary& existing : res.summary) {
      if (existing.policy == cell.policy) s = &existing;
    }
    if (s == nullptr) {
      res.summary.push_back({});
      s = &res.summary.back();
      s->policy = cell.policy;
      s->mean.label = cell.policy;
    }
    if (cell.ok) {
      ++s->runs_ok;
      average_into(s->mean, cell.overall, s->runs_ok);
    } else {
      ++s->runs_failed;
    }
  }
  return res;
}

double relative_change(double candidate, double baseline) {
  if (baseline == 0.0) {
    return candidate == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), candidate);
  }
  return (candidate - baseline) / std::abs(baseline);
}

}  // namespace lindy
