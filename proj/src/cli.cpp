#include "lindy/cli.hpp"

#include <exception>
#include <functional>
#include <iostream>
#include <random>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "lindy/errors.hpp"
#include "lindy/kalman.hpp"

namespace lindy {

namespace {

constexpr std::uint64_t kInitialStateStream = 0x9E3779B97F4A7C15ULL;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

PolicySpec policy_from_json(const Json& j) {
  PolicySpec spec;
  if (j.is_string()) {
    spec.kind = parse_policy_kind(j.get<std::string>());
    return spec;
  }
  if (!j.is_object() || !j.contains("name")) {
    throw ValidationError("a policy must be a name or an object with a 'name' field");
  }
  spec.kind = parse_policy_kind(j.at("name").get<std::string>());
  spec.lambda = j.value("lambda", spec.lambda);
  spec.gamma = j.value("gamma", spec.gamma);
  spec.mpc.horizon = j.value("mpc_horizon", spec.mpc.horizon);
  spec.mpc.riccati_tol = j.value("riccati_tol", spec.mpc.riccati_tol);
  spec.mpc.aim_tol = j.value("aim_tol", spec.mpc.aim_tol);
  if (!(spec.lambda >= 0.0)) throw ValidationError("policy lambda must be >= 0");
  if (spec.mpc.horizon < 0) throw ValidationError("mpc_horizon must be >= 0");
  return spec;
}

TransitionStructure parse_transition(const std::string& s) {
  if (s == "diagonal") return TransitionStructure::Diagonal;
  if (s == "full_block") return TransitionStructure::FullBlock;
  throw ValidationError("unknown transition structure '" + s + "' (diagonal, full_block)");
}

ObservationNoiseStructure parse_obs_noise(const std::string& s) {
  if (s == "diagonal") return ObservationNoiseStructure::Diagonal;
  if (s == "full") return ObservationNoiseStructure::Full;
  throw ValidationError("unknown observation noise structure '" + s + "' (diagonal, full)");
}

void require_file(const std::filesystem::path& p, const std::string& what) {
  if (p.empty()) throw ValidationError("no " + what + " given");
  if (!std::filesystem::exists(p)) throw ValidationError(what + " " + p.string() + " not found");
}

ModelDocument load_model(const RunConfig& c) {
  require_file(c.model_path, "model file");
  return model_from_json(read_json_file(c.model_path));
}

IngestResult load_data(const RunConfig& c) {
  require_file(c.data_path, "data file");
  IngestResult data = ingest_csv(c.data_path, c.columns, c.rescale_blocks);
  if (!data.gaps.empty()) {
    std::cerr << fmt::format("note: {} gap(s) in block numbers, first after block {}\n",
                             data.gaps.size(), data.gaps.front().after);
  }
  return data;
}

// Runs a command body, mapping library errors to exit codes.
int guarded(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const Json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

VectorXd target_vector(const RunConfig& c, int n) {
  return VectorXd::Constant(n, c.target.value_or(15e6));
}

}  // namespace

namespace {

RunConfig parse_run_config(const Json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  RunConfig c;
  if (j.contains("model")) c.model_path = resolve(base_dir, j.at("model").get<std::string>());
  if (j.contains("theta")) c.theta_path = resolve(base_dir, j.at("theta").get<std::string>());
  if (j.contains("data")) c.data_path = resolve(base_dir, j.at("data").get<std::string>());
  if (j.contains("out")) c.out_dir = resolve(base_dir, j.at("out").get<std::string>());
  if (j.contains("policies")) {
    c.policies.clear();
    for (const Json& p : j.at("policies")) c.policies.push_back(policy_from_json(p));
    if (c.policies.empty()) throw ValidationError("'policies' is empty");
  } else if (j.contains("policy")) {
    c.policies = {policy_from_json(j.at("policy"))};
  }
  c.K = j.value("K", c.K);
  if (c.K < 1) throw ValidationError("K must be >= 1");
  if (j.contains("seeds")) {
    c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (c.seeds.empty()) throw ValidationError("'seeds' is empty");
  } else if (j.contains("seed")) {
    c.seeds = {j.at("seed").get<std::uint64_t>()};
  }
  c.mode = j.value("mode", c.mode);
  if (c.mode != "synthetic" && c.mode != "replay" && c.mode != "observed") {
    throw ValidationError("unknown mode '" + c.mode + "' (synthetic, replay, observed)");
  }
  if (j.contains("columns")) {
    const Json& cm = j.at("columns");
    c.columns.block = cm.value("block", c.columns.block);
    c.columns.prices = cm.value("prices", c.columns.prices);
    c.columns.demands = cm.value("demands", c.columns.demands);
    c.columns.price_scale = cm.value("price_scale", c.columns.price_scale);
    c.columns.allow_negative_usage = cm.value("allow_negative_usage", c.columns.allow_negative_usage);
  }
  c.rescale_blocks = j.value("rescale_blocks", c.rescale_blocks);
  if (j.contains("target")) c.target = j.at("target").get<double>();
  if (j.contains("em")) {
    const Json& e = j.at("em");
    c.em.max_iters = e.value("max_iters", c.em.max_iters);
    c.em.ll_tol = e.value("ll_tol", c.em.ll_tol);
    if (e.contains("transition")) {
      c.em.structure.transition = parse_transition(e.at("transition").get<std::string>());
    }
    if (e.contains("obs_noise")) {
      c.em.structure.obs_noise = parse_obs_noise(e.at("obs_noise").get<std::string>());
    }
  }
  c.block_limit = j.value("block_limit", c.block_limit);
  c.burn_in = j.value("burn_in", c.burn_in);
  c.histogram_bins = j.value("histogram_bins", c.histogram_bins);
  return c;
}

}  // namespace

RunConfig run_config_from_json(const Json& j, const std::filesystem::path& base_dir) {
  try {
    return parse_run_config(j, base_dir);
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const Json j = read_json_file(path);
  try {
    return run_config_from_json(j, path.has_parent_path() ? path.parent_path() : ".");
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

int cmd_simulate(const RunConfig& c) {
  return guarded([&] {
    const ModelDocument doc = load_model(c);
    const GaussianPrior prior = doc.prior ? *doc.prior : stationary_prior(doc.mp);
    const std::uint64_t seed = c.seeds.front();
    std::mt19937_64 rng(seed ^ kInitialStateStream);
    GaussianSampler sampler(prior.cov);
    const HiddenState x0 = HiddenState::from_stacked(prior.mean + sampler.draw(rng), doc.mp.n);
    const PolicySpec& spec = c.policies.front();
    auto policy = make_policy(spec, doc.mp, prior, equilibrium_price(doc.mp));
    const Simulation sim = simulate_truth(doc.mp, x0, *policy, c.K, seed);
    write_trajectory_csv(c.out_dir / "trajectory.csv", sim.records, &sim.states);
    Json metrics = metrics_to_json(
        compute_metrics(sim.records, doc.mp.t, c.block_limit, spec.label()));
    metrics["seed"] = seed;
    write_json_file(c.out_dir / "metrics.json", metrics);
    std::cout << fmt::format("simulated {} blocks with {} (seed {}) -> {}\n", c.K, spec.label(),
                             seed, c.out_dir.string());
  });
}

int cmd_estimate(const RunConfig& c) {
  return guarded([&] {
    const IngestResult data = load_data(c);
    ThetaEstimate theta0;
    if (!c.theta_path.empty()) {
      require_file(c.theta_path, "theta file");
      theta0 = theta_from_json(read_json_file(c.theta_path));
    } else if (!c.model_path.empty()) {
      const ModelDocument doc = load_model(c);
      theta0 = ThetaEstimate::from_model(doc.mp, doc.prior ? *doc.prior : stationary_prior(doc.mp));
    } else {
      theta0 = initial_theta(data.records, c.em.structure);
    }
    if (theta0.sp.n != static_cast<int>(c.columns.prices.size())) {
      throw ValidationError("starting point and data disagree on the number of resources");
    }
    for (const std::string& w : theta0.warnings) std::cerr << "warning: " << w << '\n';
    const EmResult fit = fit_em(data.records, theta0, c.em);
    for (const std::string& w : fit.theta.warnings) std::cerr << "warning: " << w << '\n';
    Json tj = theta_to_json(fit.theta);
    tj["em"] = Json{{"iterations", fit.trace.iterations},
                    {"reason", fit.trace.reason},
                    {"log_likelihood", fit.trace.log_likelihood.back()}};
    write_json_file(c.out_dir / "theta.json", tj);
    write_em_trace_csv(c.out_dir / "em_trace.csv", fit.trace);
    std::cout << fmt::format("EM {} after {} iterations, log-likelihood {:.10g}\n",
                             fit.trace.reason, fit.trace.iterations,
                             fit.trace.log_likelihood.back());
  });
}

int cmd_evaluate(const RunConfig& c) {
  return guarded([&] {
    HeadToHeadResult res;
    if (c.mode == "observed") {
      const IngestResult data = load_data(c);
      const int n = static_cast<int>(c.columns.prices.size());
      VectorXd t = target_vector(c, n);
      if (!c.model_path.empty()) t = load_model(c).mp.t;
      res.mode = EvalMode::Replay;
      EvalCell cell;
      cell.policy = "observed";
      cell.ok = true;
      cell.overall = compute_metrics(std::span(data.records).subspan(
                                         std::min<std::size_t>(c.burn_in, data.records.size() - 1)),
                                     t, c.block_limit, "observed");
      res.cells.push_back(cell);
      res.summary.push_back({"observed", 1, 0, cell.overall});
    } else {
      HeadToHeadConfig h;
      h.policies = c.policies;
      h.seeds = c.seeds;
      h.K = c.K;
      h.block_limit = c.block_limit;
      h.burn_in = c.burn_in;
      if (c.mode == "synthetic") {
        const ModelDocument doc = load_model(c);
        h.mp = doc.mp;
        h.prior = doc.prior;
        h.mode = EvalMode::Synthetic;
      } else {
        const IngestResult data = load_data(c);
        require_file(c.theta_path, "theta file");
        const ThetaEstimate theta = theta_from_json(read_json_file(c.theta_path));
        ModelParams like;
        if (!c.model_path.empty()) {
          like = load_model(c).mp;
        } else {
          like.n = theta.sp.n;
          like.t = target_vector(c, theta.sp.n);
          like.lambda = 0.0;
        }
        h.mp = theta.to_model(like);
        h.theta = theta;
        h.history = data.records;
        h.mode = EvalMode::Replay;
      }
      res = run_headtohead(h);
    }
    write_json_file(c.out_dir / "report.json", headtohead_to_json(res));
    write_headtohead_csv(c.out_dir / "report.csv", res);
    int ok = 0;
    for (const PolicySummary& s : res.summary) {
      if (s.runs_ok > 0) {
        ++ok;
        std::cout << fmt::format("{:<24} bias {:>14.6g}  sd {:>14.6g}  rmsd {:>14.6g}  "
                                 "phi95 {:>8.4f}  rmsu {:>12.6g}\n",
                                 s.policy, s.mean.bias(0), s.mean.sd(0), s.mean.rmsd(0),
                                 s.mean.phi95(0), s.mean.rmsu(0));
      }
      if (s.runs_failed > 0) {
        std::cerr << fmt::format("{}: {} run(s) failed\n", s.policy, s.runs_failed);
      }
    }
    for (const EvalCell& cell : res.cells) {
      if (!cell.ok) std::cerr << fmt::format("  {} seed {}: {}\n", cell.policy, cell.seed, cell.error);
    }
    if (ok == 0) throw NumericalError("every policy run failed");
  });
}

int cmd_export(const RunConfig& c) {
  return guarded([&] {
    const IngestResult data = load_data(c);
    const std::vector<BlockRecord>& recs = data.records;
    const int n = static_cast<int>(c.columns.prices.size());
    std::vector<std::int64_t> blocks;
    for (const BlockRecord& r : recs) blocks.push_back(r.index);

    write_histogram_csv(c.out_dir / "gas_used_hist.csv", gas_series(recs), c.histogram_bins);
    if (recs.size() >= 2) {
      std::vector<double> updates;
      for (std::size_t k = 1; k < recs.size(); ++k) {
        if (recs[k - 1].p(0) != 0.0) updates.push_back(recs[k].p(0) / recs[k - 1].p(0) - 1.0);
      }
      if (!updates.empty()) {
        write_histogram_csv(c.out_dir / "update_hist.csv", updates, c.histogram_bins);
      }
    }

    std::vector<std::pair<std::string, std::vector<double>>> cols;
    for (int i = 0; i < n; ++i) {
      std::vector<double> p;
      std::vector<double> y;
      for (const BlockRecord& r : recs) {
        p.push_back(r.p(i));
        y.push_back(r.y(i));
      }
      cols.emplace_back("p_" + std::to_string(i), std::move(p));
      cols.emplace_back("y_" + std::to_string(i), std::move(y));
    }
    const std::vector<double> gas = gas_series(recs);
    if (gas.size() >= 25) {
      const RegimeLabels labels = classify_regimes(gas);
      std::vector<double> code;
      for (Regime r : labels.labels) {
        code.push_back(r == Regime::Spike ? 1.0 : r == Regime::Stable ? 0.0 : -1.0);
      }
      cols.emplace_back("gas_ma", labels.moving_average);
      cols.emplace_back("regime", std::move(code));
    }
    write_columns_csv(c.out_dir / "base_fee_trace.csv", blocks, cols);

    if (!c.theta_path.empty()) {
      require_file(c.theta_path, "theta file");
      const ThetaEstimate theta = theta_from_json(read_json_file(c.theta_path));
      const FilterResult fr = run_filter(recs, theta.sp, theta.prior);
      const Eigen::Index m = theta.sp.state_dim();
      std::vector<std::pair<std::string, std::vector<double>>> est(static_cast<std::size_t>(m));
      for (Eigen::Index i = 0; i < m; ++i) {
        est[i].first = i < n ? "d_" + std::to_string(i)
                             : "B_" + std::to_string((i - n) % n) + "_" + std::to_string((i - n) / n);
      }
      for (const BeliefState& b : fr.filtered) {
        for (Eigen::Index i = 0; i < m; ++i) est[i].second.push_back(b.x_hat(i));
      }
      write_columns_csv(c.out_dir / "state_estimates.csv", blocks, est);
    }
    std::cout << fmt::format("exported {} blocks -> {}\n", recs.size(), c.out_dir.string());
  });
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Dynamic pricing of multiple blockchain resources"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string policy;
  std::optional<double> lambda;
  std::optional<int> horizon;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration");
    sub->add_option("--seed", seed, "random seed (replaces the config's seeds)");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--policy", policy,
                    "policy name: " + fmt::format("{}", fmt::join(policy_names(), ", ")));
    sub->add_option("--lambda", lambda, "price-change penalty for lindy-lambda");
    sub->add_option("--horizon", horizon, "number of blocks K");
  };
  CLI::App* simulate = app.add_subcommand("simulate", "simulate a trajectory under one policy");
  CLI::App* estimate = app.add_subcommand("estimate", "fit the model to block data with EM");
  CLI::App* evaluate = app.add_subcommand("evaluate", "compare policies and write a report");
  CLI::App* exportc = app.add_subcommand("export", "write plot-ready CSVs from block data");
  for (CLI::App* sub : {simulate, estimate, evaluate, exportc}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  RunConfig config;
  const int loaded = guarded([&] {
    if (!config_path.empty()) config = load_run_config(config_path);
    if (seed) config.seeds = {*seed};
    if (!out.empty()) config.out_dir = out;
    if (!policy.empty()) {
      PolicySpec spec = config.policies.empty() ? PolicySpec{} : config.policies.front();
      spec.kind = parse_policy_kind(policy);
      config.policies = {spec};
    }
    if (lambda) {
      if (!(*lambda >= 0.0)) throw ValidationError("--lambda must be >= 0");
      for (PolicySpec& s : config.policies) s.lambda = *lambda;
    }
    if (horizon) {
      if (*horizon < 1) throw ValidationError("--horizon must be >= 1");
      config.K = *horizon;
    }
  });
  if (loaded != 0) return loaded;

  if (simulate->parsed()) return cmd_simulate(config);
  if (estimate->parsed()) return cmd_estimate(config);
  if (evaluate->parsed()) return cmd_evaluate(config);
  return cmd_export(config);
}

}  // namespace lindy
