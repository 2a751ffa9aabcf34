#include "lindy/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "lindy/errors.hpp"

namespace lindy {

namespace {

const Json& require(const Json& j, const std::string& field) {
  if (!j.is_object() || !j.contains(field)) throw ValidationError("missing field '" + field + "'");
  return j.at(field);
}

double number_at(const Json& j, const std::string& field) {
  const Json& v = require(j, field);
  if (!v.is_number()) throw ValidationError("field '" + field + "' must be a number");
  return v.get<double>();
}

double number_or(const Json& j, const std::string& field, double fallback) {
  return j.contains(field) ? number_at(j, field) : fallback;
}

void check_version(const Json& j) {
  if (j.contains("version") && j.at("version") != kFormatVersion) {
    throw ValidationError("unsupported format version " + j.at("version").dump());
  }
}

Json prior_to_json(const GaussianPrior& p) {
  return Json{{"mean", vector_to_json(p.mean)}, {"cov", matrix_to_json(p.cov)}};
}

GaussianPrior prior_from_json(const Json& j) {
  GaussianPrior p;
  p.mean = vector_from_json(require(j, "mean"), "prior.mean");
  p.cov = matrix_from_json(require(j, "cov"), "prior.cov");
  if (p.cov.rows() != p.mean.size() || p.cov.cols() != p.mean.size()) {
    throw ValidationError("prior covariance does not match the mean");
  }
  if (!is_psd(p.cov)) throw ValidationError("prior covariance is not PSD");
  return p;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  std::string out(s.substr(b, e - b));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
    out = out.substr(1, out.size() - 2);
  }
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(
        start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(const std::string& s, std::size_t line, const std::string& column) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (s.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw ParseError(line, "column '" + column + "': cannot parse '" + s + "' as a number");
  }
  return v;
}

std::int64_t parse_block(const std::string& s, std::size_t line, const std::string& column) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(line, "column '" + column + "': cannot parse '" + s + "' as a block number");
  }
  return v;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ParseError(1, "missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  return out;
}

void write_metrics_rows(std::ostream& out, const std::string& policy, const std::string& seed,
                        const std::string& regime, const MetricsReport& r) {
  for (Eigen::Index i = 0; i < r.bias.size(); ++i) {
    out << policy << ',' << seed << ',' << regime << ',' << i << ',' << r.blocks << ','
        << format_double(r.bias(i)) << ',' << format_double(r.sd(i)) << ','
        << format_double(r.rmsd(i)) << ',' << format_double(r.phi95(i)) << ','
        << format_double(r.rmsu(i)) << '\n';
  }
}

}  // namespace

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

Json matrix_to_json(const MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd matrix_from_json(const Json& j, const std::string& field) {
  if (j.is_number()) return MatrixXd::Constant(1, 1, j.get<double>());
  if (!j.is_array()) throw ValidationError("field '" + field + "' must be a nested array");
  if (j.empty()) return MatrixXd(0, 0);
  const std::size_t cols = j.front().is_array() ? j.front().size() : 0;
  MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) {
      throw ValidationError("field '" + field + "' has ragged rows");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[i][c].is_number()) throw ValidationError("field '" + field + "' has a non-number");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = j[i][c].get<double>();
    }
  }
  return m;
}

Json vector_to_json(const VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

VectorXd vector_from_json(const Json& j, const std::string& field) {
  if (j.is_number()) return VectorXd::Constant(1, j.get<double>());
  if (!j.is_array()) throw ValidationError("field '" + field + "' must be an array");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ValidationError("field '" + field + "' has a non-number");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Json model_to_json(const ModelParams& mp, const std::optional<GaussianPrior>& prior) {
  Json j{{"version", kFormatVersion},
         {"n", mp.n},
         {"A_d", matrix_to_json(mp.A_d)},
         {"mu_d", vector_to_json(mp.mu_d)},
         {"W_d", matrix_to_json(mp.W_d)},
         {"A_B", matrix_to_json(mp.A_B)},
         {"mu_B", vector_to_json(mp.mu_B)},
         {"W_B", matrix_to_json(mp.W_B)},
         {"W_dB", matrix_to_json(mp.W_dB)},
         {"W_y", matrix_to_json(mp.W_y)},
         {"t", vector_to_json(mp.t)},
         {"lambda", mp.lambda}};
  if (prior) j["prior"] = prior_to_json(*prior);
  return j;
}

ModelDocument model_from_json(const Json& j) {
  check_version(j);
  ModelDocument doc;
  if (j.contains("scalar")) {
    const Json& s = j.at("scalar");
    ScalarModelSpec spec;
    spec.mu_d = number_at(s, "mu_d");
    spec.mu_beta = number_at(s, "mu_beta");
    spec.alpha_d = number_at(s, "alpha_d");
    spec.alpha_beta = number_at(s, "alpha_beta");
    spec.sigma_d = number_at(s, "sigma_d");
    spec.sigma_beta = number_at(s, "sigma_beta");
    spec.rho = number_or(s, "rho", 0.0);
    spec.sigma_y = number_at(s, "sigma_y");
    spec.target = number_at(s, "target");
    spec.lambda = number_or(s, "lambda", 0.0);
    doc.mp = scalar_model(spec);
    if (s.contains("d0")) {
      doc.prior = scalar_prior(number_at(s, "d0"), number_at(s, "beta0"), number_at(s, "sd_d0"),
                               number_at(s, "sd_beta0"), number_or(s, "rho0", 0.0));
    }
  } else {
    ModelParams& mp = doc.mp;
    mp.n = require(j, "n").get<int>();
    if (mp.n < 1) throw ValidationError("n must be >= 1");
    mp.A_d = matrix_from_json(require(j, "A_d"), "A_d");
    mp.mu_d = vector_from_json(require(j, "mu_d"), "mu_d");
    mp.W_d = matrix_from_json(require(j, "W_d"), "W_d");
    mp.A_B = matrix_from_json(require(j, "A_B"), "A_B");
    mp.mu_B = vector_from_json(require(j, "mu_B"), "mu_B");
    mp.W_B = matrix_from_json(require(j, "W_B"), "W_B");
    mp.W_dB = j.contains("W_dB") ? matrix_from_json(j.at("W_dB"), "W_dB")
                                 : MatrixXd::Zero(mp.n, mp.n * mp.n);
    mp.W_y = matrix_from_json(require(j, "W_y"), "W_y");
    mp.t = vector_from_json(require(j, "t"), "t");
    mp.lambda = number_or(j, "lambda", 0.0);
  }
  doc.mp.validate();
  if (j.contains("prior")) doc.prior = prior_from_json(j.at("prior"));
  if (doc.prior && doc.prior->mean.size() != doc.mp.state_dim()) {
    throw ValidationError("prior dimension does not match the model");
  }
  return doc;
}

Json theta_to_json(const ThetaEstimate& th) {
  Json j{{"version", kFormatVersion},
         {"n", th.sp.n},
         {"A_x", matrix_to_json(th.sp.A_x)},
         {"mu_x", vector_to_json(th.sp.mu_x)},
         {"W_x", matrix_to_json(th.sp.W_x)},
         {"W_y", matrix_to_json(th.sp.W_y)},
         {"prior", prior_to_json(th.prior)},
         {"projected", th.projected},
         {"warnings", th.warnings}};
  if (th.sp.n == 1) {
    const ScalarReport r = scalar_report(th);
    j["scalar"] = Json{{"mu_d", r.mu_d},         {"mu_beta", r.mu_beta},
                       {"alpha_d", r.alpha_d},   {"alpha_beta", r.alpha_beta},
                       {"sigma_d", r.sigma_d},   {"sigma_beta", r.sigma_beta},
                       {"rho", r.rho},           {"sigma_y", r.sigma_y},
                       {"d0", r.d0},             {"beta0", r.beta0},
                       {"sd_d0", r.sd_d0},       {"sd_beta0", r.sd_beta0},
                       {"rho0", r.rho0}};
  }
  return j;
}

ThetaEstimate theta_from_json(const Json& j) {
  check_version(j);
  ThetaEstimate th;
  th.sp.n = require(j, "n").get<int>();
  th.sp.A_x = matrix_from_json(require(j, "A_x"), "A_x");
  th.sp.mu_x = vector_from_json(require(j, "mu_x"), "mu_x");
  th.sp.W_x = matrix_from_json(require(j, "W_x"), "W_x");
  th.sp.W_y = matrix_from_json(require(j, "W_y"), "W_y");
  th.prior = prior_from_json(require(j, "prior"));
  const Eigen::Index m = th.sp.n + static_cast<Eigen::Index>(th.sp.n) * th.sp.n;
  if (th.sp.A_x.rows() != m || th.sp.A_x.cols() != m || th.sp.mu_x.size() != m ||
      th.sp.W_x.rows() != m || th.sp.W_y.rows() != th.sp.n || th.prior.mean.size() != m) {
    throw ValidationError("theta dimensions are inconsistent with n");
  }
  th.projected = j.value("projected", false);
  if (j.contains("warnings")) th.warnings = j.at("warnings").get<std::vector<std::string>>();
  return th;
}

Json belief_to_json(const BeliefState& b) {
  return Json{{"version", kFormatVersion},
              {"k", b.k},
              {"x_hat", vector_to_json(b.x_hat)},
              {"Sigma_hat", matrix_to_json(b.Sigma_hat)}};
}

BeliefState belief_from_json(const Json& j) {
  check_version(j);
  BeliefState b;
  b.k = require(j, "k").get<decltype(b.k)>();
  b.x_hat = vector_from_json(require(j, "x_hat"), "x_hat");
  b.Sigma_hat = matrix_from_json(require(j, "Sigma_hat"), "Sigma_hat");
  return b;
}

Json metrics_to_json(const MetricsReport& r) {
  return Json{{"label", r.label},
              {"blocks", r.blocks},
              {"bias", vector_to_json(r.bias)},
              {"sd", vector_to_json(r.sd)},
              {"rmsd", vector_to_json(r.rmsd)},
              {"phi95", vector_to_json(r.phi95)},
              {"rmsu", vector_to_json(r.rmsu)}};
}

Json headtohead_to_json(const HeadToHeadResult& res) {
  Json cells = Json::array();
  for (const EvalCell& c : res.cells) {
    Json cj{{"policy", c.policy}, {"seed", c.seed}, {"ok", c.ok}};
    if (c.ok) {
      cj["overall"] = metrics_to_json(c.overall);
      if (c.spike) cj["spike"] = metrics_to_json(*c.spike);
      if (c.stable) cj["stable"] = metrics_to_json(*c.stable);
    } else {
      cj["error"] = c.error;
    }
    cells.push_back(std::move(cj));
  }
  Json summary = Json::array();
  const PolicySummary* baseline = nullptr;
  for (const PolicySummary& s : res.summary) {
    if (s.policy == "eip1559" || s.policy == "historical") baseline = &s;
  }
  for (const PolicySummary& s : res.summary) {
    Json sj{{"policy", s.policy}, {"runs_ok", s.runs_ok}, {"runs_failed", s.runs_failed}};
    if (s.runs_ok > 0) {
      sj["mean"] = metrics_to_json(s.mean);
      if (baseline != nullptr && baseline->runs_ok > 0 && baseline != &s) {
        Json rel = Json::object();
        rel["baseline"] = baseline->policy;
        rel["rmsd"] = relative_change(s.mean.rmsd(0), baseline->mean.rmsd(0));
        rel["sd"] = relative_change(s.mean.sd(0), baseline->mean.sd(0));
        rel["rmsu"] = relative_change(s.mean.rmsu(0), baseline->mean.rmsu(0));
        sj["relative_change"] = std::move(rel);
      }
    }
    summary.push_back(std::move(sj));
  }
  return Json{{"version", kFormatVersion},
              {"mode", res.mode == EvalMode::Synthetic ? "synthetic" : "replay"},
              {"cells", std::move(cells)},
              {"summary", std::move(summary)}};
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

ColumnMap ColumnMap::for_resources(int n) {
  ColumnMap m;
  m.prices.clear();
  m.demands.clear();
  for (int i = 0; i < n; ++i) {
    m.prices.push_back("p_" + std::to_string(i));
    m.demands.push_back("y_" + std::to_string(i));
  }
  return m;
}

IngestResult ingest_csv(const std::filesystem::path& path, const ColumnMap& columns,
                        bool rescale_blocks) {
  if (columns.prices.empty() || columns.prices.size() != columns.demands.size()) {
    throw ValidationError("column map needs one price and one demand column per resource");
  }
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!trim(line).empty()) {
      header = split_csv(line);
      break;
    }
  }
  if (header.empty()) throw EmptyTrajectory(path.string() + ": no header row");
  const std::size_t block_col = column_index(header, columns.block);
  std::vector<std::size_t> price_cols;
  std::vector<std::size_t> demand_cols;
  for (const std::string& c : columns.prices) price_cols.push_back(column_index(header, c));
  for (const std::string& c : columns.demands) demand_cols.push_back(column_index(header, c));
  const Eigen::Index n = static_cast<Eigen::Index>(price_cols.size());

  IngestResult res;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_csv(line);
    if (fields.size() != header.size()) {
      throw ParseError(line_no, "expected " + std::to_string(header.size()) + " fields, found " +
                                    std::to_string(fields.size()));
    }
    BlockRecord r;
    r.index = parse_block(fields[block_col], line_no, columns.block);
    r.p.resize(n);
    r.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = parse_double(fields[price_cols[i]], line_no, columns.prices[i]);
      const double y = parse_double(fields[demand_cols[i]], line_no, columns.demands[i]);
      if (p < 0.0) throw ParseError(line_no, "negative price in '" + columns.prices[i] + "'");
      if (y < 0.0 && !columns.allow_negative_usage) throw ParseError(line_no, "negative usage in '" + columns.demands[i] + "'");
      r.p(i) = p * columns.price_scale;
      r.y(i) = y;
    }
    if (!res.records.empty()) {
      const std::int64_t prev = res.records.back().index;
      if (r.index <= prev) {
        throw MonotonicityError(line_no, "block " + std::to_string(r.index) +
                                             " does not follow block " + std::to_string(prev));
      }
      if (r.index > prev + 1) res.gaps.push_back({prev, r.index});
    }
    res.records.push_back(std::move(r));
  }
  if (res.records.empty()) throw EmptyTrajectory(path.string() + ": no data rows");
  if (rescale_blocks) {
    const std::int64_t first = res.records.front().index;
    for (BlockRecord& r : res.records) r.index -= first;
    for (BlockGap& g : res.gaps) {
      g.after -= first;
      g.before -= first;
    }
  }
  return res;
}

void write_trajectory_csv(const std::filesystem::path& path,
                          const std::vector<BlockRecord>& records,
                          const std::vector<HiddenState>* states) {
  if (records.empty()) throw EmptyTrajectory("no records to write");
  if (states != nullptr && states->size() < records.size()) {
    throw ValidationError("fewer hidden states than records");
  }
  const Eigen::Index n = records.front().p.size();
  std::ofstream out = open_out(path);
  out << "block";
  for (Eigen::Index i = 0; i < n; ++i) out << ",p_" << i;
  for (Eigen::Index i = 0; i < n; ++i) out << ",y_" << i;
  if (states != nullptr) {
    for (Eigen::Index i = 0; i < n; ++i) out << ",d_" << i;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) out << ",B_" << i << '_' << j;
    }
  }
  out << '\n';
  for (std::size_t k = 0; k < records.size(); ++k) {
    const BlockRecord& r = records[k];
    out << r.index;
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_double(r.p(i));
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_double(r.y(i));
    if (states != nullptr) {
      const HiddenState& s = (*states)[k];
      for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_double(s.d(i));
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) out << ',' << format_double(s.B(i, j));
      }
    }
    out << '\n';
  }
}

void write_em_trace_csv(const std::filesystem::path& path, const EmTrace& trace) {
  std::ofstream out = open_out(path);
  out << "iteration,log_likelihood\n";
  for (std::size_t i = 0; i < trace.log_likelihood.size(); ++i) {
    out << i << ',' << format_double(trace.log_likelihood[i]) << '\n';
  }
}

void write_headtohead_csv(const std::filesystem::path& path, const HeadToHeadResult& res) {
  std::ofstream out = open_out(path);
  out << "policy,seed,regime,resource,blocks,bias,sd,rmsd,phi95,rmsu\n";
  for (const EvalCell& c : res.cells) {
    if (!c.ok) continue;
    const std::string seed = std::to_string(c.seed);
    write_metrics_rows(out, c.policy, seed, "all", c.overall);
    if (c.spike) write_metrics_rows(out, c.policy, seed, "spike", *c.spike);
    if (c.stable) write_metrics_rows(out, c.policy, seed, "stable", *c.stable);
  }
  for (const PolicySummary& s : res.summary) {
    if (s.runs_ok > 0) write_metrics_rows(out, s.policy, "mean", "all", s.mean);
  }
}

void write_histogram_csv(const std::filesystem::path& path, const std::vector<double>& values,
                         int bins) {
  if (bins < 1) throw ValidationError("histogram needs at least one bin");
  if (values.empty()) throw EmptyTrajectory("no values to histogram");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it > lo ? *hi_it : lo + 1.0;
  const double width = (hi - lo) / bins;
  std::vector<long> counts(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    auto b = static_cast<long>((v - lo) / width);
    b = std::clamp(b, 0L, static_cast<long>(bins) - 1);
    ++counts[static_cast<std::size_t>(b)];
  }
  std::ofstream out = open_out(path);
  out << "bin_low,bin_high,count\n";
  for (int b = 0; b < bins; ++b) {
    out << format_double(lo + b * width) << ',' << format_double(lo + (b + 1) * width) << ','
        << counts[static_cast<std::size_t>(b)] << '\n';
  }
}

void write_columns_csv(const std::filesystem::path& path, const std::vector<std::int64_t>& blocks,
                       const std::vector<std::pair<std::string, std::vector<double>>>& columns) {
  for (const auto& [name, col] : columns) {
    if (col.size() != blocks.size()) throw ValidationError("column '" + name + "' length differs");
  }
  std::ofstream out = open_out(path);
  out << "block";
  for (const auto& col : columns) out << ',' << col.first;
  out << '\n';
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    out << blocks[k];
    for (const auto& col : columns) out << ',' << format_double(col.second[k]);
    out << '\n';
  }
}

}  // namespace lindy
