#include "lindy/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include "lindy/errors.hpp"

namespace lindy {

namespace {

constexpr double kRadiusCap = 1.0 - 1e-6;

struct FreeEntry {
  Eigen::Index row;
  Eigen::Index col;
};

std::vector<FreeEntry> free_entries(int n, TransitionStructure structure) {
  const Eigen::Index m = n + static_cast<Eigen::Index>(n) * n;
  std::vector<FreeEntry> out;
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const bool same_block = (i < n) == (j < n);
      const bool keep = structure == TransitionStructure::Diagonal ? i == j : same_block;
      if (keep) out.push_back({i, j});
    }
  }
  return out;
}

// Precision matrix W^{-1}, tolerating a singular W through the minimum-norm
// solve.
MatrixXd precision_of(const MatrixXd& W) {
  return symmetrize(solve_psd(W, MatrixXd::Identity(W.rows(), W.cols())));
}

double log_det_psd(const MatrixXd& M) {
  Eigen::LLT<MatrixXd> llt(symmetrize(M));
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

VectorXd center_of(const SufficientStats& st) {
  return st.center.size() == 0 ? VectorXd::Zero(st.s1.size()) : st.center;
}

// sum_k E[r_k r_k^T] for r_k = z_k - c - A z_{k-1}.
MatrixXd transition_residual(const SufficientStats& st, const MatrixXd& A, const VectorXd& c) {
  const double N = st.blocks - 1;
  MatrixXd E = st.S11 - c * st.s1.transpose() - st.s1 * c.transpose() -
               A * st.S10.transpose() - st.S10 * A.transpose() +
               c * st.s0.transpose() * A.transpose() + A * st.s0 * c.transpose() +
               N * c * c.transpose() + A * st.S00 * A.transpose();
  return symmetrize(E);
}

// Generalized least squares for (c, free entries of A) given the precision
// of the state noise.
std::pair<MatrixXd, VectorXd> transition_gls(const SufficientStats& st,
                                             const std::vector<FreeEntry>& free,
                                             const MatrixXd& P) {
  const Eigen::Index m = st.s1.size();
  const Eigen::Index q = static_cast<Eigen::Index>(free.size());
  const double N = st.blocks - 1;
  MatrixXd H = MatrixXd::Zero(m + q, m + q);
  VectorXd rhs = VectorXd::Zero(m + q);
  H.topLeftCorner(m, m) = N * P;
  rhs.head(m) = P * st.s1;
  const MatrixXd PS10 = P * st.S10;
  for (Eigen::Index e = 0; e < q; ++e) {
    const auto [i, j] = free[e];
    for (Eigen::Index r = 0; r < m; ++r) H(r, m + e) = st.s0(j) * P(r, i);
    for (Eigen::Index f = 0; f < q; ++f) {
      const auto [k, l] = free[f];
      H(m + e, m + f) = st.S00(j, l) * P(i, k);
    }
    rhs(m + e) = PS10(i, j);
  }
  H.bottomLeftCorner(q, m) = H.topRightCorner(m, q).transpose();
  const VectorXd beta = solve_psd(symmetrize(H), rhs);
  MatrixXd A = MatrixXd::Zero(m, m);
  for (Eigen::Index e = 0; e < q; ++e) A(free[e].row, free[e].col) = beta(m + e);
  return {A, beta.head(m)};
}

}  // namespace

ModelParams ThetaEstimate::to_model(const ModelParams& like) const {
  return unstack_params(sp, like);
}

ThetaEstimate ThetaEstimate::from_model(const ModelParams& mp, const GaussianPrior& prior) {
  ThetaEstimate th;
  th.sp = stack_params(mp);
  th.prior = prior;
  return th;
}

ScalarReport scalar_report(const ThetaEstimate& th) {
  if (th.sp.n != 1) throw ValidationError("scalar_report needs a one-resource model");
  const MatrixXd& W = th.sp.W_x;
  const MatrixXd& S0 = th.prior.cov;
  ScalarReport r{};
  r.mu_d = th.sp.mu_x(0);
  r.mu_beta = th.sp.mu_x(1);
  r.alpha_d = th.sp.A_x(0, 0);
  r.alpha_beta = th.sp.A_x(1, 1);
  r.sigma_d = std::sqrt(W(0, 0));
  r.sigma_beta = std::sqrt(W(1, 1));
  r.rho = r.sigma_d > 0 && r.sigma_beta > 0 ? W(0, 1) / (r.sigma_d * r.sigma_beta) : 0.0;
  r.sigma_y = std::sqrt(th.sp.W_y(0, 0));
  r.d0 = th.prior.mean(0);
  r.beta0 = th.prior.mean(1);
  r.sd_d0 = std::sqrt(S0(0, 0));
  r.sd_beta0 = std::sqrt(S0(1, 1));
  r.rho0 = r.sd_d0 > 0 && r.sd_beta0 > 0 ? S0(0, 1) / (r.sd_d0 * r.sd_beta0) : 0.0;
  return r;
}

SufficientStats e_step(const ThetaEstimate& theta, std::span<const BlockRecord> records) {
  if (records.size() < 2) throw EmptyTrajectory("e_step: need at least two blocks");
  const SmoothedTrajectory sm = smooth(records, theta.sp, theta.prior);
  const Eigen::Index m = theta.sp.state_dim();
  const Eigen::Index n = theta.sp.n;
  SufficientStats st;
  st.blocks = static_cast<int>(records.size());
  st.n = theta.sp.n;
  st.S11 = MatrixXd::Zero(m, m);
  st.S00 = MatrixXd::Zero(m, m);
  st.S10 = MatrixXd::Zero(m, m);
  st.s1 = VectorXd::Zero(m);
  st.s0 = VectorXd::Zero(m);
  st.obs_residual = MatrixXd::Zero(n, n);
  st.center = VectorXd::Zero(m);
  for (const VectorXd& mk : sm.mean) st.center += mk;
  st.center /= static_cast<double>(sm.mean.size());
  VectorXd prev;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const VectorXd zk = sm.mean[k] - st.center;
    const MatrixXd second = sm.cov[k] + zk * zk.transpose();
    if (k >= 1) {
      st.S11 += second;
      st.s1 += zk;
      st.S10 += sm.lag_one_cov[k - 1] + zk * prev.transpose();
    }
    if (k + 1 < records.size()) {
      st.S00 += second;
      st.s0 += zk;
    }
    prev = zk;
    const MatrixXd C = observation_matrix(records[k].p);
    const VectorXd resid = records[k].y - C * sm.mean[k];
    st.obs_residual += resid * resid.transpose() + C * sm.cov[k] * C.transpose();
  }
  st.obs_residual = symmetrize(st.obs_residual);
  st.x0_mean = sm.mean[0];
  st.x0_cov = sm.cov[0];
  st.log_likelihood = sm.forward.log_likelihood;
  return st;
}

ThetaEstimate m_step(const SufficientStats& st, const StructureConstraints& structure,
                     const ThetaEstimate& current) {
  const int n = st.n;
  const Eigen::Index m = st.s1.size();
  const double N = st.blocks - 1;
  const std::vector<FreeEntry> free = free_entries(n, structure.transition);
  const MatrixXd I = MatrixXd::Identity(m, m);

  ThetaEstimate out;
  out.sp.n = n;

  // Alternate GLS for (A, c) and the residual covariance for W.
  MatrixXd W = project_psd(current.sp.W_x);
  MatrixXd A;
  VectorXd c;
  for (int inner = 0; inner < 200; ++inner) {
    auto [A_new, c_new] = transition_gls(st, free, precision_of(W));
    const MatrixXd W_new = project_psd(transition_residual(st, A_new, c_new) / N);
    const bool settled =
        inner > 0 &&
        inf_norm(MatrixXd(A_new - A)) <= 1e-13 * std::max(1.0, inf_norm(A)) &&
        ((W_new - W).cwiseAbs().array() <=
         1e-12 * (W.diagonal().cwiseAbs() * W.diagonal().cwiseAbs().transpose())
                     .cwiseSqrt()
                     .array() +
             std::numeric_limits<double>::min())
            .all();
    A = std::move(A_new);
    c = std::move(c_new);
    W = W_new;
    if (settled) break;
  }

  const double radius = spectral_radius(A);
  if (radius >= 1.0) {
    A *= kRadiusCap / radius;
    c = (st.s1 - A * st.s0) / N;
    W = project_psd(transition_residual(st, A, c) / N);
    out.projected = true;
    out.warnings.push_back("fitted transition matrix had spectral radius " +
                           std::to_string(radius) + "; projected to " +
                           std::to_string(kRadiusCap));
  }

  out.sp.A_x = A;
  out.sp.mu_x = center_of(st) + (I - A).partialPivLu().solve(c);
  out.sp.W_x = W;
  MatrixXd Wy = st.obs_residual / static_cast<double>(st.blocks);
  if (structure.obs_noise == ObservationNoiseStructure::Diagonal) {
    Wy = MatrixXd(Wy.diagonal().asDiagonal());
  }
  out.sp.W_y = project_psd(Wy);
  out.prior.mean = st.x0_mean;
  out.prior.cov = project_psd(st.x0_cov);
  return out;
}

double expected_complete_loglik(const ThetaEstimate& theta, const SufficientStats& st) {
  const Eigen::Index m = st.s1.size();
  const double N = st.blocks - 1;
  const MatrixXd I = MatrixXd::Identity(m, m);
  const MatrixXd& A = theta.sp.A_x;
  const VectorXd c = (I - A) * (theta.sp.mu_x - center_of(st));

  const VectorXd dev0 = st.x0_mean - theta.prior.mean;
  const MatrixXd E0 = st.x0_cov + dev0 * dev0.transpose();
  double q = -0.5 * (log_det_psd(theta.prior.cov) +
                     precision_of(theta.prior.cov).cwiseProduct(E0).sum());
  q += -0.5 * (N * log_det_psd(theta.sp.W_x) +
               precision_of(theta.sp.W_x).cwiseProduct(transition_residual(st, A, c)).sum());
  q += -0.5 * (st.blocks * log_det_psd(theta.sp.W_y) +
               precision_of(theta.sp.W_y).cwiseProduct(st.obs_residual).sum());
  const double dims = static_cast<double>(m) * st.blocks + static_cast<double>(st.n) * st.blocks;
  return q - 0.5 * dims * std::log(2.0 * std::numbers::pi);
}

EmResult fit_em(std::span<const BlockRecord> records, const ThetaEstimate& theta0,
                const EmOptions& options) {
  if (options.max_iters < 1) throw ValidationError("fit_em: max_iters must be >= 1");
  EmResult res;
  ThetaEstimate theta = theta0;
  const int n = theta0.sp.n;
  const int free_params = static_cast<int>(free_entries(n, options.structure.transition).size()) +
                          theta0.sp.state_dim() * (theta0.sp.state_dim() + 3) / 2 * 2 + n;
  if (records.size() < static_cast<std::size_t>(10 * free_params)) {
    res.theta.warnings.push_back("trajectory has fewer than 10 blocks per free parameter");
  }

  bool last_projected = false;
  for (int it = 0;; ++it) {
    const SufficientStats stats = e_step(theta, records);
    const double ll = stats.log_likelihood;
    if (options.keep_snapshots) res.trace.snapshots.push_back(theta);
    if (!res.trace.log_likelihood.empty()) {
      const double prev = res.trace.log_likelihood.back();
      const double scale = std::max(1.0, std::abs(prev));
      if (ll < prev - 1e-6 * scale && !last_projected) {
        res.trace.log_likelihood.push_back(ll);
        throw MonotonicityViolation("EM log-likelihood decreased from " + std::to_string(prev) +
                                    " to " + std::to_string(ll) + " at iteration " +
                                    std::to_string(it));
      }
      res.trace.log_likelihood.push_back(ll);
      if (std::abs(ll - prev) <= options.ll_tol * scale) {
        res.trace.reason = "converged";
        break;
      }
    } else {
      res.trace.log_likelihood.push_back(ll);
    }
    if (it >= options.max_iters) {
      res.trace.reason = "max_iters";
      break;
    }
    ThetaEstimate next = m_step(stats, options.structure, theta);
    last_projected = next.projected;
    for (const std::string& w : next.warnings) res.theta.warnings.push_back(w);
    theta = std::move(next);
    res.trace.iterations = it + 1;
  }
  std::vector<std::string> warnings = std::move(res.theta.warnings);
  res.theta = theta;
  res.theta.warnings = std::move(warnings);
  return res;
}

ThetaEstimate initial_theta(std::span<const BlockRecord> records,
                            const StructureConstraints& structure) {
  (void)structure;
  if (records.size() < 3) throw EmptyTrajectory("initial_theta: need at least three blocks");
  const Eigen::Index n = records.front().p.size();
  const Eigen::Index T = static_cast<Eigen::Index>(records.size());
  MatrixXd X(T, n + 1);
  MatrixXd Y(T, n);
  for (Eigen::Index k = 0; k < T; ++k) {
    X(k, 0) = 1.0;
    X.row(k).tail(n) = records[k].p.transpose();
    Y.row(k) = records[k].y.transpose();
  }

  ThetaEstimate th;
  // Column scaling keeps the regression well posed when prices are large.
  VectorXd col_scale = X.cwiseAbs().colwise().maxCoeff().transpose();
  for (Eigen::Index j = 0; j < col_scale.size(); ++j) {
    if (col_scale(j) == 0.0) col_scale(j) = 1.0;
  }
  bool identifiable = true;
  for (Eigen::Index j = 0; j < n; ++j) {
    const VectorXd pj = X.col(j + 1);
    const double mean = pj.mean();
    const double var = (pj.array() - mean).square().mean();
    if (var < 1e-12 * mean * mean || var == 0.0) identifiable = false;
  }
  MatrixXd coef(n + 1, n);
  if (identifiable) {
    const MatrixXd Xs = X * col_scale.cwiseInverse().asDiagonal();
    coef = col_scale.cwiseInverse().asDiagonal() * Xs.colPivHouseholderQr().solve(Y);
  } else {
    th.warnings.push_back(
        "sample price variance is negligible; demand and price sensitivity are not separately "
        "identified");
    coef.setZero();
    coef.row(0) = Y.colwise().mean();
  }
  const VectorXd mu_d = coef.row(0).transpose();
  const MatrixXd B_hat = coef.bottomRows(n).transpose();
  const MatrixXd resid = Y - X * coef;

  VectorXd var_e(n);
  double alpha_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const VectorXd e = resid.col(i).array() - resid.col(i).mean();
    var_e(i) = std::max(e.squaredNorm() / static_cast<double>(T), 1e-300);
    const double lag = e.head(T - 1).dot(e.tail(T - 1)) / static_cast<double>(T - 1);
    alpha_sum += std::clamp(lag / var_e(i), 0.5, 0.999);
  }
  const double alpha = alpha_sum / static_cast<double>(n);

  const Eigen::Index m = n + n * n;
  const double b_scale = std::max(B_hat.cwiseAbs().maxCoeff(),
                                  std::sqrt(var_e.maxCoeff()) /
                                      std::max(X.rightCols(n).cwiseAbs().maxCoeff(), 1e-300));
  th.sp.n = static_cast<int>(n);
  th.sp.A_x = alpha * MatrixXd::Identity(m, m);
  th.sp.mu_x.resize(m);
  th.sp.mu_x << mu_d, vec(B_hat);
  th.sp.W_x = MatrixXd::Zero(m, m);
  th.sp.W_y = MatrixXd::Zero(n, n);
  th.prior.mean = th.sp.mu_x;
  th.prior.cov = MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    th.sp.W_x(i, i) = 0.5 * var_e(i) * (1.0 - alpha * alpha);
    th.sp.W_y(i, i) = 0.5 * var_e(i);
    th.prior.cov(i, i) = var_e(i);
  }
  const double b_sd = 0.1 * b_scale;
  for (Eigen::Index i = n; i < m; ++i) {
    th.sp.W_x(i, i) = b_sd * b_sd * (1.0 - alpha * alpha);
    th.prior.cov(i, i) = 25.0 * b_sd * b_sd;
  }
  return th;
}

}  // namespace lindy
