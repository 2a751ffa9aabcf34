#include "lindy/kalman.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "lindy/errors.hpp"

namespace lindy {

StatePrediction predict(const BeliefState& belief, const StackedParams& sp) {
  const Eigen::Index m = sp.A_x.rows();
  StatePrediction out;
  out.a = (MatrixXd::Identity(m, m) - sp.A_x) * sp.mu_x + sp.A_x * belief.x_hat;
  out.S = symmetrize(sp.A_x * belief.Sigma_hat * sp.A_x.transpose() + sp.W_x);
  return out;
}

Prediction predict_observation_linear(const VectorXd& a, const MatrixXd& S, const MatrixXd& C,
                                      const MatrixXd& W_y) {
  Prediction out;
  out.a = a;
  out.S = S;
  out.f = C * a;
  out.F = symmetrize(C * S * C.transpose() + W_y);
  const double cond = condition_number_sym(out.F);
  Eigen::LLT<MatrixXd> llt(out.F);
  if (!(cond <= kMaxConditionF) || llt.info() != Eigen::Success) {
    throw NearSingularF("observation covariance F is singular or ill-conditioned (cond = " +
                        std::to_string(cond) + ")");
  }
  // K = S C^T F^{-1}  <=>  F K^T = C S
  out.K_gain = llt.solve(C * S).transpose();
  return out;
}

Prediction predict_observation(const VectorXd& a, const MatrixXd& S, const VectorXd& p,
                               const MatrixXd& W_y) {
  return predict_observation_linear(a, S, observation_matrix(p), W_y);
}

BeliefState update_linear(const VectorXd& a, const MatrixXd& S, const MatrixXd& C,
                          const VectorXd& y, const MatrixXd& W_y) {
  const Prediction pred = predict_observation_linear(a, S, C, W_y);
  const Eigen::Index m = a.size();
  const MatrixXd I_KC = MatrixXd::Identity(m, m) - pred.K_gain * C;
  BeliefState out;
  out.x_hat = a + pred.K_gain * (y - pred.f);
  out.Sigma_hat = symmetrize(I_KC * S * I_KC.transpose() +
                             pred.K_gain * W_y * pred.K_gain.transpose());
  return out;
}

BeliefState update(const VectorXd& a, const MatrixXd& S, const VectorXd& p,
                   const VectorXd& y, const MatrixXd& W_y) {
  return update_linear(a, S, observation_matrix(p), y, W_y);
}

std::vector<StatePrediction> predict_multi(const BeliefState& belief, const StackedParams& sp,
                                           int h) {
  if (h < 1) throw ValidationError("predict_multi: h must be >= 1");
  std::vector<StatePrediction> out;
  out.reserve(h);
  BeliefState cur = belief;
  for (int s = 0; s < h; ++s) {
    StatePrediction step = predict(cur, sp);
    cur.x_hat = step.a;
    cur.Sigma_hat = step.S;
    out.push_back(std::move(step));
  }
  return out;
}

FilterResult run_filter(std::span<const BlockRecord> records, const StackedParams& sp,
                        const GaussianPrior& prior) {
  if (records.empty()) throw EmptyTrajectory("run_filter: no blocks");
  FilterResult res;
  res.predicted.reserve(records.size());
  res.filtered.reserve(records.size());
  const double log2pi = std::log(2.0 * std::numbers::pi);
  for (std::size_t k = 0; k < records.size(); ++k) {
    StatePrediction pred = k == 0 ? StatePrediction{prior.mean, symmetrize(prior.cov)}
                                  : predict(res.filtered.back(), sp);
    const BlockRecord& rec = records[k];
    const Prediction obs = predict_observation(pred.a, pred.S, rec.p, sp.W_y);
    const VectorXd innov = rec.y - obs.f;
    Eigen::LLT<MatrixXd> llt(obs.F);
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    res.log_likelihood += -0.5 * (static_cast<double>(innov.size()) * log2pi + log_det) -
                          0.5 * innov.dot(llt.solve(innov));

    const MatrixXd C = observation_matrix(rec.p);
    const Eigen::Index m = pred.a.size();
    const MatrixXd I_KC = MatrixXd::Identity(m, m) - obs.K_gain * C;
    BeliefState post;
    post.x_hat = pred.a + obs.K_gain * innov;
    post.Sigma_hat = symmetrize(I_KC * pred.S * I_KC.transpose() +
                                obs.K_gain * sp.W_y * obs.K_gain.transpose());
    post.k = rec.index;
    res.predicted.push_back(std::move(pred));
    res.filtered.push_back(std::move(post));
  }
  return res;
}

SmoothedTrajectory smooth(std::span<const BlockRecord> records, const StackedParams& sp,
                          const GaussianPrior& prior) {
  SmoothedTrajectory out;
  out.forward = run_filter(records, sp, prior);
  const std::size_t T = records.size();
  out.mean.resize(T);
  out.cov.resize(T);
  out.lag_one_cov.resize(T > 0 ? T - 1 : 0);
  out.mean[T - 1] = out.forward.filtered[T - 1].x_hat;
  out.cov[T - 1] = out.forward.filtered[T - 1].Sigma_hat;
  for (std::size_t k = T - 1; k-- > 0;) {
    const BeliefState& filt = out.forward.filtered[k];
    const StatePrediction& next = out.forward.predicted[k + 1];
    // J = Sigma_k A^T S_{k+1}^{-1}; S symmetric so J^T = S^{-1} A Sigma_k.
    const MatrixXd J = solve_psd(next.S, sp.A_x * filt.Sigma_hat).transpose();
    out.mean[k] = filt.x_hat + J * (out.mean[k + 1] - next.a);
    out.cov[k] = symmetrize(filt.Sigma_hat + J * (out.cov[k + 1] - next.S) * J.transpose());
    out.lag_one_cov[k] = out.cov[k + 1] * J.transpose();
  }
  return out;
}

double log_likelihood(std::span<const BlockRecord> records, const StackedParams& sp,
                      const GaussianPrior& prior) {
  return run_filter(records, sp, prior).log_likelihood;
}

KalmanFilter::KalmanFilter(StackedParams sp, GaussianPrior prior)
    : sp_(std::move(sp)), prior_(std::move(prior)) {}

const BeliefState& KalmanFilter::observe(const BlockRecord& rec) {
  StatePrediction pred = started_ ? predict(belief_, sp_)
                                  : StatePrediction{prior_.mean, symmetrize(prior_.cov)};
  belief_ = update(pred.a, pred.S, rec.p, rec.y, sp_.W_y);
  belief_.k = rec.index;
  started_ = true;
  return belief_;
}

}  // namespace lindy
