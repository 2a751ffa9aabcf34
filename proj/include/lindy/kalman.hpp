#pragma once

#include <span>
#include <utility>
#include <vector>

#include "lindy/model.hpp"

namespace lindy {

// Gaussian posterior N(x_hat, Sigma_hat) of the stacked state after block k.
struct BeliefState {
  VectorXd x_hat;
  MatrixXd Sigma_hat;
  std::int64_t k = 0;
};

struct StatePrediction {
  VectorXd a;
  MatrixXd S;
};

// One-step observation forecast and the gain that goes with it.
struct Prediction {
  VectorXd a;
  MatrixXd S;
  VectorXd f;
  MatrixXd F;
  MatrixXd K_gain;
};

inline constexpr double kMaxConditionF = 1e12;

StatePrediction predict(const BeliefState& belief, const StackedParams& sp);

// Throws NearSingularF when cond(F) > 1e12.
Prediction predict_observation(const VectorXd& a, const MatrixXd& S, const VectorXd& p,
                               const MatrixXd& W_y);

// Same with an explicit observation matrix (y = C x + noise).
Prediction predict_observation_linear(const VectorXd& a, const MatrixXd& S, const MatrixXd& C,
                                      const MatrixXd& W_y);

// Posterior after observing y at price p. The covariance is computed in
// Joseph form and re-symmetrized.
BeliefState update(const VectorXd& a, const MatrixXd& S, const VectorXd& p,
                   const VectorXd& y, const MatrixXd& W_y);

BeliefState update_linear(const VectorXd& a, const MatrixXd& S, const MatrixXd& C,
                          const VectorXd& y, const MatrixXd& W_y);

// Forecasts for blocks k+1, ..., k+h with no intermediate observations.
std::vector<StatePrediction> predict_multi(const BeliefState& belief, const StackedParams& sp,
                                           int h);

// Forward pass over a record sequence. predicted[k] is the distribution of
// x_k given y_0..y_{k-1} (the prior for k = 0); filtered[k] conditions on
// y_k as well.
struct FilterResult {
  std::vector<StatePrediction> predicted;
  std::vector<BeliefState> filtered;
  double log_likelihood = 0.0;
};

FilterResult run_filter(std::span<const BlockRecord> records, const StackedParams& sp,
                        const GaussianPrior& prior);

struct SmoothedTrajectory {
  std::vector<VectorXd> mean;
  std::vector<MatrixXd> cov;
  // lag_one_cov[k] = Cov(x_{k+1}, x_k | all observations), k = 0..T-2.
  std::vector<MatrixXd> lag_one_cov;
  FilterResult forward;
};

// Rauch-Tung-Striebel smoother.
SmoothedTrajectory smooth(std::span<const BlockRecord> records, const StackedParams& sp,
                          const GaussianPrior& prior);

// Prediction-error decomposition of the Gaussian log-likelihood.
double log_likelihood(std::span<const BlockRecord> records, const StackedParams& sp,
                      const GaussianPrior& prior);

// Incremental filter used by the stateful pricing policies.
class KalmanFilter {
 public:
  KalmanFilter(StackedParams sp, GaussianPrior prior);

  // Conditions on block `rec` (predicting first unless it is the first one).
  const BeliefState& observe(const BlockRecord& rec);

  bool has_belief() const { return started_; }
  const BeliefState& belief() const { return belief_; }
  const StackedParams& params() const { return sp_; }

 private:
  StackedParams sp_;
  GaussianPrior prior_;
  BeliefState belief_;
  bool started_ = false;
};

}  // namespace lindy
