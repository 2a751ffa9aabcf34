#pragma once

#include <span>
#include <string>
#include <vector>

#include "lindy/kalman.hpp"
#include "lindy/model.hpp"

namespace lindy {

enum class TransitionStructure {
  Diagonal,   // A_d and A_B diagonal
  FullBlock,  // A_d and A_B unrestricted, cross blocks zero
};

enum class ObservationNoiseStructure { Diagonal, Full };

struct StructureConstraints {
  TransitionStructure transition = TransitionStructure::Diagonal;
  ObservationNoiseStructure obs_noise = ObservationNoiseStructure::Diagonal;
};

// theta = (mu_x, A_x, W_x, W_y, a_0, S_0).
struct ThetaEstimate {
  StackedParams sp;
  GaussianPrior prior;
  // Set when the fitted A_x had to be pulled back inside the unit circle.
  bool projected = false;
  std::vector<std::string> warnings;

  ModelParams to_model(const ModelParams& like) const;
  static ThetaEstimate from_model(const ModelParams& mp, const GaussianPrior& prior);
};

// One-resource parameterization used for reporting.
struct ScalarReport {
  double mu_d, mu_beta, alpha_d, alpha_beta, sigma_d, sigma_beta, rho, sigma_y;
  double d0, beta0, sd_d0, sd_beta0, rho0;
};

ScalarReport scalar_report(const ThetaEstimate& theta);

// Smoothed-moment sums for the M-step, taken about `center` to limit
// cancellation (z_k = x_k - center). Transition sums run over k = 1..T-1
// (T blocks):
//   S11 = sum E[z_k z_k^T], S00 = sum E[z_{k-1} z_{k-1}^T],
//   S10 = sum E[z_k z_{k-1}^T], s1 = sum E[z_k], s0 = sum E[z_{k-1}].
// An empty center means zero.
struct SufficientStats {
  int blocks = 0;
  int n = 1;
  VectorXd center;
  MatrixXd S11, S00, S10;
  VectorXd s1, s0;
  // sum_k E[(y_k - C_k x_k)(y_k - C_k x_k)^T] over all blocks.
  MatrixXd obs_residual;
  VectorXd x0_mean;
  MatrixXd x0_cov;
  double log_likelihood = 0.0;  // observed-data log-likelihood under theta
};

SufficientStats e_step(const ThetaEstimate& theta, std::span<const BlockRecord> records);

// Closed-form maximizer of the expected complete-data log-likelihood under
// the structure constraints. With a restricted A_x and correlated state noise
// the (A, mu) and W_x updates are coupled; they are alternated to a joint
// stationary point starting from `current`.
ThetaEstimate m_step(const SufficientStats& stats, const StructureConstraints& structure,
                     const ThetaEstimate& current);

// Expected complete-data log-likelihood of `theta` under the distribution
// summarized by `stats` (up to an additive constant).
double expected_complete_loglik(const ThetaEstimate& theta, const SufficientStats& stats);

struct EmOptions {
  int max_iters = 500;
  // Converged when |delta LL| <= ll_tol * max(1, |LL|).
  double ll_tol = 1e-9;
  StructureConstraints structure;
  bool keep_snapshots = false;
};

struct EmTrace {
  std::vector<double> log_likelihood;
  std::vector<ThetaEstimate> snapshots;
  std::string reason;
  int iterations = 0;
};

struct EmResult {
  ThetaEstimate theta;
  EmTrace trace;
};

// Iterates e_step / m_step. Throws MonotonicityViolation when the
// log-likelihood drops by more than 1e-6 relative.
EmResult fit_em(std::span<const BlockRecord> records, const ThetaEstimate& theta0,
                const EmOptions& options = {});

// Starting point from simple moments: regression of y on p for (mu_d, mu_B),
// lag-one autocorrelation of the residual for the persistence, and the
// residual variance split between state and observation noise.
ThetaEstimate initial_theta(std::span<const BlockRecord> records,
                            const StructureConstraints& structure = {});

}  // namespace lindy
