#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "lindy/linalg.hpp"

namespace lindy {

// Parameters of the multi-resource demand model
//
//   d_{k+1}      = (I - A_d) mu_d + A_d d_k + e^d_k
//   vec(B_{k+1}) = (I - A_B) mu_B + A_B vec(B_k) + e^B_k
//   y_k          = d_k + B_k p_k + e^y_k
//
// with (e^d, e^B) jointly Gaussian (cross-covariance W_dB) and e^y
// independent. Demand is in raw resource units and prices in the caller's
// price unit; nothing is rescaled internally.
struct ModelParams {
  int n = 1;
  MatrixXd A_d;
  VectorXd mu_d;
  MatrixXd W_d;
  MatrixXd A_B;
  VectorXd mu_B;
  MatrixXd W_B;
  MatrixXd W_dB;  // n x n^2, zero by default
  MatrixXd W_y;
  VectorXd t;
  double lambda = 0.0;

  // Throws ValidationError on shape mismatch, non-PSD noise, lambda < 0, or
  // a dynamics matrix without mean reversion (spectral radius >= 1 - 1e-9).
  void validate() const;

  int state_dim() const { return n + n * n; }
};

// Convenience constructor for the one-resource model in the usual
// (mean, persistence, standard deviation, correlation) parameterization.
struct ScalarModelSpec {
  double mu_d = 0.0;
  double mu_beta = 0.0;
  double alpha_d = 0.0;
  double alpha_beta = 0.0;
  double sigma_d = 0.0;
  double sigma_beta = 0.0;
  double rho = 0.0;
  double sigma_y = 0.0;
  double target = 0.0;
  double lambda = 0.0;
};

ModelParams scalar_model(const ScalarModelSpec& spec);

// Scalar parameters fitted to Ethereum mainnet gas usage (gas per block,
// prices in wei), with target 15e6 gas.
ScalarModelSpec mainnet_scalar_spec(double lambda = 0.0);

// Stacked hidden-state form x_{k+1} = (I - A_x) mu_x + A_x x_k + e^x_k with
// x = [d; vec(B)], plus the observation noise so one object carries the
// whole linear-Gaussian model.
struct StackedParams {
  int n = 1;
  MatrixXd A_x;
  VectorXd mu_x;
  MatrixXd W_x;
  MatrixXd W_y;

  int state_dim() const { return static_cast<int>(A_x.rows()); }
};

// Gaussian distribution of x_0 before y_0 is observed.
struct GaussianPrior {
  VectorXd mean;
  MatrixXd cov;
};

GaussianPrior scalar_prior(double d0, double beta0, double sd_d0, double sd_beta0,
                           double rho0);

// Initial-state distribution from the same mainnet fit.
GaussianPrior mainnet_scalar_prior();

// Unconditional distribution of the hidden state: mean mu_x and the solution
// P of P = A_x P A_x^T + W_x.
GaussianPrior stationary_prior(const ModelParams& mp);

struct HiddenState {
  VectorXd d;
  MatrixXd B;

  VectorXd stacked() const;
  static HiddenState from_stacked(const VectorXd& x, int n);
};

struct BlockRecord {
  std::int64_t index = 0;
  VectorXd p;
  VectorXd y;
};

StackedParams stack_params(const ModelParams& mp);

// Inverse of stack_params for the dynamics blocks; t and lambda are taken from
// `like`.
ModelParams unstack_params(const StackedParams& sp, const ModelParams& like);

// C(p) = [I_n | p^T (x) I_n], so that C(p) [d; vec(B)] = d + B p.
MatrixXd observation_matrix(const VectorXd& p);

// Draws N(0, cov) through a symmetric square root, which tolerates singular
// covariances.
class GaussianSampler {
 public:
  explicit GaussianSampler(const MatrixXd& cov);

  VectorXd draw(std::mt19937_64& rng);
  Eigen::Index dim() const { return root_.rows(); }

 private:
  MatrixXd root_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// A price rule driven only by what has been observed so far: the price for
// block k+1 is requested after block k's record is revealed.
class PricingPolicy {
 public:
  virtual ~PricingPolicy() = default;
  virtual std::string name() const = 0;
  virtual VectorXd initial_price() = 0;
  virtual VectorXd next_price(const BlockRecord& observed) = 0;
};

struct Simulation {
  std::vector<HiddenState> states;
  std::vector<BlockRecord> records;
};

// Simulates K blocks starting from x0. Noise for block k is drawn in a fixed
// order (observation noise, then state noise) independent of the prices, so
// two policies run with the same seed see identical shocks.
Simulation simulate_truth(const ModelParams& mp, const HiddenState& x0,
                          PricingPolicy& policy, int K, std::uint64_t seed);

}  // namespace lindy
