#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lindy/kalman.hpp"
#include "lindy/model.hpp"

namespace lindy {

// ---------------------------------------------------------------------------
// Unregularized policy (lambda = 0)
// ---------------------------------------------------------------------------

inline constexpr double kMaxConditionMoment = 1e12;

// p = E(B^T B)^{-1} E(B^T (t - d)) with both moments taken exactly from the
// Gaussian forecast (a, S) of x_{k+1} = [d; vec(B)]. Throws SingularMoment
// when cond(E(B^T B)) > 1e12.
VectorXd lindy0_price_from_prediction(const StatePrediction& pred, const VectorXd& t);

// Forecasts x_{k+1} from the posterior after block k, then applies the rule
// above.
VectorXd lindy0_price(const BeliefState& belief, const StackedParams& sp, const VectorXd& t);

// ---------------------------------------------------------------------------
// Regularized policy under deterministic sensitivity
// ---------------------------------------------------------------------------

// Coefficients of the cost-to-go J = p^T Q p - 2 tau^T p + 2 a^T R p + const.
struct RiccatiStep {
  MatrixXd Q;
  MatrixXd R;
  VectorXd tau;

  static RiccatiStep zero(Eigen::Index n);
};

// One backward step: the coefficients at block s-1 given those at block s
// and the sensitivity B_s.
RiccatiStep riccati_step(const RiccatiStep& next, const MatrixXd& B, const MatrixXd& A_d,
                         const VectorXd& mu_d, const VectorXd& t, double lambda);

// Finite-horizon recursion from the zero terminal condition. B_path[j] is the
// sensitivity of block j+1 (j = 0..K-1); result[j] holds the coefficients at
// block j, with result[K] the zero terminal step.
std::vector<RiccatiStep> riccati_finite(std::span<const MatrixXd> B_path, const MatrixXd& A_d,
                                        const VectorXd& mu_d, const VectorXd& t,
                                        double lambda);

// Minimizer over p_s of the one-stage cost plus J_{s,K}, given the previous
// price and the demand forecast a_d_s = E(d_s | I_{s-1}); `next` holds
// (Q_{s,K}, R_{s,K}, tau_{s,K}).
VectorXd finite_horizon_price(const VectorXd& p_prev, const VectorXd& a_d_s,
                              const MatrixXd& B_s, const RiccatiStep& next,
                              const MatrixXd& A_d, const VectorXd& mu_d, const VectorXd& t,
                              double lambda);

struct StationaryRiccati {
  RiccatiStep value;
  int iterations = 0;
};

// Value iteration from zero with B held fixed. Stops when successive Q
// (relative to lambda), R and tau (relative to their own size) change by
// less than tol; throws NoConvergence after H steps.
StationaryRiccati riccati_stationary(const MatrixXd& B_limit, const MatrixXd& A_d,
                                     const VectorXd& mu_d, const VectorXd& t, double lambda,
                                     int H, double tol);

// Infinite-horizon coefficients along a deterministic sensitivity path.
// B_path[j] is B_{k+1+j}; the last element is taken as the limit, held for
// all later blocks.
struct RiccatiSolution {
  std::vector<RiccatiStep> sequence;  // sequence[s] = coefficients at block k+s
  std::vector<MatrixXd> B_path;
  RiccatiStep stationary;
  int horizon = 0;
  int iterations = 0;
  bool converged = false;

  // Coefficients at block k+s (stationary past the end of the path).
  const RiccatiStep& at(std::size_t s) const;
  // Sensitivity at block k+s, s >= 1.
  const MatrixXd& B_at(std::size_t s) const;
};

RiccatiSolution riccati_backward(std::span<const MatrixXd> B_path, const MatrixXd& A_d,
                                 const VectorXd& mu_d, const VectorXd& t, double lambda,
                                 int H, double tol);

// Same, reusing a stationary solution already computed for B_path.back().
RiccatiSolution riccati_backward(std::span<const MatrixXd> B_path,
                                 const StationaryRiccati& stationary, const MatrixXd& A_d,
                                 const VectorXd& mu_d, const VectorXd& t, double lambda);

// 10 n ceil(1 / (1 - rho(A_B))), floored at 1000.
int default_riccati_horizon(const ModelParams& mp);

struct AimDecomposition {
  VectorXd aim;
  std::vector<MatrixXd> weights;          // weights[j] multiplies clearing_prices[j]
  std::vector<VectorXd> clearing_prices;  // clearing price of block k+1+j
  MatrixXd untruncated_weight_sum;        // sum before the residual is folded in
  int truncation_horizon = 0;
};

// Matrix-weighted average of future market-clearing prices
//   aim_k = sum_s Z_{k+1} ... Z_{s-1} (I - Z_s) pbar_s,
//   Z_s = (Q_s + B_s^T B_s)^{-1} Q_s,  pbar_s = B_s^{-1} (t - E(d_s | I_k)),
// truncated once the residual weight Z_{k+1} ... Z_S drops below
// truncation_tol (infinity norm); the residual is assigned to the last
// clearing price so the weights sum to I. `sp_det` supplies the demand
// dynamics used for the forecasts.
AimDecomposition aim_price(const BeliefState& belief, const StackedParams& sp_det,
                           const RiccatiSolution& rs, const VectorXd& t,
                           double truncation_tol = 1e-8, int max_terms = 1'000'000);

// p_{k+1} = (I - Q_k / lambda) p_k + (Q_k / lambda) aim_k.
VectorXd lqg_price(const VectorXd& p_k, const RiccatiSolution& rs,
                   const AimDecomposition& aim, double lambda);

struct MpcOptions {
  int horizon = 0;          // cap on the lookahead path; 0 selects the default
  double riccati_tol = 1e-10;
  double aim_tol = 1e-8;
};

// Estimate-then-pretend-deterministic pricing: take B_hat = E(B_k | I_k),
// evolve it deterministically toward mat(mu_B), solve the regularized
// problem along that path and return its first price. The lookahead is cut
// once the path has converged or the backward recursion has forgotten the
// tail, whichever is first, and never exceeds options.horizon.
VectorXd mpc_price(const BeliefState& belief, const ModelParams& mp, const VectorXd& p_k,
                   const VectorXd& t, double lambda, const MpcOptions& options = {},
                   const StationaryRiccati* cached_stationary = nullptr);

// ---------------------------------------------------------------------------
// Eigenresources
// ---------------------------------------------------------------------------

// B_k = U diag(delta_k) V^T with fixed orthogonal U, V. The hidden state is
// [d~; delta] with d~ = U^T d, observed through y~ = U^T y = d~ + diag(delta) p~
// + noise, p~ = V^T p.
struct EigenModel {
  MatrixXd U;
  MatrixXd V;
  StackedParams sp;  // 2n-dimensional state [d~; delta]
};

// Builds the eigen-coordinate model from the SVD of mat(mu_B). Exact when
// the sensitivity dynamics keep B in span{u_i v_i^T}; otherwise the
// projection of the dynamics onto that span.
EigenModel eigen_decompose(const ModelParams& mp);

// Observation matrix [I | diag(p~)] in eigen coordinates.
MatrixXd eigen_observation_matrix(const VectorXd& p_tilde);

// Per-eigenresource rule p~_i = E(delta_i (t~_i - d~_i)) / E(delta_i^2),
// returned in original coordinates p = V p~. Throws SingularMoment when
// E(delta_i^2) < 1e-15.
VectorXd eigen_price(const BeliefState& belief, const StackedParams& sp_eig, const MatrixXd& U,
                     const MatrixXd& V, const VectorXd& t);

VectorXd eigen_price_from_prediction(const StatePrediction& pred, const MatrixXd& U,
                                     const MatrixXd& V, const VectorXd& t);

// ---------------------------------------------------------------------------
// Heuristic rules
// ---------------------------------------------------------------------------

inline constexpr double kEip1559Gamma = 1.0 / 8.0;

// p_{k+1} = p_k (1 + gamma (y_k - t) / t), per resource.
VectorXd eip1559_update(const VectorXd& p_k, const VectorXd& y_k, const VectorXd& t,
                        double gamma = kEip1559Gamma);
double eip1559_update(double p_k, double y_k, double t, double gamma = kEip1559Gamma);

// Two independent 1/8 rules (linear form for both resources).
VectorXd eip4844_update(const VectorXd& p_k, const VectorXd& y_k, const VectorXd& t);

// u_k = -(a_{k+1} + beta p_k - t) / beta.
double unidim_update(double a_next, double beta, double p_k, double t);

// Step size that makes the 1559 rule reproduce p_k + unidim_update:
// (1/|eta|) (a_{k+1} + beta p_k - t) / (y_k - t) with eta = beta p_k / t.
double gamma_opt(double a_next, double beta, double p_k, double y_k, double t);

// Closed-form two-resource update u_k = -B^{-1} Delta_k with
// Delta_k = a_{k+1} + B p_k - t, written out through the 2x2 inverse.
Eigen::Vector2d bidim_update(const Eigen::Vector2d& a_next, const Eigen::Matrix2d& B,
                             const Eigen::Vector2d& p_k, const Eigen::Vector2d& t);

// ---------------------------------------------------------------------------
// Stateful policies for simulation and replay
// ---------------------------------------------------------------------------

enum class PolicyKind { Lindy0, LindyLambda, Eigen, Eip1559, Eip4844 };

std::string to_string(PolicyKind kind);
// Throws ValidationError naming the valid policies.
PolicyKind parse_policy_kind(const std::string& name);
std::vector<std::string> policy_names();

struct PolicySpec {
  PolicyKind kind = PolicyKind::Lindy0;
  double lambda = 1e-7;
  double gamma = kEip1559Gamma;
  MpcOptions mpc;

  std::string label() const;
};

// A fresh policy instance. Filter-based policies start from `prior`; all
// policies post `p0` for the first block.
std::unique_ptr<PricingPolicy> make_policy(const PolicySpec& spec, const ModelParams& mp,
                                           const GaussianPrior& prior, const VectorXd& p0);

// Price that clears expected demand at the long-run means:
// mat(mu_B)^{-1} (t - mu_d).
VectorXd equilibrium_price(const ModelParams& mp);

}  // namespace lindy
