#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lindy/errors.hpp"
#include "lindy/policies.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace lindy;
using namespace testing_support;

namespace {

const double kGolden = (std::sqrt(5.0) - 1.0) / 2.0;
// First verified run, kept to catch regressions.
const double kMpcGolden = 29901366380.315086;

StatePrediction scalar_prediction(double d, double beta, double var_d, double var_beta,
                                  double cov) {
  StatePrediction p;
  p.a = Eigen::Vector2d(d, beta);
  p.S = Eigen::Matrix2d{{var_d, cov}, {cov, var_beta}};
  return p;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Model with deterministic, constant sensitivity B and demand AR dynamics.
ModelParams deterministic_model(const MatrixXd& B, const MatrixXd& A_d, const VectorXd& mu_d,
                                const VectorXd& t, double alpha_B = 0.5) {
  const int n = static_cast<int>(B.rows());
  ModelParams mp;
  mp.n = n;
  mp.A_d = A_d;
  mp.mu_d = mu_d;
  mp.W_d = 0.1 * MatrixXd::Identity(n, n);
  mp.A_B = alpha_B * MatrixXd::Identity(n * n, n * n);
  mp.mu_B = vec(B);
  mp.W_B = MatrixXd::Zero(n * n, n * n);
  mp.W_dB = MatrixXd::Zero(n, n * n);
  mp.W_y = 0.2 * MatrixXd::Identity(n, n);
  mp.t = t;
  return mp;
}

BeliefState certain_belief(const VectorXd& d, const MatrixXd& B) {
  const Eigen::Index n = d.size();
  BeliefState b;
  b.x_hat.resize(n + n * n);
  b.x_hat << d, vec(B);
  b.Sigma_hat = MatrixXd::Zero(n + n * n, n + n * n);
  b.Sigma_hat.topLeftCorner(n, n) = 0.3 * MatrixXd::Identity(n, n);
  return b;
}

MatrixXd invertible_B(std::mt19937_64& rng, int n) {
  return -MatrixXd::Identity(n, n) + 0.3 * random_matrix(rng, n, n);
}

}  // namespace

TEST_CASE("lindy0 moment rule") {
  const VectorXd t = VectorXd::Constant(1, 5.0);
  SUBCASE("target already met") {
    StatePrediction p;
    p.a = VectorXd::Zero(6);
    p.a.head(2) = VectorXd::Constant(2, 4.0);
    p.a.tail(4) = vec(-MatrixXd::Identity(2, 2));
    p.S = MatrixXd::Zero(6, 6);
    const VectorXd price = lindy0_price_from_prediction(p, VectorXd::Constant(2, 4.0));
    CHECK(price.norm() <= 1e-15);
  }
  SUBCASE("deterministic B = -I gives d - t") {
    StatePrediction p;
    p.a.resize(6);
    p.a << 7.0, 2.0, vec(-MatrixXd::Identity(2, 2));
    p.S = MatrixXd::Zero(6, 6);
    const VectorXd price = lindy0_price_from_prediction(p, Eigen::Vector2d(3.0, 5.0));
    CHECK(price(0) == doctest::Approx(4.0));
    CHECK(price(1) == doctest::Approx(-3.0));
  }
  SUBCASE("variance of beta shrinks the price") {
    const VectorXd price = lindy0_price_from_prediction(scalar_prediction(3, -2, 1, 1, 0), t);
    CHECK(price(0) == doctest::Approx(-0.8));
  }
  SUBCASE("demand-sensitivity covariance enters") {
    const VectorXd price = lindy0_price_from_prediction(scalar_prediction(3, -2, 1, 1, 0.5), t);
    CHECK(price(0) == doctest::Approx(-0.9));
  }
  SUBCASE("singular second moment is refused") {
    CHECK_THROWS_AS(lindy0_price_from_prediction(scalar_prediction(3, 0, 1, 0, 0), t),
                    SingularMoment);
  }
}

TEST_CASE("riccati steps") {
  const MatrixXd A_d = MatrixXd::Constant(1, 1, 0.5);
  const VectorXd mu = VectorXd::Constant(1, 1.0);
  const VectorXd t = VectorXd::Constant(1, 2.0);
  SUBCASE("one step from zero") {
    const RiccatiStep s = riccati_step(RiccatiStep::zero(1), MatrixXd::Constant(1, 1, -1.0), A_d,
                                       mu, t, 1.0);
    CHECK(s.Q(0, 0) == doctest::Approx(0.5));
  }
  SUBCASE("stationary scalar solution is the golden ratio conjugate") {
    const StationaryRiccati st =
        riccati_stationary(MatrixXd::Constant(1, 1, 1.0), A_d, mu, t, 1.0, 10000, 1e-12);
    CHECK(st.value.Q(0, 0) == doctest::Approx(kGolden).epsilon(1e-10));
  }
  SUBCASE("lambda = 0 collapses to zero") {
    const std::vector<MatrixXd> path(5, MatrixXd::Constant(1, 1, -2.0));
    for (const RiccatiStep& s : riccati_finite(path, A_d, mu, t, 0.0)) {
      CHECK(s.Q.isZero(0.0));
      CHECK(s.R.isZero(0.0));
      CHECK(s.tau.isZero(0.0));
    }
  }
  SUBCASE("too small a horizon is reported") {
    CHECK_THROWS_AS(
        riccati_stationary(MatrixXd::Constant(1, 1, 1.0), A_d, mu, t, 1.0, 3, 1e-12),
        NoConvergence);
  }
}

TEST_CASE("stationary Q over lambda lies in [0, 1)") {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 2;
    const MatrixXd B = invertible_B(rng, n);
    const double lambda = std::pow(10.0, trial % 5 - 2);
    const StationaryRiccati st = riccati_stationary(B, random_stable(rng, n), random_vector(rng, n),
                                                    random_vector(rng, n), lambda, 100000, 1e-10);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(st.value.Q / lambda));
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
    CHECK(es.eigenvalues().maxCoeff() < 1.0);
  }
}

TEST_CASE("lqg price is the matrix convex combination") {
  RiccatiSolution rs;
  RiccatiStep st = RiccatiStep::zero(1);
  st.Q(0, 0) = kGolden;
  rs.sequence = {st};
  rs.stationary = st;
  rs.B_path = {MatrixXd::Constant(1, 1, 1.0)};
  AimDecomposition aim;
  aim.aim = VectorXd::Constant(1, 1.0);
  CHECK(lqg_price(VectorXd::Zero(1), rs, aim, 1.0)(0) == doctest::Approx(kGolden));
  CHECK(lqg_price(VectorXd::Constant(1, 1.0), rs, aim, 1.0)(0) == doctest::Approx(1.0));
  rs.sequence[0].Q.setZero();
  CHECK(lqg_price(VectorXd::Constant(1, 7.0), rs, aim, 1.0)(0) == 7.0);
}

TEST_CASE("aim weights sum to the identity and agree with the cost-to-go form") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 2;
    const ModelParams mp = deterministic_model(invertible_B(rng, n), random_stable(rng, n),
                                               random_vector(rng, n), random_vector(rng, n), 0.7);
    const double lambda = std::pow(10.0, trial % 4 - 1);
    const BeliefState belief =
        certain_belief(random_vector(rng, n), unvec(mp.mu_B, n) + 0.2 * random_matrix(rng, n, n));
    // Deterministic path of B toward its mean.
    std::vector<MatrixXd> path;
    VectorXd b = belief.x_hat.tail(n * n);
    for (int s = 0; s < 60; ++s) {
      b = (MatrixXd::Identity(n * n, n * n) - mp.A_B) * mp.mu_B + mp.A_B * b;
      path.push_back(unvec(b, n));
    }
    path.push_back(unvec(mp.mu_B, n));
    const RiccatiSolution rs =
        riccati_backward(path, mp.A_d, mp.mu_d, mp.t, lambda, 100000, 1e-12);
    const StackedParams sp = stack_params(mp);
    const AimDecomposition aim = aim_price(belief, sp, rs, mp.t, 1e-10);
    const MatrixXd I = MatrixXd::Identity(n, n);
    CHECK(inf_norm(MatrixXd(aim.untruncated_weight_sum - I)) <= 1e-8);
    MatrixXd folded = MatrixXd::Zero(n, n);
    VectorXd direct = VectorXd::Zero(n);
    for (std::size_t j = 0; j < aim.weights.size(); ++j) {
      folded += aim.weights[j];
      direct += aim.weights[j] * aim.clearing_prices[j];
    }
    CHECK(inf_norm(MatrixXd(folded - I)) <= 1e-12);
    CHECK(max_abs_diff(direct, aim.aim) <= 1e-10 * std::max(1.0, aim.aim.norm()));
    // aim_k = Q_k^{-1} (tau_k - R_k^T a^d_{k+1}).
    const VectorXd a_next = (I - mp.A_d) * mp.mu_d + mp.A_d * belief.x_hat.head(n);
    const RiccatiStep& s0 = rs.at(0);
    const VectorXd via_cost = s0.Q.lu().solve(s0.tau - s0.R.transpose() * a_next);
    CHECK(max_abs_diff(via_cost, aim.aim) <= 1e-6 * std::max(1.0, aim.aim.norm()));
  }
}

TEST_CASE("aim with constant sensitivity and constant forecasts is the clearing price") {
  const MatrixXd B = MatrixXd::Constant(1, 1, -1.0);
  const ModelParams mp = deterministic_model(B, MatrixXd::Zero(1, 1), VectorXd::Constant(1, 2.0),
                                             VectorXd::Constant(1, 5.0));
  const RiccatiSolution rs = riccati_backward(std::vector<MatrixXd>{B}, mp.A_d, mp.mu_d, mp.t,
                                              1.0, 10000, 1e-12);
  const AimDecomposition aim =
      aim_price(certain_belief(VectorXd::Constant(1, 2.0), B), stack_params(mp), rs, mp.t);
  CHECK(aim.aim(0) == doctest::Approx(-3.0).epsilon(1e-12));
}

TEST_CASE("tiny lambda puts all weight on the next clearing price") {
  const MatrixXd B = MatrixXd::Constant(1, 1, -1.5);
  const ModelParams mp = deterministic_model(B, MatrixXd::Constant(1, 1, 0.8),
                                             VectorXd::Constant(1, 2.0), VectorXd::Constant(1, 5.0));
  const RiccatiSolution rs = riccati_backward(std::vector<MatrixXd>{B}, mp.A_d, mp.mu_d, mp.t,
                                              1e-12, 10000, 1e-12);
  const BeliefState belief = certain_belief(VectorXd::Constant(1, 7.0), B);
  const AimDecomposition aim = aim_price(belief, stack_params(mp), rs, mp.t);
  const double next_d = 0.2 * 2.0 + 0.8 * 7.0;
  CHECK(aim.aim(0) == doctest::Approx((5.0 - next_d) / -1.5).epsilon(1e-9));
  CHECK(aim.truncation_horizon <= 2);
}

TEST_CASE("singular sensitivity has no clearing price") {
  MatrixXd B = MatrixXd::Zero(2, 2);
  B(0, 0) = -1.0;
  const ModelParams mp = deterministic_model(-MatrixXd::Identity(2, 2), 0.5 * MatrixXd::Identity(2, 2),
                                             VectorXd::Ones(2), VectorXd::Ones(2));
  RiccatiSolution rs = riccati_backward(std::vector<MatrixXd>{-MatrixXd::Identity(2, 2)}, mp.A_d,
                                        mp.mu_d, mp.t, 1.0, 10000, 1e-12);
  rs.B_path = {B};
  CHECK_THROWS_AS(aim_price(certain_belief(VectorXd::Ones(2), B), stack_params(mp), rs, mp.t),
                  SingularB);
}

TEST_CASE("finite-horizon rule with lambda = 0 is the clearing price") {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 2;
    const MatrixXd B = invertible_B(rng, n);
    const VectorXd a = random_vector(rng, n);
    const VectorXd t = random_vector(rng, n);
    const VectorXd p = finite_horizon_price(random_vector(rng, n), a, B, RiccatiStep::zero(n),
                                            MatrixXd::Zero(n, n), VectorXd::Zero(n), t, 0.0);
    StatePrediction pred;
    pred.a.resize(n + n * n);
    pred.a << a, vec(B);
    pred.S = MatrixXd::Zero(n + n * n, n + n * n);
    CHECK(max_abs_diff(p, lindy0_price_from_prediction(pred, t)) <= 1e-8);
  }
}

TEST_CASE("finite-horizon rule matches a numerical dynamic program") {
  for (double lambda : {0.1, 1.0, 10.0}) {
    oracle::ScalarDp dp;
    dp.beta = {-1.2, -0.8, -1.5};
    dp.alpha = 0.7;
    dp.mu = 2.0;
    dp.t = 3.0;
    dp.lambda = lambda;
    std::vector<MatrixXd> path;
    for (double b : dp.beta) path.push_back(MatrixXd::Constant(1, 1, b));
    const MatrixXd A = MatrixXd::Constant(1, 1, dp.alpha);
    const VectorXd mu = VectorXd::Constant(1, dp.mu);
    const VectorXd t = VectorXd::Constant(1, dp.t);
    const std::vector<RiccatiStep> steps = riccati_finite(path, A, mu, t, lambda);
    const double p0 = 0.4;
    const double a1 = 2.5;
    const double closed = finite_horizon_price(VectorXd::Constant(1, p0), VectorXd::Constant(1, a1),
                                               path[0], steps[1], A, mu, t, lambda)(0);
    CHECK(closed == doctest::Approx(dp.decision(1, p0, a1)).epsilon(1e-7));
    const double closed2 = finite_horizon_price(VectorXd::Constant(1, -0.3),
                                                VectorXd::Constant(1, 1.1), path[1], steps[2], A,
                                                mu, t, lambda)(0);
    CHECK(closed2 == doctest::Approx(dp.decision(2, -0.3, 1.1)).epsilon(1e-7));
  }
}

TEST_CASE("infinite-horizon price is the limit of long finite horizons") {
  const MatrixXd B = Eigen::Matrix2d{{-1.0, 0.2}, {0.1, -0.8}};
  const MatrixXd A_d = Eigen::Matrix2d{{0.6, 0.1}, {0.0, 0.5}};
  const VectorXd mu_d(Eigen::Vector2d(4.0, 3.0));
  const VectorXd t(Eigen::Vector2d(2.0, 2.5));
  const ModelParams mp = deterministic_model(B, A_d, mu_d, t);
  const double lambda = 0.7;
  const BeliefState belief = certain_belief(Eigen::Vector2d(5.0, 1.0), B);
  const VectorXd p_k(Eigen::Vector2d(0.5, -0.2));

  MpcOptions opt;
  opt.riccati_tol = 1e-13;
  opt.aim_tol = 1e-12;
  const VectorXd mpc = mpc_price(belief, mp, p_k, t, lambda, opt);

  const std::vector<MatrixXd> path(3000, B);
  const std::vector<RiccatiStep> steps = riccati_finite(path, A_d, mu_d, t, lambda);
  const VectorXd a_next = (MatrixXd::Identity(2, 2) - A_d) * mu_d + A_d * belief.x_hat.head(2);
  const VectorXd finite = finite_horizon_price(p_k, a_next, B, steps[1], A_d, mu_d, t, lambda);
  CHECK(max_abs_diff(mpc, finite) <= 1e-8);
}

TEST_CASE("mpc with vanishing lambda approaches the unregularized price") {
  std::mt19937_64 rng(81);
  for (int n : {1, 2}) {
    const MatrixXd B = invertible_B(rng, n);
    const ModelParams mp =
        deterministic_model(B, random_stable(rng, n), random_vector(rng, n) + VectorXd::Constant(n, 3.0),
                            VectorXd::Constant(n, 1.0), 0.9);
    const BeliefState belief = certain_belief(random_vector(rng, n) + VectorXd::Constant(n, 3.0),
                                              B + 0.1 * random_matrix(rng, n, n));
    const VectorXd p_mpc = mpc_price(belief, mp, VectorXd::Zero(n), mp.t, 1e-12);
    BeliefState no_b = belief;
    no_b.Sigma_hat.setZero();
    const VectorXd p0 = lindy0_price(no_b, stack_params(mp), mp.t);
    CHECK((p_mpc - p0).norm() <= 1e-4 * p0.norm());
  }
}

TEST_CASE("mpc price at the mainnet prior") {
  const ModelParams mp = scalar_model(mainnet_scalar_spec(1e-7));
  const GaussianPrior prior = mainnet_scalar_prior();
  const BeliefState belief{prior.mean, prior.cov, 0};
  const VectorXd p_k = VectorXd::Constant(1, 2.0e10);
  const VectorXd p = mpc_price(belief, mp, p_k, mp.t, 1e-7);
  REQUIRE(std::isfinite(p(0)));
  CHECK(p(0) == doctest::Approx(kMpcGolden).epsilon(1e-9));
}

TEST_CASE("eigen rule equals the full rule when sensitivity shares singular vectors") {
  std::mt19937_64 rng(91);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 2;
    const MatrixXd U = random_orthogonal(rng, n);
    const MatrixXd V = random_orthogonal(rng, n);
    MatrixXd L(n * n, n);
    for (int i = 0; i < n; ++i) L.col(i) = vec(MatrixXd(U.col(i) * V.col(i).transpose()));
    // Eigen-coordinate forecast with (d~_i, delta_i) pairs independent across i.
    VectorXd az(2 * n);
    az << random_vector(rng, n), -1.0 - random_vector(rng, n).cwiseAbs().array();
    MatrixXd Sz = MatrixXd::Zero(2 * n, 2 * n);
    for (int i = 0; i < n; ++i) {
      const MatrixXd block = random_spd(rng, 2, 0.2);
      Sz(i, i) = block(0, 0);
      Sz(n + i, n + i) = trial % 2 == 0 ? block(1, 1) : 0.0;
      Sz(i, n + i) = Sz(n + i, i) = trial % 2 == 0 ? block(0, 1) : 0.0;
    }
    MatrixXd T = MatrixXd::Zero(n + n * n, 2 * n);
    T.topLeftCorner(n, n) = U;
    T.bottomRightCorner(n * n, n) = L;
    const StatePrediction full{T * az, T * Sz * T.transpose()};
    const StatePrediction eig{az, Sz};
    const VectorXd t = random_vector(rng, n);
    const VectorXd p_full = lindy0_price_from_prediction(full, t);
    const VectorXd p_eig = eigen_price_from_prediction(eig, U, V, t);
    CHECK(max_abs_diff(p_full, p_eig) <= 1e-9 * std::max(1.0, p_full.norm()));
  }
}

TEST_CASE("eigen rule with trivial rotations decouples") {
  const MatrixXd I = MatrixXd::Identity(2, 2);
  StatePrediction eig;
  eig.a.resize(4);
  eig.a << 3.0, 1.0, -2.0, -0.5;
  eig.S = MatrixXd::Zero(4, 4);
  const VectorXd t(Eigen::Vector2d(5.0, 2.0));
  const VectorXd p = eigen_price_from_prediction(eig, I, I, t);
  CHECK(p(0) == doctest::Approx(-1.0));
  CHECK(p(1) == doctest::Approx(-2.0));
  eig.a.head(2) = t;
  CHECK(eigen_price_from_prediction(eig, I, I, t).norm() == 0.0);
  eig.a(2) = 0.0;
  CHECK_THROWS_AS(eigen_price_from_prediction(eig, I, I, t), SingularMoment);
}

TEST_CASE("eigen and lindy0 policies post the same prices under the eigen structure") {
  std::mt19937_64 rng(93);
  const int n = 2;
  const MatrixXd U = random_orthogonal(rng, n);
  const MatrixXd V = random_orthogonal(rng, n);
  const Eigen::Vector2d delta(-2.0, -0.7);
  MatrixXd L(n * n, n);
  for (int i = 0; i < n; ++i) L.col(i) = vec(MatrixXd(U.col(i) * V.col(i).transpose()));
  ModelParams mp;
  mp.n = n;
  mp.A_d = 0.8 * MatrixXd::Identity(n, n);
  mp.mu_d = Eigen::Vector2d(6.0, 5.0);
  mp.W_d = 0.3 * MatrixXd::Identity(n, n);
  mp.A_B = 0.9 * MatrixXd::Identity(n * n, n * n);
  mp.mu_B = L * delta;
  mp.W_B = L * (0.01 * MatrixXd::Identity(n, n)) * L.transpose();
  mp.W_dB = MatrixXd::Zero(n, n * n);
  mp.W_y = 0.2 * MatrixXd::Identity(n, n);
  mp.t = Eigen::Vector2d(3.0, 3.0);
  GaussianPrior prior;
  prior.mean.resize(n + n * n);
  prior.mean << mp.mu_d, mp.mu_B;
  prior.cov = MatrixXd::Zero(n + n * n, n + n * n);
  prior.cov.topLeftCorner(n, n) = MatrixXd::Identity(n, n);
  prior.cov.bottomRightCorner(n * n, n * n) = L * (0.05 * MatrixXd::Identity(n, n)) * L.transpose();
  const VectorXd p0 = equilibrium_price(mp);
  auto lindy = make_policy({PolicyKind::Lindy0}, mp, prior, p0);
  auto eigen = make_policy({PolicyKind::Eigen}, mp, prior, p0);
  std::mt19937_64 noise(5);
  for (int k = 0; k < 30; ++k) {
    BlockRecord r{k, p0 + 0.1 * random_vector(noise, n), mp.mu_d + random_vector(noise, n)};
    const VectorXd a = lindy->next_price(r);
    const VectorXd b = eigen->next_price(r);
    CHECK(max_abs_diff(a, b) <= 1e-9 * std::max(1.0, a.norm()));
  }
}

TEST_CASE("heuristic rules") {
  SUBCASE("eip1559") {
    CHECK(eip1559_update(10.0, 5.0, 5.0) == 10.0);
    CHECK(eip1559_update(10.0, 10.0, 5.0) == doctest::Approx(11.25));
    CHECK(eip1559_update(10.0, 0.0, 5.0) == doctest::Approx(8.75));
  }
  SUBCASE("eip4844 is coordinatewise") {
    const VectorXd p = eip4844_update(Eigen::Vector2d(10.0, 4.0), Eigen::Vector2d(10.0, 0.0),
                                      Eigen::Vector2d(5.0, 3.0));
    CHECK(p(0) == doctest::Approx(11.25));
    CHECK(p(1) == doctest::Approx(3.5));
  }
  SUBCASE("unidimensional update") {
    CHECK(unidim_update(7.0, -1.0, 1.0, 6.0) == 0.0);
    CHECK(unidim_update(15.5e6, -0.0025, 2e8, 15e6) == doctest::Approx(0.0));
    CHECK(unidim_update(10.0, -2.0, 1.0, 6.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(unidim_update(10.0, 0.0, 1.0, 6.0), ZeroBeta);
  }
  SUBCASE("gamma_opt") {
    const double beta = -0.0025;
    const double p = 4000.0;
    const double t = 15e6;
    const double eta = std::abs(beta * p / t);
    CHECK(eta == doctest::Approx(6.6667e-7).epsilon(1e-4));
    const double a = 16e6;
    const double y = a + beta * p;
    CHECK(gamma_opt(a, beta, p, y, t) == doctest::Approx(1.0 / eta));
    CHECK_THROWS_AS(gamma_opt(a, beta, p, t, t), DegenerateDenominator);
  }
  SUBCASE("two-resource closed form agrees with the general rule") {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 200; ++trial) {
      const Eigen::Matrix2d B = invertible_B(rng, 2);
      const Eigen::Vector2d a = random_vector(rng, 2);
      const Eigen::Vector2d p = random_vector(rng, 2);
      const Eigen::Vector2d t = random_vector(rng, 2);
      StatePrediction pred;
      pred.a.resize(6);
      pred.a << a, vec(B);
      pred.S = MatrixXd::Zero(6, 6);
      const VectorXd general = lindy0_price_from_prediction(pred, t) - VectorXd(p);
      CHECK(max_abs_diff(general, VectorXd(bidim_update(a, B, p, t))) <=
            1e-10 * std::max(1.0, general.norm()));
    }
  }
}

TEST_CASE("gamma_opt reproduces the unidimensional update") {
  std::mt19937_64 rng(111);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const double beta = -u(rng);
    const double p = u(rng);
    const double t = u(rng) * 5.0;
    const double a = u(rng) * 5.0;
    const double y = t + (u(rng) - 1.5);
    const double g = gamma_opt(a, beta, p, y, t);
    const double lhs = eip1559_update(p, y, t, g);
    const double rhs = p + unidim_update(a, beta, p, t);
    CHECK(rel(lhs, rhs) <= 1e-10);
  }
}

TEST_CASE("policy names") {
  CHECK(parse_policy_kind("lindy0") == PolicyKind::Lindy0);
  CHECK(parse_policy_kind("lindy-lambda") == PolicyKind::LindyLambda);
  try {
    parse_policy_kind("magic");
    FAIL("expected a ValidationError");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    for (const std::string& name : policy_names()) CHECK(msg.find(name) != std::string::npos);
  }
  CHECK(PolicySpec{PolicyKind::LindyLambda, 1e-7}.label() == "lindy-lambda(1e-07)");
}

TEST_CASE("equilibrium price clears mean demand") {
  const ModelParams mp = scalar_model(mainnet_scalar_spec());
  CHECK(equilibrium_price(mp)(0) == doctest::Approx((7.3e7 - 1.5e7) / 2.38e-3));
}
