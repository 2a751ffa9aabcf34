#include "lindy/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lindy/errors.hpp"

namespace lindy {

namespace {

std::string lambda_label(double lambda) {
  std::ostringstream os;
  os << "lindy-lambda(" << lambda << ")";
  return os.str();
}

bool relative_close(double diff, double a, double b, double tol) {
  return diff <= tol * std::max(a, b);
}

MatrixXd check_orthogonal(const MatrixXd& M, const char* name) {
  if (M.rows() != M.cols()) throw ValidationError(std::string(name) + " must be square");
  const MatrixXd err = M.transpose() * M - MatrixXd::Identity(M.rows(), M.cols());
  if (err.cwiseAbs().maxCoeff() > 1e-10) {
    throw ValidationError(std::string(name) + " is not orthogonal");
  }
  return M;
}

}  // namespace

// ---------------------------------------------------------------------------

VectorXd lindy0_price_from_prediction(const StatePrediction& pred, const VectorXd& t) {
  const Eigen::Index n = t.size();
  const VectorXd& a = pred.a;
  const MatrixXd& S = pred.S;
  const VectorXd d_hat = a.head(n);
  const MatrixXd B_hat = unvec(a.segment(n, n * n), n);

  // vec index of B_{mi} is n + i*n + m.
  MatrixXd second_moment(n, n);
  VectorXd cross(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double acc = 0.0;
      for (Eigen::Index m = 0; m < n; ++m) {
        acc += B_hat(m, i) * B_hat(m, j) + S(n + i * n + m, n + j * n + m);
      }
      second_moment(i, j) = acc;
    }
    double acc = 0.0;
    for (Eigen::Index m = 0; m < n; ++m) {
      acc += B_hat(m, i) * (t(m) - d_hat(m)) - S(n + i * n + m, m);
    }
    cross(i) = acc;
  }
  const double cond = condition_number_sym(second_moment);
  if (!(cond <= kMaxConditionMoment)) {
    throw SingularMoment("E(B^T B) is singular or ill-conditioned (cond = " +
                         std::to_string(cond) + ")");
  }
  return second_moment.ldlt().solve(cross);
}

VectorXd lindy0_price(const BeliefState& belief, const StackedParams& sp, const VectorXd& t) {
  return lindy0_price_from_prediction(predict(belief, sp), t);
}

// ---------------------------------------------------------------------------

RiccatiStep RiccatiStep::zero(Eigen::Index n) {
  return {MatrixXd::Zero(n, n), MatrixXd::Zero(n, n), VectorXd::Zero(n)};
}

RiccatiStep riccati_step(const RiccatiStep& next, const MatrixXd& B, const MatrixXd& A_d,
                         const VectorXd& mu_d, const VectorXd& t, double lambda) {
  const Eigen::Index n = B.rows();
  if (lambda == 0.0) return RiccatiStep::zero(n);
  const MatrixXd I = MatrixXd::Identity(n, n);
  const MatrixXd M = lambda * I + next.Q + B.transpose() * B;
  const Eigen::LDLT<MatrixXd> ldlt(M);
  RiccatiStep prev;
  prev.Q = symmetrize(lambda * I - lambda * lambda * ldlt.solve(I));
  const MatrixXd Rt = lambda * ldlt.solve(B.transpose() + next.R.transpose() * A_d);
  prev.R = Rt.transpose();
  prev.tau = lambda * ldlt.solve(B.transpose() * t + next.tau -
                                 next.R.transpose() * ((I - A_d) * mu_d));
  return prev;
}

std::vector<RiccatiStep> riccati_finite(std::span<const MatrixXd> B_path, const MatrixXd& A_d,
                                        const VectorXd& mu_d, const VectorXd& t,
                                        double lambda) {
  const std::size_t K = B_path.size();
  std::vector<RiccatiStep> out(K + 1);
  out[K] = RiccatiStep::zero(t.size());
  for (std::size_t j = K; j-- > 0;) {
    out[j] = riccati_step(out[j + 1], B_path[j], A_d, mu_d, t, lambda);
  }
  return out;
}

VectorXd finite_horizon_price(const VectorXd& p_prev, const VectorXd& a_d_s,
                              const MatrixXd& B_s, const RiccatiStep& next,
                              const MatrixXd& A_d, const VectorXd& mu_d, const VectorXd& t,
                              double lambda) {
  const Eigen::Index n = t.size();
  const MatrixXd I = MatrixXd::Identity(n, n);
  const MatrixXd M = lambda * I + next.Q + B_s.transpose() * B_s;
  const VectorXd a_next = (I - A_d) * mu_d + A_d * a_d_s;
  const VectorXd rhs = B_s.transpose() * a_d_s - B_s.transpose() * t - lambda * p_prev -
                       next.tau + next.R.transpose() * a_next;
  return -M.ldlt().solve(rhs);
}

StationaryRiccati riccati_stationary(const MatrixXd& B_limit, const MatrixXd& A_d,
                                     const VectorXd& mu_d, const VectorXd& t, double lambda,
                                     int H, double tol) {
  if (!(lambda >= 0.0)) throw ValidationError("riccati: lambda must be >= 0");
  if (H < 1) throw ValidationError("riccati: horizon must be >= 1");
  StationaryRiccati out;
  out.value = RiccatiStep::zero(t.size());
  if (lambda == 0.0) {
    out.iterations = 1;
    return out;
  }
  for (int it = 1; it <= H; ++it) {
    RiccatiStep prev = riccati_step(out.value, B_limit, A_d, mu_d, t, lambda);
    const bool q_done = inf_norm(MatrixXd(prev.Q - out.value.Q)) <= tol * lambda;
    const bool r_done = relative_close(inf_norm(MatrixXd(prev.R - out.value.R)),
                                       inf_norm(prev.R), inf_norm(out.value.R), tol);
    const bool tau_done = relative_close(inf_norm(VectorXd(prev.tau - out.value.tau)),
                                         inf_norm(prev.tau), inf_norm(out.value.tau), tol);
    out.value = std::move(prev);
    out.iterations = it;
    if (q_done && r_done && tau_done) return out;
  }
  throw NoConvergence("stationary Riccati recursion did not converge within " +
                      std::to_string(H) + " steps");
}

const RiccatiStep& RiccatiSolution::at(std::size_t s) const {
  return s < sequence.size() ? sequence[s] : stationary;
}

const MatrixXd& RiccatiSolution::B_at(std::size_t s) const {
  if (s == 0) throw std::out_of_range("RiccatiSolution::B_at: lookahead starts at 1");
  return s - 1 < B_path.size() ? B_path[s - 1] : B_path.back();
}

RiccatiSolution riccati_backward(std::span<const MatrixXd> B_path,
                                 const StationaryRiccati& stationary, const MatrixXd& A_d,
                                 const VectorXd& mu_d, const VectorXd& t, double lambda) {
  if (B_path.empty()) throw ValidationError("riccati_backward: empty sensitivity path");
  for (const MatrixXd& B : B_path) {
    if (!B.allFinite()) throw ValidationError("riccati_backward: non-finite sensitivity");
  }
  RiccatiSolution rs;
  rs.B_path.assign(B_path.begin(), B_path.end());
  rs.stationary = stationary.value;
  rs.iterations = stationary.iterations;
  rs.converged = true;
  const std::size_t P = B_path.size();
  rs.horizon = static_cast<int>(P);
  rs.sequence.resize(P);
  rs.sequence[P - 1] = stationary.value;
  for (std::size_t j = P - 1; j-- > 0;) {
    rs.sequence[j] = riccati_step(rs.sequence[j + 1], B_path[j], A_d, mu_d, t, lambda);
  }
  return rs;
}

RiccatiSolution riccati_backward(std::span<const MatrixXd> B_path, const MatrixXd& A_d,
                                 const VectorXd& mu_d, const VectorXd& t, double lambda,
                                 int H, double tol) {
  if (B_path.empty()) throw ValidationError("riccati_backward: empty sensitivity path");
  const StationaryRiccati st = riccati_stationary(B_path.back(), A_d, mu_d, t, lambda, H, tol);
  return riccati_backward(B_path, st, A_d, mu_d, t, lambda);
}

int default_riccati_horizon(const ModelParams& mp) {
  const double rho = spectral_radius(mp.A_B);
  const double steps = std::ceil(1.0 / std::max(1e-12, 1.0 - rho));
  const double h = 10.0 * mp.n * std::min(steps, 1e7);
  return static_cast<int>(std::max(1000.0, h));
}

AimDecomposition aim_price(const BeliefState& belief, const StackedParams& sp_det,
                           const RiccatiSolution& rs, const VectorXd& t, double truncation_tol,
                           int max_terms) {
  const int n = sp_det.n;
  const MatrixXd I = MatrixXd::Identity(n, n);
  const MatrixXd A_d = sp_det.A_x.topLeftCorner(n, n);
  const VectorXd drift_d = (I - A_d) * sp_det.mu_x.head(n);

  AimDecomposition out;
  out.aim = VectorXd::Zero(n);
  out.untruncated_weight_sum = MatrixXd::Zero(n, n);
  // prefix = Z_{k+1} ... Z_{s-1}; residual weight after block s is prefix * Z_s.
  MatrixXd prefix = I;
  VectorXd d_forecast = belief.x_hat.head(n);
  for (int s = 1; s <= max_terms; ++s) {
    d_forecast = drift_d + A_d * d_forecast;
    const MatrixXd& B = rs.B_at(s);
    const double cond = condition_number(B);
    if (!(cond <= 1e12)) {
      throw SingularB("sensitivity matrix at lookahead " + std::to_string(s) +
                      " is singular (cond = " + std::to_string(cond) + ")");
    }
    const VectorXd clearing = B.partialPivLu().solve(t - d_forecast);
    const MatrixXd& Q = rs.at(s).Q;
    const MatrixXd Z = (Q + B.transpose() * B).ldlt().solve(Q);
    const MatrixXd weight = prefix * (I - Z);
    prefix = prefix * Z;
    out.untruncated_weight_sum += weight;
    out.weights.push_back(weight);
    out.clearing_prices.push_back(clearing);
    out.aim += weight * clearing;
    if (inf_norm(prefix) < truncation_tol) {
      out.weights.back() += prefix;
      out.aim += prefix * clearing;
      out.truncation_horizon = s;
      return out;
    }
  }
  throw NoConvergence("aim price weights did not decay below " + std::to_string(truncation_tol) +
                      " within " + std::to_string(max_terms) + " terms");
}

VectorXd lqg_price(const VectorXd& p_k, const RiccatiSolution& rs, const AimDecomposition& aim,
                   double lambda) {
  if (!(lambda > 0.0)) throw ValidationError("lqg_price: lambda must be > 0");
  const MatrixXd G = rs.at(0).Q / lambda;
  const Eigen::Index n = p_k.size();
  return (MatrixXd::Identity(n, n) - G) * p_k + G * aim.aim;
}

VectorXd mpc_price(const BeliefState& belief, const ModelParams& mp, const VectorXd& p_k,
                   const VectorXd& t, double lambda, const MpcOptions& options,
                   const StationaryRiccati* cached_stationary) {
  if (!(lambda > 0.0)) throw ValidationError("mpc_price: lambda must be > 0");
  const int n = mp.n;
  const Eigen::Index n2 = static_cast<Eigen::Index>(n) * n;
  const MatrixXd B_limit = unvec(mp.mu_B, n);
  const int cap = options.horizon > 0 ? options.horizon : default_riccati_horizon(mp);

  StationaryRiccati local;
  if (cached_stationary == nullptr) {
    local = riccati_stationary(B_limit, mp.A_d, mp.mu_d, t, lambda, default_riccati_horizon(mp),
                               options.riccati_tol);
    cached_stationary = &local;
  }

  // Lookahead needed for the aim weights (decay like Z^s) plus the stretch
  // over which the backward recursion still remembers the tail (contracts
  // like ||I - Q/lambda||^2 per step).
  const MatrixXd& Q_inf = cached_stationary->value.Q;
  const MatrixXd I = MatrixXd::Identity(n, n);
  const MatrixXd Z_inf = (Q_inf + B_limit.transpose() * B_limit).ldlt().solve(Q_inf);
  const double rate_z = Eigen::JacobiSVD<MatrixXd>(Z_inf).singularValues()(0);
  const double rate_q =
      std::pow(Eigen::JacobiSVD<MatrixXd>(MatrixXd(I - Q_inf / lambda)).singularValues()(0), 2);
  auto steps_for = [&](double rate) {
    if (rate <= 0.0) return 1.0;
    if (rate >= 1.0) return static_cast<double>(cap);
    return std::ceil(std::log(options.aim_tol * 1e-2) / std::log(rate));
  };
  const double wanted = steps_for(rate_z) + steps_for(rate_q) + 8.0;
  const int lookahead = static_cast<int>(std::min<double>(cap, wanted));

  std::vector<MatrixXd> path;
  path.reserve(lookahead + 1);
  const MatrixXd I2 = MatrixXd::Identity(n2, n2);
  const VectorXd drift_B = (I2 - mp.A_B) * mp.mu_B;
  VectorXd b = belief.x_hat.segment(n, n2);
  const double limit_scale = std::max(inf_norm(mp.mu_B), std::numeric_limits<double>::min());
  for (int s = 1; s <= lookahead; ++s) {
    b = drift_B + mp.A_B * b;
    if (inf_norm(VectorXd(b - mp.mu_B)) <= options.riccati_tol * limit_scale) break;
    path.push_back(unvec(b, n));
  }
  path.push_back(B_limit);

  const RiccatiSolution rs =
      riccati_backward(path, *cached_stationary, mp.A_d, mp.mu_d, t, lambda);

  StackedParams sp_det;
  sp_det.n = n;
  sp_det.A_x = MatrixXd::Zero(n + n2, n + n2);
  sp_det.A_x.topLeftCorner(n, n) = mp.A_d;
  sp_det.A_x.bottomRightCorner(n2, n2) = mp.A_B;
  sp_det.mu_x.resize(n + n2);
  sp_det.mu_x << mp.mu_d, mp.mu_B;
  sp_det.W_x = MatrixXd::Zero(n + n2, n + n2);
  sp_det.W_y = mp.W_y;

  const AimDecomposition aim = aim_price(belief, sp_det, rs, t, options.aim_tol);
  return lqg_price(p_k, rs, aim, lambda);
}

// ---------------------------------------------------------------------------

EigenModel eigen_decompose(const ModelParams& mp) {
  mp.validate();
  const int n = mp.n;
  const Eigen::Index n2 = static_cast<Eigen::Index>(n) * n;
  Eigen::JacobiSVD<MatrixXd> svd(unvec(mp.mu_B, n), Eigen::ComputeFullU | Eigen::ComputeFullV);
  EigenModel em;
  em.U = svd.matrixU();
  em.V = svd.matrixV();
  // Column i of L is vec(u_i v_i^T); the columns are orthonormal.
  MatrixXd L(n2, n);
  for (int i = 0; i < n; ++i) {
    L.col(i) = vec(MatrixXd(em.U.col(i) * em.V.col(i).transpose()));
  }
  const MatrixXd& U = em.U;
  StackedParams& sp = em.sp;
  sp.n = n;
  sp.A_x = MatrixXd::Zero(2 * n, 2 * n);
  sp.A_x.topLeftCorner(n, n) = U.transpose() * mp.A_d * U;
  sp.A_x.bottomRightCorner(n, n) = L.transpose() * mp.A_B * L;
  sp.mu_x.resize(2 * n);
  sp.mu_x << U.transpose() * mp.mu_d, L.transpose() * mp.mu_B;
  sp.W_x = MatrixXd::Zero(2 * n, 2 * n);
  sp.W_x.topLeftCorner(n, n) = U.transpose() * mp.W_d * U;
  sp.W_x.bottomRightCorner(n, n) = L.transpose() * mp.W_B * L;
  sp.W_x.topRightCorner(n, n) = U.transpose() * mp.W_dB * L;
  sp.W_x.bottomLeftCorner(n, n) = sp.W_x.topRightCorner(n, n).transpose();
  sp.W_x = symmetrize(sp.W_x);
  sp.W_y = symmetrize(U.transpose() * mp.W_y * U);
  return em;
}

MatrixXd eigen_observation_matrix(const VectorXd& p_tilde) {
  const Eigen::Index n = p_tilde.size();
  MatrixXd C(n, 2 * n);
  C << MatrixXd::Identity(n, n), MatrixXd(p_tilde.asDiagonal());
  return C;
}

VectorXd eigen_price_from_prediction(const StatePrediction& pred, const MatrixXd& U,
                                     const MatrixXd& V, const VectorXd& t) {
  check_orthogonal(U, "U");
  check_orthogonal(V, "V");
  const Eigen::Index n = t.size();
  const VectorXd t_tilde = U.transpose() * t;
  VectorXd p_tilde(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double delta = pred.a(n + i);
    const double d = pred.a(i);
    const double second = delta * delta + pred.S(n + i, n + i);
    if (second < 1e-15) {
      throw SingularMoment("E(delta^2) vanishes for eigenresource " + std::to_string(i));
    }
    p_tilde(i) = (delta * (t_tilde(i) - d) - pred.S(n + i, i)) / second;
  }
  return V * p_tilde;
}

VectorXd eigen_price(const BeliefState& belief, const StackedParams& sp_eig, const MatrixXd& U,
                     const MatrixXd& V, const VectorXd& t) {
  return eigen_price_from_prediction(predict(belief, sp_eig), U, V, t);
}

// ---------------------------------------------------------------------------

double eip1559_update(double p_k, double y_k, double t, double gamma) {
  if (!(t > 0.0)) throw ValidationError("eip1559_update: target must be > 0");
  return p_k * (1.0 + gamma * (y_k - t) / t);
}

VectorXd eip1559_update(const VectorXd& p_k, const VectorXd& y_k, const VectorXd& t,
                        double gamma) {
  VectorXd out(p_k.size());
  for (Eigen::Index i = 0; i < p_k.size(); ++i) {
    out(i) = eip1559_update(p_k(i), y_k(i), t(i), gamma);
  }
  return out;
}

VectorXd eip4844_update(const VectorXd& p_k, const VectorXd& y_k, const VectorXd& t) {
  if (p_k.size() != 2 || y_k.size() != 2 || t.size() != 2) {
    throw ValidationError("eip4844_update: expects two resources");
  }
  return eip1559_update(p_k, y_k, t, kEip1559Gamma);
}

double unidim_update(double a_next, double beta, double p_k, double t) {
  if (beta == 0.0) throw ZeroBeta("unidim_update: beta must be nonzero");
  return -(a_next + beta * p_k - t) / beta;
}

double gamma_opt(double a_next, double beta, double p_k, double y_k, double t) {
  if (beta == 0.0) throw ZeroBeta("gamma_opt: beta must be nonzero");
  if (std::abs(y_k - t) < 1e-12 * std::abs(t)) {
    throw DegenerateDenominator("gamma_opt: observed demand equals the target");
  }
  const double eta = beta * p_k / t;
  return (a_next + beta * p_k - t) / (std::abs(eta) * (y_k - t));
}

Eigen::Vector2d bidim_update(const Eigen::Vector2d& a_next, const Eigen::Matrix2d& B,
                             const Eigen::Vector2d& p_k, const Eigen::Vector2d& t) {
  const Eigen::Vector2d delta = a_next + B * p_k - t;
  const double denom = B(0, 1) * B(1, 0) - B(0, 0) * B(1, 1);
  if (denom == 0.0) throw SingularB("bidim_update: singular sensitivity matrix");
  Eigen::Matrix2d adj;
  adj << B(1, 1), -B(0, 1), -B(1, 0), B(0, 0);
  return adj * delta / denom;
}

// ---------------------------------------------------------------------------

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Lindy0: return "lindy0";
    case PolicyKind::LindyLambda: return "lindy-lambda";
    case PolicyKind::Eigen: return "eigen";
    case PolicyKind::Eip1559: return "eip1559";
    case PolicyKind::Eip4844: return "eip4844";
  }
  return "unknown";
}

std::vector<std::string> policy_names() {
  return {"lindy0", "lindy-lambda", "eigen", "eip1559", "eip4844"};
}

PolicyKind parse_policy_kind(const std::string& name) {
  for (PolicyKind k : {PolicyKind::Lindy0, PolicyKind::LindyLambda, PolicyKind::Eigen,
                       PolicyKind::Eip1559, PolicyKind::Eip4844}) {
    if (to_string(k) == name) return k;
  }
  std::string valid;
  for (const std::string& s : policy_names()) valid += (valid.empty() ? "" : ", ") + s;
  throw ValidationError("unknown policy '" + name + "'; valid policies: " + valid);
}

std::string PolicySpec::label() const {
  if (kind != PolicyKind::LindyLambda) return to_string(kind);
  return lambda_label(lambda);
}

VectorXd equilibrium_price(const ModelParams& mp) {
  const MatrixXd B = unvec(mp.mu_B, mp.n);
  if (!(condition_number(B) <= 1e12)) throw SingularB("mat(mu_B) is singular");
  return B.partialPivLu().solve(mp.t - mp.mu_d);
}

namespace {

class Lindy0Policy final : public PricingPolicy {
 public:
  Lindy0Policy(const ModelParams& mp, const GaussianPrior& prior, VectorXd p0)
      : filter_(stack_params(mp), prior), t_(mp.t), p0_(std::move(p0)) {}

  std::string name() const override { return "lindy0"; }
  VectorXd initial_price() override { return p0_; }
  VectorXd next_price(const BlockRecord& observed) override {
    const BeliefState& belief = filter_.observe(observed);
    return lindy0_price(belief, filter_.params(), t_);
  }

 private:
  KalmanFilter filter_;
  VectorXd t_;
  VectorXd p0_;
};

class LindyLambdaPolicy final : public PricingPolicy {
 public:
  LindyLambdaPolicy(const ModelParams& mp, const GaussianPrior& prior, VectorXd p0,
                    double lambda, MpcOptions options)
      : mp_(mp),
        filter_(stack_params(mp), prior),
        p0_(std::move(p0)),
        lambda_(lambda),
        options_(options),
        label_(lambda_label(lambda)) {
    if (!(lambda > 0.0)) throw ValidationError("lindy-lambda requires lambda > 0");
    stationary_ = riccati_stationary(unvec(mp.mu_B, mp.n), mp.A_d, mp.mu_d, mp.t, lambda,
                                     default_riccati_horizon(mp), options.riccati_tol);
  }

  std::string name() const override { return label_; }
  VectorXd initial_price() override { return p0_; }
  VectorXd next_price(const BlockRecord& observed) override {
    const BeliefState& belief = filter_.observe(observed);
    return mpc_price(belief, mp_, observed.p, mp_.t, lambda_, options_, &stationary_);
  }

 private:
  ModelParams mp_;
  KalmanFilter filter_;
  VectorXd p0_;
  double lambda_;
  MpcOptions options_;
  StationaryRiccati stationary_;
  std::string label_;
};

class EigenPolicy final : public PricingPolicy {
 public:
  EigenPolicy(const ModelParams& mp, const GaussianPrior& prior, VectorXd p0)
      : em_(eigen_decompose(mp)), t_(mp.t), p0_(std::move(p0)) {
    const int n = mp.n;
    // Prior mapped through x~ = T^T x with T = blockdiag(U, L).
    MatrixXd T = MatrixXd::Zero(n + n * n, 2 * n);
    T.topLeftCorner(n, n) = em_.U;
    for (int i = 0; i < n; ++i) {
      T.block(n, n + i, n * n, 1) = vec(MatrixXd(em_.U.col(i) * em_.V.col(i).transpose()));
    }
    prior_mean_ = T.transpose() * prior.mean;
    prior_cov_ = symmetrize(T.transpose() * prior.cov * T);
  }

  std::string name() const override { return "eigen"; }
  VectorXd initial_price() override { return p0_; }
  VectorXd next_price(const BlockRecord& observed) override {
    StatePrediction pred = started_ ? predict(belief_, em_.sp)
                                    : StatePrediction{prior_mean_, prior_cov_};
    const VectorXd p_tilde = em_.V.transpose() * observed.p;
    const VectorXd y_tilde = em_.U.transpose() * observed.y;
    belief_ = update_linear(pred.a, pred.S, eigen_observation_matrix(p_tilde), y_tilde,
                            em_.sp.W_y);
    belief_.k = observed.index;
    started_ = true;
    return eigen_price(belief_, em_.sp, em_.U, em_.V, t_);
  }

 private:
  EigenModel em_;
  VectorXd t_;
  VectorXd p0_;
  VectorXd prior_mean_;
  MatrixXd prior_cov_;
  BeliefState belief_;
  bool started_ = false;
};

class Eip1559Policy final : public PricingPolicy {
 public:
  Eip1559Policy(VectorXd t, VectorXd p0, double gamma, std::string label)
      : t_(std::move(t)), p0_(std::move(p0)), gamma_(gamma), label_(std::move(label)) {}

  std::string name() const override { return label_; }
  VectorXd initial_price() override { return p0_; }
  VectorXd next_price(const BlockRecord& observed) override {
    return eip1559_update(observed.p, observed.y, t_, gamma_);
  }

 private:
  VectorXd t_;
  VectorXd p0_;
  double gamma_;
  std::string label_;
};

}  // namespace

std::unique_ptr<PricingPolicy> make_policy(const PolicySpec& spec, const ModelParams& mp,
                                           const GaussianPrior& prior, const VectorXd& p0) {
  if (p0.size() != mp.n) throw ValidationError("initial price has the wrong dimension");
  switch (spec.kind) {
    case PolicyKind::Lindy0:
      return std::make_unique<Lindy0Policy>(mp, prior, p0);
    case PolicyKind::LindyLambda:
      return std::make_unique<LindyLambdaPolicy>(mp, prior, p0, spec.lambda, spec.mpc);
    case PolicyKind::Eigen:
      return std::make_unique<EigenPolicy>(mp, prior, p0);
    case PolicyKind::Eip1559:
      return std::make_unique<Eip1559Policy>(mp.t, p0, spec.gamma, "eip1559");
    case PolicyKind::Eip4844:
      if (mp.n != 2) throw ValidationError("eip4844 requires exactly two resources");
      return std::make_unique<Eip1559Policy>(mp.t, p0, kEip1559Gamma, "eip4844");
  }
  throw ValidationError("unhandled policy kind");
}

}  // namespace lindy
