#include "lindy/model.hpp"

#include <cmath>
#include <string>

#include "lindy/errors.hpp"

namespace lindy {

namespace {

void require_shape(const MatrixXd& m, Eigen::Index rows, Eigen::Index cols,
                   const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ValidationError(std::string(name) + " must be " + std::to_string(rows) +
                          "x" + std::to_string(cols) + ", got " +
                          std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  if (!m.allFinite()) throw ValidationError(std::string(name) + " has non-finite entries");
}

void require_size(const VectorXd& v, Eigen::Index size, const char* name) {
  if (v.size() != size) {
    throw ValidationError(std::string(name) + " must have " + std::to_string(size) +
                          " entries, got " + std::to_string(v.size()));
  }
  if (!v.allFinite()) throw ValidationError(std::string(name) + " has non-finite entries");
}

constexpr double kReversionTol = 1e-9;
constexpr double kPsdTol = 1e-10;

}  // namespace

void ModelParams::validate() const {
  if (n < 1) throw ValidationError("n must be >= 1");
  const Eigen::Index n2 = static_cast<Eigen::Index>(n) * n;
  require_shape(A_d, n, n, "A_d");
  require_size(mu_d, n, "mu_d");
  require_shape(W_d, n, n, "W_d");
  require_shape(A_B, n2, n2, "A_B");
  require_size(mu_B, n2, "mu_B");
  require_shape(W_B, n2, n2, "W_B");
  require_shape(W_dB, n, n2, "W_dB");
  require_shape(W_y, n, n, "W_y");
  require_size(t, n, "t");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ValidationError("lambda must be finite and >= 0");
  }
  if (!is_psd(W_d, kPsdTol)) throw ValidationError("W_d is not symmetric PSD");
  if (!is_psd(W_B, kPsdTol)) throw ValidationError("W_B is not symmetric PSD");
  if (!is_psd(W_y, kPsdTol)) throw ValidationError("W_y is not symmetric PSD");
  if (spectral_radius(A_d) >= 1.0 - kReversionTol) {
    throw ValidationError("A_d is not mean-reverting (spectral radius >= 1)");
  }
  if (spectral_radius(A_B) >= 1.0 - kReversionTol) {
    throw ValidationError("A_B is not mean-reverting (spectral radius >= 1)");
  }
}

ModelParams scalar_model(const ScalarModelSpec& s) {
  ModelParams mp;
  mp.n = 1;
  mp.A_d = MatrixXd::Constant(1, 1, s.alpha_d);
  mp.mu_d = VectorXd::Constant(1, s.mu_d);
  mp.W_d = MatrixXd::Constant(1, 1, s.sigma_d * s.sigma_d);
  mp.A_B = MatrixXd::Constant(1, 1, s.alpha_beta);
  mp.mu_B = VectorXd::Constant(1, s.mu_beta);
  mp.W_B = MatrixXd::Constant(1, 1, s.sigma_beta * s.sigma_beta);
  mp.W_dB = MatrixXd::Constant(1, 1, s.rho * s.sigma_d * s.sigma_beta);
  mp.W_y = MatrixXd::Constant(1, 1, s.sigma_y * s.sigma_y);
  mp.t = VectorXd::Constant(1, s.target);
  mp.lambda = s.lambda;
  return mp;
}

ScalarModelSpec mainnet_scalar_spec(double lambda) {
  ScalarModelSpec s;
  s.mu_d = 7.30e7;
  s.mu_beta = -2.38e-3;
  s.alpha_d = 0.997;
  s.alpha_beta = 0.998;
  s.sigma_d = 1.04e6;
  s.sigma_beta = 5.35e-5;
  s.rho = -0.548;
  s.sigma_y = 7.21e6;
  s.target = 15e6;
  s.lambda = lambda;
  return s;
}

GaussianPrior mainnet_scalar_prior() {
  return scalar_prior(4.47e7, -9.62e-4, 1.47e6, 3.05e-4, -0.257);
}

GaussianPrior scalar_prior(double d0, double beta0, double sd_d0, double sd_beta0,
                           double rho0) {
  GaussianPrior prior;
  prior.mean = Eigen::Vector2d(d0, beta0);
  prior.cov.resize(2, 2);
  prior.cov << sd_d0 * sd_d0, rho0 * sd_d0 * sd_beta0, rho0 * sd_d0 * sd_beta0,
      sd_beta0 * sd_beta0;
  return prior;
}

VectorXd HiddenState::stacked() const {
  VectorXd x(d.size() + B.size());
  x << d, vec(B);
  return x;
}

HiddenState HiddenState::from_stacked(const VectorXd& x, int n) {
  HiddenState h;
  h.d = x.head(n);
  h.B = unvec(x.segment(n, static_cast<Eigen::Index>(n) * n), n);
  return h;
}

StackedParams stack_params(const ModelParams& mp) {
  mp.validate();
  const int n = mp.n;
  const int m = mp.state_dim();
  StackedParams sp;
  sp.n = n;
  sp.A_x = MatrixXd::Zero(m, m);
  sp.A_x.topLeftCorner(n, n) = mp.A_d;
  sp.A_x.bottomRightCorner(m - n, m - n) = mp.A_B;
  sp.mu_x.resize(m);
  sp.mu_x << mp.mu_d, mp.mu_B;
  sp.W_x = MatrixXd::Zero(m, m);
  sp.W_x.topLeftCorner(n, n) = mp.W_d;
  sp.W_x.bottomRightCorner(m - n, m - n) = mp.W_B;
  sp.W_x.topRightCorner(n, m - n) = mp.W_dB;
  sp.W_x.bottomLeftCorner(m - n, n) = mp.W_dB.transpose();
  if (!is_psd(sp.W_x, kPsdTol)) {
    throw ValidationError("stacked state noise covariance W_x is not PSD");
  }
  sp.W_y = mp.W_y;
  return sp;
}

ModelParams unstack_params(const StackedParams& sp, const ModelParams& like) {
  const int n = sp.n;
  const int m = sp.state_dim();
  ModelParams mp;
  mp.n = n;
  mp.A_d = sp.A_x.topLeftCorner(n, n);
  mp.A_B = sp.A_x.bottomRightCorner(m - n, m - n);
  mp.mu_d = sp.mu_x.head(n);
  mp.mu_B = sp.mu_x.tail(m - n);
  mp.W_d = sp.W_x.topLeftCorner(n, n);
  mp.W_B = sp.W_x.bottomRightCorner(m - n, m - n);
  mp.W_dB = sp.W_x.topRightCorner(n, m - n);
  mp.W_y = sp.W_y;
  mp.t = like.t;
  mp.lambda = like.lambda;
  return mp;
}

MatrixXd observation_matrix(const VectorXd& p) {
  const Eigen::Index n = p.size();
  MatrixXd C = MatrixXd::Zero(n, n + n * n);
  C.leftCols(n).setIdentity();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) C(i, n + j * n + i) = p(j);
  }
  return C;
}

GaussianSampler::GaussianSampler(const MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(cov));
  const VectorXd roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  root_ = es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().transpose();
}

VectorXd GaussianSampler::draw(std::mt19937_64& rng) {
  VectorXd z(root_.cols());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal_(rng);
  return root_ * z;
}

GaussianPrior stationary_prior(const ModelParams& mp) {
  const StackedParams sp = stack_params(mp);
  const Eigen::Index m = sp.state_dim();
  const MatrixXd I = MatrixXd::Identity(m * m, m * m);
  // Equilibrate so the solve is insensitive to the state's mixed units.
  VectorXd scale(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    scale(i) = sp.W_x(i, i) > 0.0 ? std::sqrt(sp.W_x(i, i)) : 1.0;
  }
  const MatrixXd D = scale.asDiagonal();
  const MatrixXd Dinv = scale.cwiseInverse().asDiagonal();
  const MatrixXd A_s = Dinv * sp.A_x * D;
  MatrixXd kron(m * m, m * m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) kron.block(i * m, j * m, m, m) = A_s(i, j) * A_s;
  }
  const MatrixXd W_s = Dinv * sp.W_x * Dinv;
  const VectorXd p_s = (I - kron).partialPivLu().solve(vec(W_s));
  GaussianPrior prior;
  prior.mean = sp.mu_x;
  prior.cov = project_psd(D * unvec(p_s, m) * D);
  return prior;
}

Simulation simulate_truth(const ModelParams& mp, const HiddenState& x0,
                          PricingPolicy& policy, int K, std::uint64_t seed) {
  if (K < 1) throw ValidationError("simulate_truth: K must be >= 1");
  const StackedParams sp = stack_params(mp);
  const int n = mp.n;
  if (x0.d.size() != n || x0.B.rows() != n || x0.B.cols() != n) {
    throw ValidationError("simulate_truth: initial state has the wrong shape");
  }

  std::mt19937_64 rng(seed);
  GaussianSampler state_noise(sp.W_x);
  GaussianSampler obs_noise(sp.W_y);
  const VectorXd drift =
      (MatrixXd::Identity(sp.state_dim(), sp.state_dim()) - sp.A_x) * sp.mu_x;

  Simulation sim;
  sim.states.reserve(K);
  sim.records.reserve(K);
  VectorXd x = x0.stacked();
  VectorXd p = policy.initial_price();
  for (int k = 0; k < K; ++k) {
    if (p.size() != n || !p.allFinite()) {
      throw NumericalError("policy '" + policy.name() + "' produced a non-finite price at block " +
                           std::to_string(k));
    }
    const VectorXd e_y = obs_noise.draw(rng);
    const VectorXd e_x = state_noise.draw(rng);
    HiddenState h = HiddenState::from_stacked(x, n);
    BlockRecord rec;
    rec.index = k;
    rec.p = p;
    rec.y = h.d + h.B * p + e_y;
    sim.states.push_back(std::move(h));
    sim.records.push_back(rec);
    x = drift + sp.A_x * x + e_x;
    if (k + 1 < K) p = policy.next_price(rec);
  }
  return sim;
}

}  // namespace lindy
