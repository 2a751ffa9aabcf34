#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "lindy/model.hpp"

namespace testing_support {

using lindy::MatrixXd;
using lindy::VectorXd;

inline MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c,
                              double scale = 1.0) {
  std::normal_distribution<double> z(0.0, scale);
  MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = z(rng);
  }
  return m;
}

inline VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  return random_matrix(rng, n, 1, scale);
}

// Positive definite with eigenvalues bounded below by `floor`.
inline MatrixXd random_spd(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0,
                           double floor = 0.05) {
  const MatrixXd g = random_matrix(rng, n, n);
  return scale * (g * g.transpose() / static_cast<double>(n) +
                  floor * MatrixXd::Identity(n, n));
}

inline MatrixXd random_stable(std::mt19937_64& rng, Eigen::Index n, double radius = 0.9) {
  const MatrixXd g = random_matrix(rng, n, n);
  Eigen::EigenSolver<MatrixXd> es(g, false);
  const double r = es.eigenvalues().cwiseAbs().maxCoeff();
  std::uniform_real_distribution<double> u(0.2, radius);
  return g * (u(rng) / r);
}

inline MatrixXd random_orthogonal(std::mt19937_64& rng, Eigen::Index n) {
  Eigen::HouseholderQR<MatrixXd> qr(random_matrix(rng, n, n));
  return qr.householderQ() * MatrixXd::Identity(n, n);
}

// A well-scaled random model with a full state-noise covariance.
inline lindy::ModelParams random_model(std::mt19937_64& rng, int n) {
  lindy::ModelParams mp;
  mp.n = n;
  const int nn = n * n;
  mp.A_d = random_stable(rng, n);
  mp.A_B = random_stable(rng, nn);
  mp.mu_d = random_vector(rng, n) + VectorXd::Constant(n, 5.0);
  mp.mu_B = lindy::vec(-MatrixXd::Identity(n, n) + 0.3 * random_matrix(rng, n, n));
  const MatrixXd W = random_spd(rng, n + nn, 0.2);
  mp.W_d = W.topLeftCorner(n, n);
  mp.W_B = W.bottomRightCorner(nn, nn);
  mp.W_dB = W.topRightCorner(n, nn);
  mp.W_y = random_spd(rng, n, 0.5);
  mp.t = VectorXd::Constant(n, 3.0);
  mp.lambda = 0.0;
  return mp;
}

inline lindy::GaussianPrior random_prior(std::mt19937_64& rng, int m) {
  lindy::GaussianPrior p;
  p.mean = random_vector(rng, m);
  p.cov = random_spd(rng, m, 0.5);
  return p;
}

inline std::vector<lindy::BlockRecord> random_records(std::mt19937_64& rng, int n, int K) {
  std::vector<lindy::BlockRecord> recs;
  for (int k = 0; k < K; ++k) {
    lindy::BlockRecord r;
    r.index = k;
    r.p = random_vector(rng, n);
    r.y = random_vector(rng, n, 2.0);
    recs.push_back(r);
  }
  return recs;
}

inline double max_abs_diff(const MatrixXd& a, const MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace testing_support
