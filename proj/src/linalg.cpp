#include "lindy/linalg.hpp"

#include <cmath>
#include <limits>

namespace lindy {

VectorXd vec(const MatrixXd& m) {
  return Eigen::Map<const VectorXd>(m.data(), m.size());
}

MatrixXd unvec(const VectorXd& v, Eigen::Index rows) {
  return Eigen::Map<const MatrixXd>(v.data(), rows, v.size() / rows);
}

MatrixXd symmetrize(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

double inf_norm(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

double inf_norm(const VectorXd& v) {
  if (v.size() == 0) return 0.0;
  return v.cwiseAbs().maxCoeff();
}

double spectral_radius(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<MatrixXd> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double min_eigenvalue(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool is_psd(const MatrixXd& m, double tol) {
  if (m.rows() != m.cols()) return false;
  if (!all_finite(m)) return false;
  const MatrixXd s = symmetrize(m);
  const Eigen::Index dim = s.rows();
  if (dim == 0) return true;
  VectorXd scale(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const double d = s(i, i);
    if (d < 0.0) return false;
    if (d == 0.0) {
      if (s.row(i).cwiseAbs().maxCoeff() != 0.0) return false;
      scale(i) = 1.0;
    } else {
      scale(i) = 1.0 / std::sqrt(d);
    }
  }
  const MatrixXd corr = scale.asDiagonal() * s * scale.asDiagonal();
  return min_eigenvalue(corr) >= -tol;
}

MatrixXd project_psd(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m));
  const VectorXd clipped = es.eigenvalues().cwiseMax(0.0);
  return symmetrize(es.eigenvectors() * clipped.asDiagonal() *
                    es.eigenvectors().transpose());
}

double condition_number_sym(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m), Eigen::EigenvaluesOnly);
  const VectorXd ev = es.eigenvalues().cwiseAbs();
  const double lo = ev.minCoeff();
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  return ev.maxCoeff() / lo;
}

double condition_number(const MatrixXd& m) {
  Eigen::JacobiSVD<MatrixXd> svd(m);
  const VectorXd& sv = svd.singularValues();
  const double lo = sv(sv.size() - 1);
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / lo;
}

bool all_finite(const MatrixXd& m) { return m.allFinite(); }

// Solves S X = rhs for symmetric PSD S after diagonal equilibration, falling
// back to the minimum-norm solution when S is singular. Hidden-state
// coordinates live on very different scales (demand vs. sensitivity), so an
// unscaled rank test would misjudge them.
MatrixXd solve_psd(const MatrixXd& S, const MatrixXd& rhs) {
  const Eigen::Index m = S.rows();
  VectorXd scale(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double d = S(i, i);
    scale(i) = d > 0.0 ? 1.0 / std::sqrt(d) : 1.0;
  }
  const MatrixXd scaled = scale.asDiagonal() * S * scale.asDiagonal();
  const MatrixXd scaled_rhs = scale.asDiagonal() * rhs;
  Eigen::LLT<MatrixXd> llt(scaled);
  if (llt.info() == Eigen::Success && condition_number_sym(scaled) < 1e14) {
    return scale.asDiagonal() * llt.solve(scaled_rhs);
  }
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(scaled);
  cod.setThreshold(1e-12);
  return scale.asDiagonal() * cod.solve(scaled_rhs);
}


}  // namespace lindy
