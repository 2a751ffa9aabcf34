#pragma once

#include <Eigen/Dense>

namespace lindy {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Column-stacking vec(); Eigen's default storage is already column-major.
VectorXd vec(const MatrixXd& m);
MatrixXd unvec(const VectorXd& v, Eigen::Index rows);

MatrixXd symmetrize(const MatrixXd& m);

// Largest absolute row sum.
double inf_norm(const MatrixXd& m);
double inf_norm(const VectorXd& v);

double spectral_radius(const MatrixXd& m);

// Smallest eigenvalue of the symmetric part.
double min_eigenvalue(const MatrixXd& m);

// PSD test on the correlation-scaled matrix D^{-1/2} M D^{-1/2}, so that the
// tolerance is independent of how the coordinates are scaled. Rows with a
// zero diagonal must vanish entirely.
bool is_psd(const MatrixXd& m, double tol = 1e-10);

// Clips negative eigenvalues of the symmetric part to zero.
MatrixXd project_psd(const MatrixXd& m);

// 2-norm condition number of a symmetric matrix; +inf when singular.
double condition_number_sym(const MatrixXd& m);

// 2-norm condition number of a general square matrix; +inf when singular.
double condition_number(const MatrixXd& m);

bool all_finite(const MatrixXd& m);

// Solves S X = rhs for symmetric PSD S after diagonal equilibration, using
// the minimum-norm solution when S is singular.
MatrixXd solve_psd(const MatrixXd& S, const MatrixXd& rhs);

}  // namespace lindy
