#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <vector>

#include "base.hpp"

namespace fdikit::la {

using Eigen::MatrixXd;
using Eigen::MatrixXcd;
using Eigen::VectorXd;
using Eigen::VectorXcd;
using cplx = std::complex<double>;

// Machine epsilon shorthand used by the default tolerance policy.
inline constexpr double eps = 2.220446049250313e-16;

// Default rank tolerance: dim * eps * max(1, |M|_1).
double default_tol(const MatrixXd& m);

int rank_svd(const MatrixXd& m, double tol);
int rank_svd(const MatrixXcd& m, double tol);

// Real Schur decomposition a = q * t * q^T with the eigenvalues for which
// `select` returns true moved to the leading block of t.
struct OrderedSchur {
  MatrixXd q;
  MatrixXd t;
  int k = 0;                       // size of the leading selected block
  std::vector<cplx> eigenvalues;   // in the order they appear on t's diagonal
  std::vector<bool> selected;
};

OrderedSchur ordered_real_schur(const MatrixXd& a,
                                const std::function<bool(cplx)>& select);

// Eigenvalues of a real matrix (complex pairs kept adjacent).
std::vector<cplx> eigenvalues(const MatrixXd& a);

// Finite eigenvalues of the regular pencil m - lambda*n, computed through a
// shift-and-invert reduction to a standard eigenproblem.  Infinite
// eigenvalues are dropped.
std::vector<cplx> pencil_eigenvalues(const MatrixXd& m, const MatrixXd& n,
                                     double tol = 0.0);

// Stable deflating subspace of the regular pencil m - lambda*n of even size
// 2n: returns the n-column orthonormal basis [u1; u2] with the eigenvalues
// satisfying `select` deflated leading.  Used by the Riccati solver.
MatrixXd stable_deflating_basis(const MatrixXd& m, const MatrixXd& n,
                                const std::function<bool(cplx)>& select,
                                int want);

// Solves the small Sylvester equation a*x - x*b = c (dims <= 2) by the
// Kronecker expansion; used for Schur block swapping and Bartels-Stewart.
MatrixXd sylvester_small(const MatrixXd& a, const MatrixXd& b,
                         const MatrixXd& c);

MatrixXd expm(const MatrixXd& a);

}  // namespace fdikit::la
