#pragma once

#include "model.hpp"

namespace fdikit::poly {

using la::cplx;
using la::MatrixXd;

// Dense polynomial, coefficients ascending in the frequency variable.
using Poly = std::vector<double>;

int degree(const Poly& p, double tol = 0.0);
Poly trim(const Poly& p, double tol = 0.0);
Poly add(const Poly& a, const Poly& b);
Poly mul(const Poly& a, const Poly& b);
Poly scale(const Poly& a, double s);
cplx eval(const Poly& p, cplx x);
std::vector<cplx> roots(const Poly& p);

// Monic polynomial with the given (conjugate-closed) root set.
Poly from_roots(const std::vector<cplx>& rts);

// Quotient of the polynomial long division a / b (remainder discarded).
Poly divide(const Poly& a, const Poly& b);

// Cancels shared roots of num and den within a relative tolerance; both are
// replaced by the reduced polynomials.
void reduce_fraction(Poly& num, Poly& den, double tol = 1e-6);

// Polynomial row vector: coeff(k, j) = coefficient of lambda^k in entry j.
struct PolyRow {
  MatrixXd coeff;  // (max_degree+1) x width

  int width() const { return static_cast<int>(coeff.cols()); }
  int degree(double tol = 0.0) const;
  Eigen::RowVectorXcd eval(cplx x) const;
};

PolyRow combine(const std::vector<PolyRow>& rows, const MatrixXd& h_row);

// State-space realization of row(lambda)/den(lambda); den must be monic with
// degree >= the row degree.  Observer companion form of order deg(den).
LtiModel realize_row_over_den(const PolyRow& row, const Poly& den, double ts);

// Realization of a stable proper scalar num/den (not necessarily monic).
LtiModel realize_scalar(const Poly& num, const Poly& den, double ts);

// Denominator of the requested degree built from a placement supply: takes
// the first `deg` poles from `placement` (cycled), conjugates paired.
Poly stable_denominator(int deg, const std::vector<cplx>& placement);

}  // namespace fdikit::poly
