#pragma once

#include <functional>

#include "la.hpp"

namespace fdikit::numkern {

using la::cplx;
using la::MatrixXd;

enum class TimeKind { continuous, discrete };

// Stability-region membership for eigenvalues.
inline bool stable_eig(cplx ev, TimeKind kind, double margin = 0.0) {
  return kind == TimeKind::continuous ? ev.real() < -margin
                                      : std::abs(ev) < 1.0 - margin;
}

struct SpectralSplit {
  MatrixXd q;  // orthogonal
  MatrixXd z;  // orthogonal (equal to q in the standard case)
  MatrixXd t;  // reordered quasi-triangular form
  int k = 0;   // leading selected block size
  std::vector<cplx> eigenvalues;
  std::vector<bool> selected;
};

// Ordered spectral split of a (or of E^{-1}A when e is nonempty): the
// eigenvalues satisfying `inside` are moved to the leading k positions.
SpectralSplit spectral_split(const MatrixXd& a, const MatrixXd& e,
                             const std::function<bool(cplx)>& inside);

SpectralSplit spectral_split_stable(const MatrixXd& a, const MatrixXd& e,
                                    TimeKind kind);

// Solves A^T X E + E^T X A + Q = 0 (continuous) or A^T X A - E^T X E + Q = 0
// (discrete) for symmetric Q; the pencil (a, e) must be stable.
MatrixXd solve_lyapunov(const MatrixXd& a, const MatrixXd& e,
                        const MatrixXd& q, TimeKind kind);

// Controllability-gramian style equation A P E^T + E P A^T + Q = 0 /
// A P A^T - E P E^T + Q = 0.
MatrixXd solve_lyapunov_dual(const MatrixXd& a, const MatrixXd& e,
                             const MatrixXd& q, TimeKind kind);

struct RiccatiResult {
  MatrixXd x;     // stabilizing solution, symmetric
  MatrixXd gain;  // continuous: R^{-1} B^T X; discrete: (R+B^T X B)^{-1} B^T X A
};

// Stabilizing solution of
//   continuous:  A^T X + X A - X B R^{-1} B^T X + Q = 0
//   discrete:    X = A^T X A - A^T X B (R + B^T X B)^{-1} B^T X A + Q
RiccatiResult solve_riccati(const MatrixXd& a, const MatrixXd& b,
                            const MatrixXd& q, const MatrixXd& r,
                            TimeKind kind);

}  // namespace fdikit::numkern
