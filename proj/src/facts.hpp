#pragma once

#include "nullspace.hpp"

namespace fdikit {

struct LcfResult {
  LtiModel n;  // numerator factor
  LtiModel m;  // stable invertible denominator, sys = m^{-1} n
  int moved = 0;  // number of dislocated poles
};

// Left coprime factorization sys = m^{-1} n with m stable and invertible;
// only the poles violating the stabilize options are dislocated, so m has
// least order.  The factors share their state matrices.
LcfResult lcf_stabilize(const LtiModel& sys, const StabilizeOpts& opts);

// Convenience: returns n directly (the stabilized system with denominator
// absorbed); identical response region-wise.
LtiModel stabilized(const LtiModel& sys, const StabilizeOpts& opts);

struct CoouterCoinner {
  LtiModel outer;   // square invertible quasi-co-outer factor
  LtiModel inner;   // co-inner factor, inner*inner~ = I
  int rank = 0;        // normal rank of the input
  bool nonstandard = false;  // outer has zeros within `offset` of the boundary
};

// Quasi-co-outer--co-inner factorization sys = outer * inner of a stable
// system with full row rank; zero inputs give rank 0.
CoouterCoinner coouter_coinner(const LtiModel& sys,
                               double offset = boundary_offset);

struct CoprimeFactors {
  LtiModel n;  // left: G = m^{-1} n;  right: G = n m^{-1}
  LtiModel m;
};

enum class CoprimeSide { left, right };

// Normalized coprime factorization: [n m] co-inner (left) or [n; m] inner
// (right), built through the Riccati-based co-outer machinery.
CoprimeFactors normalized_coprime(const LtiModel& sys, CoprimeSide side);

// State-space inverse of a square system with invertible feedthrough.
LtiModel inverse_square(const LtiModel& g);

// Response of m^{-1} n at a complex point (helper for factor checks).
MatrixXcd left_fraction_response(const LcfResult& f, cplx s);

}  // namespace fdikit
