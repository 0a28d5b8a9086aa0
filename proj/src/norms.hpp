#pragma once

#include "model.hpp"
#include "numkern.hpp"

namespace fdikit {

struct FreqSet {
  std::vector<double> omegas;

  bool empty() const { return omegas.empty(); }
  std::vector<cplx> points(double ts) const {
    std::vector<cplx> out;
    out.reserve(omegas.size());
    for (double w : omegas) out.push_back(freq_point(w, ts));
    return out;
  }
};

numkern::TimeKind time_kind(const LtiModel& m);

// Default stability-boundary offset (paper's `offset` option).
inline constexpr double boundary_offset = 1.4901e-8;

std::vector<cplx> poles(const LtiModel& m);

// Finite transmission zeros; tol <= 0 picks the default rank tolerance.
std::vector<cplx> zeros(const LtiModel& m, double tol = 0.0);

bool is_stable(const LtiModel& m, double margin = 0.0);

// Distance from the stability boundary: Re(ev) in continuous time,
// |ev| - 1 in discrete time (negative = stable side).
double boundary_coordinate(cplx ev, numkern::TimeKind kind);

struct GainResult {
  std::vector<MatrixXcd> responses;  // one per frequency
  MatrixXd column_gains;             // rows = frequencies, cols = inputs
};

// Frequency responses and per-column 2-norm gains; errors when a grid point
// hits a pole.
GainResult gain_at(const LtiModel& m, const FreqSet& freqs);

struct NormResult {
  double value = 0.0;
  double peak_frequency = 0.0;
};

// L-infinity norm by Hamiltonian bisection, relative accuracy 1e-6; errors
// when poles lie within `offset` of the stability boundary.
NormResult norm_hinf(const LtiModel& m, double offset = boundary_offset);

// Gramian-based H2 norm; continuous systems must be strictly proper.
double norm_h2(const LtiModel& m);

// H-infinity-minus index: min over columns of the column H-infinity norm, or
// its finite-frequency variant when freqs is nonempty.
double hinf_minus_index(const LtiModel& m, const FreqSet& freqs = {});

// Boundary-preserving bilinear pullback of a discrete system to continuous
// time (z = (1+s)/(1-s)); sup norms over the stability boundary and the
// nu-gap are invariant under the map.
LtiModel bilinear_to_continuous(const LtiModel& md);

// Normal rank of the transfer matrix, evaluated at deterministic probe
// frequencies away from poles.
int normal_rank(const LtiModel& m, double tol = 0.0);

// Deterministic probe frequencies (complex, off the real axis) used for
// normal-rank and annihilation checks.
std::vector<cplx> probe_points(const LtiModel& m, int count);

}  // namespace fdikit
