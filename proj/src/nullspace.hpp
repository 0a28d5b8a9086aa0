#pragma once

#include <functional>
#include <optional>

#include "norms.hpp"
#include "poly.hpp"

namespace fdikit {

// Deterministic design-vector stream: the first candidate is the all-ones
// combination, followed by splitmix-seeded uniforms in [-1, 1].
struct DesignStream {
  uint64_t state;
  int emitted = 0;
  explicit DesignStream(uint64_t seed) : state(seed ^ 0x9e3779b97f4a7c15ull) {}
  MatrixXd next(int rows, int cols);
};

// Pole placement supply for stabilization/properization steps.
struct StabilizeOpts {
  std::optional<double> sdeg;   // stability degree bound / default target
  std::vector<cplx> poles;      // explicit placement list (cycled)
  std::optional<double> smarg;  // margin deciding which poles must move

  // Placement points used when new poles are created.
  std::vector<cplx> placement(double ts) const;
  // Threshold on the boundary coordinate above which a pole must move.
  double move_threshold(double ts) const;
};

// Proper rational left nullspace basis of [Gu Gd; I 0] with the underlying
// minimal polynomial basis kept for least-order combinations.
struct NullBasis {
  std::vector<poly::PolyRow> rows;  // polynomial rows over [y; u]
  std::vector<int> degs;            // left Kronecker indices, ascending
  LtiModel basis;                   // proper stacked realization
  double ts = 0.0;
  int ny = 0;  // measured outputs in the [y; u] coordinate split
  int nu = 0;  // control inputs

  int count() const { return static_cast<int>(rows.size()); }
};

// Minimal polynomial left nullspace basis of the rational matrix given by a
// state-space realization, through the block-Toeplitz expansion of its
// system pencil.  The returned rows live in the pencil coordinates
// [state | output]; see tfm_nullspace_rows for the output-space restriction.
std::vector<poly::PolyRow> polynomial_left_nullspace(const LtiModel& g,
                                                     double tol = 0.0);

// Output-coordinate restriction of the pencil nullspace rows: polynomial
// rows w(lambda) with w * G = 0, row degrees equal to the Kronecker indices.
std::vector<poly::PolyRow> tfm_nullspace_rows(const LtiModel& g,
                                              double tol = 0.0);

// Left nullspace basis of [Gu Gd; I_mu 0] built from the "controls" and
// "disturbances" groups of sysf.  With use_observer (requires m_d = 0) the
// full-order observer basis [I, -Gu] is returned and degs is empty.
NullBasis left_nullspace(const LtiModel& sysf, bool use_observer,
                         const StabilizeOpts& stabilize, double tol = 0.0);

// Proper realization of h * rows(lambda) with a single denominator of degree
// max over the support; order equals the combination degree.
LtiModel realize_combination(const NullBasis& nb, const MatrixXd& h,
                             const StabilizeOpts& stabilize);

struct SubsetCandidate {
  std::vector<int> rows;
  int order = 0;  // max degree over the subset
};

// All nonempty subsets ordered by (order, cardinality, lexicographic).
std::vector<SubsetCandidate> subset_candidates(const std::vector<int>& degs);

struct CombinationPick {
  MatrixXd h;        // q x count, columns outside the subset are zero
  LtiModel filter;   // realized q-row combination
  std::vector<int> subset;
  int order = 0;
};

// First admissible combination over the candidate subsets: admissible(...)
// receives the realized candidate filter and its design matrix.  Up to
// `tries` design matrices are drawn per subset (all-ones first, then the
// seeded stream).
std::optional<CombinationPick> pick_admissible(
    const NullBasis& nb, int q_rows, const StabilizeOpts& stabilize,
    const std::function<bool(const LtiModel&, const MatrixXd&)>& admissible,
    uint64_t seed, int tries = 5);

// Spec-facing wrapper: candidates keeping all columns of `targets`
// ([y;u]-input model, fault columns) nonzero, weakly or at the given
// frequencies.
std::optional<CombinationPick> select_admissible_subsets(
    const NullBasis& nb, const LtiModel& targets, const FreqSet& freqs,
    uint64_t seed, const StabilizeOpts& stabilize, double fdtol = 1e-4,
    double fdgaintol = 1e-2);

// Weak nonzero test of every column of r (threshold on the minimal
// realization), used by admissibility checks and fditspec.
bool column_nonzero_weak(const LtiModel& column, double fdtol);

// Stable factor of the left coprime factorization (defined in facts.cpp);
// declared here so gain-based admissibility tests can stabilize candidates.
LtiModel stabilized(const LtiModel& sys, const StabilizeOpts& opts);

}  // namespace fdikit
