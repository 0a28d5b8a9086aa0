#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "la.hpp"

namespace fdikit {

using la::cplx;
using la::MatrixXcd;
using la::MatrixXd;
using la::VectorXd;

// Channel-group names used throughout: inputs "controls", "disturbances",
// "faults", "noise", "aux"; outputs "residuals", "outputs".
using GroupMap = std::map<std::string, std::vector<int>>;

// Descriptor state-space model E*lambda(x) = A x + B u, y = C x + D u with
// named input/output channel groups.  An empty `e` stands for the identity.
// Models are immutable values; every operation returns a new model.
struct LtiModel {
  MatrixXd a;
  MatrixXd e;  // empty => identity
  MatrixXd b;
  MatrixXd c;
  MatrixXd d;
  double ts = 0.0;  // 0 = continuous, >0 = discrete sample time
  GroupMap input_groups;
  GroupMap output_groups;

  int order() const { return static_cast<int>(a.rows()); }
  int inputs() const { return static_cast<int>(d.cols()); }
  int outputs() const { return static_cast<int>(d.rows()); }
  bool identity_e() const { return e.size() == 0; }
  bool discrete() const { return ts > 0.0; }

  bool has_group(const std::string& name) const {
    return input_groups.count(name) > 0;
  }
  // Indices of a named input group; empty list when the group is absent.
  std::vector<int> group(const std::string& name) const;
  int group_size(const std::string& name) const {
    return static_cast<int>(group(name).size());
  }
};

struct MultiModel {
  std::vector<LtiModel> components;

  int size() const { return static_cast<int>(components.size()); }
};

struct Signal {
  VectorXd t;   // strictly increasing time grid
  MatrixXd u;  // rows = samples, cols = channels
};

// Validates dimensions, group consistency, ts >= 0 and invertibility of E.
void validate(const LtiModel& m);
void validate(const MultiModel& m);

// Selections for fdimodset: indices into the columns of the source model's
// B/D (c, d, f, n, aux) and into its output rows (fs, sensor faults).
struct FdiSelections {
  std::vector<int> controls, disturbances, faults, faults_sen, noise, aux;
};

LtiModel fdimodset(const LtiModel& sys, const FdiSelections& sel);

struct MdSelections {
  std::vector<int> controls;
  std::vector<std::vector<int>> disturbances;  // per component; may be empty
  std::vector<std::vector<int>> noise;         // per component; may be empty
};

MultiModel mdmodset(const std::vector<LtiModel>& models,
                    const MdSelections& sel);

// Row/column subsystem selection.  Column groups referenced by name are
// preserved (renumbered) in the result.
LtiModel select_rows(const LtiModel& m, const std::vector<int>& rows);
LtiModel select_columns(const LtiModel& m, const std::vector<int>& cols);
LtiModel select_groups(const LtiModel& m,
                       const std::vector<std::string>& names);

enum class ComposeKind { series, stack_rows, augment_columns };

// series(f, g) realizes f*g; stack_rows realizes [f; g] on shared inputs;
// augment_columns realizes [f g] on shared outputs.
LtiModel compose(ComposeKind kind, const LtiModel& g1, const LtiModel& g2);

// f - g on shared inputs and outputs.
LtiModel subtract(const LtiModel& g1, const LtiModel& g2);
LtiModel scale(const LtiModel& g, double factor);

// Orthogonal staircase reduction to a controllable and observable
// realization; tol <= 0 picks the default policy.  E is folded to identity.
LtiModel minimal_realization(const LtiModel& m, double tol = 0.0);

// Standard form with E = I (no-op when e is already empty).
LtiModel to_standard_form(const LtiModel& m);

// Conjugate system G~(lambda); continuous time only.
LtiModel conjugate(const LtiModel& m);

// Frequency response C (lambda E - A)^{-1} B + D.
MatrixXcd response_at(const LtiModel& m, cplx lambda);

// Complex evaluation point for a real frequency.
cplx freq_point(double omega, double ts);

// Zero-order-hold simulation on a uniform grid (exact discretization via the
// augmented matrix exponential); x0 empty means zero initial state.
Signal time_response(const LtiModel& m, const Signal& input,
                     const VectorXd& x0 = VectorXd());

// Unit step responses on [0, t_final] with `samples` points, one run per
// input, stacked column-wise: column k*m+j is output k's response to step j.
Signal step_response(const LtiModel& m, double t_final, int samples);

LtiModel identity_model(int n, double ts);
LtiModel zero_model(int p, int m, double ts);

// [G; I_mu 0 ...] style stacking used by filters: returns [sys; selector]
// where selector has one row per chosen input picking it with unit gain.
LtiModel stack_with_input_identity(const LtiModel& sys,
                                   const std::vector<int>& unit_inputs);

}  // namespace fdikit
