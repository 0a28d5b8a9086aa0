#pragma once

#include "analysis.hpp"

namespace fdikit {

struct SynthesisReport {
  MatrixXd hdesign;        // design matrix of the (first) combination step
  MatrixXd hdesign2;       // second design matrix (approximate syntheses)
  std::vector<int> degs;   // basis degrees (left Kronecker indices)
  std::vector<int> degs2;  // degrees of the noise-annihilating basis
  BoolMatrix s;            // structure matrix of H * Gf_bar
  BoolMatrix s2;           // structure matrix of the second reduced system
  double gap = std::numeric_limits<double>::infinity();
  double tcond = 1.0;
  cplx freq{};             // admissibility frequency
  uint64_t seed = 0;
};

// Residual generator pair: implementation form q (inputs [y; u], groups
// "outputs"/"controls") and internal form r (inputs faults/noise/aux); both
// share their state matrices.
struct FdiFilter {
  LtiModel q;
  LtiModel r;
  SynthesisReport info;
};

struct SynOpts {
  double tol = 0.0;
  double fdtol = 1e-4;
  double fdgaintol = 1e-2;
  std::optional<int> rdim;
  FreqSet freqs;  // strong detectability grid (FDFreq)
  std::optional<double> smarg;
  std::optional<double> sdeg;
  std::vector<cplx> poles;
  bool minimal = true;
  bool observer_basis = false;  // nullspace=false: use [I, -Gu] when md = 0
  std::optional<MatrixXd> hdesign;
  double tcond = 1e4;
  uint64_t seed = 0;
};

// Exact fault detection problem (Procedure EFD).
FdiFilter efdsyn(const LtiModel& sysf, const SynOpts& opts = {});

struct EfdiOpts : SynOpts {
  BoolMatrix sfdi;                  // one specification per row
  std::vector<int> fdselect;        // indices of filters to design (default all)
  std::vector<MatrixXd> hdesign_bank;  // per-row design matrices (optional)
};

// Bank of exact FDI filters, one per SFDI row (Procedure EFDI).
std::vector<FdiFilter> efdisyn(const LtiModel& sysf, const EfdiOpts& opts);

struct AfdOpts : SynOpts {
  double gamma = 1.0;
  bool exact = false;
  std::optional<MatrixXd> hdesign2;
  int nonstd = 1;
  std::optional<cplx> freq;
};

// Approximate fault detection problem (Procedure AFD).
FdiFilter afdsyn(const LtiModel& sysf, const AfdOpts& opts = {});

struct AfdiOpts : AfdOpts {
  BoolMatrix sfdi;
  std::vector<int> fdselect;
};

// Bank of approximate FDI filters with per-row gaps (Procedure AFDI).
std::vector<FdiFilter> afdisyn(const LtiModel& sysf, const AfdiOpts& opts);

enum class MNormalize { gain, dcgain, infnorm };

struct EmmOpts {
  double tol = 0.0;
  std::optional<double> smarg;
  std::optional<double> sdeg;
  std::vector<cplx> poles;
  MNormalize normalize = MNormalize::gain;
  std::optional<MatrixXd> hdesign;
  std::optional<cplx> freq;
  uint64_t seed = 0;
};

struct EmmResult {
  FdiFilter filter;
  LtiModel m;  // diagonal stable invertible updating factor
};

// Exact model matching with an invertible reduced fault channel
// (Procedure EMMS): R_f = M * M_rf exactly.
EmmResult emmsyn(const LtiModel& sysf, const LtiModel& sysr,
                 const EmmOpts& opts = {});

// Resolved stabilization options (sdeg default -0.05 / 0.95).
StabilizeOpts stabilize_options(const SynOpts& o, const LtiModel& sys);

// Standard filter group bookkeeping: inputs "outputs"/"controls", output
// group "residuals".
void set_filter_groups(LtiModel& q, int p_meas, int mu);

// Joint [Q | R] splitting helper shared with the model-detection module:
// builds the internal form channels of `q_filter` acting on sysf and returns
// (q, r) on a shared minimal realization, stabilized per opts when needed.
std::pair<LtiModel, LtiModel> attach_internal_form(
    const LtiModel& q_filter, const LtiModel& sysf, const StabilizeOpts& st,
    const std::vector<std::string>& channel_groups);

}  // namespace fdikit
