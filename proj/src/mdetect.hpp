#pragma once

#include "synth.hpp"

namespace fdikit {

enum class MdDistance { nugap, hinf, h2 };

struct MdDistOpts {
  std::vector<int> mdselect;  // rows to evaluate (default all)
  double tol = 0.0;
  MdDistance distance = MdDistance::nugap;
  FreqSet freqs;              // pointwise evaluation grid (MDFreq)
  double offset = boundary_offset;
  bool cdinp = false;         // include the disturbance channels
  int mdindex = 3;
};

struct MdDistResult {
  MatrixXd dist;
  MatrixXd fpeak;
  Eigen::MatrixXi perm;      // ascending ordering per row
  std::vector<double> reldist;
};

// Pairwise distances between the component models of a multimodel.
MdDistResult mddist(const MultiModel& mm, const MdDistOpts& opts = {});

struct MdDist2cResult {
  std::vector<double> dist;
  std::vector<double> fpeak;
  int mind = 0;  // index of the nearest component model
};

// Distances of the component models to a current model.
MdDist2cResult mddist2c(const MultiModel& mm, const LtiModel& sys,
                        const MdDistOpts& opts = {});

// nu-gap distance between two transfer matrices (winding-number condition
// included); exposed for testing and reuse.
double nugap(const LtiModel& g1, const LtiModel& g2,
             double offset = boundary_offset);

struct MdSynOpts {
  std::optional<int> rdim;     // per-filter residual counts (scalar)
  FreqSet freqs;               // MDFreq
  bool emdtest = false;        // use [Ru Rd] for detectability tests
  std::optional<double> smarg;
  std::optional<double> sdeg;
  std::vector<cplx> poles;
  bool minimal = true;
  bool nullspace_minimal = true;
  std::vector<int> mdselect;
  std::vector<MatrixXd> hdesign;  // per-filter design matrices (or single)
  bool normalize = false;
  double mdtol = 1e-4;
  double mdgaintol = 1e-2;
  double tcond = 1e4;
  uint64_t seed = 0;
  int nonstd = 1;  // amdsyn: only the direct inversion is supported
};

struct MdBank {
  std::vector<LtiModel> q;                 // N filters (empty when deselected)
  std::vector<std::vector<LtiModel>> r;    // N x N internal forms
  MatrixXd mdperf;                         // -1 rows for deselected filters
  std::vector<double> mdgap;               // amdsyn only
  std::vector<MatrixXd> hdesign;
  std::vector<std::vector<int>> degs;
};

// Exact model detection filter bank (Procedure EMD).
MdBank emdsyn(const MultiModel& mm, const MdSynOpts& opts = {});

// Approximate model detection filter bank with noise gaps (Procedure AMD).
MdBank amdsyn(const MultiModel& mm, const MdSynOpts& opts = {});

struct MdPerfOpts {
  std::vector<int> mdselect;
  FreqSet freqs;
  bool cdinp = false;
  int mdindex = 3;
};

struct MdPerfResult {
  MatrixXd gains;
  MatrixXd fpeak;
  Eigen::MatrixXi perm;
  std::vector<double> relgain;
};

// Distance mapping performance of an internal-form grid.
MdPerfResult mdperf(const std::vector<std::vector<LtiModel>>& rbank,
                    const MdPerfOpts& opts = {});

struct MdMatchResult {
  std::vector<double> gains;
  std::vector<double> fpeak;
  int mind = 0;
};

// Distance matching performance of a filter bank against a current model.
MdMatchResult mdmatch(const std::vector<LtiModel>& qbank, const LtiModel& sys,
                      const MdPerfOpts& opts = {});

struct MdGapResult {
  std::vector<double> gap;
  std::vector<double> beta;
  std::vector<double> gamma;
};

// Noise gaps of an internal-form grid.
MdGapResult mdgap(const std::vector<std::vector<LtiModel>>& rbank,
                  const MdPerfOpts& opts = {});

}  // namespace fdikit
