#pragma once

#include "facts.hpp"

namespace fdikit {

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Boolean structure matrix, one page per test frequency (a single page for
// weak tests).
struct StructMatrix {
  std::vector<BoolMatrix> pages;

  int rows() const { return pages.empty() ? 0 : static_cast<int>(pages[0].rows()); }
  int cols() const { return pages.empty() ? 0 : static_cast<int>(pages[0].cols()); }
  // Conjunction over pages (a strong entry holds at every frequency).
  BoolMatrix all() const;
};

struct TspecOpts {
  double tol = 0.0;
  double fdtol = 1e-4;
  FreqSet freqs;       // empty => weak test
  bool block = false;  // column-wise instead of element-wise
};

// Weak or strong structure matrix of the fault channels of an internal form.
// Inputs without a "faults" group treat every input as a fault.
StructMatrix fditspec(const LtiModel& r, const TspecOpts& opts = {});
StructMatrix fditspec(const std::vector<LtiModel>& bank,
                      const TspecOpts& opts = {});

struct SspecResult {
  StructMatrix s;
  MatrixXd gains;  // minimum gains over the grid
};

struct SspecOpts {
  double gaintol = 1e-2;
  FreqSet freqs{{0.0}};
  bool block = false;
};

SspecResult fdisspec(const LtiModel& r, const SspecOpts& opts = {});
SspecResult fdisspec(const std::vector<LtiModel>& bank,
                     const SspecOpts& opts = {});

struct GenspecOpts {
  double tol = 0.0;
  double fdtol = 1e-4;
  double fdgaintol = 1e-2;
  FreqSet freqs;                 // nonempty => strong specifications
  std::optional<double> sdeg;    // stabilization degree for strong tests
};

// All achievable fault detection specifications (rows, lexicographically
// sorted, duplicates removed).
StructMatrix fdigenspec(const LtiModel& sysf, const GenspecOpts& opts = {});

struct ChkspecOpts {
  double tol = 0.0;
  double fdtol = 1e-4;
  double fdgaintol = 1e-2;
  FreqSet freqs;
  uint64_t seed = 0;
};

struct ChkspecResult {
  std::vector<int> rdims;        // 0 marks an infeasible specification
  std::vector<int> orders;       // -1 when infeasible
  std::vector<int> leastorders;  // -1 when infeasible
};

ChkspecResult fdichkspec(const LtiModel& sysf, const BoolMatrix& sfdi,
                         const ChkspecOpts& opts = {});

}  // namespace fdikit
