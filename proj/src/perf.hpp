#pragma once

#include "analysis.hpp"

namespace fdikit {

struct FsCondResult {
  std::vector<double> fscond;  // beta/gamma per member (single entry scalar)
  std::vector<double> beta;
  std::vector<double> gamma;
};

// Fault sensitivity condition J1 of an internal form or a filter bank;
// empty bank members give NaN.  With a structure matrix the fault set is
// masked per row.
FsCondResult fdifscond(const std::vector<LtiModel>& r, const FreqSet& freqs,
                       const BoolMatrix& s = BoolMatrix());
FsCondResult fdifscond(const LtiModel& r, const FreqSet& freqs = {},
                       const BoolMatrix& s = BoolMatrix());

struct GapResult {
  std::vector<double> gap;
  std::vector<double> beta;
  std::vector<double> gamma;
};

// Fault-to-noise gap J2 (four call shapes: bank/single x with/without S).
GapResult fdif2ngap(const std::vector<LtiModel>& r, const FreqSet& freqs,
                    const BoolMatrix& s = BoolMatrix());
GapResult fdif2ngap(const LtiModel& r, const FreqSet& freqs = {},
                    const BoolMatrix& s = BoolMatrix());

enum class MmNorm { inf, two };

// Model-matching performance J3: ||R - SYSR|| over the shared channel
// groups, or ||Rw|| when sysr is absent, or the S-masked variant.
double fdimmperf(const LtiModel& r, const LtiModel* sysr = nullptr,
                 MmNorm norm = MmNorm::inf,
                 const BoolMatrix& s = BoolMatrix());
std::vector<double> fdimmperf(const std::vector<LtiModel>& r,
                              const std::vector<LtiModel>* sysr = nullptr,
                              MmNorm norm = MmNorm::inf,
                              const BoolMatrix& s = BoolMatrix());

}  // namespace fdikit
