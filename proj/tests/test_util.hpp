#pragma once

#include <initializer_list>
#include <vector>

#include "model.hpp"

namespace fdikit::testutil {

// SISO transfer function from numerator/denominator coefficients in
// descending powers (den leading coefficient must be nonzero, deg num <=
// deg den).  Realized in controllable canonical form.
inline LtiModel siso(std::vector<double> num, std::vector<double> den,
                     double ts = 0.0) {
  while (den.size() > 1 && den.front() == 0.0) den.erase(den.begin());
  const int n = static_cast<int>(den.size()) - 1;
  if (static_cast<int>(num.size()) > n + 1)
    fail_arg("siso: improper transfer function");
  std::vector<double> nm(n + 1, 0.0);
  std::copy(num.rbegin(), num.rend(), nm.rbegin());
  double a0 = den[0];
  for (auto& x : den) x /= a0;
  for (auto& x : nm) x /= a0;

  LtiModel m;
  m.ts = ts;
  m.a = MatrixXd::Zero(n, n);
  m.b = MatrixXd::Zero(n, 1);
  m.c = MatrixXd::Zero(1, n);
  m.d = MatrixXd::Zero(1, 1);
  if (n == 0) {
    m.d(0, 0) = nm[0];
    return m;
  }
  for (int i = 0; i < n; ++i) m.a(0, i) = -den[i + 1];
  for (int i = 1; i < n; ++i) m.a(i, i - 1) = 1.0;
  m.b(0, 0) = 1.0;
  double d0 = nm[0];
  for (int i = 0; i < n; ++i) m.c(0, i) = nm[i + 1] - d0 * den[i + 1];
  m.d(0, 0) = d0;
  return m;
}

// Horizontal/vertical concatenation of blocks of models.
inline LtiModel hcat(const std::vector<LtiModel>& blocks) {
  LtiModel out = blocks.front();
  for (size_t i = 1; i < blocks.size(); ++i)
    out = compose(ComposeKind::augment_columns, out, blocks[i]);
  return out;
}

inline LtiModel vcat(const std::vector<LtiModel>& blocks) {
  LtiModel out = blocks.front();
  for (size_t i = 1; i < blocks.size(); ++i)
    out = compose(ComposeKind::stack_rows, out, blocks[i]);
  return out;
}

inline std::vector<cplx> probe_complex(const LtiModel& m, int npts) {
  std::vector<cplx> pts;
  double w = 0.013;
  for (int i = 0; i < npts; ++i) {
    if (m.discrete())
      pts.push_back(std::exp(cplx(0.0, 0.05 + 3.0 * i / double(npts))) * 0.93);
    else
      pts.push_back(cplx(0.21 + 0.07 * i, w));
    w *= 1.7;
  }
  return pts;
}

// k copies of the output equations sharing one state block (sensor
// redundancy style).
inline LtiModel replicate_outputs(const LtiModel& m, int k) {
  LtiModel out = m;
  out.c = MatrixXd(m.outputs() * k, m.order());
  out.d = MatrixXd(m.outputs() * k, m.inputs());
  for (int i = 0; i < k; ++i) {
    if (m.order() > 0) out.c.middleRows(i * m.outputs(), m.outputs()) = m.c;
    out.d.middleRows(i * m.outputs(), m.outputs()) = m.d;
  }
  return out;
}

inline double response_gap(const LtiModel& g1, const LtiModel& g2,
                           int npts = 20) {
  double worst = 0.0;
  for (cplx s : probe_complex(g1, npts)) {
    MatrixXcd h1 = response_at(g1, s);
    MatrixXcd h2 = response_at(g2, s);
    worst = std::max(worst, (h1 - h2).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace fdikit::testutil
