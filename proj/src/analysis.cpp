#include "analysis.hpp"

#include <algorithm>
#include <set>

namespace fdikit {

BoolMatrix StructMatrix::all() const {
  if (pages.empty()) return BoolMatrix();
  BoolMatrix out = pages[0];
  for (size_t k = 1; k < pages.size(); ++k)
    out = out.array() && pages[k].array();
  return out;
}

namespace {

std::vector<int> fault_columns(const LtiModel& r) {
  if (r.has_group("faults")) return r.group("faults");
  std::vector<int> all(r.inputs());
  for (int j = 0; j < r.inputs(); ++j) all[j] = j;
  return all;
}

// Absence of a zero of the (minimal) system at the complex point, decided by
// a rank test on the system matrix.
bool no_zero_at(const LtiModel& elem, cplx lambda, double fdtol) {
  LtiModel m = minimal_realization(elem);
  const int n = m.order();
  MatrixXcd s(n + m.outputs(), n + m.inputs());
  s.topLeftCorner(n, n) = m.a.cast<cplx>() -
                          lambda * MatrixXcd::Identity(n, n);
  s.topRightCorner(n, m.inputs()) = m.b.cast<cplx>();
  s.bottomLeftCorner(m.outputs(), n) = m.c.cast<cplx>();
  s.bottomRightCorner(m.outputs(), m.inputs()) = m.d.cast<cplx>();
  double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  int rk = la::rank_svd(s, fdtol * scale);
  return rk == n + std::min(m.outputs(), m.inputs());
}

}  // namespace

StructMatrix fditspec(const LtiModel& r, const TspecOpts& opts) {
  auto fidx = fault_columns(r);
  const int mf = static_cast<int>(fidx.size());
  const int q = r.outputs();
  StructMatrix out;
  auto pts = opts.freqs.points(r.ts);

  if (opts.freqs.empty()) {
    BoolMatrix page(opts.block ? 1 : q, mf);
    for (int j = 0; j < mf; ++j) {
      LtiModel col = select_columns(r, {fidx[j]});
      if (opts.block) {
        page(0, j) = column_nonzero_weak(col, opts.fdtol);
      } else {
        for (int i = 0; i < q; ++i)
          page(i, j) = column_nonzero_weak(select_rows(col, {i}), opts.fdtol);
      }
    }
    out.pages.push_back(page);
    return out;
  }

  for (cplx lambda : pts) {
    BoolMatrix page(opts.block ? 1 : q, mf);
    for (int j = 0; j < mf; ++j) {
      LtiModel col = select_columns(r, {fidx[j]});
      if (opts.block) {
        page(0, j) = no_zero_at(col, lambda, opts.fdtol);
      } else {
        for (int i = 0; i < q; ++i)
          page(i, j) = no_zero_at(select_rows(col, {i}), lambda, opts.fdtol);
      }
    }
    out.pages.push_back(page);
  }
  return out;
}

StructMatrix fditspec(const std::vector<LtiModel>& bank,
                      const TspecOpts& opts) {
  if (bank.empty()) fail_arg("fditspec: empty filter bank");
  int mf = -1;
  for (const auto& m : bank)
    if (m.inputs() > 0 || m.outputs() > 0) {
      mf = static_cast<int>(fault_columns(m).size());
      break;
    }
  if (mf < 0) fail_arg("fditspec: all bank members empty");
  size_t npages = opts.freqs.empty() ? 1 : opts.freqs.omegas.size();
  StructMatrix out;
  for (size_t k = 0; k < npages; ++k)
    out.pages.push_back(BoolMatrix::Constant(bank.size(), mf, false));
  TspecOpts blk = opts;
  blk.block = true;
  for (size_t i = 0; i < bank.size(); ++i) {
    if (bank[i].outputs() == 0) continue;  // empty member -> all false
    StructMatrix rowi = fditspec(bank[i], blk);
    for (size_t k = 0; k < npages; ++k) out.pages[k].row(i) = rowi.pages[k].row(0);
  }
  return out;
}

SspecResult fdisspec(const LtiModel& r, const SspecOpts& opts) {
  auto fidx = fault_columns(r);
  const int mf = static_cast<int>(fidx.size());
  const int q = r.outputs();
  FreqSet freqs = opts.freqs.empty() ? FreqSet{{0.0}} : opts.freqs;
  LtiModel rf = minimal_realization(select_columns(r, fidx));
  GainResult g = gain_at(rf, freqs);

  SspecResult out;
  const int rows = opts.block ? 1 : q;
  out.gains = MatrixXd::Zero(rows, mf);
  for (size_t k = 0; k < g.responses.size(); ++k) {
    BoolMatrix page(rows, mf);
    for (int j = 0; j < mf; ++j) {
      if (opts.block) {
        double gn = g.responses[k].col(j).norm();
        page(0, j) = gn >= opts.gaintol;
        out.gains(0, j) = k == 0 ? gn : std::min(out.gains(0, j), gn);
      } else {
        for (int i = 0; i < q; ++i) {
          double gn = std::abs(g.responses[k](i, j));
          page(i, j) = gn >= opts.gaintol;
          out.gains(i, j) = k == 0 ? gn : std::min(out.gains(i, j), gn);
        }
      }
    }
    out.s.pages.push_back(page);
  }
  return out;
}

SspecResult fdisspec(const std::vector<LtiModel>& bank,
                     const SspecOpts& opts) {
  if (bank.empty()) fail_arg("fdisspec: empty filter bank");
  int mf = -1;
  for (const auto& m : bank)
    if (m.outputs() > 0) {
      mf = static_cast<int>(fault_columns(m).size());
      break;
    }
  if (mf < 0) fail_arg("fdisspec: all bank members empty");
  FreqSet freqs = opts.freqs.empty() ? FreqSet{{0.0}} : opts.freqs;
  size_t npages = freqs.omegas.size();
  SspecResult out;
  for (size_t k = 0; k < npages; ++k)
    out.s.pages.push_back(BoolMatrix::Constant(bank.size(), mf, false));
  out.gains = MatrixXd::Zero(bank.size(), mf);
  SspecOpts blk = opts;
  blk.block = true;
  blk.freqs = freqs;
  for (size_t i = 0; i < bank.size(); ++i) {
    if (bank[i].outputs() == 0) continue;
    SspecResult ri = fdisspec(bank[i], blk);
    for (size_t k = 0; k < npages; ++k) out.s.pages[k].row(i) = ri.s.pages[k].row(0);
    out.gains.row(i) = ri.gains.row(0);
  }
  return out;
}

namespace {

// Weak block-structure row of a faults-only reduced system.
std::vector<bool> weak_row(const LtiModel& rf, const GenspecOpts& opts) {
  std::vector<bool> row(rf.inputs(), false);
  if (rf.outputs() == 0) return row;
  for (int j = 0; j < rf.inputs(); ++j)
    row[j] = column_nonzero_weak(select_columns(rf, {j}), opts.fdtol);
  return row;
}

// Strong row over the frequency grid (filters stabilized before the gain
// tests).
std::vector<bool> strong_row(const LtiModel& rf, const GenspecOpts& opts) {
  std::vector<bool> row(rf.inputs(), false);
  if (rf.outputs() == 0) return row;
  LtiModel test = rf;
  StabilizeOpts st;
  st.sdeg = opts.sdeg ? *opts.sdeg : (rf.discrete() ? 0.9 : -0.05);
  if (!is_stable(test, boundary_offset)) test = stabilized(test, st);
  GainResult g = gain_at(minimal_realization(test), opts.freqs);
  for (int j = 0; j < rf.inputs(); ++j)
    row[j] = g.column_gains.col(j).minCoeff() >= opts.fdgaintol;
  return row;
}

void genspec_recurse(const LtiModel& rf, std::vector<int> annihilated,
                     const GenspecOpts& opts,
                     std::set<std::vector<int>>& visited,
                     std::set<std::vector<bool>>& found) {
  std::vector<bool> row = weak_row(rf, opts);
  bool any = false;
  for (bool b : row) any = any || b;
  if (any) {
    if (opts.freqs.empty()) {
      found.insert(row);
    } else {
      // A strong specification is recorded only when the gain tests confirm
      // every weakly coupled fault; the zero entries are exactly decoupled
      // by construction.
      if (strong_row(rf, opts) == row) found.insert(row);
    }
  }
  for (int j = 0; j < rf.inputs(); ++j) {
    if (!row[j]) continue;
    std::vector<int> next = annihilated;
    next.push_back(j);
    std::sort(next.begin(), next.end());
    if (!visited.insert(next).second) continue;
    // Annihilate column j of the reduced fault system.
    LtiModel colj = select_columns(rf, {j});
    auto rows = tfm_nullspace_rows(colj, opts.tol);
    if (rows.empty()) continue;
    StabilizeOpts st;
    st.sdeg = opts.sdeg ? *opts.sdeg : (rf.discrete() ? 0.9 : -0.05);
    auto place = st.placement(rf.ts);
    LtiModel nl;
    bool first = true;
    for (const auto& prow : rows) {
      int deg = std::max(0, prow.degree());
      LtiModel r =
          poly::realize_row_over_den(prow, poly::stable_denominator(deg, place),
                                     rf.ts);
      nl = first ? r : compose(ComposeKind::stack_rows, nl, r);
      first = false;
    }
    LtiModel next_rf = minimal_realization(compose(ComposeKind::series, nl, rf));
    genspec_recurse(next_rf, next, opts, visited, found);
  }
}

}  // namespace

StructMatrix fdigenspec(const LtiModel& sysf, const GenspecOpts& opts) {
  validate(sysf);
  auto fidx = sysf.group("faults");
  const int mf = static_cast<int>(fidx.size());
  StructMatrix out;
  if (mf == 0) {
    out.pages.push_back(BoolMatrix(0, 0));
    return out;
  }

  std::set<std::vector<bool>> found;
  std::set<std::vector<int>> visited;
  try {
    StabilizeOpts st;
    st.sdeg = opts.sdeg ? *opts.sdeg : (sysf.discrete() ? 0.9 : -0.05);
    NullBasis nb = left_nullspace(sysf, false, st, opts.tol);
    LtiModel gf = select_columns(sysf, fidx);
    LtiModel targets = compose(
        ComposeKind::stack_rows, gf,
        zero_model(sysf.group_size("controls"), mf, sysf.ts));
    LtiModel rf0 = minimal_realization(
        compose(ComposeKind::series, nb.basis, targets), opts.tol);
    genspec_recurse(rf0, {}, opts, visited, found);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::unsolvable) throw;
    // empty initial nullspace: no achievable specifications
  }

  std::vector<std::vector<bool>> rows(found.begin(), found.end());
  std::sort(rows.begin(), rows.end());
  BoolMatrix page(rows.size(), mf);
  for (size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < mf; ++j) page(i, j) = rows[i][j];
  out.pages.push_back(page);
  return out;
}

ChkspecResult fdichkspec(const LtiModel& sysf, const BoolMatrix& sfdi,
                         const ChkspecOpts& opts) {
  validate(sysf);
  auto fidx = sysf.group("faults");
  if (sfdi.size() != 0 && sfdi.cols() != static_cast<int>(fidx.size()))
    fail_arg("fdichkspec: SFDI column count must match the fault count");
  const int nrows = static_cast<int>(sfdi.rows());
  ChkspecResult out;
  out.rdims.assign(nrows, 0);
  out.orders.assign(nrows, -1);
  out.leastorders.assign(nrows, -1);

  StabilizeOpts st;
  st.sdeg = opts.freqs.empty() ? std::optional<double>{}
                               : std::optional<double>(sysf.discrete() ? 0.9
                                                                        : -0.05);

  for (int i = 0; i < nrows; ++i) {
    // Zero-entry faults become disturbances for this row.
    LtiModel sysi = sysf;
    std::vector<int> dext = sysf.group("disturbances");
    std::vector<int> ftar;
    for (int j = 0; j < sfdi.cols(); ++j)
      (sfdi(i, j) ? ftar : dext).push_back(fidx[j]);
    sysi.input_groups["disturbances"] = dext;
    sysi.input_groups["faults"] = ftar;
    if (ftar.empty()) continue;

    NullBasis nb;
    try {
      nb = left_nullspace(sysi, false, st, opts.tol);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::unsolvable) continue;  // infeasible row
      throw;
    }

    // Feasibility: every targeted column nonzero (strong at the grid).
    LtiModel gf = select_columns(sysf, ftar);
    LtiModel targets = compose(
        ComposeKind::stack_rows, gf,
        zero_model(sysf.group_size("controls"), gf.inputs(), sysf.ts));
    LtiModel rbar = minimal_realization(
        compose(ComposeKind::series, nb.basis, targets), opts.tol);
    if (!is_stable(rbar, boundary_offset)) rbar = stabilized(rbar, st);
    bool feasible = true;
    if (opts.freqs.empty()) {
      for (int j = 0; j < rbar.inputs() && feasible; ++j)
        feasible = column_nonzero_weak(select_columns(rbar, {j}), opts.fdtol);
    } else {
      GainResult g = gain_at(rbar, opts.freqs);
      for (int j = 0; j < rbar.inputs() && feasible; ++j)
        feasible = g.column_gains.col(j).minCoeff() >= opts.fdgaintol;
    }
    if (!feasible) continue;

    out.rdims[i] = nb.count();
    int total = 0;
    for (int d : nb.degs) total += d;
    out.orders[i] = total;

    auto pick = select_admissible_subsets(nb, targets, opts.freqs, opts.seed,
                                          st, opts.fdtol, opts.fdgaintol);
    if (pick) out.leastorders[i] = pick->order;
  }
  return out;
}

}  // namespace fdikit
