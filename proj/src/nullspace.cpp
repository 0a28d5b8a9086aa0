#include "nullspace.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>

namespace fdikit {

using poly::Poly;
using poly::PolyRow;

MatrixXd DesignStream::next(int rows, int cols) {
  if (emitted++ == 0 && rows == 1) return MatrixXd::Ones(rows, cols);
  MatrixXd h(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      state += 0x9e3779b97f4a7c15ull;
      uint64_t z = state;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
      z = z ^ (z >> 31);
      h(i, j) = 2.0 * (static_cast<double>(z >> 11) / 9007199254740992.0) - 1.0;
    }
  if (emitted == 1) {
    // First multi-row draw: identity-plus-ones pattern, full row rank.
    MatrixXd det = MatrixXd::Zero(rows, cols);
    for (int i = 0; i < rows && i < cols; ++i) det(i, i) = 1.0;
    if (cols > rows) det.col(cols - 1).setOnes();
    return det;
  }
  return h;
}

std::vector<cplx> StabilizeOpts::placement(double ts) const {
  if (!poles.empty()) return poles;
  if (sdeg) return {cplx(*sdeg, 0.0)};
  return ts > 0.0 ? std::vector<cplx>{cplx(0.5, 0.0)}
                  : std::vector<cplx>{cplx(-1.0, 0.0)};
}

double StabilizeOpts::move_threshold(double ts) const {
  if (sdeg) return ts > 0.0 ? *sdeg - 1.0 : *sdeg;
  double margin = smarg ? *smarg : (ts > 0.0 ? 1.0 - std::sqrt(la::eps)
                                             : -std::sqrt(la::eps));
  return ts > 0.0 ? margin - 1.0 : margin;
}

namespace {

// Embeds lambda^shift * row into the coefficient space of degree `deg`
// vectors (deg+1 blocks of width w).
VectorXd embed_shifted(const PolyRow& row, int shift, int deg, int w) {
  VectorXd v = VectorXd::Zero((deg + 1) * w);
  for (int k = 0; k < row.coeff.rows(); ++k) {
    if (k + shift > deg) break;
    v.segment((k + shift) * w, w) = row.coeff.row(k).transpose();
  }
  return v;
}

}  // namespace

std::vector<PolyRow> polynomial_left_nullspace(const LtiModel& g0,
                                               double tol) {
  // The pencil of the realization as given: uncontrollable or unobservable
  // parts deliberately stay in, mirroring the orthogonal-only reductions of
  // the underlying procedures (they show up in the Kronecker indices).
  LtiModel g = to_standard_form(g0);
  const int n = g.order();
  const int rows = n + g.outputs();
  const int cols = n + g.inputs();

  MatrixXd s0(rows, cols), s1 = MatrixXd::Zero(rows, cols);
  s0.topLeftCorner(n, n) = g.a;
  s0.topRightCorner(n, g.inputs()) = g.b;
  s0.bottomLeftCorner(g.outputs(), n) = g.c;
  s0.bottomRightCorner(g.outputs(), g.inputs()) = g.d;
  s1.topLeftCorner(n, n) = -MatrixXd::Identity(n, n);

  double scale = std::max(1.0, s0.norm());
  // Normal rank of the pencil from two probe evaluations; the threshold is
  // absolute so numerically annihilated channels keep rank zero.
  double cut = (tol > 0.0 ? tol : 1e-9) * scale;
  int nrank = 0;
  for (cplx s : probe_points(g, 2)) {
    MatrixXcd pen = s0.cast<cplx>() + s * s1.cast<cplx>();
    Eigen::JacobiSVD<MatrixXcd> svd(pen);
    int rk = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()(i) > cut) ++rk;
    nrank = std::max(nrank, rk);
  }
  const int nvec = rows - nrank;
  std::vector<PolyRow> basis;
  if (nvec == 0) return basis;

  const int maxdeg = n + 1;
  for (int d = 0; d <= maxdeg && static_cast<int>(basis.size()) < nvec; ++d) {
    // T_d: (d+1) x (d+2) block Toeplitz with [s0 s1] band.
    MatrixXd t = MatrixXd::Zero((d + 1) * rows, (d + 2) * cols);
    for (int i = 0; i <= d; ++i) {
      t.block(i * rows, i * cols, rows, cols) = s0;
      t.block(i * rows, (i + 1) * cols, rows, cols) = s1;
    }
    Eigen::JacobiSVD<MatrixXd> svd(t.transpose(), Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    double cut = (tol > 0.0 ? tol : 1e-9) * std::max(1.0, scale);
    int rk = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) > cut) ++rk;
    int nullity = static_cast<int>(t.rows()) - rk;
    if (nullity <= 0) continue;
    MatrixXd kernel = svd.matrixV().rightCols(nullity);  // columns: w^T stacks

    // Remove the span of shifted lower-degree basis rows.
    std::vector<VectorXd> known;
    for (const auto& [row, deg] : [&] {
      std::vector<std::pair<PolyRow, int>> v;
      for (size_t i = 0; i < basis.size(); ++i)
        v.push_back({basis[i], basis[i].degree()});
      return v;
    }()) {
      for (int shift = 0; deg + shift <= d; ++shift)
        known.push_back(embed_shifted(row, shift, d, rows));
    }
    MatrixXd proj = kernel;
    if (!known.empty()) {
      MatrixXd kmat(known.front().size(), known.size());
      for (size_t i = 0; i < known.size(); ++i) kmat.col(i) = known[i];
      Eigen::HouseholderQR<MatrixXd> qr(kmat);
      MatrixXd qthin = qr.householderQ() * MatrixXd::Identity(
                                               kmat.rows(), kmat.cols());
      proj -= qthin * (qthin.transpose() * kernel);
    }
    Eigen::JacobiSVD<MatrixXd> psvd(proj, Eigen::ComputeFullU);
    int fresh = 0;
    for (int i = 0; i < psvd.singularValues().size(); ++i)
      if (psvd.singularValues()(i) > 1e-7) ++fresh;
    for (int i = 0; i < fresh && static_cast<int>(basis.size()) < nvec; ++i) {
      VectorXd w = psvd.matrixU().col(i);
      PolyRow row;
      row.coeff = MatrixXd::Zero(d + 1, rows);
      for (int k = 0; k <= d; ++k)
        row.coeff.row(k) = w.segment(k * rows, rows).transpose();
      // Deterministic normalization: largest coefficient 1, sign fixed by
      // the first significant entry.
      double mx = row.coeff.cwiseAbs().maxCoeff();
      row.coeff /= mx;
      for (int k = 0; k < row.coeff.size(); ++k) {
        double v = row.coeff(k / rows, k % rows);
        if (std::abs(v) > 1e-8) {
          if (v < 0.0) row.coeff = -row.coeff;
          break;
        }
      }
      basis.push_back(std::move(row));
    }
  }
  if (static_cast<int>(basis.size()) != nvec)
    fail(ErrorCode::numeric,
         "polynomial_left_nullspace: basis extraction incomplete");
  return basis;
}

namespace {

// Restriction of pencil-space rows [w_A | w_C] to the output coordinates.
PolyRow output_part(const PolyRow& pencil_row, int n, int width) {
  PolyRow out;
  out.coeff = pencil_row.coeff.rightCols(width);
  int d = out.degree();
  out.coeff = out.coeff.topRows(std::max(0, d) + 1).eval();
  (void)n;
  return out;
}

}  // namespace

std::vector<PolyRow> tfm_nullspace_rows(const LtiModel& g, double tol) {
  if (g.inputs() == 0) {
    // Nothing to annihilate: the unit rows form the basis.
    std::vector<PolyRow> rows;
    for (int i = 0; i < g.outputs(); ++i) {
      PolyRow r;
      r.coeff = MatrixXd::Zero(1, g.outputs());
      r.coeff(0, i) = 1.0;
      rows.push_back(std::move(r));
    }
    return rows;
  }
  auto pencil = polynomial_left_nullspace(g, tol);
  std::vector<PolyRow> rows;
  for (const auto& pr : pencil)
    rows.push_back(output_part(pr, 0, g.outputs()));
  return rows;
}

namespace {

LtiModel annihilation_target(const LtiModel& sysf) {
  auto uidx = sysf.group("controls");
  auto didx = sysf.group("disturbances");
  LtiModel gud = sysf;
  std::vector<int> cols = uidx;
  cols.insert(cols.end(), didx.begin(), didx.end());
  gud = select_columns(sysf, cols);
  // [Gu Gd; I_mu 0]
  std::vector<int> unit;
  for (size_t i = 0; i < uidx.size(); ++i) unit.push_back(static_cast<int>(i));
  return stack_with_input_identity(gud, unit);
}

}  // namespace

NullBasis left_nullspace(const LtiModel& sysf, bool use_observer,
                         const StabilizeOpts& stabilize, double tol) {
  validate(sysf);
  NullBasis nb;
  nb.ts = sysf.ts;
  nb.ny = sysf.outputs();
  nb.nu = sysf.group_size("controls");

  if (use_observer) {
    if (sysf.group_size("disturbances") > 0)
      fail_arg("left_nullspace: observer basis requires no disturbances");
    LtiModel g = to_standard_form(sysf);
    auto uidx = g.group("controls");
    LtiModel gu = select_columns(g, uidx);
    LtiModel obs;
    obs.ts = g.ts;
    obs.a = gu.a;
    obs.b = MatrixXd::Zero(gu.order(), nb.ny + nb.nu);
    obs.b.rightCols(nb.nu) = gu.b;
    obs.c = -gu.c;
    obs.d = MatrixXd::Zero(nb.ny, nb.ny + nb.nu);
    obs.d.leftCols(nb.ny) = MatrixXd::Identity(nb.ny, nb.ny);
    obs.d.rightCols(nb.nu) = -gu.d;
    nb.basis = obs;
    return nb;
  }

  LtiModel ge = annihilation_target(sysf);
  if (ge.inputs() == 0) {
    // Nothing to annihilate: the identity rows are a degree-zero basis.
    const int width = nb.ny + nb.nu;
    for (int i = 0; i < width; ++i) {
      poly::PolyRow r;
      r.coeff = MatrixXd::Zero(1, width);
      r.coeff(0, i) = 1.0;
      nb.rows.push_back(std::move(r));
      nb.degs.push_back(0);
    }
    nb.basis = identity_model(width, sysf.ts);
    return nb;
  }
  LtiModel gmin = to_standard_form(ge);
  auto pencil_rows = polynomial_left_nullspace(gmin, tol);
  if (pencil_rows.empty())
    fail(ErrorCode::unsolvable,
         "left_nullspace: empty nullspace (rank of [Gu Gd; I 0] is full)");

  const int width = nb.ny + nb.nu;
  for (const auto& pr : pencil_rows) {
    nb.rows.push_back(output_part(pr, gmin.order(), width));
    nb.degs.push_back(std::max(0, pr.degree()));
  }
  // Sort rows by degree for deterministic least-order enumeration.
  std::vector<size_t> idx(nb.rows.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(),
                   [&](size_t a, size_t b) { return nb.degs[a] < nb.degs[b]; });
  std::vector<PolyRow> rows;
  std::vector<int> degs;
  for (size_t i : idx) {
    rows.push_back(nb.rows[i]);
    degs.push_back(nb.degs[i]);
  }
  nb.rows = std::move(rows);
  nb.degs = std::move(degs);

  // Proper stacked realization: each row over its own denominator.
  auto place = stabilize.placement(nb.ts);
  LtiModel stacked;
  bool first = true;
  for (const auto& row : nb.rows) {
    Poly den = poly::stable_denominator(std::max(0, row.degree()), place);
    LtiModel r = poly::realize_row_over_den(row, den, nb.ts);
    stacked = first ? r : compose(ComposeKind::stack_rows, stacked, r);
    first = false;
  }
  nb.basis = stacked;
  return nb;
}

LtiModel realize_combination(const NullBasis& nb, const MatrixXd& h,
                             const StabilizeOpts& stabilize) {
  if (h.cols() != nb.count()) fail_arg("realize_combination: width mismatch");
  if (nb.rows.empty()) {
    // observer basis: constant combination of the proper realization
    LtiModel out = nb.basis;
    out.c = h * nb.basis.c;
    out.d = h * nb.basis.d;
    return minimal_realization(out);
  }
  auto place = stabilize.placement(nb.ts);
  LtiModel out;
  bool first = true;
  for (int i = 0; i < h.rows(); ++i) {
    PolyRow comb = poly::combine(nb.rows, h.row(i));
    int deg = std::max(0, comb.degree());
    comb.coeff = comb.coeff.topRows(deg + 1).eval();
    Poly den = poly::stable_denominator(deg, place);
    LtiModel r = poly::realize_row_over_den(comb, den, nb.ts);
    out = first ? r : compose(ComposeKind::stack_rows, out, r);
    first = false;
  }
  return out;
}

std::vector<SubsetCandidate> subset_candidates(const std::vector<int>& degs) {
  const int k = static_cast<int>(degs.size());
  if (k > 16) fail_arg("subset_candidates: too many basis vectors");
  std::vector<SubsetCandidate> out;
  for (unsigned mask = 1; mask < (1u << k); ++mask) {
    SubsetCandidate c;
    for (int i = 0; i < k; ++i)
      if (mask & (1u << i)) {
        c.rows.push_back(i);
        c.order = std::max(c.order, degs[i]);
      }
    out.push_back(std::move(c));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const SubsetCandidate& a, const SubsetCandidate& b) {
                     if (a.order != b.order) return a.order < b.order;
                     if (a.rows.size() != b.rows.size())
                       return a.rows.size() < b.rows.size();
                     return a.rows < b.rows;
                   });
  return out;
}

std::optional<CombinationPick> pick_admissible(
    const NullBasis& nb, int q_rows, const StabilizeOpts& stabilize,
    const std::function<bool(const LtiModel&, const MatrixXd&)>& admissible,
    uint64_t seed, int tries) {
  std::vector<int> degs = nb.degs;
  if (degs.empty()) degs.assign(std::max(1, nb.basis.outputs()), 0);
  for (const auto& cand : subset_candidates(degs)) {
    if (static_cast<int>(cand.rows.size()) < q_rows) continue;
    DesignStream stream(seed ^ (0x1234u + cand.rows.size()));
    for (int t = 0; t < tries; ++t) {
      MatrixXd hsub = stream.next(q_rows, static_cast<int>(cand.rows.size()));
      if (la::rank_svd(hsub, 0.0) < q_rows) continue;
      MatrixXd h = MatrixXd::Zero(q_rows, nb.count() ? nb.count()
                                                     : nb.basis.outputs());
      for (size_t j = 0; j < cand.rows.size(); ++j)
        h.col(cand.rows[j]) = hsub.col(static_cast<int>(j));
      LtiModel filt = realize_combination(nb, h, stabilize);
      if (admissible(filt, h)) {
        CombinationPick pick;
        pick.h = h;
        pick.filter = std::move(filt);
        pick.subset = cand.rows;
        pick.order = cand.order;
        return pick;
      }
    }
  }
  return std::nullopt;
}

bool column_nonzero_weak(const LtiModel& column, double fdtol) {
  LtiModel red = minimal_realization(column);
  if (red.order() > 0) {
    // A nonzero minimal order can still stem from rank-tolerance noise; test
    // the Markov parameters and feedthrough against the threshold.
    if (red.d.cwiseAbs().maxCoeff() > fdtol) return true;
    MatrixXd x = red.b;
    for (int k = 0; k < red.order(); ++k) {
      if ((red.c * x).cwiseAbs().maxCoeff() > fdtol) return true;
      x = red.a * x;
    }
    return false;
  }
  return red.d.cwiseAbs().maxCoeff() > fdtol;
}

std::optional<CombinationPick> select_admissible_subsets(
    const NullBasis& nb, const LtiModel& targets, const FreqSet& freqs,
    uint64_t seed, const StabilizeOpts& stabilize, double fdtol,
    double fdgaintol) {
  auto admissible = [&](const LtiModel& filt, const MatrixXd&) {
    LtiModel rf = minimal_realization(compose(ComposeKind::series, filt, targets));
    if (freqs.empty()) {
      for (int j = 0; j < rf.inputs(); ++j)
        if (!column_nonzero_weak(select_columns(rf, {j}), fdtol)) return false;
      return true;
    }
    if (!is_stable(rf, boundary_offset)) rf = stabilized(rf, stabilize);
    GainResult g = gain_at(rf, freqs);
    for (int j = 0; j < rf.inputs(); ++j)
      if (g.column_gains.col(j).minCoeff() < fdgaintol) return false;
    return true;
  };
  return pick_admissible(nb, 1, stabilize, admissible, seed);
}

}  // namespace fdikit
