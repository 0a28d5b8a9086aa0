#include "mdetect.hpp"

#include <algorithm>
#include <cmath>

namespace fdikit {

namespace {

const double kInf = std::numeric_limits<double>::infinity();

// Control (+ optional disturbance) channel of a component model.
LtiModel selected_channels(const LtiModel& m, bool cdinp) {
  std::vector<std::string> groups = {"controls"};
  if (cdinp && m.has_group("disturbances")) groups.push_back("disturbances");
  return select_groups(m, groups);
}

LtiModel to_continuous(const LtiModel& m) {
  return m.discrete() ? bilinear_to_continuous(m) : to_standard_form(m);
}

struct NugapFactors {
  LtiModel r;     // [N; M] of the normalized right factorization (inner)
  LtiModel ltil;  // [-Mt, Nt] from the normalized left factorization
};

NugapFactors nugap_factors(const LtiModel& g0) {
  LtiModel g = minimal_realization(to_continuous(g0));
  NugapFactors out;
  CoprimeFactors rf = normalized_coprime(g, CoprimeSide::right);
  out.r = compose(ComposeKind::stack_rows, rf.n, rf.m);
  CoprimeFactors lf = normalized_coprime(g, CoprimeSide::left);
  out.ltil = compose(ComposeKind::augment_columns, scale(lf.m, -1.0), lf.n);
  return out;
}

// Winding-number condition: det(R2~ R1) has no boundary zeros and equal
// unstable zero/pole counts.
bool winding_ok(const NugapFactors& f1, const NugapFactors& f2,
                double offset) {
  LtiModel prod = minimal_realization(
      compose(ComposeKind::series, conjugate(f2.r), f1.r));
  auto zs = zeros(prod);
  auto ps = poles(prod);
  int wno = 0;
  const double margin = 1e-6;
  for (auto z : zs) {
    double bc = boundary_coordinate(z, numkern::TimeKind::continuous);
    if (std::abs(bc) < margin) return false;  // boundary zero
    if (bc > 0) ++wno;
  }
  for (auto p : ps)
    if (boundary_coordinate(p, numkern::TimeKind::continuous) > offset) --wno;
  return wno == 0;
}

struct DistValue {
  double value;
  double fpeak;
};

DistValue nugap_value(const NugapFactors& f1, const NugapFactors& f2,
                      double offset, const FreqSet& freqs) {
  if (!winding_ok(f1, f2, offset)) return {1.0, 0.0};
  LtiModel err = minimal_realization(
      compose(ComposeKind::series, f2.ltil, f1.r));
  if (!freqs.empty()) {
    double best = 0.0, wbest = 0.0;
    for (double w : freqs.omegas) {
      // the factors live in continuous time after the pullback
      MatrixXcd h = response_at(err, cplx(0.0, w));
      Eigen::JacobiSVD<MatrixXcd> svd(h);
      double v = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
      if (v > best) {
        best = v;
        wbest = w;
      }
    }
    return {std::min(best, 1.0), wbest};
  }
  NormResult nr = norm_hinf(err, 0.0);
  return {std::min(nr.value, 1.0), nr.peak_frequency};
}

DistValue norm_distance(const LtiModel& a, const LtiModel& b,
                        MdDistance kind, const FreqSet& freqs) {
  LtiModel diff = minimal_realization(subtract(a, b));
  if (!freqs.empty()) {
    double best = 0.0, wbest = 0.0;
    for (double w : freqs.omegas) {
      MatrixXcd h = response_at(diff, freq_point(w, diff.ts));
      Eigen::JacobiSVD<MatrixXcd> svd(h);
      double v = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
      if (v > best) {
        best = v;
        wbest = w;
      }
    }
    return {best, wbest};
  }
  if (kind == MdDistance::h2) return {norm_h2(diff), 0.0};
  NormResult nr = norm_hinf(diff);
  return {nr.value, nr.peak_frequency};
}

}  // namespace

double nugap(const LtiModel& g1, const LtiModel& g2, double offset) {
  if (g1.ts != g2.ts) fail_arg("nugap: sample times differ");
  NugapFactors f1 = nugap_factors(g1);
  NugapFactors f2 = nugap_factors(g2);
  return nugap_value(f1, f2, offset, {}).value;
}

MdDistResult mddist(const MultiModel& mm, const MdDistOpts& opts) {
  validate(mm);
  const int n = mm.size();
  std::vector<int> rows = opts.mdselect;
  if (rows.empty())
    for (int i = 0; i < n; ++i) rows.push_back(i);
  const int m = static_cast<int>(rows.size());

  std::vector<LtiModel> chans;
  for (const auto& c : mm.components)
    chans.push_back(selected_channels(c, opts.cdinp));

  std::vector<NugapFactors> facs;
  if (opts.distance == MdDistance::nugap)
    for (const auto& c : chans) facs.push_back(nugap_factors(c));

  MdDistResult out;
  out.dist = MatrixXd::Zero(m, n);
  out.fpeak = MatrixXd::Zero(m, n);
  for (int ii = 0; ii < m; ++ii) {
    int i = rows[ii];
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;  // exact zero on the diagonal
      DistValue v =
          opts.distance == MdDistance::nugap
              ? nugap_value(facs[i], facs[j], opts.offset, opts.freqs)
              : norm_distance(chans[i], chans[j], opts.distance, opts.freqs);
      out.dist(ii, j) = v.value;
      out.fpeak(ii, j) = v.fpeak;
    }
  }
  out.perm = Eigen::MatrixXi::Zero(m, n);
  for (int ii = 0; ii < m; ++ii) {
    std::vector<int> idx(n);
    for (int j = 0; j < n; ++j) idx[j] = j;
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
      return out.dist(ii, a) < out.dist(ii, b);
    });
    for (int j = 0; j < n; ++j) out.perm(ii, j) = idx[j];
    double second = n > 1 ? out.dist(ii, idx[1]) : 0.0;
    int l = std::min(std::max(opts.mdindex, 1), n);
    double lth = out.dist(ii, idx[l - 1]);
    out.reldist.push_back(lth > 0.0 ? second / lth : kInf);
  }
  return out;
}

MdDist2cResult mddist2c(const MultiModel& mm, const LtiModel& sys,
                        const MdDistOpts& opts) {
  validate(mm);
  validate(sys);
  const int n = mm.size();
  LtiModel cur = selected_channels(sys, opts.cdinp);
  std::optional<NugapFactors> fcur;
  if (opts.distance == MdDistance::nugap) fcur = nugap_factors(cur);

  MdDist2cResult out;
  double best = kInf;
  for (int j = 0; j < n; ++j) {
    LtiModel cj = selected_channels(mm.components[j], opts.cdinp);
    DistValue v;
    if (opts.distance == MdDistance::nugap) {
      NugapFactors fj = nugap_factors(cj);
      v = nugap_value(*fcur, fj, opts.offset, opts.freqs);
    } else {
      v = norm_distance(cur, cj, opts.distance, opts.freqs);
    }
    out.dist.push_back(v.value);
    out.fpeak.push_back(v.fpeak);
    if (v.value < best - 1e-15) {
      best = v.value;
      out.mind = j;
    }
  }
  return out;
}

namespace {

// [Gu Gd Gw; I 0 0] of a component with internal-form group bookkeeping.
LtiModel md_extension(const LtiModel& comp) {
  std::vector<std::string> groups;
  for (const char* g : {"controls", "disturbances", "noise"})
    if (comp.has_group(g)) groups.push_back(g);
  LtiModel sel = select_groups(comp, groups);
  std::vector<int> unit;
  for (int i = 0; i < comp.group_size("controls"); ++i) unit.push_back(i);
  LtiModel ext = stack_with_input_identity(sel, unit);
  ext.input_groups = sel.input_groups;
  return ext;
}

double block_gain(const LtiModel& r, const std::vector<std::string>& groups,
                  const FreqSet& freqs, double* fpeak = nullptr) {
  std::vector<std::string> present;
  for (const auto& g : groups)
    if (r.has_group(g) && r.group_size(g) > 0) present.push_back(g);
  if (present.empty()) return 0.0;
  LtiModel sel = minimal_realization(select_groups(r, present));
  if (sel.inputs() == 0) return 0.0;
  if (!freqs.empty()) {
    double best = 0.0, wbest = 0.0;
    for (double w : freqs.omegas) {
      MatrixXcd h = response_at(sel, freq_point(w, sel.ts));
      Eigen::JacobiSVD<MatrixXcd> svd(h);
      double v = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
      if (v > best) {
        best = v;
        wbest = w;
      }
    }
    if (fpeak) *fpeak = wbest;
    return best;
  }
  NormResult nr = norm_hinf(sel);
  if (fpeak) *fpeak = nr.peak_frequency;
  return nr.value;
}

std::vector<std::string> detect_groups(bool emdtest) {
  return emdtest ? std::vector<std::string>{"controls", "disturbances"}
                 : std::vector<std::string>{"controls"};
}

MdBank md_synthesis(const MultiModel& mm, const MdSynOpts& opts,
                    bool approximate) {
  validate(mm);
  const int n = mm.size();
  for (const auto& c : mm.components)
    if (!is_stable(c, 0.0))
      fail_arg("model detection synthesis requires stable component models");

  std::vector<int> selected = opts.mdselect;
  if (selected.empty())
    for (int i = 0; i < n; ++i) selected.push_back(i);

  SynOpts base;
  base.sdeg = opts.sdeg;
  base.poles = opts.poles;
  base.smarg = opts.smarg;
  StabilizeOpts st = stabilize_options(base, mm.components.front());

  std::vector<LtiModel> exts;
  for (const auto& c : mm.components) exts.push_back(md_extension(c));

  MdBank bank;
  bank.q.resize(n);
  bank.r.assign(n, std::vector<LtiModel>(n));
  bank.mdperf = MatrixXd::Constant(n, n, -1.0);
  bank.mdgap.assign(n, kInf);
  bank.hdesign.resize(n);
  bank.degs.resize(n);

  auto groups = detect_groups(opts.emdtest);
  for (int i : selected) {
    if (i < 0 || i >= n) fail_arg("mdselect index out of range");
    const LtiModel& sysi = mm.components[i];
    NullBasis nb = left_nullspace(sysi, !opts.nullspace_minimal &&
                                             sysi.group_size("disturbances") ==
                                                 0,
                                  st, 0.0);
    const int nvec = nb.rows.empty() ? nb.basis.outputs() : nb.count();
    int qi = opts.rdim ? std::min(*opts.rdim, nvec) : 0;
    MatrixXd hgiven;
    if (opts.hdesign.size() == 1)
      hgiven = opts.hdesign[0];
    else if (static_cast<int>(opts.hdesign.size()) > i)
      hgiven = opts.hdesign[i];
    if (qi == 0)
      qi = hgiven.size() ? static_cast<int>(hgiven.rows())
                         : (opts.minimal ? 1 : nvec);

    int bad_pair = -1;
    auto admissible = [&](const LtiModel& filt, const MatrixXd&) {
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        LtiModel rij = minimal_realization(
            compose(ComposeKind::series, filt, exts[j]));
        rij.input_groups = exts[j].input_groups;
        bool ok;
        if (opts.freqs.empty()) {
          LtiModel sel = select_groups(rij, detect_groups(opts.emdtest));
          ok = false;
          for (int c = 0; c < sel.inputs() && !ok; ++c)
            ok = column_nonzero_weak(select_columns(sel, {c}), opts.mdtol);
        } else {
          ok = block_gain(rij, groups, opts.freqs) >= opts.mdgaintol;
        }
        if (!ok) {
          bad_pair = j;
          return false;
        }
      }
      return true;
    };

    MatrixXd h;
    LtiModel filt;
    if (hgiven.size()) {
      if (hgiven.cols() != nvec)
        fail_arg("mdsyn: HDesign width must match the nullspace dimension");
      h = hgiven;
      filt = realize_combination(nb, h, st);
      if (!admissible(filt, h))
        fail(ErrorCode::unsolvable,
             "model detection: models " + std::to_string(i) + " and " +
                 std::to_string(bad_pair) + " are not distinguishable with "
                 "the given design matrix");
    } else {
      auto pick = pick_admissible(nb, qi, st, admissible, opts.seed);
      if (!pick)
        fail(ErrorCode::unsolvable,
             "model detection: model " + std::to_string(i) +
                 " is indistinguishable from model " +
                 std::to_string(bad_pair));
      h = pick->h;
      filt = pick->filter;
    }

    if (approximate) {
      // Noise handling: invert the co-outer factor of the own-noise channel.
      LtiModel gw_i = mm.components[i].has_group("noise")
                          ? select_groups(mm.components[i], {"noise"})
                          : zero_model(sysi.outputs(), 0, sysi.ts);
      if (gw_i.inputs() > 0) {
        LtiModel gw_ext = compose(
            ComposeKind::stack_rows, gw_i,
            zero_model(sysi.group_size("controls"), gw_i.inputs(), sysi.ts));
        LtiModel gtw = minimal_realization(
            compose(ComposeKind::series, filt, gw_ext));
        int rwi = normal_rank(gtw);
        if (rwi > 0) {
          if (rwi != qi)
            fail(ErrorCode::unsupported,
                 "amdsyn: rank of the noise channel must equal the filter "
                 "output count");
          CoouterCoinner co = coouter_coinner(gtw);
          if (co.nonstandard && opts.nonstd != 1)
            fail(ErrorCode::unsupported,
                 "amdsyn: only the direct quasi-co-outer inversion is "
                 "implemented");
          LtiModel q3 = inverse_square(co.outer);
          filt = minimal_realization(compose(ComposeKind::series, q3, filt));
          if (!is_stable(filt, boundary_offset)) {
            StabilizeOpts keep;
            keep.poles = st.placement(sysi.ts);
            filt = stabilized(filt, keep);
          }
        }
      }
    }

    bank.q[i] = minimal_realization(filt);
    set_filter_groups(bank.q[i], sysi.outputs(),
                      sysi.group_size("controls"));
    bank.hdesign[i] = h;
    bank.degs[i] = nb.degs;
    for (int j = 0; j < n; ++j) {
      LtiModel rij = minimal_realization(
          compose(ComposeKind::series, bank.q[i], exts[j]));
      rij.input_groups = exts[j].input_groups;
      bank.r[i][j] = std::move(rij);
    }
  }

  // Performance matrix and normalization.
  for (int i : selected)
    for (int j = 0; j < n; ++j)
      bank.mdperf(i, j) =
          i == j ? block_gain(bank.r[i][j], groups, opts.freqs)
                 : block_gain(bank.r[i][j], groups, opts.freqs);

  auto scale_filter = [&](int i, double alpha) {
    bank.q[i].c *= alpha;
    bank.q[i].d *= alpha;
    for (int j = 0; j < n; ++j) {
      bank.r[i][j].c *= alpha;
      bank.r[i][j].d *= alpha;
      bank.mdperf(i, j) *= alpha;
    }
  };
  if (opts.normalize) {
    for (int i : selected) {
      double least = kInf;
      for (int j = 0; j < n; ++j)
        if (j != i) least = std::min(least, bank.mdperf(i, j));
      if (least > 0.0 && std::isfinite(least)) scale_filter(i, 1.0 / least);
    }
  } else if (selected.size() > 1) {
    int base_i = selected.front();
    for (int i : selected) {
      if (i == base_i) continue;
      double num = bank.mdperf(base_i, i);
      double den = bank.mdperf(i, base_i);
      if (num > 0.0 && den > 0.0) scale_filter(i, num / den);
    }
  }

  if (approximate) {
    for (int i : selected) {
      double beta = kInf;
      for (int j = 0; j < n; ++j)
        if (j != i) beta = std::min(beta, bank.mdperf(i, j));
      double gamma = block_gain(bank.r[i][i], {"noise"}, {});
      if (gamma <= 1e-9 * std::max(1.0, beta)) gamma = 0.0;
      bank.mdgap[i] = gamma > 0.0 ? beta / gamma : kInf;
    }
  }
  return bank;
}

}  // namespace

MdBank emdsyn(const MultiModel& mm, const MdSynOpts& opts) {
  return md_synthesis(mm, opts, false);
}

MdBank amdsyn(const MultiModel& mm, const MdSynOpts& opts) {
  return md_synthesis(mm, opts, true);
}

MdPerfResult mdperf(const std::vector<std::vector<LtiModel>>& rbank,
                    const MdPerfOpts& opts) {
  if (rbank.empty()) fail_arg("mdperf: empty bank");
  const int n = static_cast<int>(rbank.size());
  std::vector<int> rows = opts.mdselect;
  if (rows.empty())
    for (int i = 0; i < n; ++i) rows.push_back(i);
  const int m = static_cast<int>(rows.size());
  std::vector<std::string> groups = {"controls"};
  if (opts.cdinp) groups.push_back("disturbances");

  MdPerfResult out;
  out.gains = MatrixXd::Zero(m, n);
  out.fpeak = MatrixXd::Zero(m, n);
  for (int ii = 0; ii < m; ++ii) {
    int i = rows[ii];
    for (int j = 0; j < static_cast<int>(rbank[i].size()); ++j) {
      double fp = 0.0;
      out.gains(ii, j) = block_gain(rbank[i][j], groups, opts.freqs, &fp);
      out.fpeak(ii, j) = fp;
    }
  }
  out.perm = Eigen::MatrixXi::Zero(m, n);
  for (int ii = 0; ii < m; ++ii) {
    std::vector<int> idx(n);
    for (int j = 0; j < n; ++j) idx[j] = j;
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
      return out.gains(ii, a) < out.gains(ii, b);
    });
    for (int j = 0; j < n; ++j) out.perm(ii, j) = idx[j];
    double second = n > 1 ? out.gains(ii, idx[1]) : 0.0;
    int l = std::min(std::max(opts.mdindex, 1), n);
    double lth = out.gains(ii, idx[l - 1]);
    out.relgain.push_back(lth > 0.0 ? second / lth : kInf);
  }
  return out;
}

MdMatchResult mdmatch(const std::vector<LtiModel>& qbank, const LtiModel& sys,
                      const MdPerfOpts& opts) {
  validate(sys);
  MdMatchResult out;
  double best = kInf;
  LtiModel ext = md_extension(sys);
  for (size_t i = 0; i < qbank.size(); ++i) {
    if (qbank[i].outputs() == 0) {
      out.gains.push_back(0.0);
      out.fpeak.push_back(0.0);
      if (0.0 < best - 1e-15) {
        best = 0.0;
        out.mind = static_cast<int>(i);
      }
      continue;
    }
    LtiModel ri = minimal_realization(
        compose(ComposeKind::series, qbank[i], ext));
    ri.input_groups = ext.input_groups;
    std::vector<std::string> groups = {"controls"};
    if (opts.cdinp) groups.push_back("disturbances");
    double fp = 0.0;
    double g = block_gain(ri, groups, opts.freqs, &fp);
    out.gains.push_back(g);
    out.fpeak.push_back(fp);
    if (g < best - 1e-15) {
      best = g;
      out.mind = static_cast<int>(i);
    }
  }
  return out;
}

MdGapResult mdgap(const std::vector<std::vector<LtiModel>>& rbank,
                  const MdPerfOpts& opts) {
  if (rbank.empty()) fail_arg("mdgap: empty bank");
  const int n = static_cast<int>(rbank.size());
  std::vector<int> rows = opts.mdselect;
  if (rows.empty())
    for (int i = 0; i < n; ++i) rows.push_back(i);
  std::vector<std::string> groups = {"controls"};
  if (opts.cdinp) groups.push_back("disturbances");

  MdGapResult out;
  for (int i : rows) {
    double beta = kInf;
    for (int j = 0; j < static_cast<int>(rbank[i].size()); ++j) {
      if (j == i) continue;
      beta = std::min(beta, block_gain(rbank[i][j], groups, opts.freqs));
    }
    double gamma = block_gain(rbank[i][i], {"noise"}, {});
    if (gamma <= 1e-9 * std::max(1.0, std::isfinite(beta) ? beta : 1.0))
      gamma = 0.0;
    out.beta.push_back(beta);
    out.gamma.push_back(gamma);
    out.gap.push_back(gamma > 0.0 ? beta / gamma : kInf);
  }
  return out;
}

}  // namespace fdikit
