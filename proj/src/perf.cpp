#include "perf.hpp"

#include <cmath>

namespace fdikit {

namespace {

const double kInf = std::numeric_limits<double>::infinity();
const double kNan = std::numeric_limits<double>::quiet_NaN();

LtiModel faults_part(const LtiModel& r) {
  if (r.has_group("faults")) return select_groups(r, {"faults"});
  LtiModel out = r;
  return out;  // all inputs are faults by convention
}

// Max over fault columns of the column norm (H-infinity, or sup of gains on
// the grid).
double max_column_norm(const LtiModel& rf, const FreqSet& freqs) {
  if (rf.inputs() == 0) return 0.0;
  if (freqs.empty()) {
    double best = 0.0;
    for (int j = 0; j < rf.inputs(); ++j)
      best = std::max(best,
                      norm_hinf(minimal_realization(select_columns(rf, {j})))
                          .value);
    return best;
  }
  GainResult g = gain_at(minimal_realization(rf), freqs);
  double best = 0.0;
  for (int j = 0; j < rf.inputs(); ++j)
    best = std::max(best, g.column_gains.col(j).maxCoeff());
  return best;
}

}  // namespace

FsCondResult fdifscond(const LtiModel& r, const FreqSet& freqs,
                       const BoolMatrix& s) {
  if (s.size() != 0) {
    // Row-wise split per the structure matrix.
    if (s.rows() != r.outputs())
      fail_arg("fdifscond: structure matrix row count mismatch");
    FsCondResult out;
    LtiModel rf = faults_part(r);
    for (int i = 0; i < s.rows(); ++i) {
      std::vector<int> ones;
      for (int j = 0; j < s.cols(); ++j)
        if (s(i, j)) ones.push_back(j);
      LtiModel rowi = select_rows(rf, {i});
      LtiModel tgt = select_columns(rowi, ones);
      double beta = freqs.empty()
                        ? hinf_minus_index(minimal_realization(tgt))
                        : hinf_minus_index(minimal_realization(tgt), freqs);
      double gamma = max_column_norm(minimal_realization(tgt), freqs);
      out.beta.push_back(beta);
      out.gamma.push_back(gamma);
      out.fscond.push_back(gamma > 0.0 ? beta / gamma : (beta > 0 ? kInf : 0.0));
    }
    return out;
  }
  LtiModel rf = minimal_realization(faults_part(r));
  double beta = freqs.empty() ? hinf_minus_index(rf)
                              : hinf_minus_index(rf, freqs);
  double gamma = max_column_norm(rf, freqs);
  FsCondResult out;
  out.beta = {beta};
  out.gamma = {gamma};
  out.fscond = {gamma > 0.0 ? beta / gamma : (beta > 0 ? kInf : 0.0)};
  return out;
}

FsCondResult fdifscond(const std::vector<LtiModel>& bank, const FreqSet& freqs,
                       const BoolMatrix& s) {
  if (s.size() != 0 && s.rows() != static_cast<int>(bank.size()))
    fail_arg("fdifscond: structure matrix must have one row per member");
  FsCondResult out;
  for (size_t i = 0; i < bank.size(); ++i) {
    if (bank[i].outputs() == 0) {
      out.fscond.push_back(kNan);
      out.beta.push_back(0.0);
      out.gamma.push_back(0.0);
      continue;
    }
    LtiModel rf = faults_part(bank[i]);
    std::vector<int> cols;
    if (s.size() != 0) {
      for (int j = 0; j < s.cols(); ++j)
        if (s(i, j)) cols.push_back(j);
      rf = select_columns(rf, cols);
    }
    rf = minimal_realization(rf);
    double beta = freqs.empty() ? hinf_minus_index(rf)
                                : hinf_minus_index(rf, freqs);
    double gamma = max_column_norm(rf, freqs);
    out.beta.push_back(beta);
    out.gamma.push_back(gamma);
    out.fscond.push_back(gamma > 0.0 ? beta / gamma : (beta > 0 ? kInf : 0.0));
  }
  return out;
}

namespace {

GapResult gap_of_single(const LtiModel& r, const FreqSet& freqs,
                        const Eigen::RowVectorX<bool>* mask) {
  LtiModel rf = faults_part(r);
  LtiModel noise = r.has_group("noise")
                       ? select_groups(r, {"noise"})
                       : zero_model(r.outputs(), 0, r.ts);
  LtiModel target = rf, masked = noise;
  if (mask) {
    std::vector<int> ones, zeros_;
    for (int j = 0; j < mask->size(); ++j)
      ((*mask)(j) ? ones : zeros_).push_back(j);
    target = select_columns(rf, ones);
    LtiModel rbar = select_columns(rf, zeros_);
    masked = noise.inputs()
                 ? compose(ComposeKind::augment_columns, rbar, noise)
                 : rbar;
  }
  double beta = freqs.empty()
                    ? hinf_minus_index(minimal_realization(target))
                    : hinf_minus_index(minimal_realization(target), freqs);
  double gamma = masked.inputs()
                     ? norm_hinf(minimal_realization(masked)).value
                     : 0.0;
  if (gamma <= 1e-9 * std::max(1.0, beta)) gamma = 0.0;
  GapResult out;
  out.beta = {beta};
  out.gamma = {gamma};
  out.gap = {gamma > 0.0 ? beta / gamma : (beta > 0.0 ? kInf : 0.0)};
  return out;
}

}  // namespace

GapResult fdif2ngap(const LtiModel& r, const FreqSet& freqs,
                    const BoolMatrix& s) {
  if (s.size() == 0) return gap_of_single(r, freqs, nullptr);
  if (s.rows() != r.outputs())
    fail_arg("fdif2ngap: structure matrix row count mismatch");
  GapResult out;
  for (int i = 0; i < s.rows(); ++i) {
    Eigen::RowVectorX<bool> mask = s.row(i);
    LtiModel rowi = r;
    rowi = select_rows(r, {i});
    // preserve groups after row selection
    rowi.input_groups = r.input_groups;
    GapResult gi = gap_of_single(rowi, freqs, &mask);
    out.gap.push_back(gi.gap[0]);
    out.beta.push_back(gi.beta[0]);
    out.gamma.push_back(gi.gamma[0]);
  }
  return out;
}

GapResult fdif2ngap(const std::vector<LtiModel>& bank, const FreqSet& freqs,
                    const BoolMatrix& s) {
  if (s.size() != 0 && s.rows() != static_cast<int>(bank.size()))
    fail_arg("fdif2ngap: structure matrix must have one row per member");
  GapResult out;
  for (size_t i = 0; i < bank.size(); ++i) {
    if (bank[i].outputs() == 0) {
      out.gap.push_back(kNan);
      out.beta.push_back(0.0);
      out.gamma.push_back(0.0);
      continue;
    }
    GapResult gi;
    if (s.size() != 0) {
      Eigen::RowVectorX<bool> mask = s.row(i);
      gi = gap_of_single(bank[i], freqs, &mask);
    } else {
      gi = gap_of_single(bank[i], freqs, nullptr);
    }
    out.gap.push_back(gi.gap[0]);
    out.beta.push_back(gi.beta[0]);
    out.gamma.push_back(gi.gamma[0]);
  }
  return out;
}

namespace {

double system_norm(const LtiModel& m, MmNorm norm) {
  if (m.inputs() == 0 || m.outputs() == 0) return 0.0;
  LtiModel mm = minimal_realization(m);
  return norm == MmNorm::inf ? norm_hinf(mm).value : norm_h2(mm);
}

LtiModel group_or_zero(const LtiModel& r, const std::string& g, int width) {
  if (r.has_group(g)) return select_groups(r, {g});
  return zero_model(r.outputs(), width, r.ts);
}

}  // namespace

double fdimmperf(const LtiModel& r, const LtiModel* sysr, MmNorm norm,
                 const BoolMatrix& s) {
  if (sysr) {
    // || [Ru-Mru Rd-Mrd Rf-Mrf Rw-Mrw] ||
    LtiModel diffs;
    bool first = true;
    for (const char* g : {"controls", "disturbances", "faults", "noise"}) {
      int wr = r.has_group(g) ? r.group_size(g) : 0;
      int ws = sysr->has_group(g) ? sysr->group_size(g) : 0;
      int w = std::max(wr, ws);
      if (w == 0) continue;
      LtiModel a = group_or_zero(r, g, w);
      LtiModel b = group_or_zero(*sysr, g, w);
      if (a.inputs() != b.inputs())
        fail_arg("fdimmperf: group widths disagree between R and SYSR");
      LtiModel d = subtract(a, b);
      diffs = first ? d : compose(ComposeKind::augment_columns, diffs, d);
      first = false;
    }
    if (first) return 0.0;
    return system_norm(diffs, norm);
  }
  if (s.size() != 0) {
    if (s.rows() != r.outputs())
      fail_arg("fdimmperf: structure matrix row count mismatch");
    // Entry-masked fault channel: flagged entries are zeroed row by row.
    LtiModel rf = faults_part(r);
    LtiModel acc;
    bool first = true;
    for (int i = 0; i < r.outputs(); ++i) {
      LtiModel rowi = select_rows(rf, {i});
      MatrixXd keep = MatrixXd::Zero(rf.inputs(), rf.inputs());
      for (int j = 0; j < s.cols(); ++j)
        if (!s(i, j)) keep(j, j) = 1.0;
      LtiModel sel = zero_model(rf.inputs(), rf.inputs(), r.ts);
      sel.d = keep;
      LtiModel maskedrow = compose(ComposeKind::series, rowi, sel);
      acc = first ? maskedrow : compose(ComposeKind::stack_rows, acc, maskedrow);
      first = false;
    }
    LtiModel rw = group_or_zero(r, "noise", 0);
    LtiModel total = rw.inputs()
                         ? compose(ComposeKind::augment_columns, acc, rw)
                         : acc;
    return system_norm(total, norm);
  }
  LtiModel rw = group_or_zero(r, "noise", 0);
  return system_norm(rw, norm);
}

std::vector<double> fdimmperf(const std::vector<LtiModel>& bank,
                              const std::vector<LtiModel>* sysr, MmNorm norm,
                              const BoolMatrix& s) {
  std::vector<double> out;
  for (size_t i = 0; i < bank.size(); ++i) {
    if (bank[i].outputs() == 0) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const LtiModel* ref = sysr && i < sysr->size() ? &(*sysr)[i] : nullptr;
    if (s.size() != 0) {
      BoolMatrix si = s.row(i).replicate(bank[i].outputs(), 1);
      out.push_back(fdimmperf(bank[i], ref, norm, si));
    } else {
      out.push_back(fdimmperf(bank[i], ref, norm));
    }
  }
  return out;
}

}  // namespace fdikit
