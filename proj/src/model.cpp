#include "model.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <set>

namespace fdikit {

std::vector<int> LtiModel::group(const std::string& name) const {
  auto it = input_groups.find(name);
  if (it == input_groups.end()) return {};
  return it->second;
}

namespace {

void check_indices(const std::vector<int>& idx, int bound,
                   const std::string& what) {
  for (int i : idx)
    if (i < 0 || i >= bound)
      fail_arg(what + ": index " + std::to_string(i) + " out of range [0," +
               std::to_string(bound) + ")");
}

}  // namespace

void validate(const LtiModel& m) {
  const int n = m.order();
  if (m.a.cols() != n) fail_arg("A must be square");
  if (m.e.size() != 0 && (m.e.rows() != n || m.e.cols() != n))
    fail_arg("E must match the order of A");
  if (m.b.rows() != n && !(n == 0 && m.b.size() == 0))
    fail_arg("B must have as many rows as A");
  if (m.c.cols() != n && !(n == 0 && m.c.size() == 0))
    fail_arg("C must have as many columns as A");
  if (m.b.size() != 0 && m.d.cols() != m.b.cols())
    fail_arg("D and B must agree in inputs");
  if (m.c.size() != 0 && m.d.rows() != m.c.rows())
    fail_arg("D and C must agree in outputs");
  if (m.ts < 0.0) fail_arg("sample time must be nonnegative");
  if (m.e.size() != 0) {
    Eigen::FullPivLU<MatrixXd> lu(m.e);
    lu.setThreshold(1e3 * la::eps);
    if (!lu.isInvertible())
      fail(ErrorCode::unsupported,
           "singular descriptor matrix E: only proper systems with invertible "
           "E are supported");
  }
  std::set<int> seen;
  for (const auto& [name, idx] : m.input_groups) {
    check_indices(idx, m.inputs(), "input group '" + name + "'");
    for (int i : idx)
      if (!seen.insert(i).second)
        fail_arg("input groups overlap at column " + std::to_string(i));
  }
  for (const auto& [name, idx] : m.output_groups)
    check_indices(idx, m.outputs(), "output group '" + name + "'");
}

void validate(const MultiModel& mm) {
  if (mm.components.empty()) fail_arg("multimodel must contain a component");
  const LtiModel& first = mm.components.front();
  for (const auto& c : mm.components) {
    validate(c);
    if (c.outputs() != first.outputs())
      fail_arg("multimodel components must share the output dimension");
    if (c.group_size("controls") != first.group_size("controls"))
      fail_arg("multimodel components must share the control input count");
    if (c.ts != first.ts)
      fail_arg("multimodel components must share the sample time");
  }
}

LtiModel fdimodset(const LtiModel& sys, const FdiSelections& sel) {
  validate(sys);
  const int m = sys.inputs();
  const int p = sys.outputs();
  const int n = sys.order();
  check_indices(sel.controls, m, "controls");
  check_indices(sel.disturbances, m, "disturbances");
  check_indices(sel.faults, m, "faults");
  check_indices(sel.noise, m, "noise");
  check_indices(sel.aux, m, "aux");
  check_indices(sel.faults_sen, p, "sensor faults");

  std::vector<std::pair<std::string, const std::vector<int>*>> order = {
      {"controls", &sel.controls},   {"disturbances", &sel.disturbances},
      {"faults", &sel.faults},       {"noise", &sel.noise},
      {"aux", &sel.aux}};

  LtiModel out;
  out.a = sys.a;
  out.e = sys.e;
  out.ts = sys.ts;
  out.c = sys.c;

  int total = static_cast<int>(sel.controls.size() + sel.disturbances.size() +
                               sel.faults.size() + sel.faults_sen.size() +
                               sel.noise.size() + sel.aux.size());
  out.b = MatrixXd::Zero(n, total);
  out.d = MatrixXd::Zero(p, total);
  int col = 0;
  for (auto& [name, idx] : order) {
    std::vector<int> cols;
    for (int j : *idx) {
      if (n > 0) out.b.col(col) = sys.b.col(j);
      out.d.col(col) = sys.d.col(j);
      cols.push_back(col++);
    }
    if (name == "faults") {
      // Sensor faults append unit feedthrough columns after actuator faults.
      for (int r : sel.faults_sen) {
        out.d(r, col) = 1.0;
        cols.push_back(col++);
      }
    }
    if (!cols.empty()) out.input_groups[name] = cols;
  }
  return out;
}

MultiModel mdmodset(const std::vector<LtiModel>& models,
                    const MdSelections& sel) {
  if (models.empty()) fail_arg("mdmodset: empty model list");
  const size_t n_comp = models.size();
  if (!sel.disturbances.empty() && sel.disturbances.size() != n_comp)
    fail_arg("mdmodset: per-component disturbance lists must match N");
  if (!sel.noise.empty() && sel.noise.size() != n_comp)
    fail_arg("mdmodset: per-component noise lists must match N");

  MultiModel mm;
  for (size_t j = 0; j < n_comp; ++j) {
    FdiSelections s;
    s.controls = sel.controls;
    if (!sel.disturbances.empty()) s.disturbances = sel.disturbances[j];
    if (!sel.noise.empty()) s.noise = sel.noise[j];
    mm.components.push_back(fdimodset(models[j], s));
  }
  validate(mm);
  return mm;
}

LtiModel select_rows(const LtiModel& m, const std::vector<int>& rows) {
  check_indices(rows, m.outputs(), "output selection");
  LtiModel out = m;
  out.c = MatrixXd(rows.size(), m.order());
  out.d = MatrixXd(rows.size(), m.inputs());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (m.order() > 0) out.c.row(i) = m.c.row(rows[i]);
    out.d.row(i) = m.d.row(rows[i]);
  }
  out.output_groups.clear();
  return out;
}

LtiModel select_columns(const LtiModel& m, const std::vector<int>& cols) {
  check_indices(cols, m.inputs(), "input selection");
  LtiModel out = m;
  out.b = MatrixXd(m.order(), cols.size());
  out.d = MatrixXd(m.outputs(), cols.size());
  for (size_t j = 0; j < cols.size(); ++j) {
    if (m.order() > 0) out.b.col(j) = m.b.col(cols[j]);
    out.d.col(j) = m.d.col(cols[j]);
  }
  out.input_groups.clear();
  return out;
}

LtiModel select_groups(const LtiModel& m,
                       const std::vector<std::string>& names) {
  std::vector<int> cols;
  GroupMap groups;
  for (const auto& name : names) {
    if (!m.has_group(name)) fail_arg("unknown input group '" + name + "'");
    std::vector<int> renumbered;
    for (int j : m.group(name)) {
      renumbered.push_back(static_cast<int>(cols.size()));
      cols.push_back(j);
    }
    groups[name] = renumbered;
  }
  LtiModel out = select_columns(m, cols);
  out.input_groups = groups;
  out.output_groups = m.output_groups;
  return out;
}

namespace {

MatrixXd blkdiag(const MatrixXd& x, const MatrixXd& y) {
  MatrixXd out = MatrixXd::Zero(x.rows() + y.rows(), x.cols() + y.cols());
  out.topLeftCorner(x.rows(), x.cols()) = x;
  out.bottomRightCorner(y.rows(), y.cols()) = y;
  return out;
}

MatrixXd e_or_identity(const LtiModel& m) {
  return m.identity_e() ? MatrixXd::Identity(m.order(), m.order()) : m.e;
}

void check_ts(const LtiModel& g1, const LtiModel& g2) {
  if (g1.ts != g2.ts) fail_arg("compose: sample times differ");
}

}  // namespace

LtiModel compose(ComposeKind kind, const LtiModel& g1, const LtiModel& g2) {
  check_ts(g1, g2);
  const int n1 = g1.order(), n2 = g2.order();
  LtiModel out;
  out.ts = g1.ts;
  bool both_identity_e = g1.identity_e() && g2.identity_e();
  switch (kind) {
    case ComposeKind::series: {
      if (g1.inputs() != g2.outputs())
        fail_arg("series: inner dimensions disagree");
      out.a = blkdiag(g1.a, g2.a);
      out.a.topRightCorner(n1, n2) = g1.b * g2.c;
      out.b = MatrixXd(n1 + n2, g2.inputs());
      out.b.topRows(n1) = g1.b * g2.d;
      out.b.bottomRows(n2) = g2.b;
      out.c = MatrixXd(g1.outputs(), n1 + n2);
      out.c.leftCols(n1) = g1.c;
      out.c.rightCols(n2) = g1.d * g2.c;
      out.d = g1.d * g2.d;
      out.input_groups = g2.input_groups;
      out.output_groups = g1.output_groups;
      break;
    }
    case ComposeKind::stack_rows: {
      if (g1.inputs() != g2.inputs())
        fail_arg("stack-rows: input dimensions disagree");
      out.a = blkdiag(g1.a, g2.a);
      out.b = MatrixXd(n1 + n2, g1.inputs());
      out.b.topRows(n1) = g1.b;
      out.b.bottomRows(n2) = g2.b;
      out.c = blkdiag(g1.c, g2.c);
      out.d = MatrixXd(g1.outputs() + g2.outputs(), g1.inputs());
      out.d.topRows(g1.outputs()) = g1.d;
      out.d.bottomRows(g2.outputs()) = g2.d;
      out.input_groups = g1.input_groups;
      break;
    }
    case ComposeKind::augment_columns: {
      if (g1.outputs() != g2.outputs())
        fail_arg("augment-columns: output dimensions disagree");
      out.a = blkdiag(g1.a, g2.a);
      out.b = blkdiag(g1.b, g2.b);
      out.c = MatrixXd(g1.outputs(), n1 + n2);
      out.c.leftCols(n1) = g1.c;
      out.c.rightCols(n2) = g2.c;
      out.d = MatrixXd(g1.outputs(), g1.inputs() + g2.inputs());
      out.d.leftCols(g1.inputs()) = g1.d;
      out.d.rightCols(g2.inputs()) = g2.d;
      out.output_groups = g1.output_groups;
      break;
    }
  }
  if (!both_identity_e) out.e = blkdiag(e_or_identity(g1), e_or_identity(g2));
  return out;
}

LtiModel subtract(const LtiModel& g1, const LtiModel& g2) {
  check_ts(g1, g2);
  if (g1.inputs() != g2.inputs() || g1.outputs() != g2.outputs())
    fail_arg("subtract: dimensions disagree");
  LtiModel out;
  out.ts = g1.ts;
  out.a = blkdiag(g1.a, g2.a);
  if (!(g1.identity_e() && g2.identity_e()))
    out.e = blkdiag(e_or_identity(g1), e_or_identity(g2));
  out.b = MatrixXd(g1.order() + g2.order(), g1.inputs());
  out.b.topRows(g1.order()) = g1.b;
  out.b.bottomRows(g2.order()) = g2.b;
  out.c = MatrixXd(g1.outputs(), g1.order() + g2.order());
  out.c.leftCols(g1.order()) = g1.c;
  out.c.rightCols(g2.order()) = -g2.c;
  out.d = g1.d - g2.d;
  out.input_groups = g1.input_groups;
  return out;
}

LtiModel scale(const LtiModel& g, double factor) {
  LtiModel out = g;
  out.c *= factor;
  out.d *= factor;
  return out;
}

LtiModel to_standard_form(const LtiModel& m) {
  if (m.identity_e()) return m;
  LtiModel out = m;
  Eigen::PartialPivLU<MatrixXd> lu(m.e);
  out.a = lu.solve(m.a);
  out.b = lu.solve(m.b);
  out.e = MatrixXd();
  return out;
}

namespace {

// Controllability staircase: returns the controllable order and transforms
// (a, b, c) in place with an orthogonal similarity.
int staircase_controllable(MatrixXd& a, MatrixXd& b, MatrixXd& c, double tol) {
  const int n = static_cast<int>(a.rows());
  if (n == 0) return 0;
  int nc = 0;
  MatrixXd w = b;
  int prev_width = static_cast<int>(b.cols());
  while (nc < n && prev_width > 0) {
    MatrixXd sub = w.bottomRows(n - nc);
    Eigen::JacobiSVD<MatrixXd> svd(sub, Eigen::ComputeFullU);
    int r = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()(i) > tol) ++r;
    if (r == 0) break;
    MatrixXd u = svd.matrixU();
    a.bottomRows(n - nc) = u.transpose() * a.bottomRows(n - nc);
    a.rightCols(n - nc) = a.rightCols(n - nc) * u;
    b.bottomRows(n - nc) = u.transpose() * b.bottomRows(n - nc);
    c.rightCols(n - nc) = c.rightCols(n - nc) * u;
    nc += r;
    if (nc >= n) break;
    w = a.middleCols(nc - r, r);
    prev_width = r;
  }
  return nc;
}

}  // namespace

LtiModel minimal_realization(const LtiModel& m0, double tol) {
  validate(m0);
  LtiModel m = to_standard_form(m0);
  if (m.order() == 0) return m;
  if (tol <= 0.0) {
    double scale = std::max({1.0, m.a.cwiseAbs().colwise().sum().maxCoeff(),
                             m.b.size() ? m.b.cwiseAbs().sum() : 0.0,
                             m.c.size() ? m.c.cwiseAbs().sum() : 0.0});
    tol = m.order() * la::eps * scale;
  }

  MatrixXd a = m.a, b = m.b, c = m.c;
  int nc = staircase_controllable(a, b, c, tol);
  a = a.topLeftCorner(nc, nc).eval();
  b = b.topRows(nc).eval();
  c = c.leftCols(nc).eval();

  // Observable part via duality.
  MatrixXd at = a.transpose(), bt = c.transpose(), ct = b.transpose();
  int no = staircase_controllable(at, bt, ct, tol);
  LtiModel out;
  out.a = at.topLeftCorner(no, no).transpose();
  out.b = ct.leftCols(no).transpose();
  out.c = bt.topRows(no).transpose();
  out.d = m.d;
  out.ts = m.ts;
  out.input_groups = m.input_groups;
  out.output_groups = m.output_groups;
  return out;
}

LtiModel conjugate(const LtiModel& m0) {
  if (m0.discrete())
    fail(ErrorCode::unsupported,
         "conjugate system supported in continuous time only");
  LtiModel m = to_standard_form(m0);
  LtiModel out;
  out.ts = m.ts;
  out.a = -m.a.transpose();
  out.b = m.c.transpose();
  out.c = -m.b.transpose();
  out.d = m.d.transpose();
  return out;
}

MatrixXcd response_at(const LtiModel& m, cplx lambda) {
  const int n = m.order();
  if (n == 0) return m.d.cast<cplx>();
  MatrixXcd pen = -m.a.cast<cplx>();
  if (m.identity_e())
    pen += lambda * MatrixXcd::Identity(n, n);
  else
    pen += lambda * m.e.cast<cplx>();
  Eigen::PartialPivLU<MatrixXcd> lu(pen);
  MatrixXcd x = lu.solve(m.b.cast<cplx>());
  return m.c.cast<cplx>() * x + m.d.cast<cplx>();
}

cplx freq_point(double omega, double ts) {
  if (ts > 0.0) return std::exp(cplx(0.0, omega * ts));
  return cplx(0.0, omega);
}

Signal time_response(const LtiModel& m0, const Signal& input,
                     const VectorXd& x0) {
  LtiModel m = to_standard_form(m0);
  const int n = m.order();
  const int ns = static_cast<int>(input.t.size());
  if (input.u.rows() != ns) fail_arg("time_response: sample count mismatch");
  if (input.u.cols() != m.inputs())
    fail_arg("time_response: input channel count mismatch");
  VectorXd x = x0.size() ? x0 : VectorXd::Zero(n);
  if (x.size() != n) fail_arg("time_response: x0 dimension mismatch");

  MatrixXd ad, bd;
  if (m.discrete() || n == 0) {
    ad = m.a;
    bd = m.b;
  } else {
    double h = ns > 1 ? input.t(1) - input.t(0) : 1.0;
    for (int k = 1; k + 1 < ns; ++k)
      if (std::abs((input.t(k + 1) - input.t(k)) - h) > 1e-9 * std::max(1.0, h))
        fail_arg("time_response: continuous simulation needs a uniform grid");
    MatrixXd aug = MatrixXd::Zero(n + m.inputs(), n + m.inputs());
    aug.topLeftCorner(n, n) = m.a * h;
    aug.topRightCorner(n, m.inputs()) = m.b * h;
    MatrixXd ex = la::expm(aug);
    ad = ex.topLeftCorner(n, n);
    bd = ex.topRightCorner(n, m.inputs());
  }

  Signal out;
  out.t = input.t;
  out.u = MatrixXd(ns, m.outputs());
  for (int k = 0; k < ns; ++k) {
    VectorXd uk = input.u.row(k).transpose();
    VectorXd yk = m.d * uk;
    if (n) yk += m.c * x;
    out.u.row(k) = yk.transpose();
    if (n) x = ad * x + bd * uk;
  }
  return out;
}

Signal step_response(const LtiModel& m, double t_final, int samples) {
  Signal grid;
  grid.t = VectorXd::LinSpaced(samples, 0.0, t_final);
  Signal out;
  out.t = grid.t;
  out.u = MatrixXd(samples, m.outputs() * m.inputs());
  for (int j = 0; j < m.inputs(); ++j) {
    Signal in;
    in.t = grid.t;
    in.u = MatrixXd::Zero(samples, m.inputs());
    in.u.col(j).setOnes();
    Signal y = time_response(m, in);
    for (int k = 0; k < m.outputs(); ++k) out.u.col(k * m.inputs() + j) = y.u.col(k);
  }
  return out;
}

LtiModel identity_model(int n, double ts) {
  LtiModel out;
  out.a = MatrixXd::Zero(0, 0);
  out.b = MatrixXd::Zero(0, n);
  out.c = MatrixXd::Zero(n, 0);
  out.d = MatrixXd::Identity(n, n);
  out.ts = ts;
  return out;
}

LtiModel zero_model(int p, int m, double ts) {
  LtiModel out;
  out.a = MatrixXd::Zero(0, 0);
  out.b = MatrixXd::Zero(0, m);
  out.c = MatrixXd::Zero(p, 0);
  out.d = MatrixXd::Zero(p, m);
  out.ts = ts;
  return out;
}

LtiModel stack_with_input_identity(const LtiModel& sys,
                                   const std::vector<int>& unit_inputs) {
  LtiModel sel = zero_model(static_cast<int>(unit_inputs.size()), sys.inputs(),
                            sys.ts);
  for (size_t i = 0; i < unit_inputs.size(); ++i) {
    check_indices({unit_inputs[i]}, sys.inputs(), "input identity");
    sel.d(static_cast<int>(i), unit_inputs[i]) = 1.0;
  }
  LtiModel out = compose(ComposeKind::stack_rows, sys, sel);
  out.input_groups = sys.input_groups;
  return out;
}

}  // namespace fdikit
