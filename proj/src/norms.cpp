#include "norms.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>

namespace fdikit {

using numkern::TimeKind;

numkern::TimeKind time_kind(const LtiModel& m) {
  return m.discrete() ? TimeKind::discrete : TimeKind::continuous;
}

std::vector<cplx> poles(const LtiModel& m) {
  LtiModel mm = minimal_realization(m);
  return la::eigenvalues(mm.a);
}

double boundary_coordinate(cplx ev, TimeKind kind) {
  return kind == TimeKind::continuous ? ev.real() : std::abs(ev) - 1.0;
}

bool is_stable(const LtiModel& m, double margin) {
  auto kind = time_kind(m);
  for (auto ev : poles(m))
    if (boundary_coordinate(ev, kind) > -margin) return false;
  return true;
}

std::vector<cplx> probe_points(const LtiModel& m, int count) {
  // Fixed geometric frequency ladder, bent slightly off the boundary so that
  // marginally stable poles are never hit.
  std::vector<cplx> pts;
  double w = 0.1291;
  for (int i = 0; i < count; ++i) {
    if (m.discrete()) {
      double ang = 0.17 + 2.9 * static_cast<double>(i) / std::max(1, count);
      pts.push_back(0.87 * std::exp(cplx(0.0, ang)));
    } else {
      pts.push_back(cplx(0.33 + 0.11 * i, w));
    }
    w *= 2.3;
  }
  return pts;
}

int normal_rank(const LtiModel& m, double tol) {
  if (m.inputs() == 0 || m.outputs() == 0) return 0;
  int r = 0;
  for (cplx s : probe_points(m, 3)) {
    MatrixXcd h = response_at(m, s);
    Eigen::JacobiSVD<MatrixXcd> svd(h);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0) continue;
    // Absolute floor keeps numerically annihilated channels at rank zero.
    double cut = std::max({tol * sv(0),
                           static_cast<double>(std::max(h.rows(), h.cols())) *
                               la::eps * sv(0),
                           1e-9});
    int rk = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) > cut) ++rk;
    r = std::max(r, rk);
  }
  return r;
}

namespace {

// Deterministic pseudo-random stream (splitmix64) for squaring-down draws.
struct SplitMix {
  uint64_t state;
  explicit SplitMix(uint64_t seed) : state(seed) {}
  double next() {  // uniform in [-1, 1]
    state += 0x9e3779b97f4a7c15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z = z ^ (z >> 31);
    return 2.0 * (static_cast<double>(z >> 11) * (1.0 / 9007199254740992.0)) - 1.0;
  }
  MatrixXd matrix(int rows, int cols) {
    MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = next();
    return m;
  }
};

std::vector<cplx> zeros_squared_down(const LtiModel& m, int r, uint64_t seed,
                                     double tol) {
  SplitMix rng(seed);
  MatrixXd u = r == m.outputs() ? MatrixXd::Identity(r, r)
                                : rng.matrix(r, m.outputs());
  MatrixXd v = r == m.inputs() ? MatrixXd::Identity(r, r)
                               : rng.matrix(m.inputs(), r);
  const int n = m.order();
  MatrixXd mm(n + r, n + r), nn = MatrixXd::Zero(n + r, n + r);
  mm.topLeftCorner(n, n) = m.a;
  mm.topRightCorner(n, r) = m.b * v;
  mm.bottomLeftCorner(r, n) = u * m.c;
  mm.bottomRightCorner(r, r) = u * m.d * v;
  nn.topLeftCorner(n, n) =
      m.identity_e() ? MatrixXd::Identity(n, n) : m.e;
  return la::pencil_eigenvalues(mm, nn, tol);
}

}  // namespace

std::vector<cplx> zeros(const LtiModel& m0, double tol) {
  LtiModel m = minimal_realization(m0, tol);
  if (m.inputs() == 0 || m.outputs() == 0) return {};
  int r = normal_rank(m, tol);
  if (r == 0) return {};
  bool square_full = (r == m.inputs() && r == m.outputs());
  auto z1 = zeros_squared_down(m, r, 0x5eed5eed, tol);
  if (square_full) return z1;
  // Squaring down introduces generic extra zeros; intersect two draws.
  auto z2 = zeros_squared_down(m, r, 0xabcdef01, tol);
  double scale = 1.0;
  for (auto z : z1) scale = std::max(scale, std::abs(z));
  std::vector<cplx> out;
  for (auto z : z1) {
    for (auto w : z2)
      if (std::abs(z - w) < 1e-6 * scale) {
        out.push_back(z);
        break;
      }
  }
  return out;
}

GainResult gain_at(const LtiModel& m, const FreqSet& freqs) {
  auto pls = poles(m);
  GainResult out;
  out.column_gains = MatrixXd::Zero(freqs.omegas.size(), m.inputs());
  auto pts = freqs.points(m.ts);
  for (size_t k = 0; k < pts.size(); ++k) {
    for (auto p : pls)
      if (std::abs(pts[k] - p) < 1e4 * la::eps * std::max(1.0, std::abs(p)))
        fail(ErrorCode::numeric, "gain_at: frequency point coincides with a pole");
    MatrixXcd h = response_at(m, pts[k]);
    for (int j = 0; j < m.inputs(); ++j)
      out.column_gains(k, j) = h.col(j).norm();
    out.responses.push_back(std::move(h));
  }
  return out;
}

namespace {

double sigma_max(const MatrixXcd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXcd> svd(m);
  return svd.singularValues()(0);
}

}  // namespace

// Bilinear map z = (1+s)/(1-s) pulling a discrete system back to a
// continuous one with the same sup-norm over the stability boundary.
LtiModel bilinear_to_continuous(const LtiModel& md) {
  LtiModel m = to_standard_form(md);
  const int n = m.order();
  MatrixXd ep = MatrixXd::Identity(n, n) + m.a;
  Eigen::FullPivLU<MatrixXd> lu(ep);
  if (!lu.isInvertible())
    fail(ErrorCode::numeric, "bilinear transform: -1 is an eigenvalue of A");
  MatrixXd ap = m.a - MatrixXd::Identity(n, n);
  MatrixXd einv_a = lu.solve(ap);
  MatrixXd einv_b = lu.solve(m.b);
  LtiModel out;
  out.ts = 0.0;
  out.a = einv_a;
  out.b = einv_b;
  out.c = m.c - m.c * einv_a;
  out.d = m.d - m.c * einv_b;
  return out;
}

NormResult norm_hinf(const LtiModel& m0, double offset) {
  LtiModel m = minimal_realization(m0);
  if (m.inputs() == 0 || m.outputs() == 0) return {0.0, 0.0};
  auto kind = time_kind(m);
  for (auto p : poles(m))
    if (std::abs(boundary_coordinate(p, kind)) < offset)
      fail(ErrorCode::numeric, "norm_hinf: pole on the stability boundary");

  if (m.discrete()) {
    double ts = m.ts;
    NormResult rc = norm_hinf(bilinear_to_continuous(m), offset);
    // Map the continuous peak frequency back to the unit circle.
    cplx z = (cplx(1.0, rc.peak_frequency)) / (cplx(1.0, -rc.peak_frequency));
    rc.peak_frequency = std::abs(std::arg(z)) / ts;
    return rc;
  }

  if (m.order() == 0) {
    Eigen::JacobiSVD<MatrixXd> svd(m.d);
    return {svd.singularValues().size() ? svd.singularValues()(0) : 0.0, 0.0};
  }

  // Lower bound from a frequency sweep seeded by pole locations.
  std::vector<double> wtrial = {0.0};
  for (auto p : poles(m)) {
    double w = std::abs(p.imag()) > 1e-8 ? std::abs(p.imag()) : std::abs(p);
    if (w > 0.0) wtrial.push_back(w);
  }
  for (double w = 1e-3; w < 1e4; w *= 10.0) wtrial.push_back(w);
  double glb = 0.0, wpeak = 0.0;
  for (double w : wtrial) {
    double s = sigma_max(response_at(m, cplx(0.0, w)));
    if (s > glb) {
      glb = s;
      wpeak = w;
    }
  }
  double dmax = sigma_max(m.d.cast<cplx>());
  glb = std::max(glb, dmax);

  const double tol = 1e-7;
  const int p = m.outputs(), q = m.inputs(), n = m.order();
  for (int iter = 0; iter < 60; ++iter) {
    double gamma = (1.0 + 2.0 * tol) * std::max(glb, 1e-300);
    if (gamma <= dmax * (1.0 + 1e-12)) gamma = dmax * (1.0 + 1e-8) + 1e-300;
    MatrixXd r = gamma * gamma * MatrixXd::Identity(q, q) -
                 m.d.transpose() * m.d;
    Eigen::FullPivLU<MatrixXd> rlu(r);
    if (!rlu.isInvertible()) {
      glb = gamma * (1.0 + 10.0 * tol);
      continue;
    }
    MatrixXd rinv_bt = rlu.solve(m.b.transpose());
    MatrixXd ah = m.a + m.b * rlu.solve(m.d.transpose() * m.c);
    MatrixXd ham(2 * n, 2 * n);
    ham.topLeftCorner(n, n) = ah;
    ham.topRightCorner(n, n) = m.b * rinv_bt;
    ham.bottomLeftCorner(n, n) =
        -m.c.transpose() * (MatrixXd::Identity(p, p) +
                            m.d * rlu.solve(m.d.transpose())) * m.c;
    ham.bottomRightCorner(n, n) = -ah.transpose();

    double hscale = std::max(1.0, ham.norm());
    std::vector<double> wcross;
    for (auto ev : la::eigenvalues(ham))
      if (std::abs(ev.real()) < 1e-8 * hscale && ev.imag() > 1e-12 * hscale)
        wcross.push_back(ev.imag());
    if (wcross.empty()) break;
    std::sort(wcross.begin(), wcross.end());
    double best = glb;
    for (size_t i = 0; i + 1 <= wcross.size(); ++i) {
      double wm = (i + 1 < wcross.size())
                      ? std::sqrt(wcross[i] * wcross[i + 1])
                      : wcross[i];
      double s = sigma_max(response_at(m, cplx(0.0, wm)));
      if (s > best) {
        best = s;
        wpeak = wm;
      }
    }
    if (best <= glb * (1.0 + tol / 2.0)) break;
    glb = best;
  }

  // Golden-section refinement of the peak on a local bracket.
  double lo = wpeak > 0.0 ? wpeak / 4.0 : 0.0;
  double hi = wpeak > 0.0 ? wpeak * 4.0 : 1.0;
  const double gr = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = sigma_max(response_at(m, cplx(0.0, x1)));
  double f2 = sigma_max(response_at(m, cplx(0.0, x2)));
  for (int it = 0; it < 80 && (b - a) > 1e-9 * std::max(1.0, b); ++it) {
    if (f1 < f2) {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + gr * (b - a);
      f2 = sigma_max(response_at(m, cplx(0.0, x2)));
    } else {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - gr * (b - a);
      f1 = sigma_max(response_at(m, cplx(0.0, x1)));
    }
  }
  double wref = 0.5 * (a + b);
  double fref = sigma_max(response_at(m, cplx(0.0, wref)));
  if (fref > glb) {
    glb = fref;
    wpeak = wref;
  }
  if (dmax >= glb) {
    glb = dmax;
    wpeak = std::numeric_limits<double>::infinity();
  }
  return {glb, wpeak};
}

double norm_h2(const LtiModel& m0) {
  LtiModel m = minimal_realization(m0);
  if (m.inputs() == 0 || m.outputs() == 0) return 0.0;
  auto kind = time_kind(m);
  if (!is_stable(m))
    fail(ErrorCode::numeric, "norm_h2: system is unstable");
  if (kind == TimeKind::continuous && m.d.cwiseAbs().maxCoeff() > 0.0) {
    if (m.d.cwiseAbs().maxCoeff() >
        1e-10 * std::max(1.0, m.c.size() ? m.c.norm() : 0.0))
      fail(ErrorCode::numeric,
           "norm_h2: continuous-time system must be strictly proper");
  }
  if (m.order() == 0)
    return kind == TimeKind::continuous ? 0.0 : m.d.norm();
  MatrixXd p = numkern::solve_lyapunov_dual(m.a, MatrixXd(),
                                            m.b * m.b.transpose(), kind);
  double tr = (m.c * p * m.c.transpose()).trace();
  if (kind == TimeKind::discrete) tr += m.d.squaredNorm();
  return std::sqrt(std::max(0.0, tr));
}

double hinf_minus_index(const LtiModel& m, const FreqSet& freqs) {
  if (m.inputs() == 0) return 0.0;
  if (!freqs.empty()) {
    GainResult g = gain_at(m, freqs);
    double out = std::numeric_limits<double>::infinity();
    for (int j = 0; j < m.inputs(); ++j)
      out = std::min(out, g.column_gains.col(j).minCoeff());
    return out;
  }
  if (!is_stable(m))
    fail(ErrorCode::numeric,
         "hinf_minus_index: system must be stable when no frequencies given");
  double out = std::numeric_limits<double>::infinity();
  for (int j = 0; j < m.inputs(); ++j) {
    LtiModel col = select_columns(m, {j});
    out = std::min(out, norm_hinf(col).value);
  }
  return out;
}

}  // namespace fdikit
