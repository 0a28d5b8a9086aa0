#include "facts.hpp"

#include <Eigen/QR>

#include <cmath>

namespace fdikit {

using numkern::TimeKind;

namespace {

struct BlockInfo {
  int start;
  int size;
  cplx eig;
};

std::vector<BlockInfo> diag_blocks(const MatrixXd& t) {
  std::vector<BlockInfo> out;
  const int n = static_cast<int>(t.rows());
  double scale = std::max(1.0, t.cwiseAbs().maxCoeff());
  int i = 0;
  while (i < n) {
    if (i + 1 < n && std::abs(t(i + 1, i)) > 64.0 * la::eps * scale) {
      double a = t(i, i), b = t(i, i + 1), c = t(i + 1, i), dd = t(i + 1, i + 1);
      double tr = (a + dd) / 2.0, det = a * dd - b * c;
      double disc = tr * tr - det;
      cplx ev = disc >= 0 ? cplx(tr + std::sqrt(disc), 0.0)
                          : cplx(tr, std::sqrt(-disc));
      out.push_back({i, 2, ev});
      i += 2;
    } else {
      out.push_back({i, 1, cplx(t(i, i), 0.0)});
      i += 1;
    }
  }
  return out;
}

// Swap the adjacent blocks at (i,p) and (i+p,q) of a quasi-triangular t,
// accumulating into q_acc (same construction as the ordered Schur).
void swap_adjacent(MatrixXd& t, MatrixXd& q_acc, int i, int p, int q) {
  MatrixXd a11 = t.block(i, i, p, p);
  MatrixXd a12 = t.block(i, i + p, p, q);
  MatrixXd a22 = t.block(i + p, i + p, q, q);
  MatrixXd x = la::sylvester_small(a11, a22, -a12);
  MatrixXd stack(p + q, q);
  stack.topRows(p) = x;
  stack.bottomRows(q) = MatrixXd::Identity(q, q);
  Eigen::HouseholderQR<MatrixXd> qr(stack);
  MatrixXd g = qr.householderQ();
  const int n = static_cast<int>(t.rows());
  t.block(i, 0, p + q, n) = g.transpose() * t.block(i, 0, p + q, n);
  t.block(0, i, n, p + q) = t.block(0, i, n, p + q) * g;
  q_acc.middleCols(i, p + q) = q_acc.middleCols(i, p + q) * g;
  t.block(i + q, i, p, q).setZero();
}

MatrixXd sqrt_sym(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

struct FilterGain {
  MatrixXd k;   // output-injection gain
  MatrixXd re;  // boundary weight: D D^T (continuous) or C X C^T + D D^T
};

// Stabilizing gain of the filter-type Riccati equation for the spectral
// factorization G G~ = Go Go~; rr = D D^T must be positive definite.
FilterGain filter_riccati_gain(const LtiModel& m, const MatrixXd& rr,
                               TimeKind kind) {
  const int q = m.outputs();
  const int n = m.order();
  Eigen::LLT<MatrixXd> chol(rr);
  if (chol.info() != Eigen::Success)
    fail(ErrorCode::numeric, "spectral factorization: D D^T is singular");
  FilterGain out;
  if (n == 0) {
    out.k = MatrixXd::Zero(0, q);
    out.re = rr;
    return out;
  }
  MatrixXd ahat = (m.a - m.b * m.d.transpose() * chol.solve(m.c)).transpose();
  MatrixXd bhat = m.c.transpose();
  MatrixXd qhat = m.b * (MatrixXd::Identity(m.inputs(), m.inputs()) -
                         m.d.transpose() * chol.solve(m.d)) * m.b.transpose();
  qhat = 0.5 * (qhat + qhat.transpose());
  auto ric = numkern::solve_riccati(ahat, bhat, qhat, rr, kind);
  if (kind == TimeKind::continuous) {
    out.re = rr;
    out.k = (ric.x * m.c.transpose() + m.b * m.d.transpose()) *
            chol.solve(MatrixXd::Identity(q, q));
  } else {
    out.re = m.c * ric.x * m.c.transpose() + rr;
    out.k = (m.a * ric.x * m.c.transpose() + m.b * m.d.transpose()) *
            out.re.ldlt().solve(MatrixXd::Identity(q, q));
  }
  return out;
}

}  // namespace

LcfResult lcf_stabilize(const LtiModel& sys, const StabilizeOpts& opts) {
  LtiModel m = minimal_realization(sys);
  const auto kind = time_kind(m);
  const int n = m.order();
  const int p = m.outputs();
  const double thr = opts.move_threshold(m.ts);
  auto is_bad = [&](cplx ev) {
    return boundary_coordinate(ev, kind) > thr + 1e-12;
  };
  auto place = opts.placement(m.ts);
  for (cplx t : place)
    if (boundary_coordinate(t, kind) > -1e-10)
      fail_arg("lcf_stabilize: requested pole on or outside the stability boundary");

  LcfResult out;
  if (n == 0) {
    out.n = m;
    out.m = identity_model(p, m.ts);
    return out;
  }

  la::OrderedSchur os = la::ordered_real_schur(m.a, is_bad);
  MatrixXd t = os.t, q = os.q;
  MatrixXd k_total = MatrixXd::Zero(n, p);
  size_t place_idx = 0;
  auto next_target = [&]() {
    cplx v = place[place_idx % place.size()];
    ++place_idx;
    return v;
  };

  int moved = 0;
  while (true) {
    auto blocks = diag_blocks(t);
    int pick = -1;
    for (size_t b = 0; b < blocks.size(); ++b)
      if (is_bad(blocks[b].eig)) {
        pick = static_cast<int>(b);
        break;
      }
    if (pick < 0) break;
    // Bring the offending block to the leading position.
    while (pick > 0) {
      auto bl = diag_blocks(t);
      swap_adjacent(t, q, bl[pick - 1].start, bl[pick - 1].size,
                    bl[pick].size);
      --pick;
    }
    auto bl = diag_blocks(t);
    int s = bl[0].size;
    MatrixXd ctil = m.c * q;
    MatrixXd c0 = ctil.leftCols(s);
    MatrixXd w(s, s);
    if (s == 1) {
      w(0, 0) = next_target().real();
    } else {
      cplx tg = next_target();
      if (std::abs(tg.imag()) > 1e-12) {
        w << tg.real(), tg.imag(), -tg.imag(), tg.real();
      } else {
        double t2 = next_target().real();
        w << tg.real(), 0.0, 0.0, t2;
      }
    }
    MatrixXd rhs = t.topLeftCorner(s, s) - w;
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(c0.transpose());
    MatrixXd k0 = cod.solve(rhs.transpose()).transpose();
    if ((k0 * c0 - rhs).norm() > 1e-6 * std::max(1.0, rhs.norm()))
      fail(ErrorCode::numeric,
           "lcf_stabilize: unobservable eigenvalue outside the admissible region");
    t.topRows(s) -= k0 * ctil;
    k_total += q.leftCols(s) * k0;
    moved += s;
  }

  MatrixXd ak = m.a - k_total * m.c;
  out.moved = moved;
  out.n = m;
  out.n.a = ak;
  out.n.b = m.b - k_total * m.d;
  out.m = LtiModel{};
  out.m.ts = m.ts;
  out.m.a = ak;
  out.m.b = -k_total;
  out.m.c = m.c;
  out.m.d = MatrixXd::Identity(p, p);
  out.m = minimal_realization(out.m);
  return out;
}

LtiModel stabilized(const LtiModel& sys, const StabilizeOpts& opts) {
  return lcf_stabilize(sys, opts).n;
}

LtiModel inverse_square(const LtiModel& g) {
  if (g.outputs() != g.inputs()) fail_arg("inverse: system must be square");
  Eigen::FullPivLU<MatrixXd> lu(g.d);
  if (!lu.isInvertible())
    fail(ErrorCode::numeric, "inverse: feedthrough is singular");
  MatrixXd dinv = lu.inverse();
  LtiModel out;
  out.ts = g.ts;
  out.a = g.a - g.b * dinv * g.c;
  out.b = g.b * dinv;
  out.c = -dinv * g.c;
  out.d = dinv;
  return out;
}

MatrixXcd left_fraction_response(const LcfResult& f, cplx s) {
  MatrixXcd mm = response_at(f.m, s);
  return mm.partialPivLu().solve(response_at(f.n, s));
}

CoouterCoinner coouter_coinner(const LtiModel& sys, double offset) {
  if (!is_stable(sys))
    fail(ErrorCode::numeric, "coouter_coinner: input system must be stable");
  LtiModel m = minimal_realization(sys);
  const auto kind = time_kind(m);
  const int q = m.outputs();
  CoouterCoinner out;
  out.rank = normal_rank(m);
  if (out.rank == 0) {
    out.outer = identity_model(q, m.ts);
    out.inner = zero_model(q, m.inputs(), m.ts);
    return out;
  }
  if (out.rank < q)
    fail(ErrorCode::unsupported,
         "coouter_coinner: row-rank-deficient systems are not supported");

  MatrixXd r = m.d * m.d.transpose();
  double scale = std::max({1.0, m.a.norm(), m.b.norm(), m.d.norm()});
  bool regularized = false;
  for (int attempt = 0; attempt < 3; ++attempt) {
    MatrixXd rr = r;
    if (attempt > 0) {
      double epsreg = std::pow(10.0, -8 + 3 * attempt) * scale * scale;
      rr += epsreg * MatrixXd::Identity(q, q);
      regularized = true;
    }
    try {
      FilterGain fg = filter_riccati_gain(m, rr, kind);
      MatrixXd rhalf = sqrt_sym(fg.re);
      MatrixXd rhalf_inv = rhalf.ldlt().solve(MatrixXd::Identity(q, q));

      out.outer = LtiModel{};
      out.outer.ts = m.ts;
      out.outer.a = m.a;
      out.outer.b = fg.k * rhalf;
      out.outer.c = m.c;
      out.outer.d = rhalf;

      out.inner = LtiModel{};
      out.inner.ts = m.ts;
      out.inner.a = m.a - fg.k * m.c;
      out.inner.b = m.b - fg.k * m.d;
      out.inner.c = rhalf_inv * m.c;
      out.inner.d = rhalf_inv * m.d;

      out.nonstandard = regularized;
      for (auto z : zeros(out.outer))
        if (std::abs(boundary_coordinate(z, kind)) < offset)
          out.nonstandard = true;
      return out;
    } catch (const Error&) {
      continue;  // retry with a regularized boundary weight
    }
  }
  fail(ErrorCode::numeric, "coouter_coinner: spectral factorization failed");
}

CoprimeFactors normalized_coprime(const LtiModel& sys, CoprimeSide side) {
  if (side == CoprimeSide::right) {
    LtiModel tr;
    tr.ts = sys.ts;
    tr.a = sys.a.transpose();
    if (sys.e.size()) tr.e = sys.e.transpose();
    tr.b = sys.c.transpose();
    tr.c = sys.b.transpose();
    tr.d = sys.d.transpose();
    CoprimeFactors lf = normalized_coprime(tr, CoprimeSide::left);
    auto transpose_model = [](const LtiModel& g) {
      LtiModel t;
      t.ts = g.ts;
      t.a = g.a.transpose();
      if (g.e.size()) t.e = g.e.transpose();
      t.b = g.c.transpose();
      t.c = g.b.transpose();
      t.d = g.d.transpose();
      return t;
    };
    CoprimeFactors out;
    out.n = transpose_model(lf.n);
    out.m = transpose_model(lf.m);
    return out;
  }

  // Left factors are read off the co-inner factor of [G I]; the boundary
  // weight D D^T + I is always positive definite, and the stabilizing gain
  // handles unstable G as long as (A, C) is detectable.
  LtiModel m0 = minimal_realization(to_standard_form(sys));
  LtiModel ext = compose(ComposeKind::augment_columns, m0,
                         identity_model(m0.outputs(), m0.ts));
  ext = minimal_realization(ext);
  MatrixXd rr = ext.d * ext.d.transpose();
  FilterGain fg = filter_riccati_gain(ext, rr, time_kind(ext));
  MatrixXd rhalf = sqrt_sym(fg.re);
  MatrixXd rhalf_inv = rhalf.ldlt().solve(
      MatrixXd::Identity(ext.outputs(), ext.outputs()));
  LtiModel inner;
  inner.ts = ext.ts;
  inner.a = ext.a - fg.k * ext.c;
  inner.b = ext.b - fg.k * ext.d;
  inner.c = rhalf_inv * ext.c;
  inner.d = rhalf_inv * ext.d;

  CoprimeFactors out;
  std::vector<int> ncols, mcols;
  for (int j = 0; j < m0.inputs(); ++j) ncols.push_back(j);
  for (int j = 0; j < m0.outputs(); ++j) mcols.push_back(m0.inputs() + j);
  out.n = select_columns(inner, ncols);
  out.m = select_columns(inner, mcols);
  return out;
}

}  // namespace fdikit
