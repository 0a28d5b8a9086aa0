#include "numkern.hpp"

#include <Eigen/LU>

#include <cmath>

namespace fdikit::numkern {

using la::VectorXd;

SpectralSplit spectral_split(const MatrixXd& a, const MatrixXd& e,
                             const std::function<bool(cplx)>& inside) {
  if (a.rows() != a.cols()) fail_arg("spectral_split: A must be square");
  MatrixXd work = a;
  if (e.size() != 0) {
    Eigen::FullPivLU<MatrixXd> lu(e);
    lu.setThreshold(1e3 * la::eps);
    if (!lu.isInvertible())
      fail(ErrorCode::unsupported, "spectral_split: singular E");
    work = lu.solve(a);
  }
  la::OrderedSchur os = la::ordered_real_schur(work, inside);
  SpectralSplit out;
  out.q = os.q;
  out.z = os.q;
  out.t = os.t;
  out.k = os.k;
  out.eigenvalues = os.eigenvalues;
  out.selected = os.selected;
  return out;
}

SpectralSplit spectral_split_stable(const MatrixXd& a, const MatrixXd& e,
                                    TimeKind kind) {
  return spectral_split(a, e, [kind](cplx ev) { return stable_eig(ev, kind); });
}

namespace {

// Solves a*y*b - y = c (small blocks, Kronecker expansion).
MatrixXd stein_small(const MatrixXd& a, const MatrixXd& b, const MatrixXd& c) {
  const int p = static_cast<int>(a.rows());
  const int q = static_cast<int>(b.cols());
  MatrixXd k = MatrixXd::Zero(p * q, p * q);
  for (int j = 0; j < q; ++j)
    for (int i = 0; i < p; ++i)
      for (int l = 0; l < q; ++l)
        for (int s = 0; s < p; ++s) {
          k(j * p + i, l * p + s) += a(i, s) * b(l, j);
          if (i == s && j == l) k(j * p + i, l * p + s) -= 1.0;
        }
  VectorXd rhs(p * q);
  for (int j = 0; j < q; ++j)
    for (int i = 0; i < p; ++i) rhs(j * p + i) = c(i, j);
  Eigen::FullPivLU<MatrixXd> lu(k);
  if (!lu.isInvertible())
    fail(ErrorCode::numeric, "stein_small: singular coefficient matrix");
  VectorXd xv = lu.solve(rhs);
  MatrixXd x(p, q);
  for (int j = 0; j < q; ++j)
    for (int i = 0; i < p; ++i) x(i, j) = xv(j * p + i);
  return x;
}

std::vector<int> schur_blocks(const MatrixXd& t) {
  std::vector<int> starts;
  const int n = static_cast<int>(t.rows());
  double scale = std::max(1.0, t.cwiseAbs().maxCoeff());
  int i = 0;
  while (i < n) {
    starts.push_back(i);
    i += (i + 1 < n && std::abs(t(i + 1, i)) > 64.0 * la::eps * scale) ? 2 : 1;
  }
  starts.push_back(n);
  return starts;
}

// Bartels-Stewart on the Schur form: solves T^T Y + Y T = C (continuous) or
// T^T Y T - Y = C (discrete).
MatrixXd schur_lyap(const MatrixXd& t, const MatrixXd& c, TimeKind kind) {
  auto starts = schur_blocks(t);
  const int nb = static_cast<int>(starts.size()) - 1;
  MatrixXd y = MatrixXd::Zero(t.rows(), t.rows());
  for (int bj = 0; bj < nb; ++bj) {
    int j0 = starts[bj], js = starts[bj + 1] - j0;
    for (int bi = 0; bi < nb; ++bi) {
      int i0 = starts[bi], is = starts[bi + 1] - i0;
      MatrixXd rhs = c.block(i0, j0, is, js);
      if (kind == TimeKind::continuous) {
        // rhs -= sum_{k<i} T(k,i)^T Y(k,j) + sum_{k<j} Y(i,k) T(k,j)
        if (i0 > 0) rhs -= t.block(0, i0, i0, is).transpose() * y.block(0, j0, i0, js);
        if (j0 > 0) rhs -= y.block(i0, 0, is, j0) * t.block(0, j0, j0, js);
        MatrixXd yij = la::sylvester_small(t.block(i0, i0, is, is).transpose(),
                                           -t.block(j0, j0, js, js), rhs);
        y.block(i0, j0, is, js) = yij;
      } else {
        // T^T Y T: contributions from all blocks (k <= i, l <= j) except the
        // unknown one.
        int iend = i0 + is, jend = j0 + js;
        MatrixXd acc = t.block(0, i0, iend, is).transpose() *
                       y.topLeftCorner(iend, jend) * t.block(0, j0, jend, js);
        MatrixXd tii = t.block(i0, i0, is, is);
        MatrixXd tjj = t.block(j0, j0, js, js);
        acc -= tii.transpose() * y.block(i0, j0, is, js) * tjj;
        rhs -= acc;
        y.block(i0, j0, is, js) =
            stein_small(tii.transpose(), tjj, rhs);
      }
    }
  }
  return y;
}

}  // namespace

MatrixXd solve_lyapunov(const MatrixXd& a, const MatrixXd& e,
                        const MatrixXd& q, TimeKind kind) {
  if (a.rows() != a.cols() || q.rows() != q.cols() || q.rows() != a.rows())
    fail_arg("solve_lyapunov: dimension mismatch");
  const int n = static_cast<int>(a.rows());
  if (n == 0) return MatrixXd::Zero(0, 0);
  MatrixXd atil = a;
  MatrixXd einv;
  if (e.size() != 0) {
    Eigen::FullPivLU<MatrixXd> lu(e);
    lu.setThreshold(1e3 * la::eps);
    if (!lu.isInvertible()) fail(ErrorCode::unsupported, "solve_lyapunov: singular E");
    atil = lu.solve(a);
    einv = lu.inverse();
  }
  for (auto ev : la::eigenvalues(atil))
    if (!stable_eig(ev, kind))
      fail(ErrorCode::numeric, "solve_lyapunov: pencil is not stable");

  la::OrderedSchur os = la::ordered_real_schur(atil, [](cplx) { return false; });
  MatrixXd qt = os.q.transpose() * (-q) * os.q;
  MatrixXd y = schur_lyap(os.t, qt, kind);
  y = os.q * y * os.q.transpose();
  MatrixXd x = y;
  if (einv.size() != 0) x = einv.transpose() * y * einv;
  return 0.5 * (x + x.transpose());
}

MatrixXd solve_lyapunov_dual(const MatrixXd& a, const MatrixXd& e,
                             const MatrixXd& q, TimeKind kind) {
  MatrixXd et = e.size() ? MatrixXd(e.transpose()) : MatrixXd();
  return solve_lyapunov(a.transpose(), et, q, kind);
}

RiccatiResult solve_riccati(const MatrixXd& a, const MatrixXd& b,
                            const MatrixXd& q, const MatrixXd& r,
                            TimeKind kind) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(b.cols());
  if (a.cols() != n || b.rows() != n || q.rows() != n || q.cols() != n ||
      r.rows() != m || r.cols() != m)
    fail_arg("solve_riccati: dimension mismatch");
  Eigen::LLT<MatrixXd> rchol(r);
  if (rchol.info() != Eigen::Success)
    fail_arg("solve_riccati: R must be symmetric positive definite");
  MatrixXd g = b * rchol.solve(b.transpose());

  double scale = std::max({1.0, a.norm(), g.norm(), q.norm()});
  const double boundary_tol = 1e-8 * scale;
  MatrixXd u;
  if (kind == TimeKind::continuous) {
    MatrixXd ham(2 * n, 2 * n);
    ham << a, -g, -q, -a.transpose();
    auto evs = la::eigenvalues(ham);
    for (auto ev : evs)
      if (std::abs(ev.real()) < boundary_tol && std::abs(ev.imag()) < 1e6 * scale)
        fail(ErrorCode::numeric,
             "solve_riccati: Hamiltonian eigenvalue on the imaginary axis");
    la::OrderedSchur os = la::ordered_real_schur(
        ham, [](cplx ev) { return ev.real() < 0.0; });
    if (os.k != n)
      fail(ErrorCode::numeric,
           "solve_riccati: no n-dimensional stable invariant subspace");
    u = os.q.leftCols(n);
  } else {
    MatrixXd mm = MatrixXd::Zero(2 * n, 2 * n), nn = MatrixXd::Zero(2 * n, 2 * n);
    mm.topLeftCorner(n, n) = a;
    mm.bottomLeftCorner(n, n) = -q;
    mm.bottomRightCorner(n, n) = MatrixXd::Identity(n, n);
    nn.topLeftCorner(n, n) = MatrixXd::Identity(n, n);
    nn.topRightCorner(n, n) = g;
    nn.bottomRightCorner(n, n) = a.transpose();
    auto evs = la::pencil_eigenvalues(mm, nn);
    for (auto ev : evs)
      if (std::abs(std::abs(ev) - 1.0) < boundary_tol / scale)
        fail(ErrorCode::numeric,
             "solve_riccati: symplectic pencil eigenvalue on the unit circle");
    u = la::stable_deflating_basis(
        mm, nn, [](cplx ev) { return std::abs(ev) < 1.0; }, n);
  }

  MatrixXd u1 = u.topRows(n), u2 = u.bottomRows(n);
  Eigen::FullPivLU<MatrixXd> lu(u1);
  if (!lu.isInvertible())
    fail(ErrorCode::numeric, "solve_riccati: singular U11, no stabilizing solution");
  MatrixXd x = lu.solve(MatrixXd::Identity(n, n)).transpose() * u2.transpose();
  x = 0.5 * (x + x.transpose());

  RiccatiResult out;
  out.x = x;
  if (kind == TimeKind::continuous) {
    out.gain = rchol.solve(b.transpose() * x);
    MatrixXd res = a.transpose() * x + x * a - x * g * x + q;
    if (res.norm() > 1e-6 * std::max(1.0, x.norm()) * scale)
      fail(ErrorCode::numeric, "solve_riccati: residual check failed");
  } else {
    MatrixXd rb = r + b.transpose() * x * b;
    out.gain = rb.ldlt().solve(b.transpose() * x * a);
    MatrixXd res = a.transpose() * x * a - x -
                   a.transpose() * x * b * rb.ldlt().solve(b.transpose() * x * a) + q;
    if (res.norm() > 1e-6 * std::max(1.0, x.norm()) * scale)
      fail(ErrorCode::numeric, "solve_riccati: residual check failed");
  }
  return out;
}

}  // namespace fdikit::numkern
