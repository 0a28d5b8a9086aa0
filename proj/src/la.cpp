#include "la.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>

namespace fdikit::la {

double default_tol(const MatrixXd& m) {
  double scale = std::max(1.0, m.cwiseAbs().colwise().sum().maxCoeff());
  return static_cast<double>(std::max(m.rows(), m.cols())) * eps * scale;
}

int rank_svd(const MatrixXd& m, double tol) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  Eigen::JacobiSVD<MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (tol <= 0.0) tol = static_cast<double>(std::max(m.rows(), m.cols())) * eps * s(0);
  int r = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > tol) ++r;
  return r;
}

int rank_svd(const MatrixXcd& m, double tol) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  Eigen::JacobiSVD<MatrixXcd> svd(m);
  const auto& s = svd.singularValues();
  if (tol <= 0.0) tol = static_cast<double>(std::max(m.rows(), m.cols())) * eps * s(0);
  int r = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > tol) ++r;
  return r;
}

MatrixXd sylvester_small(const MatrixXd& a, const MatrixXd& b,
                         const MatrixXd& c) {
  const int p = static_cast<int>(a.rows());
  const int q = static_cast<int>(b.rows());
  MatrixXd k = MatrixXd::Zero(p * q, p * q);
  // vec(a*x - x*b) = (I_q (x) a - b^T (x) I_p) vec(x), column-major vec.
  for (int j = 0; j < q; ++j)
    for (int i = 0; i < q; ++i)
      for (int r = 0; r < p; ++r) {
        for (int s = 0; s < p; ++s)
          if (i == j) k(j * p + r, i * p + s) += a(r, s);
        if (r >= 0) k(j * p + r, i * p + r) -= b(i, j);
      }
  VectorXd rhs(p * q);
  for (int j = 0; j < q; ++j)
    for (int i = 0; i < p; ++i) rhs(j * p + i) = c(i, j);
  Eigen::FullPivLU<MatrixXd> lu(k);
  if (!lu.isInvertible())
    fail(ErrorCode::numeric, "sylvester_small: singular coefficient matrix");
  VectorXd xv = lu.solve(rhs);
  MatrixXd x(p, q);
  for (int j = 0; j < q; ++j)
    for (int i = 0; i < p; ++i) x(i, j) = xv(j * p + i);
  return x;
}

namespace {

// Diagonal block sizes (1 or 2) of a real quasi-triangular matrix.
std::vector<int> block_starts(const MatrixXd& t) {
  std::vector<int> starts;
  const int n = static_cast<int>(t.rows());
  double scale = std::max(1.0, t.cwiseAbs().maxCoeff());
  int i = 0;
  while (i < n) {
    starts.push_back(i);
    if (i + 1 < n && std::abs(t(i + 1, i)) > 64.0 * eps * scale)
      i += 2;
    else
      i += 1;
  }
  return starts;
}

std::vector<cplx> block_eigs(const MatrixXd& t, int start, int size) {
  if (size == 1) return {cplx(t(start, start), 0.0)};
  double a = t(start, start), b = t(start, start + 1);
  double c = t(start + 1, start), d = t(start + 1, start + 1);
  double tr = a + d, det = a * d - b * c;
  double disc = tr * tr / 4.0 - det;
  if (disc >= 0.0) {
    double s = std::sqrt(disc);
    return {cplx(tr / 2.0 + s, 0.0), cplx(tr / 2.0 - s, 0.0)};
  }
  double s = std::sqrt(-disc);
  return {cplx(tr / 2.0, s), cplx(tr / 2.0, -s)};
}

// Swaps the adjacent diagonal blocks t[i..i+p) and t[i+p..i+p+q) of the real
// Schur form, updating t and accumulating the transformation into q_acc.
void swap_blocks(MatrixXd& t, MatrixXd& q_acc, int i, int p, int q) {
  const int m = p + q;
  MatrixXd a11 = t.block(i, i, p, p);
  MatrixXd a12 = t.block(i, i + p, p, q);
  MatrixXd a22 = t.block(i + p, i + p, q, q);
  // a11*x + a12 = x*a22  =>  a11*x - x*a22 = -a12; [x; I] spans the a22
  // invariant subspace.
  MatrixXd x = sylvester_small(a11, a22, -a12);
  MatrixXd stack(m, q);
  stack.topRows(p) = x;
  stack.bottomRows(q) = MatrixXd::Identity(q, q);
  Eigen::HouseholderQR<MatrixXd> qr(stack);
  MatrixXd g = qr.householderQ();
  const int n = static_cast<int>(t.rows());
  t.block(i, 0, m, n) = g.transpose() * t.block(i, 0, m, n);
  t.block(0, i, n, m) = t.block(0, i, n, m) * g;
  q_acc.middleCols(i, m) = q_acc.middleCols(i, m) * g;
  // Zero out the subdiagonal entries that are now structural zeros.
  t.block(i + q, i, p, q).setZero();
}

}  // namespace

OrderedSchur ordered_real_schur(const MatrixXd& a,
                                const std::function<bool(cplx)>& select) {
  const int n = static_cast<int>(a.rows());
  OrderedSchur out;
  if (n == 0) {
    out.q = MatrixXd::Identity(0, 0);
    out.t = a;
    return out;
  }
  Eigen::RealSchur<MatrixXd> schur(a);
  if (schur.info() != Eigen::Success)
    fail(ErrorCode::numeric, "real Schur decomposition failed to converge");
  out.t = schur.matrixT();
  out.q = schur.matrixU();

  // Bubble selected blocks to the front with adjacent swaps.
  int target = 0;  // row where the next selected block must land
  while (true) {
    auto starts = block_starts(out.t);
    int pick = -1;
    for (size_t b = 0; b < starts.size(); ++b) {
      if (starts[b] < target) continue;
      int size = (b + 1 < starts.size() ? starts[b + 1] : n) - starts[b];
      if (select(block_eigs(out.t, starts[b], size)[0])) {
        pick = static_cast<int>(b);
        break;
      }
    }
    if (pick < 0) break;
    // Move block `pick` up one position at a time.
    for (int b = pick; b > 0 && starts[b - 1] >= target; --b) {
      int i = starts[b - 1];
      int p = starts[b] - starts[b - 1];
      int q = (static_cast<size_t>(b) + 1 < starts.size() ? starts[b + 1] : n) -
              starts[b];
      swap_blocks(out.t, out.q, i, p, q);
      starts[b] = i + q;  // the two blocks traded places
    }
    auto fresh = block_starts(out.t);
    for (size_t b = 0; b < fresh.size(); ++b) {
      if (fresh[b] == target) {
        int size = (b + 1 < fresh.size() ? fresh[b + 1] : n) - fresh[b];
        target += size;
        break;
      }
    }
  }
  out.k = target;

  auto starts = block_starts(out.t);
  for (size_t b = 0; b < starts.size(); ++b) {
    int size = (b + 1 < starts.size() ? starts[b + 1] : n) - starts[b];
    for (const auto& ev : block_eigs(out.t, starts[b], size)) {
      out.eigenvalues.push_back(ev);
      out.selected.push_back(starts[b] < out.k);
    }
  }
  return out;
}

std::vector<cplx> eigenvalues(const MatrixXd& a) {
  if (a.rows() == 0) return {};
  Eigen::EigenSolver<MatrixXd> es(a, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    fail(ErrorCode::numeric, "eigenvalue computation failed to converge");
  std::vector<cplx> out(a.rows());
  for (int i = 0; i < a.rows(); ++i) out[i] = es.eigenvalues()(i);
  return out;
}

std::vector<cplx> pencil_eigenvalues(const MatrixXd& m, const MatrixXd& n,
                                     double tol) {
  const int sz = static_cast<int>(m.rows());
  if (sz == 0) return {};
  if (m.rows() != m.cols() || n.rows() != n.cols() || n.rows() != m.rows())
    fail_arg("pencil_eigenvalues: operands must be square and of equal size");
  double scale = std::max(m.norm(), n.norm());
  if (scale == 0.0) fail(ErrorCode::numeric, "pencil is identically zero");
  // Probe real shifts until m - sigma*n is comfortably invertible.
  const double shift_seeds[] = {0.0, 0.4142, -0.8673, 1.7321, -2.6458, 5.1623};
  for (double seed : shift_seeds) {
    double sigma = seed * scale / std::max(1.0, n.norm());
    MatrixXd ms = m - sigma * n;
    Eigen::FullPivLU<MatrixXd> lu(ms);
    lu.setThreshold(1e4 * eps);
    if (!lu.isInvertible()) continue;
    MatrixXd w = lu.solve(n);
    if (!w.allFinite()) continue;
    double wn = w.norm();
    std::vector<cplx> mu = eigenvalues(w);
    std::vector<cplx> out;
    double cut = (tol > 0.0 ? tol : sz * eps * 100.0) * std::max(1.0, wn);
    for (const auto& u : mu) {
      if (std::abs(u) <= cut) continue;  // infinite eigenvalue of the pencil
      out.push_back(sigma + 1.0 / u);
    }
    return out;
  }
  fail(ErrorCode::numeric, "pencil_eigenvalues: no admissible shift found (singular pencil?)");
}

MatrixXd stable_deflating_basis(const MatrixXd& m, const MatrixXd& n,
                                const std::function<bool(cplx)>& select,
                                int want) {
  const int sz = static_cast<int>(m.rows());
  double scale = std::max(m.norm(), n.norm());
  const double shift_seeds[] = {0.0, 0.4142, -0.8673, 1.7321, -2.6458, 5.1623};
  for (double seed : shift_seeds) {
    double sigma = seed * scale / std::max(1.0, n.norm());
    MatrixXd ms = m - sigma * n;
    Eigen::FullPivLU<MatrixXd> lu(ms);
    lu.setThreshold(1e4 * eps);
    if (!lu.isInvertible()) continue;
    MatrixXd w = lu.solve(n);
    if (!w.allFinite()) continue;
    double wn = w.norm();
    double cut = sz * eps * 100.0 * std::max(1.0, wn);
    auto sel = [&](cplx mu) {
      if (std::abs(mu) <= cut) return false;  // infinite pencil eigenvalue
      return select(sigma + 1.0 / mu);
    };
    OrderedSchur os = ordered_real_schur(w, sel);
    if (os.k != want) continue;  // wrong split; try another shift
    return os.q.leftCols(want);
  }
  fail(ErrorCode::numeric,
       "stable_deflating_basis: could not isolate the requested spectrum");
}

MatrixXd expm(const MatrixXd& a) { return a.exp(); }

}  // namespace fdikit::la
