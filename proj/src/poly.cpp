#include "poly.hpp"

#include <algorithm>
#include <cmath>

namespace fdikit::poly {

int degree(const Poly& p, double tol) {
  double scale = 0.0;
  for (double c : p) scale = std::max(scale, std::abs(c));
  if (scale == 0.0) return -1;
  if (tol <= 0.0) tol = 1e-12 * scale;
  for (int k = static_cast<int>(p.size()) - 1; k >= 0; --k)
    if (std::abs(p[k]) > tol) return k;
  return -1;
}

Poly trim(const Poly& p, double tol) {
  int d = degree(p, tol);
  if (d < 0) return {0.0};
  return Poly(p.begin(), p.begin() + d + 1);
}

Poly add(const Poly& a, const Poly& b) {
  Poly out(std::max(a.size(), b.size()), 0.0);
  for (size_t i = 0; i < a.size(); ++i) out[i] += a[i];
  for (size_t i = 0; i < b.size(); ++i) out[i] += b[i];
  return out;
}

Poly mul(const Poly& a, const Poly& b) {
  if (a.empty() || b.empty()) return {0.0};
  Poly out(a.size() + b.size() - 1, 0.0);
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

Poly scale(const Poly& a, double s) {
  Poly out = a;
  for (double& c : out) c *= s;
  return out;
}

cplx eval(const Poly& p, cplx x) {
  cplx acc = 0.0;
  for (int k = static_cast<int>(p.size()) - 1; k >= 0; --k)
    acc = acc * x + p[k];
  return acc;
}

std::vector<cplx> roots(const Poly& p0) {
  Poly p = trim(p0);
  int d = degree(p);
  if (d <= 0) return {};
  MatrixXd comp = MatrixXd::Zero(d, d);
  for (int i = 1; i < d; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < d; ++i) comp(0, i) = -p[d - 1 - i] / p[d];
  return la::eigenvalues(comp);
}

Poly from_roots(const std::vector<cplx>& rts) {
  Poly out = {1.0};
  std::vector<cplx> pending = rts;
  while (!pending.empty()) {
    cplx r = pending.back();
    pending.pop_back();
    if (std::abs(r.imag()) < 1e-12 * std::max(1.0, std::abs(r))) {
      out = mul(out, {-r.real(), 1.0});
      continue;
    }
    // find and consume the conjugate partner
    auto it = std::min_element(pending.begin(), pending.end(),
                               [&](cplx a, cplx b) {
                                 return std::abs(a - std::conj(r)) <
                                        std::abs(b - std::conj(r));
                               });
    if (it == pending.end() ||
        std::abs(*it - std::conj(r)) > 1e-6 * std::max(1.0, std::abs(r)))
      fail(ErrorCode::numeric, "from_roots: complex roots must come in pairs");
    pending.erase(it);
    out = mul(out, {std::norm(r), -2.0 * r.real(), 1.0});
  }
  return out;
}

Poly divide(const Poly& a0, const Poly& b0) {
  Poly a = trim(a0), b = trim(b0);
  int da = degree(a), db = degree(b);
  if (db < 0) fail_arg("polynomial division by zero");
  if (da < db) return {0.0};
  Poly q(da - db + 1, 0.0);
  for (int k = da - db; k >= 0; --k) {
    double c = a[k + db] / b[db];
    q[k] = c;
    for (int j = 0; j <= db; ++j) a[k + j] -= c * b[j];
  }
  return q;
}

void reduce_fraction(Poly& num, Poly& den, double tol) {
  num = trim(num);
  den = trim(den);
  if (degree(num) < 0) {
    den = {1.0};
    return;
  }
  bool changed = true;
  while (changed && degree(den) > 0) {
    changed = false;
    for (cplx r : roots(den)) {
      double sn = 0.0;
      for (double c : num) sn = std::max(sn, std::abs(c));
      double scale = sn * std::pow(1.0 + std::abs(r), degree(num));
      if (std::abs(eval(num, r)) > tol * std::max(1.0, scale)) continue;
      Poly factor;
      if (std::abs(r.imag()) < 1e-9 * (1.0 + std::abs(r)))
        factor = {-r.real(), 1.0};
      else
        factor = {std::norm(r), -2.0 * r.real(), 1.0};
      double dn = 0.0;
      for (double c : den) dn = std::max(dn, std::abs(c));
      double dscale = dn * std::pow(1.0 + std::abs(r), degree(den));
      if (std::abs(eval(den, r)) > 1e-8 * std::max(1.0, dscale)) continue;
      num = divide(num, factor);
      den = divide(den, factor);
      changed = true;
      break;
    }
  }
}

int PolyRow::degree(double tol) const {
  double scale = coeff.size() ? coeff.cwiseAbs().maxCoeff() : 0.0;
  if (scale == 0.0) return -1;
  if (tol <= 0.0) tol = 1e-11 * scale;
  for (int k = static_cast<int>(coeff.rows()) - 1; k >= 0; --k)
    if (coeff.row(k).cwiseAbs().maxCoeff() > tol) return k;
  return -1;
}

Eigen::RowVectorXcd PolyRow::eval(cplx x) const {
  Eigen::RowVectorXcd acc = Eigen::RowVectorXcd::Zero(coeff.cols());
  for (int k = static_cast<int>(coeff.rows()) - 1; k >= 0; --k)
    acc = acc * x + coeff.row(k).cast<cplx>();
  return acc;
}

PolyRow combine(const std::vector<PolyRow>& rows, const MatrixXd& h_row) {
  if (rows.empty()) fail_arg("combine: no rows");
  int width = rows.front().width();
  int maxdeg = 0;
  for (const auto& r : rows)
    maxdeg = std::max(maxdeg, static_cast<int>(r.coeff.rows()) - 1);
  PolyRow out;
  out.coeff = MatrixXd::Zero(maxdeg + 1, width);
  for (size_t i = 0; i < rows.size(); ++i)
    out.coeff.topRows(rows[i].coeff.rows()) += h_row(0, static_cast<int>(i)) *
                                               rows[i].coeff;
  return out;
}

LtiModel realize_row_over_den(const PolyRow& row, const Poly& den0, double ts) {
  Poly den = trim(den0);
  const int d = degree(den);
  if (d < 0 || std::abs(den[d] - 1.0) > 1e-9)
    fail_arg("realize_row_over_den: denominator must be monic");
  if (row.degree() > d)
    fail_arg("realize_row_over_den: improper row");
  const int w = row.width();

  LtiModel m;
  m.ts = ts;
  if (d == 0) {
    m = zero_model(1, w, ts);
    if (row.coeff.rows() > 0) m.d = row.coeff.row(0);
    return m;
  }
  MatrixXd num = MatrixXd::Zero(d + 1, w);
  num.topRows(row.coeff.rows()) = row.coeff;
  Eigen::RowVectorXd lead = num.row(d);  // feedthrough
  // Observable companion form; the strictly proper remainder has
  // coefficients num(k) - lead*den(k), k = 0..d-1.
  m.a = MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) m.a(i, 0) = -den[d - 1 - i];
  for (int i = 0; i + 1 < d; ++i) m.a(i, i + 1) = 1.0;
  m.b = MatrixXd::Zero(d, w);
  for (int i = 0; i < d; ++i)
    m.b.row(i) = num.row(d - 1 - i) - lead * den[d - 1 - i];
  m.c = MatrixXd::Zero(1, d);
  m.c(0, 0) = 1.0;
  m.d = lead;
  return m;
}

LtiModel realize_scalar(const Poly& num0, const Poly& den0, double ts) {
  Poly den = trim(den0);
  int d = degree(den);
  if (d < 0) fail_arg("realize_scalar: zero denominator");
  double lead = den[d];
  Poly den_m = scale(den, 1.0 / lead);
  Poly num = scale(trim(num0), 1.0 / lead);
  PolyRow row;
  row.coeff = MatrixXd::Zero(std::max<size_t>(num.size(), 1), 1);
  for (size_t k = 0; k < num.size(); ++k) row.coeff(static_cast<int>(k), 0) = num[k];
  return realize_row_over_den(row, den_m, ts);
}

Poly stable_denominator(int deg, const std::vector<cplx>& placement) {
  if (deg == 0) return {1.0};
  if (placement.empty()) fail_arg("stable_denominator: empty placement");
  std::vector<cplx> chosen;
  size_t idx = 0;
  while (static_cast<int>(chosen.size()) < deg) {
    cplx p = placement[idx % placement.size()];
    ++idx;
    if (std::abs(p.imag()) < 1e-12) {
      chosen.push_back(p);
    } else {
      if (deg - static_cast<int>(chosen.size()) < 2) {
        chosen.push_back(cplx(p.real(), 0.0));  // no room for the pair
      } else {
        chosen.push_back(p);
        chosen.push_back(std::conj(p));
      }
    }
  }
  return from_roots(chosen);
}

}  // namespace fdikit::poly
