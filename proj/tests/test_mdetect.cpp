#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "mdetect.hpp"
#include "test_util.hpp"

using namespace fdikit;
using namespace fdikit::testutil;

namespace {

MatrixXd f16_a() {
  MatrixXd a(4, 4);
  a << -0.4492, 0.046, 0.0053, -0.9926,
       0, 0, 1.0, 0.0067,
       -50.8436, 0, -5.2184, 0.722,
       16.4148, 0, 0.0026, -0.6627;
  return a;
}

MatrixXd f16_bu() {
  MatrixXd b(4, 2);
  b << 0.0004, 0.0011, 0, 0, -1.4161, 0.2621, -0.0633, -0.1205;
  return b;
}

std::vector<std::pair<double, double>> f16_grid() {
  return {{0, 0}, {0, .5}, {0, 1}, {.5, 0}, {.5, .5},
          {.5, 1}, {1, 0}, {1, .5}, {1, 1}};
}

// Nine-model grid of actuator-efficiency cases, outputs = full state.
MultiModel f16_models() {
  MatrixXd a = f16_a(), bu = f16_bu();
  std::vector<LtiModel> comps;
  for (auto [r1, r2] : f16_grid()) {
    LtiModel m;
    m.a = a;
    m.b = bu * Eigen::DiagonalMatrix<double, 2>(1.0 - r1, 1.0 - r2);
    m.c = MatrixXd::Identity(4, 4);
    m.d = MatrixXd::Zero(4, 2);
    m.input_groups["controls"] = {0, 1};
    comps.push_back(std::move(m));
  }
  MultiModel mm;
  mm.components = comps;
  return mm;
}

// Noisy two-output variant used by the approximate synthesis.
MultiModel f16_noisy() {
  MatrixXd a = f16_a(), bu = f16_bu();
  MatrixXd c = (180.0 / M_PI) * MatrixXd::Identity(2, 4);
  std::vector<LtiModel> comps;
  for (auto [r1, r2] : f16_grid()) {
    LtiModel m;
    m.a = a;
    m.b = MatrixXd(4, 2 + 6);
    m.b << bu * Eigen::DiagonalMatrix<double, 2>(1.0 - r1, 1.0 - r2),
        MatrixXd::Identity(4, 4), MatrixXd::Zero(4, 2);
    m.c = c;
    m.d = MatrixXd::Zero(2, 8);
    m.d.rightCols(2) = MatrixXd::Identity(2, 2);
    m.input_groups["controls"] = {0, 1};
    m.input_groups["noise"] = {2, 3, 4, 5, 6, 7};
    comps.push_back(std::move(m));
  }
  MultiModel mm;
  mm.components = comps;
  return mm;
}

LtiModel f16_current(double r1, double r2) {
  LtiModel m;
  m.a = f16_a();
  m.b = f16_bu() * Eigen::DiagonalMatrix<double, 2>(1.0 - r1, 1.0 - r2);
  m.c = MatrixXd::Identity(4, 4);
  m.d = MatrixXd::Zero(4, 2);
  m.input_groups["controls"] = {0, 1};
  return m;
}

}  // namespace

TEST_CASE("nu-gap basics: range, identity, symmetry") {
  std::mt19937 gen(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 12; ++trial) {
    LtiModel g1, g2;
    int n = 3;
    auto mk = [&]() {
      LtiModel m;
      m.a = MatrixXd::Zero(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m.a(i, j) = u(gen);
      m.a -= 2.0 * MatrixXd::Identity(n, n);
      m.b = MatrixXd::Zero(n, 2);
      m.c = MatrixXd::Zero(2, n);
      m.d = MatrixXd::Zero(2, 2);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < 2; ++j) m.b(i, j) = u(gen);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < n; ++j) m.c(i, j) = u(gen);
      return m;
    };
    g1 = mk();
    g2 = mk();
    double d12 = nugap(g1, g2);
    double d21 = nugap(g2, g1);
    CHECK(d12 >= 0.0);
    CHECK(d12 <= 1.0);
    CHECK(std::abs(d12 - d21) < 1e-8);
    CHECK(nugap(g1, g1) <= 1e-10);
  }
}

TEST_CASE("nu-gap of a scalar pair against brute-force pointwise values") {
  LtiModel g1 = siso({1.0}, {1.0, 1.0});
  LtiModel g2 = siso({2.0}, {1.0, 1.0});
  // Pointwise chordal distance sup: kappa(w) = |g1-g2| / sqrt((1+|g1|^2)(1+|g2|^2))
  double brute = 0.0;
  for (double w = 0.0; w < 50.0; w += 0.002) {
    cplx v1 = response_at(g1, cplx(0.0, w))(0, 0);
    cplx v2 = response_at(g2, cplx(0.0, w))(0, 0);
    double k = std::abs(v1 - v2) /
               std::sqrt((1.0 + std::norm(v1)) * (1.0 + std::norm(v2)));
    brute = std::max(brute, k);
  }
  CHECK(nugap(g1, g2) == doctest::Approx(brute).epsilon(1e-4));
}

TEST_CASE("mddist on the nine-model grid") {
  MultiModel mm = f16_models();
  MdDistOpts opts;
  opts.distance = MdDistance::hinf;
  MdDistResult res = mddist(mm, opts);
  for (int i = 0; i < 9; ++i) {
    CHECK(res.dist(i, i) == 0.0);
    for (int j = 0; j < 9; ++j) {
      if (i != j) CHECK(res.dist(i, j) > 0.0);
      CHECK(std::abs(res.dist(i, j) - res.dist(j, i)) <
            1e-6 * std::max(1.0, res.dist(i, j)));
    }
  }
  MdDistOpts ng;
  MdDistResult resng = mddist(mm, ng);
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j) {
      CHECK(resng.dist(i, j) >= 0.0);
      CHECK(resng.dist(i, j) <= 1.0);
    }
}

TEST_CASE("mddist2c classifies the mid-grid model under all distances") {
  MultiModel mm = f16_models();
  LtiModel cur = f16_current(0.5, 0.5);
  for (auto kind : {MdDistance::nugap, MdDistance::hinf, MdDistance::h2}) {
    MdDistOpts opts;
    opts.distance = kind;
    MdDist2cResult res = mddist2c(mm, cur, opts);
    CHECK(res.mind == 4);  // model 5 in 1-based counting
    CHECK(res.dist[4] < 1e-7);
  }
}

TEST_CASE("mddist2c exact-member identification") {
  MultiModel mm = f16_models();
  MdDist2cResult res = mddist2c(mm, mm.components[2], {});
  CHECK(res.mind == 2);
  CHECK(res.dist[2] <= 1e-10);
}

TEST_CASE("emdsyn on the F-16 grid with the published design row") {
  MultiModel mm = f16_models();
  MdSynOpts opts;
  opts.sdeg = -1.0;
  opts.poles = {cplx(-1.0, 0.0)};
  MatrixXd h(1, 4);
  h << 0.7645, 0.8848, 0.5778, 0.9026;
  opts.hdesign = {h};
  MdBank bank = emdsyn(mm, opts);

  for (int i = 0; i < 9; ++i) {
    CHECK(bank.mdperf(i, i) < 1e-8);
    for (int j = 0; j < 9; ++j)
      if (i != j) CHECK(bank.mdperf(i, j) > 1e-3);
    LtiModel qmin = minimal_realization(bank.q[i]);
    CHECK(qmin.order() == 1);
    auto p = poles(qmin);
    REQUIRE(p.size() == 1);
    CHECK(std::abs(p[0] - cplx(-1.0, 0.0)) < 1e-6);
  }
  // Standard normalization: first row and column gains agree.
  for (int j = 1; j < 9; ++j)
    CHECK(std::abs(bank.mdperf(0, j) - bank.mdperf(j, 0)) <
          1e-8 * std::max(1.0, bank.mdperf(0, j)));
}

TEST_CASE("emdsyn rejects duplicated component models") {
  MultiModel mm = f16_models();
  mm.components[3] = mm.components[2];
  MdSynOpts opts;
  opts.sdeg = -1.0;
  CHECK_THROWS_AS(emdsyn(mm, opts), Error);
}

TEST_CASE("single-component bank is trivially decoupled") {
  MultiModel mm;
  mm.components = {f16_current(0.0, 0.0)};
  MdSynOpts opts;
  opts.sdeg = -1.0;
  MdBank bank = emdsyn(mm, opts);
  CHECK(bank.mdperf.rows() == 1);
  CHECK(bank.mdperf(0, 0) < 1e-8);
}

TEST_CASE("amdsyn on the noisy grid yields positive finite gaps") {
  MultiModel mm = f16_noisy();
  MdSynOpts opts;
  opts.sdeg = -1.0;
  opts.poles = {cplx(-1.0, 0.0)};
  opts.minimal = false;
  MdBank bank = amdsyn(mm, opts);
  for (int i = 0; i < 9; ++i) {
    CHECK(bank.mdperf(i, i) < 1e-7);
    for (int j = 0; j < 9; ++j)
      if (i != j) CHECK(bank.mdperf(i, j) > 1e-4);
    CHECK(bank.mdgap[i] > 0.0);
    CHECK(std::isfinite(bank.mdgap[i]));
    CHECK(is_stable(bank.q[i], 1e-9));
  }
  // mdgap on the returned internal forms reproduces the reported gaps.
  MdGapResult g = mdgap(bank.r, {});
  for (int i = 0; i < 9; ++i)
    CHECK(g.gap[i] == doctest::Approx(bank.mdgap[i]).epsilon(1e-10));
}

TEST_CASE("amdsyn without noise matches emdsyn with infinite gaps") {
  MultiModel mm = f16_models();
  MdSynOpts opts;
  opts.sdeg = -1.0;
  MatrixXd h(1, 4);
  h << 0.7645, 0.8848, 0.5778, 0.9026;
  opts.hdesign = {h};
  MdBank eb = emdsyn(mm, opts);
  MdBank ab = amdsyn(mm, opts);
  for (int i = 0; i < 9; ++i) {
    CHECK(std::isinf(ab.mdgap[i]));
    CHECK(response_gap(eb.q[i], ab.q[i]) < 1e-9);
  }
}

TEST_CASE("mdperf recomputes the bank performance matrix") {
  MultiModel mm = f16_models();
  MdSynOpts opts;
  opts.sdeg = -1.0;
  MatrixXd h(1, 4);
  h << 0.7645, 0.8848, 0.5778, 0.9026;
  opts.hdesign = {h};
  MdBank bank = emdsyn(mm, opts);
  MdPerfResult res = mdperf(bank.r, {});
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j)
      CHECK(res.gains(i, j) ==
            doctest::Approx(bank.mdperf(i, j)).epsilon(1e-10));
  for (int i = 0; i < 9; ++i) CHECK(res.gains(i, i) < 1e-8);
}

TEST_CASE("mdmatch finds the generating model of the measurements") {
  MultiModel mm = f16_models();
  MdSynOpts opts;
  opts.sdeg = -1.0;
  MatrixXd h(1, 4);
  h << 0.7645, 0.8848, 0.5778, 0.9026;
  opts.hdesign = {h};
  MdBank bank = emdsyn(mm, opts);
  MdMatchResult res = mdmatch(bank.q, mm.components[6], {});
  CHECK(res.mind == 6);
  CHECK(res.gains[6] < 1e-6);

  // Off-grid current model agrees with the mddist2c classification.
  LtiModel cur = f16_current(0.45, 0.55);
  MdMatchResult m2 = mdmatch(bank.q, cur, {});
  MdDistOpts dopts;
  dopts.distance = MdDistance::hinf;
  MdDist2cResult d2 = mddist2c(mm, cur, dopts);
  CHECK(m2.mind == d2.mind);
}

TEST_CASE("mdgap conventions for noiseless banks") {
  MultiModel mm = f16_models();
  MdSynOpts opts;
  opts.sdeg = -1.0;
  MdBank bank = emdsyn(mm, opts);
  MdGapResult g = mdgap(bank.r, {});
  for (int i = 0; i < 9; ++i) CHECK(std::isinf(g.gap[i]));
}

TEST_CASE("pointwise distances and disturbance channels") {
  std::mt19937 gen(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto mk = [&](double shift) {
    LtiModel m;
    m.a = MatrixXd::Zero(2, 2);
    m.a << -1.0 - shift, 0.2, 0.0, -2.0;
    m.b = MatrixXd(2, 2);
    m.b << 1.0, 0.3, 0.0, 1.0;
    m.c = MatrixXd(1, 2);
    m.c << 1.0, 0.5;
    m.d = MatrixXd::Zero(1, 2);
    m.input_groups["controls"] = {0};
    m.input_groups["disturbances"] = {1};
    return m;
  };
  MultiModel mm;
  mm.components = {mk(0.0), mk(0.5), mk(1.0)};

  MdDistOpts base;
  base.distance = MdDistance::hinf;
  MdDistResult plain = mddist(mm, base);
  MdDistOpts both = base;
  both.cdinp = true;
  MdDistResult withd = mddist(mm, both);
  // disturbance channels differ between the models, so cdinp changes values
  CHECK(std::abs(plain.dist(0, 1) - withd.dist(0, 1)) > 1e-12);

  MdDistOpts grid = base;
  grid.freqs = FreqSet{{0.0, 1.0}};
  MdDistResult pw = mddist(mm, grid);
  // the grid maximum is a lower bound on the sup over all frequencies
  CHECK(pw.dist(0, 1) <= plain.dist(0, 1) + 1e-9);
}
