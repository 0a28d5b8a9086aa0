#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "analysis.hpp"
#include "test_util.hpp"

using namespace fdikit;
using namespace fdikit::testutil;

namespace {

LtiModel yuan_system() {
  LtiModel m;
  m.a = MatrixXd(4, 4);
  m.a << -1, 1, 0, 0, 1, -2, 1, 0, 0, 1, -2, 1, 0, 0, 1, -2;
  MatrixXd bu(4, 1), bf(4, 8);
  bu << 1, 0, 0, 0;
  bf << 1, 0, 0, 0, 1, 0, 0, 0,
        0, 1, 0, 0, -1, 1, 0, 0,
        0, 0, 1, 0, 0, -1, 1, 0,
        0, 0, 0, 1, 0, 0, -1, 1;
  m.b = MatrixXd(4, 9);
  m.b << bu, bf;
  m.c = MatrixXd(3, 4);
  m.c << 1, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1;
  m.d = MatrixXd::Zero(3, 9);
  m.input_groups["controls"] = {0};
  m.input_groups["faults"] = {1, 2, 3, 4, 5, 6, 7, 8};
  return m;
}

const char* kYuanWeak[18] = {
    "00010011", "01101110", "01111101", "01111111", "10101110", "10111101",
    "10111111", "11001100", "11011111", "11100110", "11101010", "11101110",
    "11110101", "11110111", "11111001", "11111011", "11111101", "11111111"};

const char* kYuanStrong[12] = {
    "00010011", "01101110", "01111101", "01111111", "10101110", "10111101",
    "10111111", "11001100", "11011111", "11101110", "11111101", "11111111"};

std::set<std::string> to_set(const BoolMatrix& m) {
  std::set<std::string> out;
  for (int i = 0; i < m.rows(); ++i) {
    std::string s;
    for (int j = 0; j < m.cols(); ++j) s += m(i, j) ? '1' : '0';
    out.insert(s);
  }
  return out;
}

BoolMatrix from_strings(const char* const* rows, int n) {
  int mf = static_cast<int>(std::string(rows[0]).size());
  BoolMatrix out(n, mf);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < mf; ++j) out(i, j) = rows[i][j] == '1';
  return out;
}

}  // namespace

TEST_CASE("fditspec weak and strong on the worked internal form") {
  // R_f = [(s+2)/(s+3), (s-3)/(s+3)]
  LtiModel rf = hcat({siso({1, 2}, {1, 3}), siso({1, -3}, {1, 3})});
  StructMatrix weak = fditspec(rf);
  CHECK(weak.pages[0](0, 0));
  CHECK(weak.pages[0](0, 1));

  TspecOpts strong;
  strong.freqs = FreqSet{{0.0}};
  StructMatrix s0 = fditspec(rf, strong);
  CHECK(s0.pages[0](0, 0));
  CHECK(s0.pages[0](0, 1));

  // zero column
  LtiModel withz = hcat({rf, zero_model(1, 1, 0.0)});
  StructMatrix wz = fditspec(withz);
  CHECK(!wz.pages[0](0, 2));
}

TEST_CASE("fditspec strong flags blocking zeros on the grid") {
  // (s)/(s+1) has a zero at the origin.
  LtiModel rf = hcat({siso({1, 0}, {1, 1}), siso({1, 2}, {1, 1})});
  TspecOpts strong;
  strong.freqs = FreqSet{{0.0}};
  StructMatrix s = fditspec(rf, strong);
  CHECK(!s.pages[0](0, 0));
  CHECK(s.pages[0](0, 1));
  StructMatrix weak = fditspec(rf);
  CHECK(weak.pages[0](0, 0));
}

TEST_CASE("fditspec block mode equals OR over element rows") {
  LtiModel rf = vcat({hcat({siso({1, 1}, {1, 2}), zero_model(1, 1, 0.0)}),
                      hcat({zero_model(1, 1, 0.0), zero_model(1, 1, 0.0)})});
  TspecOpts blk;
  blk.block = true;
  StructMatrix b = fditspec(rf, blk);
  StructMatrix e = fditspec(rf);
  for (int j = 0; j < 2; ++j) {
    bool any = false;
    for (int i = 0; i < 2; ++i) any = any || e.pages[0](i, j);
    CHECK(b.pages[0](0, j) == any);
  }
}

TEST_CASE("fdisspec returns gains and thresholded structure") {
  LtiModel rf = hcat({siso({1, 2}, {1, 3}), siso({1, -3}, {1, 3})});
  SspecOpts opts;
  SspecResult res = fdisspec(rf, opts);
  CHECK(res.gains(0, 0) == doctest::Approx(2.0 / 3.0));
  CHECK(res.gains(0, 1) == doctest::Approx(1.0));
  CHECK(res.s.pages[0](0, 0));
  CHECK(res.s.pages[0](0, 1));

  SspecOpts high;
  high.gaintol = 10.0;
  SspecResult none = fdisspec(rf, high);
  CHECK(!none.s.pages[0](0, 0));
  CHECK(!none.s.pages[0](0, 1));
}

TEST_CASE("fdisspec rejects grid points on poles") {
  LtiModel rf = siso({1}, {1, 0, 1});  // poles at +-i
  SspecOpts opts;
  opts.freqs = FreqSet{{1.0}};
  CHECK_THROWS_AS(fdisspec(rf, opts), Error);
}

TEST_CASE("genspec trivial single-fault case") {
  LtiModel gu = siso({1}, {1, 1});
  LtiModel gf = siso({1, 2}, {1, 3});
  LtiModel g = hcat({gu, gf});
  FdiSelections sel;
  sel.controls = {0};
  sel.faults = {1};
  LtiModel sysf = fdimodset(g, sel);
  StructMatrix s = fdigenspec(sysf);
  REQUIRE(s.rows() == 1);
  CHECK(s.pages[0](0, 0));
}

TEST_CASE("Yuan achievable weak and strong specifications") {
  LtiModel sysf = yuan_system();
  GenspecOpts weak;
  weak.tol = 1e-7;
  weak.fdtol = 1e-5;
  StructMatrix sw = fdigenspec(sysf, weak);
  CHECK(sw.rows() == 18);
  CHECK(to_set(sw.all()) == to_set(from_strings(kYuanWeak, 18)));

  GenspecOpts strong;
  strong.tol = 1e-7;
  strong.fdtol = 1e-4;
  strong.fdgaintol = 1e-3;
  strong.freqs = FreqSet{{0.0}};
  strong.sdeg = -0.05;
  StructMatrix ss = fdigenspec(sysf, strong);
  CHECK(ss.rows() == 12);
  CHECK(to_set(ss.all()) == to_set(from_strings(kYuanStrong, 12)));

  //

  // Strong rows are a subset of the weak rows.
  auto wset = to_set(sw.all());
  for (const auto& row : to_set(ss.all())) CHECK(wset.count(row) == 1);
}

TEST_CASE("Yuan least orders via fdichkspec") {
  LtiModel sysf = yuan_system();
  BoolMatrix sweak = from_strings(kYuanWeak, 18);
  ChkspecOpts opts;
  opts.tol = 1e-7;
  opts.fdtol = 1e-4;
  opts.fdgaintol = 1e-3;
  opts.freqs = FreqSet{{0.0}};
  ChkspecResult res = fdichkspec(sysf, sweak, opts);
  std::vector<int> feasible;
  std::vector<int> least;
  for (int i = 0; i < 18; ++i)
    if (res.rdims[i] > 0) {
      feasible.push_back(i);
      least.push_back(res.leastorders[i]);
    }
  CHECK(feasible.size() == 12);
  std::vector<int> expect = {1, 2, 2, 2, 1, 1, 1, 2, 2, 2, 2, 2};
  CHECK(least == expect);
  // Feasible rows coincide with the strong specification set.
  BoolMatrix sstrong = from_strings(kYuanStrong, 12);
  std::set<std::string> got;
  for (int i : feasible) {
    std::string s;
    for (int j = 0; j < 8; ++j) s += sweak(i, j) ? '1' : '0';
    got.insert(s);
  }
  CHECK(got == to_set(sstrong));
}

TEST_CASE("fdichkspec edge cases") {
  LtiModel sysf = yuan_system();
  ChkspecResult empty = fdichkspec(sysf, BoolMatrix(), {});
  CHECK(empty.rdims.empty());

  // Demanding sensitivity to an unreachable fault: append a zero column.
  LtiModel ext = sysf;
  ext.b = MatrixXd(4, 10);
  ext.b << sysf.b, MatrixXd::Zero(4, 1);
  ext.d = MatrixXd::Zero(3, 10);
  ext.input_groups["faults"] = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  BoolMatrix row = BoolMatrix::Constant(1, 9, false);
  row(0, 8) = true;
  ChkspecResult res = fdichkspec(ext, row, {});
  CHECK(res.rdims[0] == 0);
  CHECK(res.orders[0] == -1);
  CHECK(res.leastorders[0] == -1);
}

TEST_CASE("genspec rows are reproducible as feasible specifications") {
  LtiModel sysf = yuan_system();
  GenspecOpts weak;
  weak.tol = 1e-7;
  weak.fdtol = 1e-5;
  StructMatrix sw = fdigenspec(sysf, weak);
  ChkspecResult res = fdichkspec(sysf, sw.all(), {});
  for (int i = 0; i < sw.rows(); ++i) CHECK(res.rdims[i] > 0);
}

TEST_CASE("bank structure of a collection with an empty member") {
  LtiModel rf = hcat({siso({1.0}, {1.0, 1.0}), zero_model(1, 1, 0.0)});
  std::vector<LtiModel> bank = {rf, zero_model(0, 0, 0.0)};
  BoolMatrix s = fditspec(bank, {}).all();
  CHECK(s(0, 0));
  CHECK(!s(0, 1));
  CHECK(!s(1, 0));
  CHECK(!s(1, 1));
}
