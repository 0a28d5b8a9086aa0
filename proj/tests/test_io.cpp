#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "jsonio.hpp"
#include "simulate.hpp"
#include "test_util.hpp"

using namespace fdikit;
using namespace fdikit::testutil;

TEST_CASE("model json round trip preserves the model") {
  LtiModel g = siso({1.0, 0.5}, {1.0, 2.0, 3.0});
  g.input_groups["controls"] = {0};
  std::string text = model_to_json(g);
  LtiModel back = model_from_json(text);
  CHECK(response_gap(g, back) < 1e-14);
  CHECK(back.group("controls") == std::vector<int>{0});
  CHECK(model_to_json(back) == text);
}

TEST_CASE("descriptor E and multimodels round trip") {
  LtiModel g = siso({1.0}, {1.0, 1.0});
  g.e = MatrixXd::Identity(1, 1) * 2.0;
  g.a *= 2.0;  // keep the same response: (2A, 2E) ~ (A, E)
  std::string text = models_to_json({g, g});
  auto back = models_from_json(text);
  REQUIRE(back.size() == 2);
  CHECK(response_gap(back[0], back[1]) < 1e-14);
}

TEST_CASE("empty bank members serialize as null") {
  std::vector<LtiModel> bank = {siso({1.0}, {1.0, 1.0}), zero_model(0, 0, 0.0)};
  std::string text = models_to_json(bank);
  CHECK(text.find("null") != std::string::npos);
  auto back = models_from_json(text);
  REQUIRE(back.size() == 2);
  CHECK(back[1].outputs() == 0);
}

TEST_CASE("singular descriptor matrices are rejected with a distinct error") {
  std::string text = R"({"a": [[1.0]], "e": [[0.0]], "b": [[1.0]],
                         "c": [[1.0]], "d": [[0.0]], "ts": 0})";
  try {
    model_from_json(text);
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unsupported);
  }
}

TEST_CASE("simulation: zero input gives identically zero evaluation") {
  LtiModel rf = zero_model(2, 3, 0.0);
  rf.d << 0, 1, -1, -1, 0, 1;
  SimulateOpts opts;
  opts.signals = {parse_signal_token("step:0.0")};
  opts.t_final = 2.0;
  SimulationResult res = simulate_bank({rf}, opts);
  CHECK(res.theta.cwiseAbs().maxCoeff() == 0.0);
  CHECK(!res.decision[0]);
}

TEST_CASE("static signature bank orders the evaluation signals") {
  // Bank of three static rows [0 1 -1; -1 0 1; 1 -1 0]; a step in fault 0
  // must leave theta_0 at zero and fire the other two members.
  MatrixXd rfm(3, 3);
  rfm << 0, 1, -1, -1, 0, 1, 1, -1, 0;
  std::vector<LtiModel> bank;
  for (int i = 0; i < 3; ++i) {
    LtiModel r = zero_model(1, 3, 0.0);
    r.d = rfm.row(i);
    bank.push_back(r);
  }
  SimulateOpts opts;
  opts.signals = {parse_signal_token("step:1.0"), parse_signal_token("step:0"),
                  parse_signal_token("step:0")};
  opts.t_final = 3.0;
  opts.tau = 0.05;
  SimulationResult res = simulate_bank(bank, opts);
  int last = static_cast<int>(res.theta.rows()) - 1;
  CHECK(res.theta(last, 0) == doctest::Approx(0.0));
  CHECK(res.theta(last, 1) > 0.5);
  CHECK(res.theta(last, 2) > 0.5);
  CHECK(res.decision == std::vector<bool>{false, true, true});

  // Narendra evaluator closed form for a unit step residual r = 1:
  // theta(t) = alpha + beta*sqrt((1 - exp(-gamma t))/gamma).
  double t = res.residuals.t(last);
  double want = opts.alpha + opts.beta * std::sqrt(
      (1.0 - std::exp(-opts.gamma * t)) / opts.gamma);
  CHECK(res.theta(last, 1) == doctest::Approx(want).epsilon(1e-6));
}

TEST_CASE("signal token parsing") {
  ChannelSignal s = parse_signal_token("square:0.3@6.2832");
  CHECK(s.kind == SignalKind::square);
  CHECK(s.amplitude == doctest::Approx(0.3));
  CHECK(s.period == doctest::Approx(6.2832));
  CHECK(parse_signal_token("noise:0.01").kind == SignalKind::noise);
  CHECK_THROWS_AS(parse_signal_token("sawtooth"), Error);
}

TEST_CASE("noise channels are reproducible for a fixed seed") {
  LtiModel rf = zero_model(1, 1, 0.0);
  rf.d << 1.0;
  SimulateOpts opts;
  opts.signals = {parse_signal_token("noise:1.0")};
  opts.t_final = 1.0;
  SimulationResult a = simulate_bank({rf}, opts);
  SimulationResult b = simulate_bank({rf}, opts);
  CHECK((a.residuals.u - b.residuals.u).cwiseAbs().maxCoeff() == 0.0);
  opts.seed = 1;
  SimulationResult c = simulate_bank({rf}, opts);
  CHECK((a.residuals.u - c.residuals.u).cwiseAbs().maxCoeff() > 0.0);
}
