#include "simulate.hpp"

#include <cmath>
#include <cstdio>

namespace fdikit {

ChannelSignal parse_signal_token(const std::string& token) {
  ChannelSignal out;
  std::string kind = token;
  std::string rest;
  auto colon = token.find(':');
  if (colon != std::string::npos) {
    kind = token.substr(0, colon);
    rest = token.substr(colon + 1);
  }
  auto at = rest.find('@');
  if (at != std::string::npos) {
    out.period = std::stod(rest.substr(at + 1));
    rest = rest.substr(0, at);
  } else {
    auto at2 = kind.find('@');
    if (at2 != std::string::npos) {
      out.period = std::stod(kind.substr(at2 + 1));
      kind = kind.substr(0, at2);
    }
  }
  if (!rest.empty()) out.amplitude = std::stod(rest);
  if (kind == "step")
    out.kind = SignalKind::step;
  else if (kind == "square")
    out.kind = SignalKind::square;
  else if (kind == "sine")
    out.kind = SignalKind::sine;
  else if (kind == "noise")
    out.kind = SignalKind::noise;
  else
    fail_arg("unknown signal kind '" + kind + "'");
  return out;
}

namespace {

struct Noise {
  uint64_t state;
  explicit Noise(uint64_t seed) : state(seed ^ 0x853c49e6748fea9bull) {}
  double next() {  // uniform in [-0.5, 0.5], deterministic
    state += 0x9e3779b97f4a7c15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z = z ^ (z >> 31);
    return static_cast<double>(z >> 11) / 9007199254740992.0 - 0.5;
  }
};

}  // namespace

SimulationResult simulate_bank(const std::vector<LtiModel>& bank,
                               const SimulateOpts& opts) {
  if (bank.empty()) fail_arg("simulate: empty bank");
  int m = -1;
  double ts = 0.0;
  for (const auto& f : bank)
    if (f.inputs() > 0) {
      if (m >= 0 && f.inputs() != m)
        fail_arg("simulate: bank members disagree in input count");
      m = f.inputs();
      ts = f.ts;
    }
  if (m < 0) fail_arg("simulate: all bank members are empty");

  double dt = ts > 0.0 ? ts : opts.dt;
  int ns = static_cast<int>(std::floor(opts.t_final / dt)) + 1;
  Signal in;
  in.t = VectorXd::LinSpaced(ns, 0.0, dt * (ns - 1));
  in.u = MatrixXd::Zero(ns, m);
  Noise rng(opts.seed);
  std::vector<ChannelSignal> sigs = opts.signals;
  if (sigs.empty()) sigs.push_back(ChannelSignal{});
  for (int j = 0; j < m; ++j) {
    const ChannelSignal& cs = sigs[j % sigs.size()];
    for (int k = 0; k < ns; ++k) {
      double t = in.t(k);
      double v = 0.0;
      switch (cs.kind) {
        case SignalKind::step:
          v = 1.0;
          break;
        case SignalKind::square:
          v = std::fmod(t, cs.period) < 0.5 * cs.period ? 1.0 : -1.0;
          break;
        case SignalKind::sine:
          v = std::sin(2.0 * M_PI * t / cs.period);
          break;
        case SignalKind::noise:
          v = rng.next();
          break;
      }
      in.u(k, j) = cs.amplitude * v;
    }
  }

  SimulationResult out;
  out.theta = MatrixXd::Zero(ns, bank.size());
  std::vector<MatrixXd> responses;
  int total_cols = 0;
  for (size_t i = 0; i < bank.size(); ++i) {
    if (bank[i].inputs() == 0) {
      responses.push_back(MatrixXd::Zero(ns, 0));
      continue;
    }
    Signal y = time_response(bank[i], in);
    responses.push_back(y.u);
    total_cols += static_cast<int>(y.u.cols());
  }
  out.residuals.t = in.t;
  out.residuals.u = MatrixXd::Zero(ns, total_cols);
  int col = 0;
  for (size_t i = 0; i < responses.size(); ++i) {
    for (int k = 0; k < responses[i].cols(); ++k) {
      out.residuals.u.col(col) = responses[i].col(k);
      out.residual_member.push_back(static_cast<int>(i));
      ++col;
    }
  }

  // Narendra evaluator: exact zero-order-hold step of the low-pass
  // 1/(s + gamma) applied to |r|^2.
  double ad = std::exp(-opts.gamma * dt);
  double bd2 = opts.gamma > 0.0 ? (1.0 - ad) / opts.gamma : dt;
  for (size_t i = 0; i < bank.size(); ++i) {
    if (responses[i].cols() == 0) continue;
    double x = 0.0;
    for (int k = 0; k < ns; ++k) {
      double e2 = responses[i].row(k).squaredNorm();
      out.theta(k, i) = opts.alpha * std::sqrt(e2) +
                        opts.beta * std::sqrt(std::max(0.0, x));
      x = ad * x + bd2 * e2;
    }
  }
  for (size_t i = 0; i < bank.size(); ++i)
    out.decision.push_back(out.theta(ns - 1, i) > opts.tau);
  return out;
}

std::string simulation_csv(const SimulationResult& r) {
  std::string out = "t";
  std::vector<int> member_count(r.theta.cols(), 0);
  for (size_t c = 0; c < r.residual_member.size(); ++c) {
    int i = r.residual_member[c];
    out += ",r_" + std::to_string(i) + "_" + std::to_string(member_count[i]++);
  }
  for (int i = 0; i < r.theta.cols(); ++i) out += ",theta_" + std::to_string(i);
  out += "\n";
  char buf[40];
  for (int k = 0; k < r.residuals.t.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", r.residuals.t(k));
    out += buf;
    for (int c = 0; c < r.residuals.u.cols(); ++c) {
      std::snprintf(buf, sizeof buf, ",%.17g", r.residuals.u(k, c));
      out += buf;
    }
    for (int i = 0; i < r.theta.cols(); ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g", r.theta(k, i));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace fdikit
