#pragma once

#include <string>

#include "model.hpp"

namespace fdikit {

enum class SignalKind { step, square, sine, noise };

struct ChannelSignal {
  SignalKind kind = SignalKind::step;
  double amplitude = 1.0;
  double period = 2.0 * 3.14159265358979323846;  // square/sine only
};

struct SimulateOpts {
  std::vector<ChannelSignal> signals;  // per input channel, cycled
  double t_final = 10.0;
  double dt = 0.01;
  double alpha = 0.9;   // Narendra evaluator weights
  double beta = 0.1;
  double gamma = 10.0;  // low-pass bandwidth
  double tau = 0.1;     // decision threshold
  uint64_t seed = 0;
};

// token: kind[:amplitude][@period], e.g. "square:0.3@6.283"
ChannelSignal parse_signal_token(const std::string& token);

struct SimulationResult {
  Signal residuals;                  // columns grouped per bank member
  MatrixXd theta;                    // evaluation signals, one per member
  std::vector<int> residual_member;  // member index of each residual column
  std::vector<bool> decision;        // theta_i(T) > tau
};

// Simulates a bank of internal-form filters on a shared deterministic input
// and runs the Narendra-type evaluator theta = alpha*sqrt(|r|^2) +
// beta*sqrt(lowpass(|r|^2)) on each member's residuals.
SimulationResult simulate_bank(const std::vector<LtiModel>& bank,
                               const SimulateOpts& opts);

// CSV with one header row: t, r_<member>_<k>..., theta_<member>...
std::string simulation_csv(const SimulationResult& r);

}  // namespace fdikit
