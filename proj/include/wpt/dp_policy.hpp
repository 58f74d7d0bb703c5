#pragma once

#include <string>
#include <utility>
#include <vector>

#include "wpt/channel.hpp"
#include "wpt/rng.hpp"
#include "wpt/types.hpp"

namespace wpt {

// Value-function samples of the optimal stopping problem on the estimate
// power state. J[k][i] is the value at slot k and v = i * delta, i = 0..M.
struct ValueGrid {
  double delta = 0.0;
  int M = 0;
  std::vector<std::vector<double>> J;
};

// Stop/continue regions per slot as sorted threshold lists. Regions
// alternate starting with continue below the first threshold, so a list
// {l} means stop on [l, inf) and {l1, l2} means stop on [l1, l2) only.
// An empty list means continue everywhere; {0} means stop everywhere.
struct PolicyTable {
  int m = 0;
  int N = 0;
  double noise_var = 0.0;
  double delta = 0.0;
  int M = 0;
  std::vector<std::vector<double>> thresholds;

  std::string to_json() const;
  static PolicyTable from_json(const std::string& text);
  void save(const std::string& path) const;
  static PolicyTable load(const std::string& path);
};

enum class Decision { Continue, Stop };

// Backward induction J_k(v) = max(stop value, expected J_{k+1}) on a uniform
// grid, with thresholds extracted as sign changes of the two branches and
// refined by bisection. delta = 0 or M = 0 selects defaults: at least 2000
// points over the 99.99% quantile of the slot-1 estimate power, extended far
// enough to bracket every one-step-lookahead crossing.
std::pair<ValueGrid, PolicyTable> solve_bellman(const FrameConfig& cfg,
                                                const ChannelModel& model,
                                                double delta = 0.0, int M = 0,
                                                int threads = 0);

// Closed-form thresholds of the last two slots: the last slot threshold is 0;
// the second-to-last solves the affine equation between stopping now and
// stopping at the final slot, clamped at zero (0 on a degenerate denominator).
std::pair<double, double> threshold_closed_form_last_two(const FrameConfig& cfg,
                                                         const ChannelModel& model);

// Threshold membership test. Stopping is absorbing: once stopped, stay
// stopped. The boundary v equal to a threshold counts as stop.
Decision decide(const PolicyTable& policy, double v, int k, Decision prev_decision);

// One simulated frame under a threshold policy: channel draw, slot-by-slot
// estimate recursion, stop decision, then matched-beamformer transfer at
// unit power over the remaining symbols.
struct PolicyRun {
  int kappa = 0;
  double v_stop = 0.0;
  double energy = 0.0;
};
PolicyRun simulate_policy(const PolicyTable& policy, const ChannelModel& model,
                          const FrameConfig& cfg, RngStream& rng);

}  // namespace wpt
