#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wpt/channel.hpp"
#include "wpt/dp_policy.hpp"
#include "wpt/types.hpp"

namespace wpt {

enum class DistMethod { Forward, MonteCarlo };

// Joint distribution of (stopping slot kappa, estimate power at the stop).
// Bin j covers [j*delta, (j+1)*delta); the top bin absorbs all overflow.
// A frame that stops at kappa = 0 carries no estimate; its mass sits in
// bin 0 of row 0.
struct StoppingDistribution {
  double delta = 0.0;
  int bins = 0;
  std::vector<std::vector<double>> mass;  // mass[kappa][bin], kappa = 0..N-1
  DistMethod method = DistMethod::Forward;

  double total_mass() const;
  std::vector<double> slot_mass() const;  // mass per stopping slot
};

// Distribution of stopping outcomes under a threshold policy. The forward
// method pushes the slot-1 marginal through the continuation regions with
// the discretized one-step transition density, splitting each bin at the
// thresholds that cross it; the Monte Carlo method histograms simulated
// frames. n_frames/seed/threads apply to the Monte Carlo method only
// (threads also parallelize the forward propagation).
StoppingDistribution stopping_distribution(const PolicyTable& policy, const ChannelModel& model,
                                           const FrameConfig& cfg, double delta = 0.0,
                                           int bins = 0,
                                           DistMethod method = DistMethod::Forward,
                                           long n_frames = 100000, std::uint64_t seed = 1,
                                           int threads = 0);

// Marginal of the estimate power after exactly kappa estimation slots, as a
// single-row distribution: the fixed-length scheme's stopping law.
StoppingDistribution fixed_stop_distribution(int kappa, const ChannelModel& model,
                                             const FrameConfig& cfg, double delta = 0.0,
                                             int bins = 0);

// Expected per-symbol harvest at unit power when transfer starts at slot
// kappa with estimate power v: affine in v with slope zero only at kappa = 0.
double efficiency(double v, int kappa, const FrameConfig& cfg, double noise_var);

enum class AllocMode { LCPA, LPA, CPA };

struct PlanBin {
  int kappa = 0;
  double v_lo = 0.0;
  double v_hi = 0.0;
  double mass = 0.0;
  double eta = 0.0;
  double power = 0.0;
};

// Transmit power per stopping outcome, subject to the per-frame cap P1 and
// the average-energy budget P2. objective and spend are per-frame
// expectations of harvested and transmitted energy under the plan.
struct AllocationPlan {
  AllocMode mode = AllocMode::LCPA;
  double P1 = 0.0;
  double P2 = 0.0;
  double delta = 0.0;
  int bins = 0;
  double objective = 0.0;
  double spend = 0.0;
  std::vector<PlanBin> support;                 // bins with positive mass
  std::vector<std::vector<double>> power;       // power[kappa][bin]

  // Dual form of the greedy optimum: full cap above the efficiency
  // waterline, the fractional power inside the marginal bin, zero below.
  // power_at queries through it (when the coefficients are present) so a
  // realized outcome near a funded bin's edge is not mis-assigned.
  std::vector<double> eff_b, eff_c;             // per-slot efficiency; eta = b + c v
  double eta_star = -1.0;                       // waterline (-1: everything funded)
  int kappa_star = -1;                          // marginal bin, if the budget binds
  double v_lo_star = 0.0, v_hi_star = 0.0;
  double p_star = 0.0;

  double power_at(int kappa, double v) const;
  std::string to_csv() const;
};

// Greedy water-lines over outcome bins ranked by harvest efficiency: full
// cap until the budget binds, a fractional power at the marginal bin, zero
// after. LCPA ranks joint (kappa, v) bins, LPA ranks slots only (power
// constant in v within a slot), CPA ranks the v bins of a single-slot
// distribution. Each matches the linear-program optimum over its own
// information pattern.
AllocationPlan allocate_lcpa(const StoppingDistribution& dist, double P1, double P2,
                             const FrameConfig& cfg, double noise_var);
AllocationPlan allocate_lpa(const StoppingDistribution& dist, double P1, double P2,
                            const FrameConfig& cfg, double noise_var);
AllocationPlan allocate_cpa(const StoppingDistribution& v_dist, double P1, double P2,
                            const FrameConfig& cfg, double noise_var);

// Exact solution of max sum mass*cost*eta*p, 0 <= p <= P1,
// sum mass*cost*p <= P2: vertex enumeration up to 15 bins, the equivalent
// fractional-knapsack greedy beyond. Test oracle for the allocators.
struct LpBin {
  double mass = 0.0;
  double cost = 0.0;
  double eta = 0.0;
};
struct LpResult {
  double objective = 0.0;
  std::vector<double> power;
};
LpResult brute_force_lp(const std::vector<LpBin>& bins, double P1, double P2);

}  // namespace wpt
