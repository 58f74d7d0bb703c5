#include "doctest.h"

#include <cmath>
#include <vector>

#include "wpt/beamforming.hpp"
#include "wpt/channel.hpp"
#include "wpt/dp_policy.hpp"
#include "wpt/power_alloc.hpp"
#include "wpt/rng.hpp"

using namespace wpt;

namespace {

FrameConfig frame(int T, int m, int N) {
  FrameConfig cfg;
  cfg.T = T;
  cfg.m = m;
  cfg.N = N;
  return cfg;
}

ChannelModel unit_model(int m, double noise_var) {
  ChannelModel model;
  model.m = m;
  model.R = cmat::Identity(m, m);
  model.noise_var = noise_var;
  model.pathloss = 1.0;
  return model;
}

// LpBins built exactly the way the joint allocator bins the distribution.
std::vector<LpBin> lp_bins_joint(const StoppingDistribution& dist, const FrameConfig& cfg,
                                 double noise_var) {
  std::vector<LpBin> bins;
  for (int k = 0; k < static_cast<int>(dist.mass.size()); ++k) {
    for (int j = 0; j < dist.bins; ++j) {
      if (dist.mass[k][j] <= 0.0) continue;
      LpBin b;
      b.mass = dist.mass[k][j];
      b.cost = static_cast<double>(cfg.m) * (cfg.N - k);
      b.eta = efficiency(k == 0 ? 0.0 : (j + 0.5) * dist.delta, k, cfg, noise_var);
      bins.push_back(b);
    }
  }
  return bins;
}

// LpBins aggregated per slot, matching the slot-level allocator.
std::vector<LpBin> lp_bins_slot(const StoppingDistribution& dist, const FrameConfig& cfg,
                                double noise_var) {
  std::vector<LpBin> bins;
  for (int k = 0; k < static_cast<int>(dist.mass.size()); ++k) {
    double q = 0.0, harv = 0.0;
    for (int j = 0; j < dist.bins; ++j) {
      double mm = dist.mass[k][j];
      if (mm <= 0.0) continue;
      q += mm;
      harv += mm * efficiency(k == 0 ? 0.0 : (j + 0.5) * dist.delta, k, cfg, noise_var);
    }
    if (q <= 0.0) continue;
    LpBin b;
    b.mass = q;
    b.cost = static_cast<double>(cfg.m) * (cfg.N - k);
    b.eta = harv / q;
    bins.push_back(b);
  }
  return bins;
}

StoppingDistribution random_distribution(int N, int bins, double delta, RngStream& rng) {
  StoppingDistribution dist;
  dist.delta = delta;
  dist.bins = bins;
  dist.mass.assign(N, std::vector<double>(bins, 0.0));
  double total = 0.0;
  for (int k = 0; k < N; ++k) {
    for (int j = 0; j < bins; ++j) {
      if (rng.next_double() < 0.4) continue;  // leave holes in the support
      double w = rng.next_double();
      dist.mass[k][j] = w;
      total += w;
    }
  }
  // Slot-0 mass sits in bin 0 only.
  for (int j = 1; j < bins; ++j) {
    total -= dist.mass[0][j];
    dist.mass[0][j] = 0.0;
  }
  for (auto& row : dist.mass)
    for (double& x : row) x /= total;
  return dist;
}

}  // namespace

TEST_CASE("per-symbol efficiency is the stop-energy slope") {
  FrameConfig cfg = frame(126, 3, 42);
  CHECK(efficiency(4.0, 3, cfg, 1.0) == doctest::Approx(1.5).epsilon(1e-12));
  // Blind transmission harvests the prior power regardless of v.
  CHECK(efficiency(0.0, 0, cfg, 1.0) == doctest::Approx(1.0));
  CHECK(efficiency(100.0, 0, cfg, 1.0) == doctest::Approx(1.0));
  // Consistency with the total stop energy.
  CHECK(efficiency(4.0, 3, cfg, 1.0) * 3.0 * (42 - 3) ==
        doctest::Approx(expected_stop_energy(4.0, 3, cfg, 1.0)));
}

TEST_CASE("exact linear program on the three-bin reference instance") {
  std::vector<LpBin> bins = {{0.5, 10.0, 0.9}, {0.3, 20.0, 0.5}, {0.2, 30.0, 0.2}};
  LpResult res = brute_force_lp(bins, 2.0, 12.0);
  CHECK(res.objective == doctest::Approx(10.0).epsilon(1e-12));
  REQUIRE(res.power.size() == 3);
  CHECK(res.power[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(res.power[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(res.power[2] == doctest::Approx(0.0));
  // Budget is exactly exhausted: 0.5*10*2 + 0.3*20/3 = 12.
  double spend = 0.0;
  for (size_t i = 0; i < bins.size(); ++i) spend += bins[i].mass * bins[i].cost * res.power[i];
  CHECK(spend == doctest::Approx(12.0).epsilon(1e-12));
}

TEST_CASE("slack budgets fund every bin at the cap") {
  std::vector<LpBin> bins = {{0.5, 10.0, 0.9}, {0.5, 10.0, 0.1}};
  LpResult res = brute_force_lp(bins, 2.0, 100.0);
  CHECK(res.power[0] == doctest::Approx(2.0));
  CHECK(res.power[1] == doctest::Approx(2.0));
  CHECK(res.objective == doctest::Approx(0.5 * 10 * 0.9 * 2 + 0.5 * 10 * 0.1 * 2));
}

TEST_CASE("greedy allocators match the exact linear program on random instances") {
  RngStream rng = substream(61, 0);
  FrameConfig cfg = frame(12, 3, 4);
  for (int trial = 0; trial < 25; ++trial) {
    StoppingDistribution dist = random_distribution(4, 3, 2.0, rng);
    double P1 = 0.5 + 4.0 * rng.next_double();
    double cap_spend = 0.0;
    for (int k = 0; k < 4; ++k)
      for (int j = 0; j < 3; ++j) cap_spend += dist.mass[k][j] * 3.0 * (4 - k) * P1;
    double P2 = cap_spend * (0.15 + 0.8 * rng.next_double());

    AllocationPlan lcpa = allocate_lcpa(dist, P1, P2, cfg, 1.0);
    LpResult joint = brute_force_lp(lp_bins_joint(dist, cfg, 1.0), P1, P2);
    CHECK(lcpa.objective == doctest::Approx(joint.objective).epsilon(1e-9));

    AllocationPlan lpa = allocate_lpa(dist, P1, P2, cfg, 1.0);
    LpResult slot = brute_force_lp(lp_bins_slot(dist, cfg, 1.0), P1, P2);
    CHECK(lpa.objective == doctest::Approx(slot.objective).epsilon(1e-9));

    // Richer information can only help.
    CHECK(lcpa.objective >= lpa.objective - 1e-9);
    // Both plans respect cap and budget.
    for (const AllocationPlan* plan : {&lcpa, &lpa}) {
      CHECK(plan->spend <= P2 + 1e-9);
      for (const PlanBin& pb : plan->support) {
        CHECK(pb.power >= -1e-15);
        CHECK(pb.power <= P1 + 1e-12);
      }
    }
  }
}

TEST_CASE("allocation on a solved policy is feasible and internally consistent") {
  FrameConfig cfg = frame(60, 3, 20);
  ChannelModel model = unit_model(3, 1.0);
  auto [grid, policy] = solve_bellman(cfg, model);
  (void)grid;
  StoppingDistribution dist = stopping_distribution(policy, model, cfg, 0.0, 256);
  CHECK(dist.total_mass() == doctest::Approx(1.0).epsilon(1e-5));

  double P1 = 3.0;
  double P2 = 1.0 * 3.0 * 20 * 0.85;  // below the cap so the waterline binds
  AllocationPlan lcpa = allocate_lcpa(dist, P1, P2, cfg, 1.0);
  CHECK(lcpa.spend == doctest::Approx(P2).epsilon(1e-9));
  CHECK(lcpa.eta_star >= 0.0);
  CHECK(lcpa.kappa_star >= 0);

  // power_at reproduces the stored plan through the waterline.
  for (const PlanBin& pb : lcpa.support) {
    double mid = pb.kappa == 0 ? 0.0 : 0.5 * (pb.v_lo + pb.v_hi);
    if (pb.kappa == lcpa.kappa_star && pb.v_lo == lcpa.v_lo_star) {
      CHECK(lcpa.power_at(pb.kappa, mid) == doctest::Approx(lcpa.p_star).epsilon(1e-12));
    } else if (pb.eta > lcpa.eta_star + 1e-9) {
      CHECK(lcpa.power_at(pb.kappa, mid) == doctest::Approx(P1).epsilon(1e-12));
      CHECK(pb.power == doctest::Approx(P1).epsilon(1e-12));
    } else if (pb.eta < lcpa.eta_star - 1e-9) {
      CHECK(lcpa.power_at(pb.kappa, mid) == doctest::Approx(0.0));
      CHECK(pb.power == doctest::Approx(0.0));
    }
  }

  // The slot-level plan uses one power per slot and cannot beat the joint one.
  AllocationPlan lpa = allocate_lpa(dist, P1, P2, cfg, 1.0);
  CHECK(lpa.objective <= lcpa.objective + 1e-9);
  for (size_t k = 0; k < lpa.power.size(); ++k) {
    for (double p : lpa.power[k]) CHECK(p == lpa.power[k][0]);
    double anywhere = lpa.power_at(static_cast<int>(k), 0.37 * 256 * dist.delta);
    CHECK(anywhere == lpa.power[k][0]);
  }

  // CSV export carries one line per support bin plus a header.
  std::string csv = lcpa.to_csv();
  size_t lines = static_cast<size_t>(std::count(csv.begin(), csv.end(), '\n'));
  CHECK(lines == lcpa.support.size() + 1);
  CHECK(csv.rfind("kappa,", 0) == 0);
}

TEST_CASE("single-slot allocator equals the joint one on its own distribution") {
  FrameConfig cfg = frame(60, 3, 20);
  ChannelModel model = unit_model(3, 1.0);
  StoppingDistribution vdist = fixed_stop_distribution(6, model, cfg, 0.0, 512);
  CHECK(vdist.total_mass() == doctest::Approx(1.0).epsilon(1e-8));
  // All mass sits in the one slot.
  std::vector<double> per_slot = vdist.slot_mass();
  for (size_t k = 0; k < per_slot.size(); ++k) {
    if (static_cast<int>(k) != 6) CHECK(per_slot[k] == doctest::Approx(0.0));
  }

  double P1 = 3.0, P2 = 80.0;
  AllocationPlan cpa = allocate_cpa(vdist, P1, P2, cfg, 1.0);
  AllocationPlan lcpa = allocate_lcpa(vdist, P1, P2, cfg, 1.0);
  CHECK(cpa.objective == doctest::Approx(lcpa.objective).epsilon(1e-12));
  CHECK(cpa.spend == doctest::Approx(lcpa.spend).epsilon(1e-12));
  LpResult lp = brute_force_lp(lp_bins_joint(vdist, cfg, 1.0), P1, P2);
  CHECK(cpa.objective == doctest::Approx(lp.objective).epsilon(1e-9));
}

TEST_CASE("fixed-slot marginal mean follows the moment recursion") {
  FrameConfig cfg = frame(60, 3, 20);
  ChannelModel model = unit_model(3, 1.0);
  StoppingDistribution vdist = fixed_stop_distribution(6, model, cfg, 0.0, 2048);
  double mean = 0.0;
  for (int j = 0; j < vdist.bins; ++j) {
    mean += vdist.mass[6][j] * (j + 0.5) * vdist.delta;
  }
  double expect = 3.0 * (1.0 + 3.0);  // E[V_1] = m (1 + m s2)
  for (int k = 1; k < 6; ++k) {
    TransitionStats ts = estimate_transition_stats(k, model);
    expect = 3.0 * ts.var + ts.mean_scale * ts.mean_scale * expect;
  }
  CHECK(mean == doctest::Approx(expect).epsilon(2e-3));
}

TEST_CASE("slot-zero stop mass lands in the reserved bin") {
  PolicyTable policy;
  policy.m = 3;
  policy.N = 4;
  policy.noise_var = 1.0;
  policy.delta = 0.1;
  policy.M = 4;
  policy.thresholds = {{0.0}, {}, {}, {}};
  FrameConfig cfg = frame(12, 3, 4);
  ChannelModel model = unit_model(3, 1.0);
  StoppingDistribution dist = stopping_distribution(policy, model, cfg, 0.0, 64);
  CHECK(dist.mass[0][0] == doctest::Approx(1.0));
  CHECK(dist.total_mass() == doctest::Approx(1.0));
}

TEST_CASE("forward propagation matches Monte Carlo histograms") {
  FrameConfig cfg = frame(60, 3, 20);
  ChannelModel model = unit_model(3, 1.0);
  auto [grid, policy] = solve_bellman(cfg, model);
  (void)grid;
  StoppingDistribution fwd = stopping_distribution(policy, model, cfg, 0.0, 128);
  StoppingDistribution mc = stopping_distribution(policy, model, cfg, fwd.delta, 128,
                                                  DistMethod::MonteCarlo, 100000, 3);
  // Quadrature drift over 19 propagation steps at this coarse grid stays
  // inside a tenth of a percent.
  CHECK(fwd.total_mass() == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(mc.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
  double tv = 0.0;
  for (int k = 0; k < cfg.N; ++k)
    for (int j = 0; j < 128; ++j) tv += std::abs(fwd.mass[k][j] - mc.mass[k][j]);
  tv *= 0.5;
  CHECK(tv < 0.05);
}
