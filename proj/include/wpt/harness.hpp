#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wpt/channel.hpp"
#include "wpt/estimation.hpp"
#include "wpt/types.hpp"

namespace wpt {

// One experiment: frame shape, channel model, estimator, scheme list, power
// budget, and Monte Carlo controls. Defaults mirror the desk-scale setup
// (T = 126, m = 3, N = 42, unit noise, unit pathloss).
//
// Power semantics: P0 is the baseline per-symbol transmit power, P1 the
// per-frame cap as a multiple of P0, and P2 the average per-frame energy
// budget. P2 = 0 resolves to P0 * m * (N - kappa_F), the spend of the
// fixed-length baseline, so every allocator competes at the baseline's
// average energy consumption.
struct SimConfig {
  int T = 126;
  int m = 3;
  int N = 42;
  double xi = 0.0;
  double noise_var = 1.0;
  double pathloss = 1.0;
  EstimatorKind estimator = EstimatorKind::LS;
  int q = 0;                          // 0 -> m
  std::vector<std::string> schemes;   // empty -> all six
  double P0 = 1.0;
  double P1 = 1.0;                    // cap, as a multiple of P0 (>= 1)
  double P2 = 0.0;                    // absolute budget; 0 -> baseline spend
  long n_frames = 10000;
  std::uint64_t seed = 1;
  int threads = 0;
  double grid_delta = 0.0;            // value-iteration grid step; 0 -> auto
  int grid_M = 0;                     // value-iteration grid points; 0 -> auto
  int dist_bins = 2048;               // stopping-distribution / plan bins
  bool sweep = false;                 // attach a per-tau curve to FwoPA
  long sweep_samples = 10000;

  // Optional physical-units mode: converts an RF link budget to the
  // normalized model and adds converted columns to the report CSV.
  bool physical = false;
  double bandwidth_hz = 0.0;
  double tx_power_w = 0.0;
  double noise_dbm_per_hz = 0.0;
  double distance_m = 1.0;
  double pathloss_exponent = 2.0;
  double reference_loss_db = 20.0;

  FrameConfig frame() const { return FrameConfig{T, N, m}; }
  ChannelModel model() const;
  void validate() const;
};

SimConfig sim_config_from_json(const std::string& text);
std::string sim_config_to_json(const SimConfig& config);

struct SweepCurve {
  std::vector<int> tau;
  std::vector<double> mean;
  std::vector<double> se;
};

struct SchemeReport {
  std::string scheme;
  double mean_energy = 0.0;  // harvested per frame
  double se = 0.0;
  double mean_spend = 0.0;   // transmitted per frame
  int kappa_fixed = -1;      // preamble slots of fixed-length schemes
  std::vector<double> kappa_mass;  // realized stopping-slot frequencies
  SweepCurve sweep;          // per-tau curve (FwoPA with sweep enabled)
};

// Simulates the configured frames under one scheme / all configured schemes.
// All schemes in one compare call share frame-indexed random streams, so
// they see identical channels and estimation noise (common random numbers),
// and chunked partial sums make results independent of the thread count.
SchemeReport run_scheme(const std::string& scheme, const SimConfig& config);
std::vector<SchemeReport> compare_schemes(const SimConfig& config);

// CSV emitters; all numeric cells use shortest-faithful %.12g formatting.
std::string schemes_csv(const std::vector<SchemeReport>& reports, const SimConfig& config);
std::string sweep_csv(const SweepCurve& curve);
std::string kappa_hist_csv(const SchemeReport& report);

}  // namespace wpt
