#pragma once

#include <cstdint>
#include <vector>

#include "wpt/channel.hpp"
#include "wpt/estimation.hpp"
#include "wpt/types.hpp"

namespace wpt {

// Mean of the r-th largest of m independent chi-square(2) variables,
// evaluated as the partial harmonic sum 2 sum_{j=r}^m 1/j (the spacing
// representation of exponential order statistics); exact and stable for
// every m.
double order_stat_mean(int m, int r);

// Beamforming gain factor: sum of order_stat_mean(m, r) for r = 1..q.
// g_factor(m, m) = 2m exactly.
double g_factor(int m, int q);

// Lower-triangular table G[m][q], 1 <= q <= m <= m_max.
struct GTable {
  int m_max = 0;
  std::vector<std::vector<double>> G;  // G[m-1][q-1]

  double at(int m, int q) const { return G.at(m - 1).at(q - 1); }
};
GTable make_g_table(int m_max);

// Expected harvested energy at unit transmit power when tau symbols are
// spent on least-squares estimation and T - tau on transfer:
//   E(tau) = (T - tau)(G_{m,q} tau + 2 m^2 noise_var) / (2 (tau + m^2 noise_var)).
double energy_of_tau(double tau, double T, int m, int q, double noise_var);

// Closed-form preamble length optimizer. The continuous maximizer is rounded
// to the two nearest integers, or nearest multiples of m when multiple_of_m
// is set (a preamble occupies whole slots); ties break to the smaller tau.
// Returns tau = 0 when estimation cannot pay for itself.
struct TauResult {
  int tau_star = 0;
  double e_max = 0.0;
};
TauResult optimal_tau(double T, int m, int q, double noise_var, bool multiple_of_m = true);

// Monte Carlo preamble length search for any model and estimator kind:
// expected beamformed energy (T - tau) times the top eigenvalue of the
// conditional correlation, averaged over n_samples estimate draws per tau
// in {0, m, ..., (N-1)m}, with standard errors (zero at tau = 0, where the
// value is the deterministic prior eigenvalue). Draws are keyed by
// (seed, sample, slot) so runs with different estimator kinds pair up
// sample by sample.
struct TauCurve {
  std::vector<int> tau;
  std::vector<double> mean;
  std::vector<double> se;
  int tau_star = 0;
  double e_max = 0.0;
};
TauCurve optimal_tau_numeric(const ChannelModel& model, EstimatorKind kind, int q,
                             const FrameConfig& cfg, long n_samples,
                             std::uint64_t seed = 1, int threads = 0);

// Joint offline choice of antenna count and preamble slots: maximizes
// E(k, m) = m (T - km)(noise_var + k) / (m noise_var + k) over integer m
// for each k >= 1 via the continuous stationary point, then over k.
struct AntennaResult {
  int m_star = 0;
  int k1 = 0;
  double e_max = 0.0;
};
AntennaResult optimal_antennas(double T, double noise_var);

}  // namespace wpt
