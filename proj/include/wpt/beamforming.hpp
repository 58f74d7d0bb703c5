#pragma once

#include "wpt/channel.hpp"
#include "wpt/estimation.hpp"
#include "wpt/types.hpp"

namespace wpt {

// Unit-norm transmit beamformer over q fed-back antennas.
struct Beamformer {
  cvec w;
};

// Coefficients of the affine expected-energy expressions in the estimate
// power v: stopping now at slot k gives A * (B + C * v); stopping at slot
// k+1 after one more estimation slot gives D * (k^2 (k+1+m s2) v + F) / G.
struct StopEnergyCoeffs {
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
  double D = 0.0;
  double F = 0.0;
  double G = 0.0;
};

StopEnergyCoeffs stop_energy_coeffs(int k, const FrameConfig& cfg, double noise_var);

// Second moment of the channel given the q strongest fed-back estimate
// entries. Least-squares estimates carry channel-independent error, so their
// branches condition through the prior and agree with the generic route;
// LMMSE estimates already are the posterior mean, so their branch is
// error covariance plus the rank-one estimate term.
cmat conditional_correlation_matrix(const Estimate& est, const ChannelModel& model, int q);

// Unit-norm top eigenvector of a Hermitian PSD matrix, phase-fixed so the
// largest-magnitude entry is real nonnegative.
Beamformer optimal_beamformer(const cmat& R_cond);

// Normalized estimate direction; the optimal beamformer whenever the
// conditional correlation is scaled-identity plus a rank-one term in h_hat.
Beamformer matched_beamformer(const cvec& h_hat_q);

// w^H R_cond w; with the optimal beamformer this is the top eigenvalue.
double per_symbol_energy(const Beamformer& bf, const cmat& R_cond);

// Per-symbol harvest under perfect channel knowledge.
double mrt_energy(const cvec& h);

// Expected total harvest when transfer starts at slot k with estimate power
// v, over the m*(N-k) remaining symbols at unit transmit power. k = 0 is
// isotropic transmission over the whole frame.
double expected_stop_energy(double v, int k, const FrameConfig& cfg, double noise_var);

// Expected total harvest when one more slot is spent estimating and transfer
// starts at slot k+1, conditioned on estimate power v at slot k.
double expected_next_stop_energy(double v, int k, const FrameConfig& cfg, double noise_var);

// Expected gain, over one m-symbol transfer slot, from spending one more
// slot estimating before that transfer: the slot r+1 harvest beamformed on
// the (r+1)-slot estimate minus the slot r harvest beamformed on the r-slot
// estimate. Zero for m = 1, strictly positive otherwise.
double policy_gap(int r, int m, double noise_var);

}  // namespace wpt
