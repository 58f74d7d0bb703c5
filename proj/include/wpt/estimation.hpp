#pragma once

#include <vector>

#include "wpt/types.hpp"

namespace wpt {

enum class EstimatorKind { LS, LMMSE };

// Pilot matrix sent over k slots of m symbols each (tau = k*m rows).
// per_symbol_power is the average row energy; total energy is always k.
struct Preamble {
  cmat X;
  int k = 0;
  double per_symbol_power = 0.0;
};

// Channel estimate after k slots together with its error covariance.
// k = 0 is the empty estimate: h_hat = 0 and error_cov is unused.
struct Estimate {
  cvec h_hat;
  int k = 0;
  EstimatorKind kind = EstimatorKind::LS;
  cmat error_cov;
};

Estimate make_empty_estimate(int m);

// Block-orthogonal preamble: k stacked copies of (1/sqrt(m)) I_m, so that
// X^H X = (k/m) I_m and the total energy is k.
Preamble ls_preamble(int m, int k);

// Least-squares estimate (X^H X)^{-1} X^H y with error covariance
// noise_var (X^H X)^{-1}.
Estimate ls_estimate(const cvec& y, const Preamble& preamble, double noise_var);

// Folds one extra slot observation into a least-squares estimate:
// h_hat_{k+1} = (k h_hat_k + sqrt(m) y_slot) / (k+1). Matches the batch
// estimator over k+1 slots exactly.
Estimate ls_recursive_update(const Estimate& est, const cvec& slot_observation,
                             double noise_var);

// Power-waterfilling preamble over the eigenmodes of R: only the m leading
// rows carry energy, X = sqrt(noise_var) [diag(p)^{1/2}; 0] B^H where
// R = B D B^H and p_i = [mu0 - 1/d_i]^+ with trace(p) = k / noise_var.
Preamble lmmse_preamble(const cmat& R, int k, double noise_var);

// Linear minimum-mean-square-error estimate. Evaluates both algebraic forms
//   R X^H (X R X^H + noise_var I)^{-1} y
//   (noise_var R^{-1} + X^H X)^{-1} X^H y
// and insists they agree; error covariance (R^{-1} + X^H X / noise_var)^{-1}.
Estimate lmmse_estimate(const cvec& y, const Preamble& preamble, const cmat& R,
                        double noise_var);

// The q entries of largest magnitude, sorted descending, with their original
// antenna indices (0-based). Magnitude ties keep the lower index first.
struct PartialFeedback {
  cvec values;
  std::vector<int> indices;
};
PartialFeedback partial_feedback(const Estimate& est, int q);

}  // namespace wpt
