#pragma once

#include "wpt/rng.hpp"
#include "wpt/types.hpp"

namespace wpt {

// Rayleigh-fading multi-antenna channel seen from an m-antenna transmitter:
// h ~ CN(0, pathloss * R) with per-symbol receiver noise variance noise_var.
struct ChannelModel {
  int m = 0;
  cmat R;
  double noise_var = 0.0;
  double pathloss = 1.0;

  void validate() const;
  cmat effective_covariance() const { return pathloss * R; }

  // True when pathloss * R is the identity within tol. The scalar transition
  // laws for the estimate power hold only in this normalized setting.
  bool normalized_uncorrelated(double tol = 1e-9) const;
};

// Exponentially correlated covariance [R]_{ij} = xi^|i-j|, 0 <= xi < 1.
cmat make_exponential_covariance(int m, double xi);

// One channel draw h ~ CN(0, pathloss * R). Uses a Cholesky factor when the
// covariance is positive definite, otherwise an eigenvalue factorization with
// eigenvalues below 1e-14 clamped to zero.
cvec sample_channel(const ChannelModel& model, RngStream& rng);

// Distribution of the true channel given an estimate: mean and covariance.
struct GaussianPosterior {
  cvec mean;
  cmat covariance;
};

// Conditions h on an estimate with error covariance Re_q, both restricted to
// q antennas with prior covariance R_q:
//   mean = R_q (R_q + Re_q)^{-1} h_hat,  cov = R_q - R_q (R_q + Re_q)^{-1} R_q.
GaussianPosterior conditional_channel_stats(const cvec& estimate_q, const cmat& R_q,
                                            const cmat& Re_q);

// Second moment of the conditional channel: covariance + mean * mean^H.
cmat conditional_correlation(const GaussianPosterior& posterior);

// One-step law of the squared estimate norm V_k = |h_hat_k|^2 under the
// block-orthogonal least-squares estimator on a normalized uncorrelated
// model. Given V_k = v, V_{k+1} is distributed as (var/2) times a
// noncentral chi-square with 2m degrees of freedom and noncentrality
// 2 * mean_scale^2 * v / var.
struct TransitionStats {
  double mean_scale;  // E[h_hat_{k+1} | h_hat_k] = mean_scale * h_hat_k
  double var;         // per-entry variance of h_hat_{k+1} about its mean
};
TransitionStats estimate_transition_stats(int k, const ChannelModel& model);

// Density at v of (var/2) times a noncentral chi-square with 2m degrees of
// freedom and noncentrality theta. theta = 0 degenerates to Gamma(m, var).
// Low-level evaluator shared by estimate_power_pdf and the solver hot loops.
double scaled_noncentral_chisq_pdf(double v, int m, double theta, double var);

// Density of V_{k+1} at v_next given V_k = v_k (k >= 1). For k = 0 the
// estimate is empty and the marginal of V_1 applies: Gamma(m, 1 + m*noise_var).
double estimate_power_pdf(double v_next, double v_k, int k, const ChannelModel& model);

// E[V_{k+1} | V_k = v_k]; for k = 0 the unconditional mean of V_1.
double estimate_power_mean(double v_k, int k, const ChannelModel& model);

// CDF of the marginal distribution of V_k, k >= 1: Gamma(m, (k + m*noise_var)/k).
double estimate_power_marginal_cdf(double v, int k, const ChannelModel& model);

}  // namespace wpt
