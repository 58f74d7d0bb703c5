#include "doctest.h"

#include <cmath>
#include <complex>

#include "wpt/beamforming.hpp"
#include "wpt/channel.hpp"
#include "wpt/estimation.hpp"
#include "wpt/mathutil.hpp"
#include "wpt/rng.hpp"

using namespace wpt;

namespace {

FrameConfig example_frame() {
  FrameConfig cfg;
  cfg.T = 126;
  cfg.N = 42;
  cfg.m = 3;
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

cmat restrict_to(const cmat& full, const std::vector<int>& idx) {
  int q = static_cast<int>(idx.size());
  cmat out(q, q);
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < q; ++j) out(i, j) = full(idx[i], idx[j]);
  return out;
}

}  // namespace

TEST_CASE("stop energy coefficients at the reference frame") {
  FrameConfig cfg = example_frame();
  StopEnergyCoeffs c3 = stop_energy_coeffs(3, cfg, 1.0);
  CHECK(c3.A == doctest::Approx(117.0));
  CHECK(c3.B == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(c3.C == doctest::Approx(0.25).epsilon(1e-12));

  StopEnergyCoeffs c0 = stop_energy_coeffs(0, cfg, 1.0);
  CHECK(c0.B == doctest::Approx(1.0));
  CHECK(c0.C == doctest::Approx(0.0));

  for (int k = 0; k < cfg.N; ++k) {
    StopEnergyCoeffs c = stop_energy_coeffs(k, cfg, 1.0);
    CHECK(c.A == doctest::Approx(3.0 * (42 - k)));
    CHECK(c.B > 0.0);
    CHECK(c.B <= 1.0);
    CHECK(c.C >= 0.0);
    CHECK(c.C < 1.0);
  }
}

TEST_CASE("stopping value is linear in the estimate power") {
  FrameConfig cfg = example_frame();
  CHECK(expected_stop_energy(4.0, 3, cfg, 1.0) == doctest::Approx(175.5).epsilon(1e-12));
  // Before any pilot the transmitter is blind: value is m N at unit power.
  CHECK(expected_stop_energy(0.0, 0, cfg, 1.0) == doctest::Approx(126.0));
  CHECK(expected_stop_energy(50.0, 0, cfg, 1.0) == doctest::Approx(126.0));
}

TEST_CASE("conditional correlation for white least squares errors") {
  ChannelModel model = unit_model(3, 1.0);
  Preamble p = ls_preamble(3, 3);
  Estimate est = make_empty_estimate(3);
  est.k = 3;
  est.kind = EstimatorKind::LS;
  est.error_cov = (3.0 / 3.0) * cmat::Identity(3, 3);
  est.h_hat = cvec::Zero(3);
  est.h_hat(0) = 2.0;

  cmat psi = conditional_correlation_matrix(est, model, 3);
  cmat expect = cmat::Zero(3, 3);
  // sigma_e^2 = 1: background 1/2 everywhere plus (2/2)^2 on the fed entry.
  expect(0, 0) = 1.5;
  expect(1, 1) = 0.5;
  expect(2, 2) = 0.5;
  CHECK((psi - expect).norm() < 1e-12);
  (void)p;
}

TEST_CASE("no feedback leaves the prior restricted to the leading antennas") {
  ChannelModel model;
  model.m = 3;
  model.R = make_exponential_covariance(3, 0.8);
  model.noise_var = 1.0;
  model.pathloss = 1.0;
  Estimate empty = make_empty_estimate(3);
  cmat psi2 = conditional_correlation_matrix(empty, model, 2);
  CHECK((psi2 - model.R.topLeftCorner(2, 2)).norm() < 1e-12);
}

TEST_CASE("least squares branch agrees with generic Gaussian conditioning") {
  ChannelModel model;
  model.m = 4;
  model.R = make_exponential_covariance(4, 0.5);
  model.noise_var = 0.8;
  model.pathloss = 1.0;
  RngStream rng = substream(21, 0);
  for (int trial = 0; trial < 10; ++trial) {
    Estimate est = make_empty_estimate(4);
    est.k = 2;
    est.kind = EstimatorKind::LS;
    est.error_cov = (4.0 * 0.8 / 2.0) * cmat::Identity(4, 4);
    for (int i = 0; i < 4; ++i) est.h_hat(i) = rng.next_cnormal(1.0);
    for (int q = 1; q <= 4; ++q) {
      cmat psi = conditional_correlation_matrix(est, model, q);
      // Oracle: condition the full prior on h_hat = h + e over the fed-back
      // index set, then form covariance + mean mean^H.
      PartialFeedback fb = partial_feedback(est, q);
      cmat R_q = restrict_to(model.R, fb.indices);
      cmat Re_q = restrict_to(est.error_cov, fb.indices);
      GaussianPosterior post = conditional_channel_stats(fb.values, R_q, Re_q);
      cmat oracle = conditional_correlation(post);
      CHECK((psi - oracle).norm() < 1e-10);
    }
  }
}

TEST_CASE("Bayes branch adds the rank-one estimate to its error covariance") {
  ChannelModel model;
  model.m = 3;
  model.R = make_exponential_covariance(3, 0.6);
  model.noise_var = 1.0;
  model.pathloss = 1.0;
  RngStream rng = substream(22, 0);
  cmat a(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = rng.next_cnormal(1.0);
  Estimate est = make_empty_estimate(3);
  est.k = 2;
  est.kind = EstimatorKind::LMMSE;
  est.error_cov = a * a.adjoint() + 0.1 * cmat::Identity(3, 3);
  for (int i = 0; i < 3; ++i) est.h_hat(i) = rng.next_cnormal(1.0);

  for (int q = 1; q <= 3; ++q) {
    PartialFeedback fb = partial_feedback(est, q);
    cmat expect = restrict_to(est.error_cov, fb.indices) + fb.values * fb.values.adjoint();
    cmat psi = conditional_correlation_matrix(est, model, q);
    CHECK((psi - expect).norm() < 1e-12);
  }
}

TEST_CASE("white channels give both estimators the same beamformed energy") {
  // For uncorrelated unit-power channels the Bayes estimate is a positive
  // multiple of the least squares one, and both conditional correlations
  // share eigenvalues, so the beamformed per-symbol energy is identical
  // observation by observation.
  ChannelModel model = unit_model(3, 1.0);
  Preamble p = ls_preamble(3, 2);
  RngStream rng = substream(23, 0);
  for (int trial = 0; trial < 50; ++trial) {
    cvec h = sample_channel(model, rng);
    cvec z(6);
    for (int i = 0; i < 6; ++i) z(i) = rng.next_cnormal(1.0);
    cvec y = p.X * h + z;
    Estimate ls = ls_estimate(y, p, 1.0);
    Estimate bayes = lmmse_estimate(y, p, model.R, 1.0);
    for (int q = 1; q <= 3; ++q) {
      cmat psi_ls = conditional_correlation_matrix(ls, model, q);
      cmat psi_b = conditional_correlation_matrix(bayes, model, q);
      double g_ls = per_symbol_energy(optimal_beamformer(psi_ls), psi_ls);
      double g_b = per_symbol_energy(optimal_beamformer(psi_b), psi_b);
      CHECK(g_ls == doctest::Approx(g_b).epsilon(1e-10));
    }
  }
}

TEST_CASE("optimal beamformer picks the top eigendirection") {
  cmat R = cmat::Zero(2, 2);
  R(0, 0) = 2.0;
  R(1, 1) = 1.0;
  Beamformer bf = optimal_beamformer(R);
  CHECK(std::abs(bf.w(0) - std::complex<double>(1.0, 0.0)) < 1e-12);
  CHECK(std::abs(bf.w(1)) < 1e-12);
  CHECK(per_symbol_energy(bf, R) == doctest::Approx(2.0));
}

TEST_CASE("optimal beamformer dominates random probes") {
  RngStream rng = substream(24, 0);
  for (int trial = 0; trial < 10; ++trial) {
    cmat a(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) a(i, j) = rng.next_cnormal(1.0);
    cmat R = a * a.adjoint();
    Beamformer best = optimal_beamformer(R);
    CHECK(best.w.norm() == doctest::Approx(1.0).epsilon(1e-12));
    double e_best = per_symbol_energy(best, R);
    for (int probe = 0; probe < 200; ++probe) {
      cvec w(3);
      for (int i = 0; i < 3; ++i) w(i) = rng.next_cnormal(1.0);
      w.normalize();
      Beamformer b{w};
      CHECK(per_symbol_energy(b, R) <= e_best + 1e-9);
    }
  }
}

TEST_CASE("rank-one-plus-identity structure makes matched and optimal agree") {
  // Conditional correlations of the white least squares form are
  // c I + d h h^H, whose top eigenvector is h itself.
  ChannelModel model = unit_model(3, 1.0);
  RngStream rng = substream(25, 0);
  Preamble p = ls_preamble(3, 2);
  for (int trial = 0; trial < 20; ++trial) {
    cvec h = sample_channel(model, rng);
    cvec z(6);
    for (int i = 0; i < 6; ++i) z(i) = rng.next_cnormal(1.0);
    Estimate est = ls_estimate(p.X * h + z, p, 1.0);
    PartialFeedback fb = partial_feedback(est, 3);
    cmat psi = conditional_correlation_matrix(est, model, 3);
    Beamformer eig = optimal_beamformer(psi);
    Beamformer mat = matched_beamformer(fb.values);
    CHECK(std::abs(mat.w.dot(eig.w)) == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("matched beamformer is the normalized estimate") {
  cvec h(2);
  h << std::complex<double>(3.0, 0.0), std::complex<double>(0.0, 4.0);
  Beamformer bf = matched_beamformer(h);
  CHECK(std::abs(bf.w(0) - std::complex<double>(0.6, 0.0)) < 1e-14);
  CHECK(std::abs(bf.w(1) - std::complex<double>(0.0, 0.8)) < 1e-14);
  CHECK_THROWS(matched_beamformer(cvec::Zero(2)));
}

TEST_CASE("full knowledge harvests the channel norm per symbol") {
  cvec h(3);
  h << 1.0, 1.0, 1.0;
  CHECK(mrt_energy(h) == doctest::Approx(3.0));
  CHECK(mrt_energy(cvec::Zero(3)) == doctest::Approx(0.0));
}

TEST_CASE("one-step lookahead equals quadrature against the transition law") {
  FrameConfig cfg = example_frame();
  ChannelModel model = unit_model(3, 1.0);
  for (double v : {0.0, 2.0, 8.0, 20.0}) {
    for (int k : {0, 1, 3, 10}) {
      double direct = expected_next_stop_energy(v, k, cfg, 1.0);
      double hi = 8.0 * estimate_power_mean(v, k, model) + 60.0;
      const int n = 60000;
      double dx = hi / n;
      NeumaierSum acc;
      for (int i = 0; i <= n; ++i) {
        double w = i * dx;
        double scale = (i == 0 || i == n) ? 0.5 : 1.0;
        acc.add(scale * expected_stop_energy(w, k + 1, cfg, 1.0) *
                estimate_power_pdf(w, v, k, model) * dx);
      }
      CHECK(direct == doctest::Approx(acc.value()).epsilon(1e-5));
    }
  }
}

TEST_CASE("policy gap closed form") {
  CHECK(policy_gap(1, 3, 1.0) == doctest::Approx(0.9).epsilon(1e-12));
  for (int r : {1, 2, 5, 10}) CHECK(policy_gap(r, 1, 1.0) == doctest::Approx(0.0));
  // Later refinements buy less: the gap decreases with the slot index.
  CHECK(policy_gap(1, 3, 1.0) > policy_gap(2, 3, 1.0));
  CHECK(policy_gap(2, 3, 1.0) > policy_gap(5, 3, 1.0));
  CHECK(policy_gap(5, 3, 1.0) > 0.0);
  CHECK(policy_gap(1, 2, 0.5) > 0.0);
}
