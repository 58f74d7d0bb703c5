#include "wpt/fixed_length.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <Eigen/Cholesky>

#include "wpt/beamforming.hpp"
#include "wpt/mathutil.hpp"

namespace wpt {

double order_stat_mean(int m, int r) {
  if (m < 1 || r < 1 || r > m) {
    throw config_error("order_stat_mean: need 1 <= r <= m");
  }
  // E[u_(r)] = 2 m!/(r-1)! sum_s s (-1)^{s+1} / ((m-r+1-s)! s! (r+s-1)^2).
  // The alternating series cancels catastrophically past m ~ 20; the spacing
  // representation of exponential order statistics collapses it to the
  // partial harmonic sum 2 sum_{j=r}^m 1/j, exact and stable for every m.
  NeumaierSum sum;
  for (int j = r; j <= m; ++j) sum.add(1.0 / static_cast<double>(j));
  return 2.0 * sum.value();
}

double g_factor(int m, int q) {
  if (m < 1 || q < 1 || q > m) {
    throw config_error("g_factor: need 1 <= q <= m");
  }
  NeumaierSum sum;
  for (int r = 1; r <= q; ++r) sum.add(order_stat_mean(m, r));
  return sum.value();
}

GTable make_g_table(int m_max) {
  if (m_max < 1) throw config_error("make_g_table: m_max must be >= 1");
  GTable table;
  table.m_max = m_max;
  table.G.resize(m_max);
  for (int m = 1; m <= m_max; ++m) {
    table.G[m - 1].resize(m);
    NeumaierSum sum;
    for (int q = 1; q <= m; ++q) {
      sum.add(order_stat_mean(m, q));
      table.G[m - 1][q - 1] = sum.value();
    }
  }
  return table;
}

double energy_of_tau(double tau, double T, int m, int q, double noise_var) {
  if (!(noise_var > 0.0)) throw config_error("energy_of_tau: noise_var must be > 0");
  if (!(tau >= 0.0) || tau > T) throw config_error("energy_of_tau: need 0 <= tau <= T");
  double G = g_factor(m, q);
  double m2s = static_cast<double>(m) * m * noise_var;
  return (T - tau) * (G * tau + 2.0 * m2s) / (2.0 * (tau + m2s));
}

TauResult optimal_tau(double T, int m, int q, double noise_var, bool multiple_of_m) {
  if (!(T >= 1.0)) throw config_error("optimal_tau: T must be >= 1");
  if (!(noise_var > 0.0)) throw config_error("optimal_tau: noise_var must be > 0");
  double G = g_factor(m, q);

  // Interior stationary point of the energy curve; estimation never pays
  // when it is nonpositive (equivalently noise_var > T(G-2)/(2m^2)).
  double tau1 = 0.0;
  if (G > 2.0) {
    double m2s = static_cast<double>(m) * m * noise_var;
    tau1 = -m2s + m * std::sqrt(noise_var * (m2s + T) * (G - 2.0) / G);
  }

  std::vector<double> cand = {0.0};
  if (tau1 > 0.0) {
    double lo, hi;
    if (multiple_of_m) {
      lo = m * std::floor(tau1 / m);
      hi = m * std::ceil(tau1 / m);
    } else {
      lo = std::floor(tau1);
      hi = std::ceil(tau1);
    }
    double top = std::floor(T);
    cand.push_back(std::clamp(lo, 0.0, top));
    cand.push_back(std::clamp(hi, 0.0, top));
  }

  TauResult best;
  best.tau_star = -1;
  for (double t : cand) {
    double e = energy_of_tau(t, T, m, q, noise_var);
    int ti = static_cast<int>(std::lround(t));
    // Strict improvement only, scanning the smaller tau first on ties.
    if (best.tau_star < 0 || e > best.e_max || (e == best.e_max && ti < best.tau_star)) {
      best.tau_star = ti;
      best.e_max = e;
    }
  }
  return best;
}

TauCurve optimal_tau_numeric(const ChannelModel& model, EstimatorKind kind, int q,
                             const FrameConfig& cfg, long n_samples, std::uint64_t seed,
                             int threads) {
  cfg.validate();
  model.validate();
  if (model.m != cfg.m) throw config_error("optimal_tau_numeric: model/frame size mismatch");
  if (q < 1 || q > cfg.m) throw config_error("optimal_tau_numeric: need 1 <= q <= m");
  if (n_samples < 10000) throw config_error("optimal_tau_numeric: n_samples must be >= 10000");

  int m = cfg.m;
  int N = cfg.N;
  double T = cfg.T;
  double s2 = model.noise_var;
  cmat Reff = model.effective_covariance();

  TauCurve curve;
  curve.tau.resize(N);
  curve.mean.resize(N);
  curve.se.resize(N);

  // Expected beamformed energy per estimate draw: (T - km) times the largest
  // eigenvalue of the conditional correlation over the fed-back set, i.e. the
  // per-symbol energy the eigenmode beamformer attains given that estimate.
  // Every slot consumes the same number of draws from its stream, so runs
  // differing only in estimator kind see identical channels.
  parallel_for(N, threads, [&](int k) {
    curve.tau[k] = k * m;
    NeumaierSum sum, sumsq;

    if (k == 0) {
      // Nothing observed: the conditional correlation is the prior, so the
      // value is deterministic.
      Estimate empty = make_empty_estimate(m);
      cmat R0 = conditional_correlation_matrix(empty, model, q);
      Eigen::SelfAdjointEigenSolver<cmat> es(R0, Eigen::EigenvaluesOnly);
      curve.mean[k] = T * es.eigenvalues()(q - 1);
      curve.se[k] = 0.0;
      return;
    } else {
      // Structured estimators: the least-squares estimate over k orthogonal
      // slots collapses to h plus white noise of variance m*noise_var/k per
      // entry; the waterfilling preamble has only m nonzero rows, so the
      // filter acts on an m-dimensional effective observation.
      double ls_scale = std::sqrt(m * s2 / k);
      cmat ls_cov = (m * s2 / k) * cmat::Identity(m, m);
      cmat X1, XtH, err_cov;
      Eigen::LLT<cmat> llt_M;
      if (kind == EstimatorKind::LMMSE) {
        Preamble pre = lmmse_preamble(Reff, k, s2);
        X1 = pre.X.topRows(m);
        XtH = X1.adjoint();
        Eigen::LLT<cmat> llt_R(Reff);
        cmat M = s2 * llt_R.solve(cmat::Identity(m, m)) + XtH * X1;
        M = 0.5 * (M + cmat(M.adjoint()));
        llt_M.compute(M);
        if (llt_M.info() != Eigen::Success) {
          throw convergence_error("optimal_tau_numeric: estimator normal matrix not PD");
        }
        err_cov = s2 * llt_M.solve(cmat::Identity(m, m));
      }

      Estimate est;
      est.k = k;
      est.kind = kind;
      est.error_cov = (kind == EstimatorKind::LS) ? ls_cov : err_cov;
      for (long i = 0; i < n_samples; ++i) {
        RngStream rng = substream(seed, static_cast<std::uint64_t>(i), k);
        cvec h = sample_channel(model, rng);
        if (kind == EstimatorKind::LS) {
          cvec g(m);
          for (int j = 0; j < m; ++j) g(j) = rng.next_cnormal(1.0);
          est.h_hat = h + ls_scale * g;
        } else {
          cvec z(m);
          for (int j = 0; j < m; ++j) z(j) = rng.next_cnormal(s2);
          est.h_hat = llt_M.solve(XtH * (X1 * h + z));
        }
        cmat R_cond = conditional_correlation_matrix(est, model, q);
        Eigen::SelfAdjointEigenSolver<cmat> es(R_cond, Eigen::EigenvaluesOnly);
        double e = (T - curve.tau[k]) * es.eigenvalues()(q - 1);
        sum.add(e);
        sumsq.add(e * e);
      }
    }

    double n = static_cast<double>(n_samples);
    double mean = sum.value() / n;
    double var = std::max(0.0, (sumsq.value() - n * mean * mean) / (n - 1.0));
    curve.mean[k] = mean;
    curve.se[k] = std::sqrt(var / n);
  });

  curve.tau_star = 0;
  curve.e_max = curve.mean[0];
  for (int k = 1; k < N; ++k) {
    if (curve.mean[k] > curve.e_max) {
      curve.e_max = curve.mean[k];
      curve.tau_star = curve.tau[k];
    }
  }
  return curve;
}

AntennaResult optimal_antennas(double T, double noise_var) {
  if (!(T >= 1.0)) throw config_error("optimal_antennas: T must be >= 1");
  if (!(noise_var > 0.0)) throw config_error("optimal_antennas: noise_var must be > 0");

  auto energy = [&](double k, double m) {
    return m * (T - k * m) * (noise_var + k) / (m * noise_var + k);
  };

  AntennaResult best;
  int k_top = static_cast<int>(std::floor(T));
  for (int k = 1; k <= k_top; ++k) {
    int m_cap = static_cast<int>(std::floor(T / k));
    if (m_cap < 1) break;
    // Stationary point of the energy in m; always below the zero at T/k.
    double m_cont = (-k + std::sqrt(static_cast<double>(k) * k + T * noise_var)) / noise_var;
    m_cont = std::min(m_cont, T / static_cast<double>(k));
    int lo = std::clamp(static_cast<int>(std::floor(m_cont)), 1, m_cap);
    int hi = std::clamp(static_cast<int>(std::ceil(m_cont)), 1, m_cap);
    for (int mm : {lo, hi}) {
      double e = energy(k, mm);
      if (best.m_star == 0 || e > best.e_max) {
        best = {mm, k, e};
      }
      if (lo == hi) break;
    }
  }
  return best;
}

}  // namespace wpt
