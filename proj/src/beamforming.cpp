#include "wpt/beamforming.hpp"

#include <cmath>

namespace wpt {

StopEnergyCoeffs stop_energy_coeffs(int k, const FrameConfig& cfg, double noise_var) {
  cfg.validate();
  if (k < 0 || k >= cfg.N) {
    throw std::invalid_argument("stop_energy_coeffs: k must be in [0, N-1]");
  }
  if (!(noise_var > 0.0)) {
    throw std::invalid_argument("stop_energy_coeffs: noise_var must be > 0");
  }
  double m = cfg.m;
  double s2 = noise_var;
  StopEnergyCoeffs c;
  c.A = m * (cfg.N - k);
  if (k == 0) {
    // No estimate yet: isotropic transmission harvests the unit channel power.
    c.B = 1.0;
    c.C = 0.0;
  } else {
    double a = k + m * s2;
    c.B = m * s2 / a;
    c.C = static_cast<double>(k) * k / (a * a);
  }
  if (k <= cfg.N - 2) {
    double a = k + m * s2;
    c.D = m * (cfg.N - k - 1);
    c.F = m * s2 * a * (a + m);
    c.G = (k + 1 + m * s2) * a * a;
  }
  return c;
}

namespace {

void require_hermitian(const cmat& A, const char* who) {
  if (A.rows() != A.cols() || (A - A.adjoint()).cwiseAbs().maxCoeff() > 1e-9) {
    throw std::invalid_argument(std::string(who) + ": matrix must be Hermitian");
  }
}

cmat restrict_matrix(const cmat& A, const std::vector<int>& idx) {
  cmat out(idx.size(), idx.size());
  for (size_t i = 0; i < idx.size(); ++i) {
    for (size_t j = 0; j < idx.size(); ++j) out(i, j) = A(idx[i], idx[j]);
  }
  return out;
}

}  // namespace

cmat conditional_correlation_matrix(const Estimate& est, const ChannelModel& model, int q) {
  model.validate();
  if (est.h_hat.size() != model.m) {
    throw std::invalid_argument("conditional_correlation_matrix: estimate/model size mismatch");
  }
  if (q < 1 || q > model.m) {
    throw std::invalid_argument("conditional_correlation_matrix: q out of range");
  }

  if (est.k == 0) {
    // Nothing observed: the conditional correlation is the prior restricted
    // to the first q antennas.
    std::vector<int> idx(q);
    for (int i = 0; i < q; ++i) idx[i] = i;
    return restrict_matrix(model.effective_covariance(), idx);
  }

  PartialFeedback fb = partial_feedback(est, q);
  cvec h_q = fb.values;

  if (est.kind == EstimatorKind::LMMSE) {
    // The filter output is already the posterior mean and its error is
    // independent of it (orthogonality principle), so the conditional
    // correlation is the error covariance plus the rank-one estimate term.
    // Conditioning on it again through the prior would shrink twice.
    cmat Re_q = restrict_matrix(est.error_cov, fb.indices);
    cmat out = Re_q + h_q * h_q.adjoint();
    return 0.5 * (out + out.adjoint());
  }

  if (model.normalized_uncorrelated()) {
    // Least squares on the unit-power uncorrelated channel: scaled identity
    // plus rank-one, c/(1+c) I + h h^H / (1+c)^2, where c is the scalar error
    // variance of the estimator.
    double c = est.error_cov(fb.indices[0], fb.indices[0]).real();
    if (!(c >= 0.0)) {
      throw std::invalid_argument("conditional_correlation_matrix: invalid error covariance");
    }
    cmat out = (c / (1.0 + c)) * cmat::Identity(q, q) +
               h_q * h_q.adjoint() / ((1.0 + c) * (1.0 + c));
    return out;
  }

  // Least squares against a correlated prior: the error is independent of the
  // channel, so the posterior is Sigma + M h h^H M^H with
  // Sigma = (R^{-1} + Re^{-1})^{-1} and M = (Re R^{-1} + I)^{-1}, all
  // restricted to the fed-back antennas.
  cmat R_q = restrict_matrix(model.effective_covariance(), fb.indices);
  cmat Re_q = restrict_matrix(est.error_cov, fb.indices);
  Eigen::LLT<cmat> llt_R(R_q);
  Eigen::LLT<cmat> llt_Re(Re_q);
  if (llt_R.info() != Eigen::Success || llt_Re.info() != Eigen::Success) {
    throw convergence_error("conditional_correlation_matrix: singular covariance input");
  }
  cmat I = cmat::Identity(q, q);
  cmat R_inv = llt_R.solve(I);
  cmat Re_inv = llt_Re.solve(I);
  Eigen::LLT<cmat> llt_sum(R_inv + Re_inv);
  if (llt_sum.info() != Eigen::Success) {
    throw convergence_error("conditional_correlation_matrix: singular covariance input");
  }
  cmat sigma = llt_sum.solve(I);
  cmat M = (Re_q * R_inv + I).partialPivLu().solve(I);
  cvec mean = M * h_q;
  cmat out = sigma + mean * mean.adjoint();
  return 0.5 * (out + out.adjoint());
}

Beamformer optimal_beamformer(const cmat& R_cond) {
  require_hermitian(R_cond, "optimal_beamformer");
  Eigen::SelfAdjointEigenSolver<cmat> es(0.5 * (R_cond + R_cond.adjoint()));
  if (es.info() != Eigen::Success) {
    throw convergence_error("optimal_beamformer: eigendecomposition failed");
  }
  const auto n = R_cond.rows();
  cvec w = es.eigenvectors().col(n - 1);
  // Phase convention: rotate so the largest-magnitude entry is real
  // nonnegative; magnitude ties keep the lowest index.
  Eigen::Index best = 0;
  double best_mag = -1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double mag = std::abs(w(i));
    if (mag > best_mag + 1e-15) {
      best_mag = mag;
      best = i;
    }
  }
  if (best_mag > 0.0) {
    std::complex<double> phase = w(best) / std::abs(w(best));
    w /= phase;
  }
  w.normalize();
  return Beamformer{w};
}

Beamformer matched_beamformer(const cvec& h_hat_q) {
  double n = h_hat_q.norm();
  if (!(n > 0.0)) {
    throw std::invalid_argument("matched_beamformer: zero estimate has no direction");
  }
  return Beamformer{h_hat_q / n};
}

double per_symbol_energy(const Beamformer& bf, const cmat& R_cond) {
  if (bf.w.size() != R_cond.rows() || R_cond.rows() != R_cond.cols()) {
    throw std::invalid_argument("per_symbol_energy: dimension mismatch");
  }
  return (bf.w.adjoint() * R_cond * bf.w).value().real();
}

double mrt_energy(const cvec& h) { return h.squaredNorm(); }

double expected_stop_energy(double v, int k, const FrameConfig& cfg, double noise_var) {
  if (!(v >= 0.0)) throw std::invalid_argument("expected_stop_energy: v must be >= 0");
  StopEnergyCoeffs c = stop_energy_coeffs(k, cfg, noise_var);
  return c.A * (c.B + c.C * v);
}

double expected_next_stop_energy(double v, int k, const FrameConfig& cfg, double noise_var) {
  if (!(v >= 0.0)) throw std::invalid_argument("expected_next_stop_energy: v must be >= 0");
  if (k < 0 || k > cfg.N - 2) {
    throw std::invalid_argument("expected_next_stop_energy: k must be in [0, N-2]");
  }
  StopEnergyCoeffs c = stop_energy_coeffs(k, cfg, noise_var);
  double m = cfg.m;
  double kk = k;
  return c.D * (kk * kk * (k + 1 + m * noise_var) * v + c.F) / c.G;
}

double policy_gap(int r, int m, double noise_var) {
  if (r < 1) throw std::invalid_argument("policy_gap: r must be >= 1");
  if (m < 1) throw std::invalid_argument("policy_gap: m must be >= 1");
  if (!(noise_var > 0.0)) throw std::invalid_argument("policy_gap: noise_var must be > 0");
  double md = m;
  return md * md * (md - 1.0) * noise_var /
         ((r + md * noise_var) * (r + 1.0 + md * noise_var));
}

}  // namespace wpt
