#include "wpt/channel.hpp"

#include <cmath>

#include "wpt/mathutil.hpp"

namespace wpt {

void ChannelModel::validate() const {
  if (m < 1) throw config_error("ChannelModel: m must be >= 1");
  if (R.rows() != m || R.cols() != m) {
    throw config_error("ChannelModel: R must be m x m");
  }
  if ((R - R.adjoint()).cwiseAbs().maxCoeff() > 1e-9) {
    throw config_error("ChannelModel: R must be Hermitian");
  }
  if (!(noise_var >= 0.0) || !std::isfinite(noise_var)) {
    throw config_error("ChannelModel: noise_var must be finite and >= 0");
  }
  if (!(pathloss >= 0.0) || !std::isfinite(pathloss)) {
    throw config_error("ChannelModel: pathloss must be finite and >= 0");
  }
}

bool ChannelModel::normalized_uncorrelated(double tol) const {
  cmat eff = effective_covariance();
  return (eff - cmat::Identity(m, m)).cwiseAbs().maxCoeff() <= tol;
}

cmat make_exponential_covariance(int m, double xi) {
  if (m < 1) throw std::invalid_argument("make_exponential_covariance: m must be >= 1");
  if (!(xi >= 0.0 && xi < 1.0)) {
    throw std::invalid_argument("make_exponential_covariance: xi must be in [0, 1)");
  }
  cmat R(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      R(i, j) = std::pow(xi, std::abs(i - j));
    }
  }
  return R;
}

cvec sample_channel(const ChannelModel& model, RngStream& rng) {
  model.validate();
  cvec z(model.m);
  for (int i = 0; i < model.m; ++i) z(i) = rng.next_cnormal(1.0);

  cmat cov = model.effective_covariance();
  Eigen::LLT<cmat> llt(cov);
  if (llt.info() == Eigen::Success) {
    return llt.matrixL() * z;
  }
  // Semidefinite covariance: factor through eigenvalues with a small floor.
  Eigen::SelfAdjointEigenSolver<cmat> es(cov);
  rvec ev = es.eigenvalues();
  for (int i = 0; i < model.m; ++i) {
    if (ev(i) < 1e-14) ev(i) = 0.0;
  }
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * z;
}

GaussianPosterior conditional_channel_stats(const cvec& estimate_q, const cmat& R_q,
                                            const cmat& Re_q) {
  const auto q = R_q.rows();
  if (R_q.cols() != q || Re_q.rows() != q || Re_q.cols() != q || estimate_q.size() != q) {
    throw std::invalid_argument("conditional_channel_stats: dimension mismatch");
  }
  cmat S = R_q + Re_q;
  Eigen::LLT<cmat> llt(S);
  if (llt.info() != Eigen::Success) {
    throw convergence_error("conditional_channel_stats: R + Re is not positive definite");
  }
  GaussianPosterior post;
  post.mean = R_q * llt.solve(estimate_q);
  cmat cov = R_q - R_q * llt.solve(R_q);
  post.covariance = 0.5 * (cov + cov.adjoint());
  return post;
}

cmat conditional_correlation(const GaussianPosterior& posterior) {
  return posterior.covariance + posterior.mean * posterior.mean.adjoint();
}

namespace {

void require_normalized(const ChannelModel& model, const char* who) {
  model.validate();
  if (model.noise_var <= 0.0) {
    throw config_error(std::string(who) + ": noise_var must be > 0");
  }
  if (!model.normalized_uncorrelated()) {
    throw config_error(std::string(who) +
                       ": requires a normalized uncorrelated model (pathloss * R = I)");
  }
}

// log density of Gamma(shape, scale) at v > 0.
double log_gamma_pdf(double v, double shape, double scale) {
  return (shape - 1.0) * std::log(v) - v / scale - std::lgamma(shape) -
         shape * std::log(scale);
}

}  // namespace

TransitionStats estimate_transition_stats(int k, const ChannelModel& model) {
  require_normalized(model, "estimate_transition_stats");
  if (k < 1) throw std::invalid_argument("estimate_transition_stats: k must be >= 1");
  double m = model.m;
  double s2 = model.noise_var;
  double a = k + m * s2;
  double b = k + 1 + m * s2;
  TransitionStats ts;
  ts.mean_scale = k * b / ((k + 1.0) * a);
  ts.var = m * s2 * b / ((k + 1.0) * (k + 1.0) * a);
  return ts;
}

double scaled_noncentral_chisq_pdf(double v, int m, double theta, double var) {
  if (m < 1) throw std::invalid_argument("scaled_noncentral_chisq_pdf: m must be >= 1");
  if (!(var > 0.0) || !(theta >= 0.0)) {
    throw std::invalid_argument("scaled_noncentral_chisq_pdf: requires var > 0, theta >= 0");
  }
  if (!(v >= 0.0)) return 0.0;
  double md = m;
  if (theta < 1e-300) {
    if (v == 0.0) return m == 1 ? 1.0 / var : 0.0;
    return std::exp(log_gamma_pdf(v, md, var));
  }
  double x = 2.0 * v / var;
  if (x == 0.0) {
    return m == 1 ? std::exp(-0.5 * theta) / var : 0.0;
  }
  // Noncentral chi-square with 2m degrees of freedom at x, noncentrality
  // theta, evaluated in the log domain, then rescaled by 2/var.
  double log_fx = -std::log(2.0) - 0.5 * (x + theta) +
                  0.5 * (md - 1.0) * std::log(x / theta) +
                  log_bessel_i(md - 1.0, std::sqrt(theta * x));
  return std::exp(log_fx) * 2.0 / var;
}

double estimate_power_pdf(double v_next, double v_k, int k, const ChannelModel& model) {
  require_normalized(model, "estimate_power_pdf");
  if (k < 0) throw std::invalid_argument("estimate_power_pdf: k must be >= 0");
  if (k >= 1 && !(v_k >= 0.0)) {
    throw std::invalid_argument("estimate_power_pdf: v_k must be >= 0");
  }
  if (!(v_next >= 0.0)) return 0.0;
  double m = model.m;

  if (k == 0) {
    double scale = 1.0 + m * model.noise_var;
    if (v_next == 0.0) return model.m == 1 ? 1.0 / scale : 0.0;
    return std::exp(log_gamma_pdf(v_next, m, scale));
  }

  TransitionStats ts = estimate_transition_stats(k, model);
  double theta = 2.0 * ts.mean_scale * ts.mean_scale * v_k / ts.var;
  return scaled_noncentral_chisq_pdf(v_next, model.m, theta, ts.var);
}

double estimate_power_mean(double v_k, int k, const ChannelModel& model) {
  require_normalized(model, "estimate_power_mean");
  if (k < 0) throw std::invalid_argument("estimate_power_mean: k must be >= 0");
  double m = model.m;
  if (k == 0) return m * (1.0 + m * model.noise_var);
  if (!(v_k >= 0.0)) throw std::invalid_argument("estimate_power_mean: v_k must be >= 0");
  TransitionStats ts = estimate_transition_stats(k, model);
  return m * ts.var + ts.mean_scale * ts.mean_scale * v_k;
}

double estimate_power_marginal_cdf(double v, int k, const ChannelModel& model) {
  require_normalized(model, "estimate_power_marginal_cdf");
  if (k < 1) throw std::invalid_argument("estimate_power_marginal_cdf: k must be >= 1");
  if (!(v >= 0.0)) return 0.0;
  double scale = (k + model.m * model.noise_var) / k;
  return reg_gamma_lower(model.m, v / scale);
}

}  // namespace wpt
