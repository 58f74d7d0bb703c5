#include "wpt/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wpt {

Estimate make_empty_estimate(int m) {
  if (m < 1) throw std::invalid_argument("make_empty_estimate: m must be >= 1");
  Estimate est;
  est.h_hat = cvec::Zero(m);
  est.k = 0;
  est.kind = EstimatorKind::LS;
  est.error_cov = cmat::Zero(m, m);
  return est;
}

Preamble ls_preamble(int m, int k) {
  if (m < 1 || k < 1) throw std::invalid_argument("ls_preamble: requires m >= 1, k >= 1");
  Preamble p;
  p.X = cmat::Zero(static_cast<Eigen::Index>(k) * m, m);
  double a = 1.0 / std::sqrt(static_cast<double>(m));
  for (int b = 0; b < k; ++b) {
    p.X.block(static_cast<Eigen::Index>(b) * m, 0, m, m) = a * cmat::Identity(m, m);
  }
  p.k = k;
  p.per_symbol_power = 1.0 / m;
  return p;
}

Estimate ls_estimate(const cvec& y, const Preamble& preamble, double noise_var) {
  const auto m = preamble.X.cols();
  if (y.size() != preamble.X.rows()) {
    throw std::invalid_argument("ls_estimate: observation length must match preamble rows");
  }
  cmat gram = preamble.X.adjoint() * preamble.X;
  Eigen::LLT<cmat> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw convergence_error("ls_estimate: preamble Gram matrix is singular");
  }
  Estimate est;
  est.h_hat = llt.solve(preamble.X.adjoint() * y);
  est.k = preamble.k;
  est.kind = EstimatorKind::LS;
  est.error_cov = noise_var * llt.solve(cmat::Identity(m, m));
  return est;
}

Estimate ls_recursive_update(const Estimate& est, const cvec& slot_observation,
                             double noise_var) {
  if (est.kind != EstimatorKind::LS) {
    throw std::invalid_argument("ls_recursive_update: estimate kind must be LS");
  }
  const auto m = est.h_hat.size();
  if (slot_observation.size() != m) {
    throw std::invalid_argument("ls_recursive_update: slot observation must have length m");
  }
  double k = est.k;
  Estimate out;
  out.h_hat = (k * est.h_hat + std::sqrt(static_cast<double>(m)) * slot_observation) /
              (k + 1.0);
  out.k = est.k + 1;
  out.kind = EstimatorKind::LS;
  out.error_cov = (m * noise_var / (k + 1.0)) * cmat::Identity(m, m);
  return out;
}

Preamble lmmse_preamble(const cmat& R, int k, double noise_var) {
  const auto m = R.rows();
  if (R.cols() != m || m < 1) throw std::invalid_argument("lmmse_preamble: R must be square");
  if (k < 1) throw std::invalid_argument("lmmse_preamble: k must be >= 1");
  if (!(noise_var > 0.0)) throw std::invalid_argument("lmmse_preamble: noise_var must be > 0");

  Eigen::SelfAdjointEigenSolver<cmat> es(R);
  if (es.info() != Eigen::Success) {
    throw convergence_error("lmmse_preamble: eigendecomposition failed");
  }
  rvec d = es.eigenvalues();
  if (d.minCoeff() <= 0.0) {
    throw std::invalid_argument("lmmse_preamble: R must be positive definite");
  }

  // Water level mu0 with sum_i [mu0 - 1/d_i]^+ = k / noise_var. The left side
  // is continuous, piecewise linear and nondecreasing, so bisection is exact
  // up to bracket collapse.
  double target = k / noise_var;
  rvec inv_d = d.cwiseInverse();
  double lo = inv_d.minCoeff();
  double hi = inv_d.maxCoeff() + k * m / noise_var;
  auto waterfill_sum = [&](double mu) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) s += std::max(0.0, mu - inv_d(i));
    return s;
  };
  for (int it = 0; it < 500 && hi - lo > 1e-15 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    if (waterfill_sum(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double mu0 = 0.5 * (lo + hi);
  if (std::abs(waterfill_sum(mu0) - target) > 1e-12 * std::max(1.0, target)) {
    throw convergence_error("lmmse_preamble: water level bisection did not converge");
  }

  rvec p(m);
  for (Eigen::Index i = 0; i < m; ++i) p(i) = std::max(0.0, mu0 - inv_d(i));
  Preamble out;
  out.X = cmat::Zero(static_cast<Eigen::Index>(k) * m, m);
  out.X.topRows(m) =
      std::sqrt(noise_var) * p.cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint();
  out.k = k;
  out.per_symbol_power = 1.0 / m;
  return out;
}

Estimate lmmse_estimate(const cvec& y, const Preamble& preamble, const cmat& R,
                        double noise_var) {
  const auto m = R.rows();
  const auto tau = preamble.X.rows();
  if (preamble.X.cols() != m || y.size() != tau) {
    throw std::invalid_argument("lmmse_estimate: dimension mismatch");
  }
  if (!(noise_var > 0.0)) throw std::invalid_argument("lmmse_estimate: noise_var must be > 0");

  Eigen::LLT<cmat> llt_R(R);
  if (llt_R.info() != Eigen::Success) {
    throw convergence_error("lmmse_estimate: R is not positive definite");
  }
  cmat R_inv = llt_R.solve(cmat::Identity(m, m));
  cmat gram = preamble.X.adjoint() * preamble.X;

  // Observation-space form.
  cmat inner = preamble.X * R * preamble.X.adjoint() +
               noise_var * cmat::Identity(tau, tau);
  Eigen::LLT<cmat> llt_inner(inner);
  if (llt_inner.info() != Eigen::Success) {
    throw convergence_error("lmmse_estimate: singular inner matrix");
  }
  cvec h1 = R * (preamble.X.adjoint() * llt_inner.solve(y));

  // Estimate-space form.
  cmat small = noise_var * R_inv + gram;
  Eigen::LLT<cmat> llt_small(small);
  if (llt_small.info() != Eigen::Success) {
    throw convergence_error("lmmse_estimate: singular inner matrix");
  }
  cvec h2 = llt_small.solve(preamble.X.adjoint() * y);

  double scale = std::max(1.0, h2.norm());
  if ((h1 - h2).norm() > 1e-10 * scale) {
    throw convergence_error("lmmse_estimate: algebraic forms disagree beyond tolerance");
  }

  Estimate est;
  est.h_hat = h2;
  est.k = preamble.k;
  est.kind = EstimatorKind::LMMSE;
  cmat ec = noise_var * llt_small.solve(cmat::Identity(m, m));
  est.error_cov = 0.5 * (ec + ec.adjoint());
  return est;
}

PartialFeedback partial_feedback(const Estimate& est, int q) {
  const auto m = est.h_hat.size();
  if (q < 1 || q > m) throw std::invalid_argument("partial_feedback: q out of range");
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    double na = std::norm(est.h_hat(a));
    double nb = std::norm(est.h_hat(b));
    if (na != nb) return na > nb;
    return a < b;
  });
  PartialFeedback fb;
  fb.values = cvec(q);
  fb.indices.assign(order.begin(), order.begin() + q);
  for (int i = 0; i < q; ++i) fb.values(i) = est.h_hat(fb.indices[i]);
  return fb;
}

}  // namespace wpt
