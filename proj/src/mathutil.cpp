#include "wpt/mathutil.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>

namespace wpt {

namespace {

constexpr double kPi = 3.14159265358979323846264338328;

// Direct series in the factored form I_nu(z) = (z/2)^nu / Gamma(nu+1) * S,
// S = sum_j c_j with c_0 = 1 and c_{j+1} = c_j * (z^2/4) / ((j+1)(nu+j+1)).
// Terms are positive, so plain accumulation is stable. Safe while the peak
// term fits in double range, which holds for the z <= 30 branch.
double log_bessel_series_direct(double nu, double z) {
  double q = 0.25 * z * z;
  double term = 1.0;
  double sum = 1.0;
  for (int j = 0; j < 2000; ++j) {
    term *= q / ((j + 1.0) * (nu + j + 1.0));
    sum += term;
    if (term < sum * 1e-18) break;
  }
  return nu * std::log(0.5 * z) - std::lgamma(nu + 1.0) + std::log(sum);
}

// Same series accumulated in the log domain with running rescaling, for the
// region where z is large but the asymptotic expansion is not yet usable.
double log_bessel_series_log(double nu, double z) {
  double log_half_z = std::log(0.5 * z);
  double max_log = -std::numeric_limits<double>::infinity();
  double scaled_sum = 0.0;
  // Term magnitudes peak near j ~ z/2; continue a safe margin past the peak.
  int j_peak = static_cast<int>(0.5 * z) + 1;
  for (int j = 0; j < j_peak + 4000; ++j) {
    double lt = (2.0 * j + nu) * log_half_z - std::lgamma(j + 1.0) -
                std::lgamma(j + nu + 1.0);
    if (lt > max_log) {
      scaled_sum = scaled_sum * std::exp(max_log - lt) + 1.0;
      max_log = lt;
    } else {
      scaled_sum += std::exp(lt - max_log);
      if (j > j_peak && lt < max_log - 45.0) break;
    }
  }
  return max_log + std::log(scaled_sum);
}

// Large-argument expansion I_nu(z) ~ e^z / sqrt(2 pi z) * sum_k t_k with
// t_0 = 1 and t_k = -t_{k-1} (4 nu^2 - (2k-1)^2) / (8 k z). Truncated at the
// smallest term; only called where the leading ratio is well below one.
double log_bessel_asymptotic(double nu, double z) {
  double mu = 4.0 * nu * nu;
  double term = 1.0;
  double sum = 1.0;
  double prev_abs = 1.0;
  for (int k = 1; k <= 60; ++k) {
    double f = 2.0 * k - 1.0;
    term *= -(mu - f * f) / (8.0 * k * z);
    if (std::abs(term) >= prev_abs) break;
    sum += term;
    prev_abs = std::abs(term);
    if (prev_abs < 1e-18 * std::abs(sum)) break;
  }
  return z - 0.5 * std::log(2.0 * kPi * z) + std::log(sum);
}

}  // namespace

double log_bessel_i(double nu, double z) {
  if (nu < 0.0 || z < 0.0 || !std::isfinite(nu) || !std::isfinite(z)) {
    throw std::invalid_argument("log_bessel_i: requires nu >= 0 and z >= 0");
  }
  if (z == 0.0) {
    return nu == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  if (z <= 30.0) return log_bessel_series_direct(nu, z);
  if (z >= 4.0 * nu * nu) return log_bessel_asymptotic(nu, z);
  return log_bessel_series_log(nu, z);
}

namespace {

[[noreturn]] void convergence_throw() {
  throw std::runtime_error("reg_gamma_lower: expansion failed to converge");
}

// Lower incomplete gamma by power series; valid and fast for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int n = 0; n < 10000; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) {
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
  }
  convergence_throw();
}

// Upper incomplete gamma by modified Lentz continued fraction; for x >= a + 1.
double gamma_q_contfrac(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 10000; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) {
      return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
  }
  convergence_throw();
}

}  // namespace

double reg_gamma_lower(double a, double x) {
  if (a <= 0.0 || x < 0.0) {
    throw std::invalid_argument("reg_gamma_lower: requires a > 0 and x >= 0");
  }
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_contfrac(a, x);
}

double gamma_quantile(double shape, double scale, double p) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw std::invalid_argument("gamma_quantile: requires 0 <= p < 1");
  }
  if (shape <= 0.0 || scale <= 0.0) {
    throw std::invalid_argument("gamma_quantile: requires shape, scale > 0");
  }
  if (p == 0.0) return 0.0;
  double lo = 0.0;
  double hi = shape + 10.0 * std::sqrt(shape) + 10.0;
  while (reg_gamma_lower(shape, hi) < p) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (reg_gamma_lower(shape, mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return scale * 0.5 * (lo + hi);
}

const std::pair<std::vector<double>, std::vector<double>>& gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: requires n >= 1");
  static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  std::vector<double> x(n), w(n);
  int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Chebyshev-based initial guess, then Newton on P_n.
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      double z1 = z;
      z = z1 - p0 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
  auto [pos, ok] = cache.emplace(n, std::make_pair(std::move(x), std::move(w)));
  (void)ok;
  return pos->second;
}

}  // namespace wpt
