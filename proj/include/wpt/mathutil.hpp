#pragma once

#include <algorithm>
#include <cmath>
#include <thread>
#include <utility>
#include <vector>

namespace wpt {

// Worker count: explicit request, or the hardware concurrency when 0.
inline int resolve_threads(int threads) {
  if (threads > 0) return threads;
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs fn(i) for i in [0, n) on contiguous chunks. Each index writes only its
// own outputs, so results are identical for any thread count.
template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  threads = std::min(resolve_threads(threads), std::max(1, n));
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  int chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    int lo = t * chunk;
    int hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn]() {
      for (int i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

// log of the modified Bessel function I_nu(z), nu >= 0, z >= 0.
// Power series for small z, large-argument asymptotic expansion where it is
// safely convergent, and a log-domain series in between so no input in the
// supported range can overflow.
double log_bessel_i(double nu, double z);

// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double reg_gamma_lower(double a, double x);

// Quantile of the Gamma(shape, scale) distribution.
double gamma_quantile(double shape, double scale, double p);

// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
// Results are cached per n.
const std::pair<std::vector<double>, std::vector<double>>& gauss_legendre(int n);

// Neumaier compensated summation; accurate for long alternating or
// wide-magnitude sums.
class NeumaierSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace wpt
