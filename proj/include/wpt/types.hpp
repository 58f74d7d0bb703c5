#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace wpt {

using cvec = Eigen::VectorXcd;
using cmat = Eigen::MatrixXcd;
using rvec = Eigen::VectorXd;
using rmat = Eigen::MatrixXd;

// Raised for invalid configuration or inconsistent inputs. CLI exit code 2.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when an iterative routine fails to reach its target accuracy
// or a grid cannot cover the required probability mass. CLI exit code 3.
struct convergence_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Frame layout: T symbols total, split into N slots of m symbols each.
// Slot k in [0, N-1] spent on estimation leaves m*(N-k) symbols for transfer.
struct FrameConfig {
  int T = 0;
  int N = 0;
  int m = 0;

  void validate() const {
    if (m < 1) throw config_error("FrameConfig: m must be >= 1");
    if (N < 1) throw config_error("FrameConfig: N must be >= 1");
    if (T != m * N) throw config_error("FrameConfig: T must equal m*N");
  }
};

}  // namespace wpt
