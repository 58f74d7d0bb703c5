#include "wpt/dp_policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "wpt/beamforming.hpp"
#include "wpt/estimation.hpp"
#include "wpt/mathutil.hpp"

namespace wpt {

namespace {

// Crossing of the stop-now value against the stop-next-slot value at slot k,
// clamped at zero. Exact for the second-to-last slot, where continuing means
// stopping at the final slot; a good search-range predictor elsewhere.
double one_step_crossing(int k, const FrameConfig& cfg, double noise_var) {
  if (k < 0 || k > cfg.N - 2) {
    throw std::invalid_argument("one_step_crossing: k must be in [0, N-2]");
  }
  StopEnergyCoeffs c = stop_energy_coeffs(k, cfg, noise_var);
  double m = cfg.m;
  double kk = k;
  double num = c.A * c.B * c.G - c.D * c.F;
  double den = c.D * kk * kk * (k + 1 + m * noise_var) - c.A * c.C * c.G;
  if (den == 0.0) return 0.0;
  return std::max(0.0, num / den);
}

// Expectation machinery for one backward step. Holds the next slot's value
// samples and integrates them against the scalar transition density with a
// windowed composite Gauss-Legendre rule.
class ContinuationEvaluator {
 public:
  ContinuationEvaluator(const FrameConfig& cfg, double noise_var, double delta, int M)
      : m_(cfg.m), noise_var_(noise_var), delta_(delta), M_(M), v_top_(delta * M) {}

  static constexpr int kPanels = 2;
  static constexpr int kNodes = 96;
  static constexpr double kWindowSigmas = 16.0;

  double interp(const std::vector<double>& J, double v) const {
    if (v <= 0.0) return J[0];
    double u = v / delta_;
    if (u >= M_) return J[M_];
    int i = static_cast<int>(u);
    double t = u - i;
    return J[i] * (1.0 - t) + J[i + 1] * t;
  }

  // E[J_next(V') | V_k = v] for k >= 1; k = 0 integrates the marginal of V_1.
  double operator()(const std::vector<double>& J_next, double v, int k) const {
    double mean_scale = 0.0;
    double var = 0.0;
    double theta = 0.0;
    if (k == 0) {
      var = 1.0 + m_ * noise_var_;
    } else {
      double a = k + m_ * noise_var_;
      double b = k + 1 + m_ * noise_var_;
      mean_scale = k * b / ((k + 1.0) * a);
      var = m_ * noise_var_ * b / ((k + 1.0) * (k + 1.0) * a);
      theta = 2.0 * mean_scale * mean_scale * v / var;
    }
    double mu = var * (m_ + 0.5 * theta);
    double sd = var * std::sqrt(m_ + theta);
    double lo = std::max(0.0, mu - kWindowSigmas * sd);
    double hi_raw = mu + kWindowSigmas * sd;
    double hi = std::min(v_top_, hi_raw);
    if (!(hi > lo)) return J_next[M_];

    const auto& [nodes, weights] = gauss_legendre(kNodes);
    double acc = 0.0;
    double mass = 0.0;
    double panel = (hi - lo) / kPanels;
    for (int p = 0; p < kPanels; ++p) {
      double a = lo + p * panel;
      double half = 0.5 * panel;
      double mid = a + half;
      for (int i = 0; i < kNodes; ++i) {
        double x = mid + half * nodes[i];
        double f = scaled_noncentral_chisq_pdf(x, m_, theta, var) * weights[i] * half;
        mass += f;
        acc += f * interp(J_next, x);
      }
    }
    // Mass outside the window or beyond the grid takes the boundary value.
    double missing = std::max(0.0, 1.0 - mass);
    return acc + missing * interp(J_next, std::min(v_top_, hi_raw));
  }

 private:
  int m_;
  double noise_var_;
  double delta_;
  int M_;
  double v_top_;
};

}  // namespace

std::pair<ValueGrid, PolicyTable> solve_bellman(const FrameConfig& cfg,
                                                const ChannelModel& model,
                                                double delta, int M, int threads) {
  cfg.validate();
  model.validate();
  if (model.m != cfg.m) throw config_error("solve_bellman: cfg and model disagree on m");
  if (!(model.noise_var > 0.0)) throw config_error("solve_bellman: noise_var must be > 0");
  if (!model.normalized_uncorrelated()) {
    throw config_error("solve_bellman: requires a normalized uncorrelated model");
  }
  if (delta < 0.0 || M < 0) throw config_error("solve_bellman: delta and M must be >= 0");

  const int N = cfg.N;
  const double s2 = model.noise_var;
  // Slot 1 has the widest estimate-power marginal: Gamma(m, 1 + m*noise_var).
  double v_cov = gamma_quantile(cfg.m, 1.0 + cfg.m * s2, 0.9999);
  if (delta == 0.0) delta = v_cov / 2048.0;
  if (M == 0) {
    double reach = v_cov;
    for (int k = 1; k <= N - 2; ++k) {
      reach = std::max(reach, 1.3 * one_step_crossing(k, cfg, s2));
    }
    double m_needed = std::ceil(reach / delta);
    if (m_needed > 400000.0) {
      throw convergence_error(
          "solve_bellman: threshold search range needs a grid larger than 400000 points; "
          "increase delta");
    }
    M = static_cast<int>(m_needed);
  }
  int m_required = static_cast<int>(std::ceil(v_cov / delta));
  if (M < m_required) {
    std::ostringstream os;
    os << "solve_bellman: grid covers less than 99.99% of the estimate power mass; "
       << "M must be at least " << m_required << " at delta " << delta;
    throw config_error(os.str());
  }

  ValueGrid grid;
  grid.delta = delta;
  grid.M = M;
  grid.J.assign(N, std::vector<double>(M + 1, 0.0));

  PolicyTable policy;
  policy.m = cfg.m;
  policy.N = N;
  policy.noise_var = s2;
  policy.delta = delta;
  policy.M = M;
  policy.thresholds.assign(N, {});

  auto v_at = [delta](int i) { return delta * i; };

  // Final slot: stopping is forced, so the value is the stop value and the
  // whole positive axis is a stop region.
  for (int i = 0; i <= M; ++i) grid.J[N - 1][i] = expected_stop_energy(v_at(i), N - 1, cfg, s2);
  policy.thresholds[N - 1] = {0.0};

  if (N == 1) {
    policy.thresholds[0] = {0.0};
    return {std::move(grid), std::move(policy)};
  }

  ContinuationEvaluator cont(cfg, s2, delta, M);

  for (int k = N - 2; k >= 1; --k) {
    const std::vector<double>& J_next = grid.J[k + 1];
    std::vector<double> jbar(M + 1);
    parallel_for(M + 1, threads, [&](int i) { jbar[i] = cont(J_next, v_at(i), k); });

    std::vector<double>& row = grid.J[k];
    std::vector<double> gap(M + 1);
    for (int i = 0; i <= M; ++i) {
      double stop_val = expected_stop_energy(v_at(i), k, cfg, s2);
      gap[i] = stop_val - jbar[i];
      row[i] = std::max(stop_val, jbar[i]);
    }

    std::vector<double>& th = policy.thresholds[k];
    if (gap[0] >= 0.0) th.push_back(0.0);
    for (int i = 1; i <= M; ++i) {
      bool was_stop = gap[i - 1] >= 0.0;
      bool is_stop = gap[i] >= 0.0;
      if (was_stop == is_stop) continue;
      // Refine the crossing against the continuous continuation value.
      double lo = v_at(i - 1);
      double hi = v_at(i);
      bool lo_stop = was_stop;
      for (int it = 0; it < 80 && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
        double mid = 0.5 * (lo + hi);
        double g = expected_stop_energy(mid, k, cfg, s2) - cont(J_next, mid, k);
        if ((g >= 0.0) == lo_stop) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      th.push_back(0.5 * (lo + hi));
    }
  }

  // Slot 0 has no estimate: the state is the single point v = 0 and the
  // transition law is the slot-1 marginal, so the comparison is scalar.
  double jbar0 = cont(grid.J[1], 0.0, 0);
  double stop0 = expected_stop_energy(0.0, 0, cfg, s2);
  for (int i = 0; i <= M; ++i) grid.J[0][i] = std::max(stop0, jbar0);
  if (stop0 >= jbar0) policy.thresholds[0] = {0.0};

  return {std::move(grid), std::move(policy)};
}

std::pair<double, double> threshold_closed_form_last_two(const FrameConfig& cfg,
                                                         const ChannelModel& model) {
  cfg.validate();
  model.validate();
  if (cfg.N < 2) throw config_error("threshold_closed_form_last_two: requires N >= 2");
  if (!(model.noise_var > 0.0)) {
    throw config_error("threshold_closed_form_last_two: noise_var must be > 0");
  }
  return {0.0, one_step_crossing(cfg.N - 2, cfg, model.noise_var)};
}

Decision decide(const PolicyTable& policy, double v, int k, Decision prev_decision) {
  if (prev_decision == Decision::Stop) return Decision::Stop;
  if (k < 0 || k >= policy.N) throw std::invalid_argument("decide: k must be in [0, N-1]");
  if (!(v >= 0.0)) throw std::invalid_argument("decide: v must be >= 0");
  const auto& th = policy.thresholds[static_cast<size_t>(k)];
  auto it = std::upper_bound(th.begin(), th.end(), v);
  auto count = it - th.begin();
  return (count % 2 == 1) ? Decision::Stop : Decision::Continue;
}

PolicyRun simulate_policy(const PolicyTable& policy, const ChannelModel& model,
                          const FrameConfig& cfg, RngStream& rng) {
  cfg.validate();
  model.validate();
  if (policy.N != cfg.N || policy.m != cfg.m || model.m != cfg.m) {
    throw config_error("simulate_policy: policy, cfg and model disagree on dimensions");
  }
  if (std::abs(policy.noise_var - model.noise_var) >
      1e-12 * std::max(1.0, model.noise_var)) {
    throw config_error("simulate_policy: policy was solved for a different noise level");
  }
  if (!model.normalized_uncorrelated()) {
    throw config_error("simulate_policy: requires a normalized uncorrelated model");
  }

  cvec h = sample_channel(model, rng);
  const int m = cfg.m;
  const double root_m = std::sqrt(static_cast<double>(m));

  PolicyRun run;
  if (decide(policy, 0.0, 0, Decision::Continue) == Decision::Stop) {
    // Isotropic transmission on the first antenna over the whole frame.
    run.kappa = 0;
    run.v_stop = 0.0;
    run.energy = static_cast<double>(cfg.T) * std::norm(h(0));
    return run;
  }

  cvec h_hat = cvec::Zero(m);
  for (int k = 1; k < cfg.N; ++k) {
    cvec z(m);
    for (int i = 0; i < m; ++i) z(i) = rng.next_cnormal(model.noise_var);
    h_hat = ((k - 1.0) * h_hat + h + root_m * z) / static_cast<double>(k);
    double v = h_hat.squaredNorm();
    if (decide(policy, v, k, Decision::Continue) == Decision::Stop) {
      run.kappa = k;
      run.v_stop = v;
      double gain = v > 0.0 ? std::norm(h_hat.dot(h)) / v : std::norm(h(0));
      run.energy = static_cast<double>(m) * (cfg.N - k) * gain;
      return run;
    }
  }
  // Unreachable when the final slot threshold is 0, kept as a safeguard.
  run.kappa = cfg.N - 1;
  run.v_stop = h_hat.squaredNorm();
  double gain = run.v_stop > 0.0 ? std::norm(h_hat.dot(h)) / run.v_stop : std::norm(h(0));
  run.energy = static_cast<double>(m) * 1.0 * gain;
  return run;
}

std::string PolicyTable::to_json() const {
  nlohmann::json j;
  j["format_version"] = 1;
  j["m"] = m;
  j["N"] = N;
  j["noise_var"] = noise_var;
  j["delta"] = delta;
  j["M"] = M;
  j["thresholds"] = thresholds;
  return j.dump(2);
}

PolicyTable PolicyTable::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("PolicyTable: invalid JSON: ") + e.what());
  }
  PolicyTable p;
  try {
    if (j.at("format_version").get<int>() != 1) {
      throw config_error("PolicyTable: unsupported format_version");
    }
    p.m = j.at("m").get<int>();
    p.N = j.at("N").get<int>();
    p.noise_var = j.at("noise_var").get<double>();
    p.delta = j.at("delta").get<double>();
    p.M = j.at("M").get<int>();
    p.thresholds = j.at("thresholds").get<std::vector<std::vector<double>>>();
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("PolicyTable: missing or malformed field: ") + e.what());
  }
  if (static_cast<int>(p.thresholds.size()) != p.N) {
    throw config_error("PolicyTable: thresholds must have one list per slot");
  }
  for (const auto& th : p.thresholds) {
    if (!std::is_sorted(th.begin(), th.end())) {
      throw config_error("PolicyTable: threshold lists must be sorted ascending");
    }
  }
  return p;
}

void PolicyTable::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("PolicyTable: cannot open for writing: " + path);
  out << to_json() << "\n";
  if (!out) throw config_error("PolicyTable: write failed: " + path);
}

PolicyTable PolicyTable::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("PolicyTable: cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

}  // namespace wpt
