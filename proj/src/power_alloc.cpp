#include "wpt/power_alloc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "wpt/beamforming.hpp"
#include "wpt/mathutil.hpp"

namespace wpt {

namespace {

std::string fmt_g(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

// Stop/continue split of one bin [a, b) under a sorted threshold list whose
// regions alternate starting with continue below the first threshold.
struct BinSplit {
  double stop_len = 0.0;
  double cont_len = 0.0;
  std::vector<std::pair<double, double>> cont_segs;
};

BinSplit split_bin(const std::vector<double>& thr, double a, double b) {
  std::vector<double> pts{a};
  for (double t : thr) {
    if (t > a && t < b) pts.push_back(t);
  }
  pts.push_back(b);
  BinSplit out;
  auto base = static_cast<std::size_t>(std::upper_bound(thr.begin(), thr.end(), a) - thr.begin());
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    double len = pts[i + 1] - pts[i];
    if ((base + i) % 2 == 1) {
      out.stop_len += len;
    } else {
      out.cont_len += len;
      out.cont_segs.emplace_back(pts[i], pts[i + 1]);
    }
  }
  return out;
}

struct Item {
  int kappa = 0;
  int bin = 0;
  double v_lo = 0.0;
  double v_hi = 0.0;
  double mass = 0.0;
  double cost = 0.0;
  double eta = 0.0;
};

// Shared greedy fill: full cap by descending efficiency until the budget
// binds, a fractional power at the marginal item, zero afterwards. Exactly
// the fractional-knapsack optimum of the allocation linear program.
AllocationPlan fill_plan(std::vector<Item> items, AllocMode mode, double P1, double P2,
                         const StoppingDistribution& dist) {
  if (!(P1 > 0.0)) throw config_error("allocate: power cap P1 must be > 0");
  if (!(P2 > 0.0)) throw config_error("allocate: energy budget P2 must be > 0");
  std::sort(items.begin(), items.end(), [](const Item& x, const Item& y) {
    if (x.eta != y.eta) return x.eta > y.eta;
    if (x.kappa != y.kappa) return x.kappa < y.kappa;
    return x.bin < y.bin;
  });

  AllocationPlan plan;
  plan.mode = mode;
  plan.P1 = P1;
  plan.P2 = P2;
  plan.delta = dist.delta;
  plan.bins = dist.bins;
  plan.power.assign(dist.mass.size(), std::vector<double>(dist.bins, 0.0));

  double budget = P2;
  NeumaierSum objective, spend;
  for (const Item& it : items) {
    double unit = it.mass * it.cost;  // energy spent per unit power
    double p = 0.0;
    if (budget > 0.0) {
      double full = unit * P1;
      if (budget >= full) {
        p = P1;
        budget -= full;
      } else {
        p = budget / unit;
        budget = 0.0;
      }
    }
    if (p < P1 && plan.kappa_star < 0) {
      plan.eta_star = it.eta;
      plan.kappa_star = it.kappa;
      plan.v_lo_star = it.v_lo;
      plan.v_hi_star = it.v_hi;
      plan.p_star = p;
    }
    objective.add(unit * it.eta * p);
    spend.add(unit * p);
    if (it.bin < 0) {
      std::fill(plan.power[it.kappa].begin(), plan.power[it.kappa].end(), p);
    } else {
      plan.power[it.kappa][it.bin] = p;
    }
    PlanBin pb;
    pb.kappa = it.kappa;
    pb.v_lo = it.v_lo;
    pb.v_hi = it.v_hi;
    pb.mass = it.mass;
    pb.eta = it.eta;
    pb.power = p;
    plan.support.push_back(pb);
  }
  std::sort(plan.support.begin(), plan.support.end(), [](const PlanBin& x, const PlanBin& y) {
    if (x.kappa != y.kappa) return x.kappa < y.kappa;
    return x.v_lo < y.v_lo;
  });
  plan.objective = objective.value();
  plan.spend = spend.value();
  return plan;
}

void check_dist(const StoppingDistribution& dist) {
  if (dist.mass.empty() || dist.bins <= 0 || !(dist.delta > 0.0)) {
    throw config_error("allocate: empty stopping distribution");
  }
}

void fill_efficiency(AllocationPlan& plan, const FrameConfig& cfg, double noise_var) {
  plan.eff_b.resize(plan.power.size());
  plan.eff_c.resize(plan.power.size());
  for (int k = 0; k < static_cast<int>(plan.power.size()); ++k) {
    StopEnergyCoeffs c = stop_energy_coeffs(k, cfg, noise_var);
    plan.eff_b[k] = c.B;
    plan.eff_c[k] = c.C;
  }
}

}  // namespace

double StoppingDistribution::total_mass() const {
  NeumaierSum s;
  for (const auto& row : mass) {
    for (double x : row) s.add(x);
  }
  return s.value();
}

std::vector<double> StoppingDistribution::slot_mass() const {
  std::vector<double> q(mass.size(), 0.0);
  for (std::size_t k = 0; k < mass.size(); ++k) {
    NeumaierSum s;
    for (double x : mass[k]) s.add(x);
    q[k] = s.value();
  }
  return q;
}

StoppingDistribution stopping_distribution(const PolicyTable& policy, const ChannelModel& model,
                                           const FrameConfig& cfg, double delta, int bins,
                                           DistMethod method, long n_frames, std::uint64_t seed,
                                           int threads) {
  cfg.validate();
  model.validate();
  if (policy.m != cfg.m || policy.N != cfg.N ||
      static_cast<int>(policy.thresholds.size()) != cfg.N) {
    throw config_error("stopping_distribution: policy does not match the frame config");
  }
  if (std::abs(policy.noise_var - model.noise_var) >
      1e-12 * std::max(1.0, model.noise_var)) {
    throw config_error("stopping_distribution: policy/model noise mismatch");
  }
  if (!model.normalized_uncorrelated()) {
    throw config_error("stopping_distribution: model must be normalized uncorrelated");
  }

  int m = cfg.m;
  double s2 = model.noise_var;
  if (bins <= 0) bins = 512;
  if (delta <= 0.0) {
    // The slot-1 marginal has the widest spread of any reachable estimate
    // power, so its far quantile bounds where stopped mass can land.
    delta = gamma_quantile(m, 1.0 + m * s2, 1.0 - 1e-6) / bins;
  }

  StoppingDistribution out;
  out.delta = delta;
  out.bins = bins;
  out.method = method;
  out.mass.assign(cfg.N, std::vector<double>(bins, 0.0));

  if (method == DistMethod::MonteCarlo) {
    if (n_frames < 1) throw config_error("stopping_distribution: n_frames must be >= 1");
    int nchunks = static_cast<int>(std::min<long>(resolve_threads(threads), n_frames));
    std::vector<std::vector<std::vector<std::uint64_t>>> counts(
        nchunks, std::vector<std::vector<std::uint64_t>>(cfg.N,
                                                         std::vector<std::uint64_t>(bins, 0)));
    long chunk = (n_frames + nchunks - 1) / nchunks;
    parallel_for(nchunks, threads, [&](int c) {
      long lo = c * chunk;
      long hi = std::min(n_frames, lo + chunk);
      for (long f = lo; f < hi; ++f) {
        RngStream rng = substream(seed, static_cast<std::uint64_t>(f), 17);
        PolicyRun run = simulate_policy(policy, model, cfg, rng);
        int bin = 0;
        if (run.kappa > 0) {
          bin = std::min(static_cast<int>(run.v_stop / delta), bins - 1);
        }
        counts[c][run.kappa][bin] += 1;
      }
    });
    for (int c = 0; c < nchunks; ++c) {
      for (int k = 0; k < cfg.N; ++k) {
        for (int j = 0; j < bins; ++j) {
          out.mass[k][j] +=
              static_cast<double>(counts[c][k][j]) / static_cast<double>(n_frames);
        }
      }
    }
    return out;
  }

  // Forward propagation. Slot 0 has a single state: either everything stops
  // unestimated or everything continues into the slot-1 marginal.
  if (decide(policy, 0.0, 0, Decision::Continue) == Decision::Stop) {
    out.mass[0][0] = 1.0;
    return out;
  }
  double beta = 1.0 + m * s2;
  std::vector<double> alive(bins, 0.0);
  for (int j = 0; j < bins; ++j) {
    alive[j] = reg_gamma_lower(m, (j + 1) * delta / beta) - reg_gamma_lower(m, j * delta / beta);
  }
  alive[bins - 1] += 1.0 - reg_gamma_lower(m, bins * delta / beta);

  std::vector<double> cont(bins);
  std::vector<std::vector<std::pair<double, double>>> segs(bins);
  double top = bins * delta;
  for (int k = 1; k < cfg.N; ++k) {
    const std::vector<double>& thr = policy.thresholds[k];
    for (int j = 0; j < bins; ++j) {
      cont[j] = 0.0;
      segs[j].clear();
      if (alive[j] <= 0.0) continue;
      BinSplit split = split_bin(thr, j * delta, (j + 1) * delta);
      double stop_frac = split.stop_len / delta;
      out.mass[k][j] += alive[j] * stop_frac;
      cont[j] = alive[j] * (1.0 - stop_frac);
      segs[j] = std::move(split.cont_segs);
    }
    if (k == cfg.N - 1) break;  // the final slot stops everywhere

    TransitionStats ts = estimate_transition_stats(k, model);
    double sc = ts.mean_scale * ts.mean_scale;
    std::vector<double> next(bins, 0.0);
    double cont_total = 0.0;

    // Spread one point mass through the transition kernel. Composite Simpson
    // with panels no wider than half the kernel sd, so the rule resolves the
    // kernel even when it is much narrower than a destination bin (the
    // kernel sharpens as the estimate converges).
    auto scatter = [&](double v_rep, double mass) {
      double theta = 2.0 * sc * v_rep / ts.var;
      double mu = m * ts.var + sc * v_rep;
      double sd = ts.var * std::sqrt(m + theta);
      double lo = std::max(0.0, mu - 16.0 * sd);
      double hi = mu + 16.0 * sd;
      double h_max = 0.5 * sd;
      auto segment = [&](double a, double b) {
        int panels = std::max(1, static_cast<int>(std::ceil((b - a) / h_max)));
        double h = (b - a) / panels;
        NeumaierSum s;
        for (int p = 0; p < panels; ++p) {
          double x = a + p * h;
          s.add((h / 6.0) * (scaled_noncentral_chisq_pdf(x, m, theta, ts.var) +
                             4.0 * scaled_noncentral_chisq_pdf(x + 0.5 * h, m, theta, ts.var) +
                             scaled_noncentral_chisq_pdf(x + h, m, theta, ts.var)));
        }
        return s.value();
      };
      int j_lo = std::min(static_cast<int>(lo / delta), bins - 1);
      int j_hi = std::min(static_cast<int>(hi / delta), bins - 1);
      for (int j = j_lo; j <= j_hi; ++j) {
        double a = std::max(lo, j * delta);
        double b = std::min(hi, (j + 1) * delta);
        if (b > a) next[j] += mass * segment(a, b);
      }
      // Kernel mass beyond the grid top lands in the top bin.
      if (hi > top) next[bins - 1] += mass * segment(std::max(lo, top), hi);
    };

    for (int i = 0; i < bins; ++i) {
      if (cont[i] <= 0.0) continue;
      cont_total += cont[i];
      double cl = 0.0;
      for (const auto& seg : segs[i]) cl += seg.second - seg.first;
      for (const auto& seg : segs[i]) {
        double len = seg.second - seg.first;
        if (len <= 0.0) continue;
        // Surviving mass is taken uniform within the bin; split wide
        // segments so each representative sees a locally constant kernel.
        double vm = 0.5 * (seg.first + seg.second);
        double sd_mid = ts.var * std::sqrt(m + 2.0 * sc * vm / ts.var);
        int nseg = std::clamp(static_cast<int>(std::ceil(len / (0.5 * sd_mid))), 1, 64);
        double piece = len / nseg;
        for (int t = 0; t < nseg; ++t) {
          scatter(seg.first + (t + 0.5) * piece, cont[i] * piece / cl);
        }
      }
    }
    if (cont_total <= 0.0) break;
    double next_total = 0.0;
    for (double x : next) next_total += x;
    next[bins - 1] += std::max(0.0, cont_total - next_total);
    alive.swap(next);
  }
  return out;
}

StoppingDistribution fixed_stop_distribution(int kappa, const ChannelModel& model,
                                             const FrameConfig& cfg, double delta, int bins) {
  cfg.validate();
  model.validate();
  if (kappa < 0 || kappa >= cfg.N) {
    throw config_error("fixed_stop_distribution: kappa out of range");
  }
  if (!model.normalized_uncorrelated()) {
    throw config_error("fixed_stop_distribution: model must be normalized uncorrelated");
  }
  int m = cfg.m;
  double s2 = model.noise_var;
  if (bins <= 0) bins = 512;
  if (delta <= 0.0) {
    double scale = kappa >= 1 ? (kappa + m * s2) / kappa : 1.0 + m * s2;
    delta = gamma_quantile(m, scale, 0.9999) / bins;
  }
  StoppingDistribution out;
  out.delta = delta;
  out.bins = bins;
  out.method = DistMethod::Forward;
  out.mass.assign(cfg.N, std::vector<double>(bins, 0.0));
  if (kappa == 0) {
    out.mass[0][0] = 1.0;
    return out;
  }
  for (int j = 0; j < bins; ++j) {
    out.mass[kappa][j] = estimate_power_marginal_cdf((j + 1) * delta, kappa, model) -
                         estimate_power_marginal_cdf(j * delta, kappa, model);
  }
  out.mass[kappa][bins - 1] += 1.0 - estimate_power_marginal_cdf(bins * delta, kappa, model);
  return out;
}

double efficiency(double v, int kappa, const FrameConfig& cfg, double noise_var) {
  if (kappa < 0 || kappa >= cfg.N) throw config_error("efficiency: need 0 <= kappa < N");
  if (!(v >= 0.0)) throw config_error("efficiency: v must be >= 0");
  StopEnergyCoeffs c = stop_energy_coeffs(kappa, cfg, noise_var);
  return c.B + c.C * v;
}

AllocationPlan allocate_lcpa(const StoppingDistribution& dist, double P1, double P2,
                             const FrameConfig& cfg, double noise_var) {
  check_dist(dist);
  std::vector<Item> items;
  for (int k = 0; k < static_cast<int>(dist.mass.size()); ++k) {
    double cost = static_cast<double>(cfg.m) * (cfg.N - k);
    for (int j = 0; j < dist.bins; ++j) {
      if (dist.mass[k][j] <= 0.0) continue;
      Item it;
      it.kappa = k;
      it.bin = j;
      it.v_lo = j * dist.delta;
      it.v_hi = (j + 1) * dist.delta;
      it.mass = dist.mass[k][j];
      it.cost = cost;
      it.eta = efficiency(k == 0 ? 0.0 : it.v_lo + 0.5 * dist.delta, k, cfg, noise_var);
      items.push_back(it);
    }
  }
  AllocationPlan plan = fill_plan(std::move(items), AllocMode::LCPA, P1, P2, dist);
  fill_efficiency(plan, cfg, noise_var);
  return plan;
}

AllocationPlan allocate_lpa(const StoppingDistribution& dist, double P1, double P2,
                            const FrameConfig& cfg, double noise_var) {
  check_dist(dist);
  std::vector<Item> items;
  for (int k = 0; k < static_cast<int>(dist.mass.size()); ++k) {
    NeumaierSum qk, harv;
    for (int j = 0; j < dist.bins; ++j) {
      double mm = dist.mass[k][j];
      if (mm <= 0.0) continue;
      qk.add(mm);
      harv.add(mm * efficiency(k == 0 ? 0.0 : (j + 0.5) * dist.delta, k, cfg, noise_var));
    }
    if (qk.value() <= 0.0) continue;
    Item it;
    it.kappa = k;
    it.bin = -1;  // power constant across v within the slot
    it.v_lo = 0.0;
    it.v_hi = dist.bins * dist.delta;
    it.mass = qk.value();
    it.cost = static_cast<double>(cfg.m) * (cfg.N - k);
    it.eta = harv.value() / qk.value();
    items.push_back(it);
  }
  return fill_plan(std::move(items), AllocMode::LPA, P1, P2, dist);
}

AllocationPlan allocate_cpa(const StoppingDistribution& v_dist, double P1, double P2,
                            const FrameConfig& cfg, double noise_var) {
  check_dist(v_dist);
  int support_slot = -1;
  for (int k = 0; k < static_cast<int>(v_dist.mass.size()); ++k) {
    for (double x : v_dist.mass[k]) {
      if (x > 0.0) {
        if (support_slot >= 0 && support_slot != k) {
          throw config_error("allocate_cpa: distribution must be supported on a single slot");
        }
        support_slot = k;
        break;
      }
    }
  }
  if (support_slot < 0) throw config_error("allocate_cpa: empty distribution");

  std::vector<Item> items;
  double cost = static_cast<double>(cfg.m) * (cfg.N - support_slot);
  for (int j = 0; j < v_dist.bins; ++j) {
    if (v_dist.mass[support_slot][j] <= 0.0) continue;
    Item it;
    it.kappa = support_slot;
    it.bin = j;
    it.v_lo = j * v_dist.delta;
    it.v_hi = (j + 1) * v_dist.delta;
    it.mass = v_dist.mass[support_slot][j];
    it.cost = cost;
    it.eta = efficiency(support_slot == 0 ? 0.0 : it.v_lo + 0.5 * v_dist.delta, support_slot,
                        cfg, noise_var);
    items.push_back(it);
  }
  AllocationPlan plan = fill_plan(std::move(items), AllocMode::CPA, P1, P2, v_dist);
  fill_efficiency(plan, cfg, noise_var);
  return plan;
}

double AllocationPlan::power_at(int kappa, double v) const {
  if (kappa < 0 || kappa >= static_cast<int>(power.size())) {
    throw config_error("power_at: kappa out of range");
  }
  if (!eff_b.empty()) {
    if (kappa == kappa_star && v >= v_lo_star && v < v_hi_star) return p_star;
    double eta = eff_b[kappa] + eff_c[kappa] * v;
    return eta > eta_star ? P1 : 0.0;
  }
  int bin = 0;
  if (v > 0.0) {
    bin = std::min(static_cast<int>(v / delta), bins - 1);
  }
  return power[kappa][bin];
}

std::string AllocationPlan::to_csv() const {
  std::string out = "kappa,v_lo,v_hi,power\n";
  for (const PlanBin& b : support) {
    out += std::to_string(b.kappa) + "," + fmt_g(b.v_lo) + "," + fmt_g(b.v_hi) + "," +
           fmt_g(b.power) + "\n";
  }
  return out;
}

LpResult brute_force_lp(const std::vector<LpBin>& bins, double P1, double P2) {
  if (!(P1 > 0.0)) throw config_error("brute_force_lp: power cap P1 must be > 0");
  if (!(P2 > 0.0)) throw config_error("brute_force_lp: energy budget P2 must be > 0");
  int n = static_cast<int>(bins.size());
  std::vector<double> u(n);
  for (int i = 0; i < n; ++i) u[i] = bins[i].mass * bins[i].cost * P1;

  // Fractional-knapsack greedy on x_i = mass_i cost_i p_i.
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (bins[a].eta != bins[b].eta) return bins[a].eta > bins[b].eta;
    return a < b;
  });
  std::vector<double> x(n, 0.0);
  double budget = P2;
  for (int i : order) {
    if (budget <= 0.0) break;
    x[i] = std::min(u[i], budget);
    budget -= x[i];
  }
  auto objective_of = [&](const std::vector<double>& xs) {
    NeumaierSum s;
    for (int i = 0; i < n; ++i) s.add(bins[i].eta * xs[i]);
    return s.value();
  };
  LpResult greedy;
  greedy.objective = objective_of(x);
  greedy.power.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    if (u[i] > 0.0) greedy.power[i] = x[i] / (bins[i].mass * bins[i].cost);
  }
  if (n > 15) return greedy;

  // Vertex enumeration: every optimum has each variable at a bound except at
  // most one fractional coordinate where the budget binds.
  double best_obj = -1.0;
  std::uint32_t best_mask = 0;
  int best_frac = -1;
  double best_x = 0.0;
  double tol = 1e-12 * std::max(1.0, P2);
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    double used = 0.0, base = 0.0;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        used += u[i];
        base += bins[i].eta * u[i];
      }
    }
    if (used > P2 + tol) continue;
    if (base > best_obj) {
      best_obj = base;
      best_mask = mask;
      best_frac = -1;
    }
    double slack = P2 - used;
    if (slack <= 0.0) continue;
    for (int j = 0; j < n; ++j) {
      if (mask & (1u << j)) continue;
      double xj = std::min(u[j], slack);
      double obj = base + bins[j].eta * xj;
      if (obj > best_obj) {
        best_obj = obj;
        best_mask = mask;
        best_frac = j;
        best_x = xj;
      }
    }
  }
  LpResult out;
  out.objective = best_obj;
  out.power.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    if ((best_mask & (1u << i)) && u[i] > 0.0) out.power[i] = P1;
  }
  if (best_frac >= 0 && u[best_frac] > 0.0) {
    out.power[best_frac] = best_x / (bins[best_frac].mass * bins[best_frac].cost);
  }
  return out;
}

}  // namespace wpt
