#include "wpt/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include <Eigen/Cholesky>

#include "json.hpp"
#include "wpt/beamforming.hpp"
#include "wpt/dp_policy.hpp"
#include "wpt/fixed_length.hpp"
#include "wpt/mathutil.hpp"
#include "wpt/power_alloc.hpp"

namespace wpt {

namespace {

using nlohmann::json;

constexpr std::uint64_t kSweepSalt = 0x9e3779b97f4a7c15ull;
constexpr std::uint64_t kMrtSalt = 0xa11c;

std::string fmt_g(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

enum class SchemeId { MRT, FwoPA, DYN, LCPA, LPA, CPA };

const char* scheme_name(SchemeId id) {
  switch (id) {
    case SchemeId::MRT: return "MRT";
    case SchemeId::FwoPA: return "FwoPA";
    case SchemeId::DYN: return "DYN";
    case SchemeId::LCPA: return "LCPA";
    case SchemeId::LPA: return "LPA";
    case SchemeId::CPA: return "CPA";
  }
  return "";
}

SchemeId parse_scheme(const std::string& name) {
  std::string low;
  for (char c : name) low.push_back(static_cast<char>(std::tolower(c)));
  if (low == "mrt") return SchemeId::MRT;
  if (low == "fwopa") return SchemeId::FwoPA;
  if (low == "dyn") return SchemeId::DYN;
  if (low == "lcpa") return SchemeId::LCPA;
  if (low == "lpa") return SchemeId::LPA;
  if (low == "cpa") return SchemeId::CPA;
  throw config_error("unknown scheme '" + name +
                     "' (valid: MRT, FwoPA, DYN, LCPA, LPA, CPA)");
}

struct SimContext {
  SimConfig cfg;  // resolved: q and scheme list filled in
  FrameConfig frame{};
  ChannelModel model;
  std::vector<SchemeId> ids;
  double P1abs = 0.0;
  double P2abs = 0.0;
  int kappa_F = 0;
  bool need_policy = false;

  PolicyTable policy;
  AllocationPlan lcpa, lpa, cpa;
  bool have_lcpa = false, have_lpa = false, have_cpa = false;

  bool lmmse_fixed = false;  // fixed-length estimates use the LMMSE filter
  cmat X1, XtH, lmmse_err;
  Eigen::LLT<cmat> llt_M;

  // Stopping at slot 0 transmits on the prior's dominant eigendirection over
  // the first q antennas (the posterior with no observations feeds back the
  // leading subset), matching the tau = 0 point of the numeric sweep.
  cvec w0;

  double mrt_delta = 0.0;
  std::vector<double> mrt_power;  // per ||h||^2 bin; empty -> constant P0
};

bool has(const std::vector<SchemeId>& ids, SchemeId id) {
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

SimContext build_context(const SimConfig& raw) {
  raw.validate();
  SimContext ctx;
  ctx.cfg = raw;
  if (ctx.cfg.q == 0) ctx.cfg.q = ctx.cfg.m;
  if (ctx.cfg.schemes.empty()) {
    ctx.cfg.schemes = {"MRT", "FwoPA", "DYN", "LCPA", "LPA", "CPA"};
  }
  for (std::string& s : ctx.cfg.schemes) {
    SchemeId id = parse_scheme(s);
    s = scheme_name(id);
    ctx.ids.push_back(id);
  }
  ctx.frame = ctx.cfg.frame();
  ctx.model = ctx.cfg.model();
  ctx.model.validate();

  const SimConfig& cfg = ctx.cfg;
  bool normalized = ctx.model.normalized_uncorrelated();
  ctx.need_policy = has(ctx.ids, SchemeId::DYN) || has(ctx.ids, SchemeId::LCPA) ||
                    has(ctx.ids, SchemeId::LPA);
  bool need_cpa = has(ctx.ids, SchemeId::CPA);
  bool need_fixed = has(ctx.ids, SchemeId::FwoPA) || need_cpa;

  // The threshold policy, the estimate-power transition law, and the
  // stopping-slot marginals are all derived for least-squares estimation on
  // the normalized uncorrelated channel; the schemes built on them are only
  // offered there.
  if ((ctx.need_policy || need_cpa) &&
      (!normalized || cfg.estimator != EstimatorKind::LS)) {
    throw config_error(
        "schemes DYN/LCPA/LPA/CPA require xi = 0, pathloss = 1 and estimator = ls");
  }

  if (need_fixed || cfg.P2 <= 0.0) {
    if (normalized) {
      TauResult tr = optimal_tau(cfg.T, cfg.m, ctx.cfg.q, cfg.noise_var, true);
      ctx.kappa_F = tr.tau_star / cfg.m;
    } else {
      long ns = std::max<long>(10000, cfg.sweep_samples);
      TauCurve tc = optimal_tau_numeric(ctx.model, cfg.estimator, ctx.cfg.q, ctx.frame, ns,
                                        cfg.seed ^ kSweepSalt, cfg.threads);
      ctx.kappa_F = tc.tau_star / cfg.m;
    }
  }
  ctx.P1abs = cfg.P1 * cfg.P0;
  ctx.P2abs = cfg.P2 > 0.0 ? cfg.P2
                           : cfg.P0 * cfg.m * (cfg.N - ctx.kappa_F);

  {
    Estimate empty = make_empty_estimate(cfg.m);
    cmat R0 = conditional_correlation_matrix(empty, ctx.model, ctx.cfg.q);
    ctx.w0 = optimal_beamformer(R0).w;
  }

  if (ctx.need_policy) {
    ctx.policy = solve_bellman(ctx.frame, ctx.model, cfg.grid_delta, cfg.grid_M,
                               cfg.threads).second;
    if (has(ctx.ids, SchemeId::LCPA) || has(ctx.ids, SchemeId::LPA)) {
      // The plans' waterlines are calibrated on a large seeded Monte Carlo
      // estimate of the stopping distribution (its own substream), putting
      // them on the same footing as the exact fixed-length marginal.
      long n_dist = std::max<long>(500000, cfg.n_frames);
      StoppingDistribution dist =
          stopping_distribution(ctx.policy, ctx.model, ctx.frame, 0.0, cfg.dist_bins,
                                DistMethod::MonteCarlo, n_dist, cfg.seed, cfg.threads);
      if (has(ctx.ids, SchemeId::LCPA)) {
        ctx.lcpa = allocate_lcpa(dist, ctx.P1abs, ctx.P2abs, ctx.frame, cfg.noise_var);
        ctx.have_lcpa = true;
      }
      if (has(ctx.ids, SchemeId::LPA)) {
        ctx.lpa = allocate_lpa(dist, ctx.P1abs, ctx.P2abs, ctx.frame, cfg.noise_var);
        ctx.have_lpa = true;
      }
    }
  }
  if (need_cpa) {
    StoppingDistribution vdist =
        fixed_stop_distribution(ctx.kappa_F, ctx.model, ctx.frame, 0.0, cfg.dist_bins);
    ctx.cpa = allocate_cpa(vdist, ctx.P1abs, ctx.P2abs, ctx.frame, cfg.noise_var);
    ctx.have_cpa = true;
  }

  if (has(ctx.ids, SchemeId::FwoPA) && cfg.estimator == EstimatorKind::LMMSE &&
      ctx.kappa_F >= 1) {
    // The waterfilling preamble has only m nonzero rows, so the filter acts
    // on an m-dimensional effective observation X1 h + z.
    cmat Reff = ctx.model.effective_covariance();
    Preamble pre = lmmse_preamble(Reff, ctx.kappa_F, cfg.noise_var);
    ctx.X1 = pre.X.topRows(cfg.m);
    ctx.XtH = ctx.X1.adjoint();
    Eigen::LLT<cmat> llt_R(Reff);
    cmat M = cfg.noise_var * llt_R.solve(cmat::Identity(cfg.m, cfg.m)) + ctx.XtH * ctx.X1;
    M = 0.5 * (M + cmat(M.adjoint()));
    ctx.llt_M.compute(M);
    if (ctx.llt_M.info() != Eigen::Success) {
      throw convergence_error("harness: estimator normal matrix not PD");
    }
    ctx.lmmse_err = cfg.noise_var * ctx.llt_M.solve(cmat::Identity(cfg.m, cfg.m));
    ctx.lmmse_fixed = true;
  }

  if (has(ctx.ids, SchemeId::MRT) && ctx.P1abs > cfg.P0) {
    // Offline waterline over the perfect-CSI channel power, built from a
    // seeded pre-pass so the plan is deterministic and independent of the
    // simulated frames.
    const long n_pre = 200000;
    std::vector<double> g(n_pre);
    for (long i = 0; i < n_pre; ++i) {
      RngStream rng = substream(cfg.seed, static_cast<std::uint64_t>(i), kMrtSalt);
      g[i] = sample_channel(ctx.model, rng).squaredNorm();
    }
    std::vector<double> sorted = g;
    std::sort(sorted.begin(), sorted.end());
    double top = sorted[static_cast<std::size_t>(0.9999 * (n_pre - 1))];
    int bins = cfg.dist_bins;
    ctx.mrt_delta = std::max(top, 1e-12) / (bins - 1);
    std::vector<LpBin> lp(bins);
    double cost = static_cast<double>(cfg.m) * cfg.N;
    for (int j = 0; j < bins; ++j) {
      lp[j].cost = cost;
      lp[j].eta = (j + 0.5) * ctx.mrt_delta;
    }
    for (long i = 0; i < n_pre; ++i) {
      int j = std::min(static_cast<int>(g[i] / ctx.mrt_delta), bins - 1);
      lp[j].mass += 1.0 / static_cast<double>(n_pre);
    }
    ctx.mrt_power = brute_force_lp(lp, ctx.P1abs, ctx.P2abs).power;
  }
  return ctx;
}

struct Accum {
  NeumaierSum e, e2, sp;
  std::vector<long> kap;
};

std::vector<SchemeReport> compare_engine(const SimContext& ctx) {
  const SimConfig& cfg = ctx.cfg;
  const int S = static_cast<int>(ctx.ids.size());
  const int m = cfg.m;
  const int N = cfg.N;
  const int q = cfg.q;
  const double s2 = cfg.noise_var;
  const double sqm = std::sqrt(static_cast<double>(m));
  const long n = cfg.n_frames;
  const long kChunk = 4096;
  const int nchunks = static_cast<int>((n + kChunk - 1) / kChunk);

  std::vector<std::vector<Accum>> parts(nchunks, std::vector<Accum>(S));
  for (auto& row : parts) {
    for (Accum& a : row) a.kap.assign(N, 0);
  }

  // Whether slot 0 already stops under the policy (no estimation at all).
  bool stop_at_zero = false;
  if (ctx.need_policy) {
    stop_at_zero = decide(ctx.policy, 0.0, 0, Decision::Continue) == Decision::Stop;
  }

  parallel_for(nchunks, cfg.threads, [&](int c) {
    cmat path(m, N);
    std::vector<double> v(N, 0.0);
    cvec h(m), z(m), z1(m), cur(m);

    for (long f = c * kChunk; f < std::min(n, (c + 1) * kChunk); ++f) {
      RngStream rng = substream(cfg.seed, static_cast<std::uint64_t>(f), 0);
      h = sample_channel(ctx.model, rng);
      // Least-squares estimate path. Drawn for every frame regardless of the
      // scheme list, so frame f's randomness depends only on seed and model.
      cur.setZero();
      for (int k = 1; k < N; ++k) {
        for (int j = 0; j < m; ++j) z(j) = rng.next_cnormal(s2);
        if (k == 1) z1 = z;
        cur = (static_cast<double>(k - 1) * cur + h + sqm * z) / static_cast<double>(k);
        path.col(k) = cur;
        v[k] = cur.squaredNorm();
      }

      int kappa_D = 0;
      if (ctx.need_policy && !stop_at_zero) {
        for (int k = 1; k < N; ++k) {
          kappa_D = k;
          if (decide(ctx.policy, v[k], k, Decision::Continue) == Decision::Stop) break;
        }
      }

      // Realized per-symbol gains, at most two distinct stopping slots per
      // frame. Slot 0 transmits on a fixed antenna.
      int gk1 = -1, gk2 = -1;
      double gv1 = 0.0, gv2 = 0.0;
      auto beamformed_gain = [&](const Estimate& est) {
        PartialFeedback fb = partial_feedback(est, q);
        cmat rc = conditional_correlation_matrix(est, ctx.model, q);
        cvec w = optimal_beamformer(rc).w;
        std::complex<double> dot = 0.0;
        for (int j = 0; j < q; ++j) dot += std::conj(w(j)) * h(fb.indices[j]);
        return std::norm(dot);
      };
      auto gain_ls = [&](int kappa) {
        if (kappa == 0) return std::norm(ctx.w0.dot(h.head(q)));
        if (kappa == gk1) return gv1;
        if (kappa == gk2) return gv2;
        Estimate est;
        est.h_hat = path.col(kappa);
        est.k = kappa;
        est.kind = EstimatorKind::LS;
        est.error_cov = (m * s2 / kappa) * cmat::Identity(m, m);
        double g = beamformed_gain(est);
        if (gk1 < 0) {
          gk1 = kappa;
          gv1 = g;
        } else {
          gk2 = kappa;
          gv2 = g;
        }
        return g;
      };
      auto gain_fixed = [&]() {
        if (ctx.kappa_F == 0) return std::norm(ctx.w0.dot(h.head(q)));
        if (!ctx.lmmse_fixed) return gain_ls(ctx.kappa_F);
        Estimate est;
        est.h_hat = ctx.llt_M.solve(ctx.XtH * (ctx.X1 * h + z1));
        est.k = ctx.kappa_F;
        est.kind = EstimatorKind::LMMSE;
        est.error_cov = ctx.lmmse_err;
        return beamformed_gain(est);
      };

      for (int s = 0; s < S; ++s) {
        double energy = 0.0, spend = 0.0;
        int kap = 0;
        switch (ctx.ids[s]) {
          case SchemeId::MRT: {
            double g = mrt_energy(h);
            double p = cfg.P0;
            if (!ctx.mrt_power.empty()) {
              int bin = std::min(static_cast<int>(g / ctx.mrt_delta),
                                 static_cast<int>(ctx.mrt_power.size()) - 1);
              p = ctx.mrt_power[bin];
            }
            double cost = static_cast<double>(m) * N;
            energy = p * g * cost;
            spend = p * cost;
            kap = 0;
            break;
          }
          case SchemeId::FwoPA: {
            kap = ctx.kappa_F;
            double cost = static_cast<double>(m) * (N - kap);
            energy = cfg.P0 * gain_fixed() * cost;
            spend = cfg.P0 * cost;
            break;
          }
          case SchemeId::DYN: {
            kap = kappa_D;
            double cost = static_cast<double>(m) * (N - kap);
            energy = cfg.P0 * gain_ls(kap) * cost;
            spend = cfg.P0 * cost;
            break;
          }
          case SchemeId::LCPA:
          case SchemeId::LPA: {
            kap = kappa_D;
            const AllocationPlan& plan =
                ctx.ids[s] == SchemeId::LCPA ? ctx.lcpa : ctx.lpa;
            double p = plan.power_at(kap, kap == 0 ? 0.0 : v[kap]);
            double cost = static_cast<double>(m) * (N - kap);
            energy = p * gain_ls(kap) * cost;
            spend = p * cost;
            break;
          }
          case SchemeId::CPA: {
            kap = ctx.kappa_F;
            double p = ctx.cpa.power_at(kap, kap == 0 ? 0.0 : v[kap]);
            double cost = static_cast<double>(m) * (N - kap);
            energy = p * gain_ls(kap) * cost;
            spend = p * cost;
            break;
          }
        }
        Accum& a = parts[c][s];
        a.e.add(energy);
        a.e2.add(energy * energy);
        a.sp.add(spend);
        a.kap[kap] += 1;
      }
    }
  });

  std::vector<SchemeReport> reports(S);
  for (int s = 0; s < S; ++s) {
    NeumaierSum e, e2, sp;
    std::vector<long> kap(N, 0);
    for (int c = 0; c < nchunks; ++c) {
      e.add(parts[c][s].e.value());
      e2.add(parts[c][s].e2.value());
      sp.add(parts[c][s].sp.value());
      for (int k = 0; k < N; ++k) kap[k] += parts[c][s].kap[k];
    }
    SchemeReport& rep = reports[s];
    rep.scheme = scheme_name(ctx.ids[s]);
    double nd = static_cast<double>(n);
    rep.mean_energy = e.value() / nd;
    double var = std::max(0.0, (e2.value() - nd * rep.mean_energy * rep.mean_energy) /
                                   (nd - 1.0));
    rep.se = std::sqrt(var / nd);
    rep.mean_spend = sp.value() / nd;
    rep.kappa_mass.resize(N);
    for (int k = 0; k < N; ++k) rep.kappa_mass[k] = static_cast<double>(kap[k]) / nd;
    if (ctx.ids[s] == SchemeId::FwoPA || ctx.ids[s] == SchemeId::CPA) {
      rep.kappa_fixed = ctx.kappa_F;
    }
    if (ctx.ids[s] == SchemeId::FwoPA && cfg.sweep) {
      TauCurve tc = optimal_tau_numeric(ctx.model, cfg.estimator, cfg.q, ctx.frame,
                                        std::max<long>(10000, cfg.sweep_samples),
                                        cfg.seed ^ kSweepSalt, cfg.threads);
      rep.sweep.tau = tc.tau;
      rep.sweep.mean.resize(tc.mean.size());
      rep.sweep.se.resize(tc.se.size());
      for (std::size_t i = 0; i < tc.mean.size(); ++i) {
        rep.sweep.mean[i] = cfg.P0 * tc.mean[i];
        rep.sweep.se[i] = cfg.P0 * tc.se[i];
      }
    }
  }
  return reports;
}

}  // namespace

ChannelModel SimConfig::model() const {
  ChannelModel model;
  model.m = m;
  model.R = make_exponential_covariance(m, xi);
  model.noise_var = noise_var;
  model.pathloss = pathloss;
  return model;
}

void SimConfig::validate() const {
  frame().validate();
  if (!(xi >= 0.0) || xi >= 1.0) throw config_error("config: xi must be in [0, 1)");
  if (!(noise_var > 0.0) || !std::isfinite(noise_var)) {
    throw config_error("config: noise_var must be positive");
  }
  if (!(pathloss > 0.0) || !std::isfinite(pathloss)) {
    throw config_error("config: pathloss must be positive");
  }
  if (q < 0 || q > m) throw config_error("config: q must be in [0, m] (0 = all antennas)");
  if (!(P0 > 0.0)) throw config_error("config: P0 must be positive");
  if (!(P1 >= 1.0)) throw config_error("config: P1 is a multiple of P0 and must be >= 1");
  if (P2 < 0.0) throw config_error("config: P2 must be >= 0 (0 = baseline spend)");
  if (n_frames < 1) throw config_error("config: n_frames must be >= 1");
  if (threads < 0) throw config_error("config: threads must be >= 0");
  if (grid_delta < 0.0 || grid_M < 0) throw config_error("config: grid params must be >= 0");
  if (dist_bins < 8) throw config_error("config: dist_bins must be >= 8");
  if (sweep_samples < 0) throw config_error("config: sweep_samples must be >= 0");
  for (const std::string& s : schemes) parse_scheme(s);
  if (physical) {
    if (!(bandwidth_hz > 0.0)) throw config_error("config: physical.bandwidth_hz must be > 0");
    if (!(tx_power_w > 0.0)) throw config_error("config: physical.tx_power_w must be > 0");
    if (!(distance_m > 0.0)) throw config_error("config: physical.distance_m must be > 0");
  }
}

SimConfig sim_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw config_error(std::string("config: invalid JSON: ") + e.what());
  }
  SimConfig cfg;
  try {
    static const std::set<std::string> top = {
        "T",       "m",        "N",          "xi",        "noise_var", "pathloss",
        "estimator", "q",      "schemes",    "P0",        "P1",        "P2",
        "n_frames", "seed",    "threads",    "grid",      "dist_bins", "sweep",
        "sweep_samples", "physical"};
    for (const auto& item : j.items()) {
      if (!top.count(item.key())) {
        throw config_error("config: unknown key '" + item.key() + "'");
      }
    }
    cfg.T = j.value("T", cfg.T);
    cfg.m = j.value("m", cfg.m);
    cfg.N = j.value("N", cfg.N);
    cfg.xi = j.value("xi", cfg.xi);
    cfg.q = j.value("q", cfg.q);
    if (j.contains("estimator")) {
      std::string e = j["estimator"].get<std::string>();
      std::string low;
      for (char c : e) low.push_back(static_cast<char>(std::tolower(c)));
      if (low == "ls") {
        cfg.estimator = EstimatorKind::LS;
      } else if (low == "lmmse") {
        cfg.estimator = EstimatorKind::LMMSE;
      } else {
        throw config_error("config: estimator must be 'ls' or 'lmmse'");
      }
    }
    if (j.contains("schemes")) {
      cfg.schemes = j["schemes"].get<std::vector<std::string>>();
    }
    cfg.P0 = j.value("P0", cfg.P0);
    cfg.P1 = j.value("P1", cfg.P1);
    cfg.P2 = j.value("P2", cfg.P2);
    cfg.n_frames = j.value("n_frames", cfg.n_frames);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.threads = j.value("threads", cfg.threads);
    cfg.dist_bins = j.value("dist_bins", cfg.dist_bins);
    cfg.sweep = j.value("sweep", cfg.sweep);
    cfg.sweep_samples = j.value("sweep_samples", cfg.sweep_samples);
    if (j.contains("grid")) {
      const json& g = j["grid"];
      for (const auto& item : g.items()) {
        if (item.key() != "delta" && item.key() != "M") {
          throw config_error("config: unknown grid key '" + item.key() + "'");
        }
      }
      cfg.grid_delta = g.value("delta", cfg.grid_delta);
      cfg.grid_M = g.value("M", cfg.grid_M);
    }
    if (j.contains("physical")) {
      if (j.contains("noise_var") || j.contains("pathloss")) {
        throw config_error(
            "config: the physical block derives noise_var and pathloss; give one or the other");
      }
      static const std::set<std::string> phys = {"bandwidth_hz",      "tx_power_w",
                                                 "noise_dbm_per_hz",  "distance_m",
                                                 "pathloss_exponent", "reference_loss_db"};
      const json& p = j["physical"];
      for (const auto& item : p.items()) {
        if (!phys.count(item.key())) {
          throw config_error("config: unknown physical key '" + item.key() + "'");
        }
      }
      cfg.physical = true;
      cfg.bandwidth_hz = p.value("bandwidth_hz", 0.0);
      cfg.tx_power_w = p.value("tx_power_w", 0.0);
      cfg.noise_dbm_per_hz = p.value("noise_dbm_per_hz", 0.0);
      cfg.distance_m = p.value("distance_m", cfg.distance_m);
      cfg.pathloss_exponent = p.value("pathloss_exponent", cfg.pathloss_exponent);
      cfg.reference_loss_db = p.value("reference_loss_db", cfg.reference_loss_db);
      // Noise variance relative to unit-power symbols; free-space-style
      // power-law attenuation beyond the reference loss.
      double noise_w = std::pow(10.0, (cfg.noise_dbm_per_hz - 30.0) / 10.0) * cfg.bandwidth_hz;
      cfg.noise_var = noise_w / cfg.tx_power_w;
      cfg.pathloss = std::pow(10.0, -cfg.reference_loss_db / 10.0) *
                     std::pow(cfg.distance_m, -cfg.pathloss_exponent);
    } else {
      cfg.noise_var = j.value("noise_var", cfg.noise_var);
      cfg.pathloss = j.value("pathloss", cfg.pathloss);
    }
  } catch (const json::exception& e) {
    throw config_error(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string sim_config_to_json(const SimConfig& config) {
  json j;
  j["T"] = config.T;
  j["m"] = config.m;
  j["N"] = config.N;
  j["xi"] = config.xi;
  j["noise_var"] = config.noise_var;
  j["pathloss"] = config.pathloss;
  j["estimator"] = config.estimator == EstimatorKind::LS ? "ls" : "lmmse";
  j["q"] = config.q;
  j["schemes"] = config.schemes;
  j["P0"] = config.P0;
  j["P1"] = config.P1;
  j["P2"] = config.P2;
  j["n_frames"] = config.n_frames;
  j["seed"] = config.seed;
  j["threads"] = config.threads;
  j["grid"] = {{"delta", config.grid_delta}, {"M", config.grid_M}};
  j["dist_bins"] = config.dist_bins;
  j["sweep"] = config.sweep;
  j["sweep_samples"] = config.sweep_samples;
  if (config.physical) {
    j["physical"] = {{"bandwidth_hz", config.bandwidth_hz},
                     {"tx_power_w", config.tx_power_w},
                     {"noise_dbm_per_hz", config.noise_dbm_per_hz},
                     {"distance_m", config.distance_m},
                     {"pathloss_exponent", config.pathloss_exponent},
                     {"reference_loss_db", config.reference_loss_db}};
  }
  return j.dump(2) + "\n";
}

SchemeReport run_scheme(const std::string& scheme, const SimConfig& config) {
  SimConfig single = config;
  single.schemes = {scheme};
  return compare_schemes(single).at(0);
}

std::vector<SchemeReport> compare_schemes(const SimConfig& config) {
  SimContext ctx = build_context(config);
  return compare_engine(ctx);
}

std::string schemes_csv(const std::vector<SchemeReport>& reports, const SimConfig& config) {
  std::string out = "scheme,mean_energy,se,mean_spend,kappa_fixed";
  if (config.physical) out += ",harvested_w,preamble_ms";
  out += "\n";
  for (const SchemeReport& r : reports) {
    out += r.scheme + "," + fmt_g(r.mean_energy) + "," + fmt_g(r.se) + "," +
           fmt_g(r.mean_spend) + "," + std::to_string(r.kappa_fixed);
    if (config.physical) {
      double harvested_w = r.mean_energy * config.tx_power_w / config.T;
      double mean_kappa = 0.0;
      for (std::size_t k = 0; k < r.kappa_mass.size(); ++k) {
        mean_kappa += static_cast<double>(k) * r.kappa_mass[k];
      }
      double preamble_ms = mean_kappa * config.m / config.bandwidth_hz * 1e3;
      out += "," + fmt_g(harvested_w) + "," + fmt_g(preamble_ms);
    }
    out += "\n";
  }
  return out;
}

std::string sweep_csv(const SweepCurve& curve) {
  std::string out = "tau,mean_energy,se\n";
  for (std::size_t i = 0; i < curve.tau.size(); ++i) {
    out += std::to_string(curve.tau[i]) + "," + fmt_g(curve.mean[i]) + "," +
           fmt_g(curve.se[i]) + "\n";
  }
  return out;
}

std::string kappa_hist_csv(const SchemeReport& report) {
  std::string out = "kappa,mass\n";
  for (std::size_t k = 0; k < report.kappa_mass.size(); ++k) {
    out += std::to_string(k) + "," + fmt_g(report.kappa_mass[k]) + "\n";
  }
  return out;
}

}  // namespace wpt
