#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wpt/beamforming.hpp"
#include "wpt/channel.hpp"
#include "wpt/dp_policy.hpp"
#include "wpt/fixed_length.hpp"
#include "wpt/harness.hpp"
#include "wpt/mathutil.hpp"
#include "wpt/power_alloc.hpp"

namespace {

std::string fmt_g(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::string resolve_out(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("WPT_OUT_DIR")) {
    if (*env) return env;
  }
  return ".";
}

std::string write_text(const std::string& dir, const std::string& name,
                       const std::string& text) {
  std::filesystem::create_directories(dir);
  std::filesystem::path path = std::filesystem::path(dir) / name;
  std::ofstream out(path);
  if (!out) throw wpt::config_error("cannot write " + path.string());
  out << text;
  if (!out.good()) throw wpt::config_error("failed writing " + path.string());
  return path.string();
}

wpt::SimConfig load_config(const std::string& path) {
  if (path.empty()) return wpt::SimConfig{};
  std::ifstream in(path);
  if (!in) throw wpt::config_error("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return wpt::sim_config_from_json(ss.str());
}

void emit(const std::string& dir, const std::string& name, const std::string& text,
          bool print) {
  if (print) {
    std::fputs(text.c_str(), stdout);
  } else {
    std::string path = write_text(dir, name, text);
    std::printf("wrote %s\n", path.c_str());
  }
}

struct SimFlags {
  std::string config_path;
  std::string out;
  long frames = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = -1;
  bool sweep = false;
};

void add_sim_flags(CLI::App* cmd, SimFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON config file (defaults when omitted)");
  cmd->add_option("--out", f.out, "output directory (default: $WPT_OUT_DIR or .)");
  cmd->add_option("--frames", f.frames, "override n_frames");
  cmd->add_option("--seed", f.seed, "override seed")->trigger_on_parse();
  cmd->add_option("--threads", f.threads, "override worker threads (0 = all cores)");
  cmd->add_flag("--sweep", f.sweep, "attach a per-tau curve to FwoPA");
}

wpt::SimConfig apply_sim_flags(const SimFlags& f, const CLI::App* cmd) {
  wpt::SimConfig cfg = load_config(f.config_path);
  if (f.frames > 0) cfg.n_frames = f.frames;
  if (cmd->count("--seed")) cfg.seed = f.seed;
  if (f.threads >= 0) cfg.threads = f.threads;
  if (f.sweep) cfg.sweep = true;
  return cfg;
}

void run_and_emit(const wpt::SimConfig& cfg, const std::string& out_dir) {
  std::vector<wpt::SchemeReport> reports = wpt::compare_schemes(cfg);
  std::string dir = resolve_out(out_dir);
  std::string path = write_text(dir, "schemes.csv", wpt::schemes_csv(reports, cfg));
  std::printf("wrote %s\n", path.c_str());
  for (const wpt::SchemeReport& r : reports) {
    std::string hist = write_text(dir, "kappa_hist_" + r.scheme + ".csv",
                                  wpt::kappa_hist_csv(r));
    std::printf("wrote %s\n", hist.c_str());
    if (!r.sweep.tau.empty()) {
      std::string sw = write_text(dir, "sweep_" + r.scheme + ".csv",
                                  wpt::sweep_csv(r.sweep));
      std::printf("wrote %s\n", sw.c_str());
    }
    std::printf("%-6s mean_energy=%s se=%s mean_spend=%s", r.scheme.c_str(),
                fmt_g(r.mean_energy).c_str(), fmt_g(r.se).c_str(),
                fmt_g(r.mean_spend).c_str());
    if (r.kappa_fixed >= 0) std::printf(" kappa=%d", r.kappa_fixed);
    std::printf("\n");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wireless-power-transfer scheduling toolkit"};
  app.require_subcommand(1);

  // gtable
  auto* gtable = app.add_subcommand("gtable", "feedback-gain table for q of m antennas");
  int mmax = 10;
  std::string gt_out;
  bool gt_print = false;
  gtable->add_option("--mmax", mmax, "largest antenna count")->check(CLI::PositiveNumber);
  gtable->add_option("--out", gt_out, "output directory");
  gtable->add_flag("--print", gt_print, "print CSV to stdout instead of a file");

  // fixed-length
  auto* fixed = app.add_subcommand("fixed-length", "offline preamble-length optimum");
  int fl_T = 126, fl_m = 3, fl_q = 0;
  double fl_noise = 1.0;
  bool fl_mult = false, fl_curve = false, fl_ant = false;
  std::string fl_out;
  fixed->add_option("--T", fl_T, "frame length in symbols");
  fixed->add_option("--m", fl_m, "transmit antennas");
  fixed->add_option("--q", fl_q, "feedback entries (0 = all)");
  fixed->add_option("--noise", fl_noise, "noise variance");
  fixed->add_flag("--multiple-of-m", fl_mult, "restrict tau to whole training rounds");
  fixed->add_flag("--curve", fl_curve, "also write the tau -> energy curve CSV");
  fixed->add_flag("--optimize-antennas", fl_ant, "optimize antenna count instead (uses --T, --noise)");
  fixed->add_option("--out", fl_out, "output directory");

  // thresholds
  auto* thr = app.add_subcommand("thresholds", "stopping thresholds of the online policy");
  int th_T = 126, th_m = 3, th_M = 0, th_threads = 0;
  double th_noise = 1.0, th_delta = 0.0;
  std::string th_out, th_policy_out;
  bool th_print = false;
  thr->add_option("--T", th_T, "frame length in symbols");
  thr->add_option("--m", th_m, "transmit antennas");
  thr->add_option("--noise", th_noise, "noise variance");
  thr->add_option("--delta", th_delta, "value-grid step (0 = auto)");
  thr->add_option("--M", th_M, "value-grid points (0 = auto)");
  thr->add_option("--threads", th_threads, "worker threads (0 = all cores)");
  thr->add_option("--out", th_out, "output directory");
  thr->add_option("--policy-out", th_policy_out, "also save the policy table as JSON");
  thr->add_flag("--print", th_print, "print CSV to stdout instead of a file");

  // allocate
  auto* alloc = app.add_subcommand("allocate", "power-allocation plan for one scheme");
  std::string al_config, al_mode, al_out;
  bool al_print = false;
  alloc->add_option("--config", al_config, "JSON config file (defaults when omitted)");
  alloc->add_option("--mode", al_mode, "lcpa, lpa or cpa")->required();
  alloc->add_option("--out", al_out, "output directory");
  alloc->add_flag("--print", al_print, "print CSV to stdout instead of a file");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Monte Carlo run of the configured schemes");
  SimFlags sim_flags;
  std::vector<std::string> sim_schemes;
  add_sim_flags(sim, sim_flags);
  sim->add_option("--scheme", sim_schemes, "restrict to these schemes");

  // compare
  auto* cmp = app.add_subcommand("compare", "Monte Carlo comparison of all six schemes");
  SimFlags cmp_flags;
  add_sim_flags(cmp, cmp_flags);

  try {
    app.parse(argc, argv);

    if (gtable->parsed()) {
      wpt::GTable table = wpt::make_g_table(mmax);
      std::string csv = "m,q,G\n";
      for (int m = 1; m <= mmax; ++m) {
        for (int q = 1; q <= m; ++q) {
          csv += std::to_string(m) + "," + std::to_string(q) + "," +
                 fmt_g(table.at(m, q)) + "\n";
        }
      }
      emit(resolve_out(gt_out), "gtable.csv", csv, gt_print);
    } else if (fixed->parsed()) {
      if (fl_ant) {
        wpt::AntennaResult r = wpt::optimal_antennas(fl_T, fl_noise);
        std::printf("m_star=%d k1=%d e_max=%s\n", r.m_star, r.k1, fmt_g(r.e_max).c_str());
      } else {
        int q = fl_q == 0 ? fl_m : fl_q;
        wpt::TauResult r = wpt::optimal_tau(fl_T, fl_m, q, fl_noise, fl_mult);
        std::printf("tau_star=%d e_max=%s\n", r.tau_star, fmt_g(r.e_max).c_str());
        if (fl_curve) {
          std::string csv = "tau,energy\n";
          for (int tau = 0; tau <= fl_T; ++tau) {
            csv += std::to_string(tau) + "," +
                   fmt_g(wpt::energy_of_tau(tau, fl_T, fl_m, q, fl_noise)) + "\n";
          }
          std::string path = write_text(resolve_out(fl_out), "tau_curve.csv", csv);
          std::printf("wrote %s\n", path.c_str());
        }
      }
    } else if (thr->parsed()) {
      if (th_m < 1 || th_T % th_m != 0) {
        throw wpt::config_error("thresholds: T must be a positive multiple of m");
      }
      wpt::FrameConfig frame{th_T, th_T / th_m, th_m};
      wpt::ChannelModel model;
      model.m = th_m;
      model.R = wpt::cmat::Identity(th_m, th_m);
      model.noise_var = th_noise;
      model.pathloss = 1.0;
      auto solved = wpt::solve_bellman(frame, model, th_delta, th_M, th_threads);
      const wpt::PolicyTable& policy = solved.second;
      std::string csv = "k,idx,lambda\n";
      for (std::size_t k = 0; k < policy.thresholds.size(); ++k) {
        for (std::size_t i = 0; i < policy.thresholds[k].size(); ++i) {
          csv += std::to_string(k) + "," + std::to_string(i) + "," +
                 fmt_g(policy.thresholds[k][i]) + "\n";
        }
      }
      emit(resolve_out(th_out), "thresholds.csv", csv, th_print);
      if (!th_policy_out.empty()) {
        policy.save(th_policy_out);
        std::printf("wrote %s\n", th_policy_out.c_str());
      }
    } else if (alloc->parsed()) {
      wpt::SimConfig cfg = load_config(al_config);
      if (cfg.q == 0) cfg.q = cfg.m;
      wpt::FrameConfig frame = cfg.frame();
      wpt::ChannelModel model = cfg.model();
      double P1abs = cfg.P1 * cfg.P0;
      wpt::TauResult tr = wpt::optimal_tau(cfg.T, cfg.m, cfg.q, cfg.noise_var, true);
      int kappa_F = tr.tau_star / cfg.m;
      double P2abs =
          cfg.P2 > 0.0 ? cfg.P2 : cfg.P0 * cfg.m * (cfg.N - kappa_F);
      wpt::AllocationPlan plan;
      if (al_mode == "cpa") {
        wpt::StoppingDistribution vdist =
            wpt::fixed_stop_distribution(kappa_F, model, frame, 0.0, cfg.dist_bins);
        plan = wpt::allocate_cpa(vdist, P1abs, P2abs, frame, cfg.noise_var);
      } else if (al_mode == "lcpa" || al_mode == "lpa") {
        auto solved = wpt::solve_bellman(frame, model, cfg.grid_delta, cfg.grid_M,
                                         cfg.threads);
        wpt::StoppingDistribution dist = wpt::stopping_distribution(
            solved.second, model, frame, 0.0, cfg.dist_bins, wpt::DistMethod::Forward,
            0, 0, cfg.threads);
        plan = al_mode == "lcpa"
                   ? wpt::allocate_lcpa(dist, P1abs, P2abs, frame, cfg.noise_var)
                   : wpt::allocate_lpa(dist, P1abs, P2abs, frame, cfg.noise_var);
      } else {
        throw wpt::config_error("allocate: --mode must be lcpa, lpa or cpa");
      }
      std::printf("objective=%s spend=%s bins=%zu\n", fmt_g(plan.objective).c_str(),
                  fmt_g(plan.spend).c_str(), plan.support.size());
      emit(resolve_out(al_out), "plan_" + al_mode + ".csv", plan.to_csv(), al_print);
    } else if (sim->parsed()) {
      wpt::SimConfig cfg = apply_sim_flags(sim_flags, sim);
      if (!sim_schemes.empty()) cfg.schemes = sim_schemes;
      run_and_emit(cfg, sim_flags.out);
    } else if (cmp->parsed()) {
      wpt::SimConfig cfg = apply_sim_flags(cmp_flags, cmp);
      cfg.schemes.clear();  // all six
      run_and_emit(cfg, cmp_flags.out);
    }
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const wpt::convergence_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const wpt::config_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
