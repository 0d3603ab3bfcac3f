// Command-line front end. Talks to the simulator exclusively through the
// public C interface.

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spdsim/spdsim.h"

namespace {

struct ConfigGuard {
  spd_config* ptr = nullptr;
  ~ConfigGuard() { spd_config_free(ptr); }
};

struct RecordsGuard {
  spd_records* ptr = nullptr;
  ~RecordsGuard() { spd_records_free(ptr); }
};

[[noreturn]] void die(spd_status rc) {
  std::fprintf(stderr, "error (%s): %s\n", spd_status_name(rc),
               spd_last_error());
  std::exit(1);
}

void check(spd_status rc) {
  if (rc != SPD_OK) die(rc);
}

// --config is optional everywhere: without it the calibrated defaults run.
spd_config* make_config(const std::string& config_path,
                        const std::vector<std::string>& overrides,
                        const std::string& seed) {
  spd_config* cfg = nullptr;
  if (config_path.empty()) check(spd_config_create(&cfg));
  else check(spd_config_load(config_path.c_str(), &cfg));
  for (const std::string& kv : overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) {
      spd_config_free(cfg);
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n",
                   kv.c_str());
      std::exit(1);
    }
    spd_status rc = spd_config_set(cfg, kv.substr(0, eq).c_str(),
                                   kv.substr(eq + 1).c_str());
    if (rc != SPD_OK) {
      spd_config_free(cfg);
      die(rc);
    }
  }
  if (!seed.empty()) {
    spd_status rc = spd_config_set(cfg, "seed", seed.c_str());
    if (rc != SPD_OK) {
      spd_config_free(cfg);
      die(rc);
    }
  }
  spd_status rc = spd_config_validate(cfg);
  if (rc != SPD_OK) {
    spd_config_free(cfg);
    die(rc);
  }
  return cfg;
}

double get_double(const spd_config* cfg, const char* key) {
  char buf[256];
  check(spd_config_get(cfg, key, buf, sizeof buf));
  return std::strtod(buf, nullptr);
}

void print_report(const spd_report& rep) {
  std::printf("pde          %.4f +- %.4f\n", rep.pde, rep.pde_err);
  std::printf("dcr_cps      %.2f +- %.2f\n", rep.dcr_cps, rep.dcr_err);
  std::printf("p_ap         %.4f +- %.4f\n", rep.p_ap, rep.p_ap_err);
  if (rep.fwhm_valid) std::printf("fwhm_ps      %.1f\n", rep.fwhm_ps);
  else std::printf("fwhm_ps      n/a\n");
  std::printf("r_ph_cps     %.2f\n", rep.r_ph_cps);
  std::printf("r_ap_cps     %.2f\n", rep.r_ap_cps);
  std::printf("counts_total %llu\n", rep.counts_total);
  if (rep.clamped) std::printf("note: dark correction clamped at zero\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"single-photon detector simulator"};
  app.require_subcommand(1);

  std::string config_path, out_path, seed, jobs;
  std::vector<std::string> overrides;

  auto add_common = [&](CLI::App* cmd, bool with_out) {
    cmd->add_option("--config", config_path, "configuration file");
    cmd->add_option("--set", overrides,
                    "override a single key, as key=value (repeatable)");
    cmd->add_option("--seed", seed, "override the seed");
    if (with_out)
      cmd->add_option("--out", out_path, "output file")->required();
  };

  auto* sim = app.add_subcommand("simulate",
                                 "run once and write a timestamp file");
  add_common(sim, true);

  auto* sweep = app.add_subcommand(
      "sweep", "characterize a bias/temperature grid, write CSV");
  add_common(sweep, true);
  int jobs_n = 0;
  sweep->add_option("--jobs", jobs_n, "worker threads (default: all cores)");

  auto* chr = app.add_subcommand(
      "characterize", "measurement pipeline on recorded timestamps");
  std::string input_path, dark_path, report_path, histogram_path;
  chr->add_option("input", input_path, "timestamp file of a lit run")
      ->required();
  chr->add_option("dark", dark_path, "timestamp file of a dark run");
  chr->add_option("--out", report_path, "write the report as CSV");
  chr->add_option("--histogram", histogram_path,
                  "write the folded histogram as CSV");

  auto* wp = app.add_subcommand("working-point",
                                "solve the readout bias working point");
  add_common(wp, false);
  double tol_v = 1e-6;
  wp->add_option("--tol", tol_v, "bisection tolerance in volts");

  auto* wave = app.add_subcommand("waveform", "write a scripted anode trace");
  add_common(wave, true);
  std::string scenario = "free-running-pulse";
  wave->add_option("--scenario", scenario,
                   "free-running-pulse or gate-cycle");

  CLI11_PARSE(app, argc, argv);

  if (sim->parsed()) {
    ConfigGuard cfg{make_config(config_path, overrides, seed)};
    check(spd_simulate_to_file(cfg.ptr, out_path.c_str()));
    return 0;
  }

  if (sweep->parsed()) {
    ConfigGuard cfg{make_config(config_path, overrides, seed)};
    check(spd_sweep(cfg.ptr, out_path.c_str(), jobs_n));
    return 0;
  }

  if (chr->parsed()) {
    RecordsGuard recs;
    ConfigGuard cfg;
    check(spd_records_load(input_path.c_str(), &recs.ptr, &cfg.ptr));

    double dark_rate = -1.0, dark_err = 0.0;
    if (!dark_path.empty()) {
      RecordsGuard dark;
      ConfigGuard dark_cfg;
      check(spd_records_load(dark_path.c_str(), &dark.ptr, &dark_cfg.ptr));
      double duration = get_double(dark_cfg.ptr, "duration_s");
      check(spd_estimate_dcr(dark.ptr, duration, &dark_rate, &dark_err));
    }

    spd_report rep{};
    check(spd_characterize(recs.ptr, cfg.ptr, dark_rate, dark_err, &rep));
    print_report(rep);
    if (!report_path.empty())
      check(spd_report_write_csv(&rep, cfg.ptr, report_path.c_str()));
    if (!histogram_path.empty())
      check(spd_histogram_write_csv(recs.ptr, cfg.ptr,
                                    histogram_path.c_str()));
    return 0;
  }

  if (wp->parsed()) {
    ConfigGuard cfg{make_config(config_path, overrides, seed)};
    spd_working_point point{};
    check(spd_working_point_solve(cfg.ptr, tol_v, &point));
    std::printf("v_gs      %.6f V\n", point.v_gs);
    std::printf("v_s       %.6f V\n", point.v_s);
    std::printf("i1        %.6g A\n", point.i1);
    std::printf("residual  %.3g V\n", point.residual);
    return 0;
  }

  if (wave->parsed()) {
    ConfigGuard cfg{make_config(config_path, overrides, seed)};
    check(spd_waveform(cfg.ptr, scenario.c_str(), out_path.c_str()));
    return 0;
  }

  return 0;
}
