// End-to-end acceptance checks. Each numbered criterion prints exactly one
// [PASS]/[FAIL] line; the exit code is the number of failures. Targets and
// tolerances are the measured operating characteristics the simulator is
// required to reproduce at its calibrated defaults.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "characterize.hpp"
#include "circuit.hpp"
#include "detector.hpp"
#include "engine.hpp"
#include "errors.hpp"
#include "spdsim/spdsim.h"
#include "support/helpers.hpp"

using namespace spdsim;
using testsupport::TempDir;
using testsupport::slurp;

namespace {

int failures = 0;

void report(int idx, bool ok, const char* fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  std::printf("[%s] %2d. %s\n", ok ? "PASS" : "FAIL", idx, buf);
  if (!ok) ++failures;
}

SimConfig base_config(double v_ex, double temperature_k, double duration_s,
                      std::uint64_t seed) {
  SimConfig cfg;
  cfg.operating = {v_ex, temperature_k};
  cfg.duration_s = duration_s;
  cfg.seed = seed;
  return cfg;
}

// detector with a delta-function response and no trapping, for the checks
// that need exact dead-time arithmetic
DetectorParams delta_detector() {
  DetectorParams d;
  d.jitter_knots = {{45.0, 0.0}};
  d.frac_tail = 0.0;
  d.n_ref = 0.0;
  return d;
}

std::vector<std::int64_t> detections_of(const VectorSink& sink) {
  std::vector<std::int64_t> out;
  for (const auto& r : sink.records)
    if (r.kind == RecordKind::Detection) out.push_back(r.time_ps);
  return out;
}

Uncertain dark_run(double v_ex, double temperature_k, double duration_s,
                   std::uint64_t seed) {
  SimConfig cfg = base_config(v_ex, temperature_k, duration_s, seed);
  cfg.source.mu = 0.0;
  VectorSink sink;
  run_simulation(cfg, sink);
  return estimate_dcr(sink.records, duration_s);
}

struct GateScan {
  bool folds_in_window = true;
  int max_per_gate = 0;
  std::size_t detections = 0;
};

GateScan scan_gated_run(Mode mode, double dcr_ref, double duration_s) {
  SimConfig cfg = base_config(45.0, 268.0, duration_s, 13);
  cfg.mode = mode;
  cfg.gate = GateSchedule{1000.0, 300.0};
  cfg.source.mu = 0.0;
  cfg.source.system_jitter_fwhm_ps = 0.0;
  cfg.detector = delta_detector();
  cfg.detector.dcr_ref = dcr_ref;

  VectorSink sink;
  run_simulation(cfg, sink);

  GateScan out;
  double delay_ps = response_delay_ns(45.0, cfg.detector) * 1000.0;
  std::map<std::int64_t, int> per_gate;
  for (const auto& r : sink.records) {
    if (r.kind != RecordKind::Detection) continue;
    ++out.detections;
    double onset = static_cast<double>(r.time_ps) - delay_ps;
    auto gate = static_cast<std::int64_t>(std::floor(onset / 1e6));
    double fold = onset - static_cast<double>(gate) * 1e6;
    // armed from gate rise + 15 ns of turn-on until the 300 ns gate edge,
    // with 5 ps of quantisation slack
    if (fold < 15000.0 - 5.0 || fold > 300000.0 + 5.0)
      out.folds_in_window = false;
    out.max_per_gate = std::max(out.max_per_gate, ++per_gate[gate]);
  }
  return out;
}

}  // namespace

int main() {
  CharacterizeParams params;

  // --- reference run at 45 V, 268 K --------------------------------------
  SimConfig lit268 = base_config(45.0, 268.0, 10.0, 1);
  VectorSink sink268;
  auto t0 = std::chrono::steady_clock::now();
  run_simulation(lit268, sink268);
  double wall_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  Uncertain dcr268 = dark_run(45.0, 268.0, 10.0, 7);
  CalibrationReport rep268 =
      make_report(sink268.records, lit268, params, dcr268);

  // 1. detection efficiency at the reference point, and simulation speed
  {
    bool pde_ok = std::fabs(rep268.pde.value - 0.844) <= 0.005;
    bool time_ok = wall_s < 30.0;
    report(1, pde_ok && time_ok,
           "efficiency at 45 V / 268 K: pde = %.4f +- %.4f (target 0.844 +- "
           "0.005); 10 s reference run simulated in %.1f s (limit 30 s)",
           rep268.pde.value, rep268.pde.err, wall_s);
  }

  // 2. dark count rate at both calibration temperatures
  {
    Uncertain dcr258 = dark_run(45.0, 258.0, 10.0, 11);
    bool ok268 = std::fabs(dcr268.value - 260.0) <= 16.0;
    bool ok258 = std::fabs(dcr258.value - 80.0) <= 9.0;
    report(2, ok268 && ok258,
           "dark rate: %.1f cps at 268 K (target 260 +- 16), %.1f cps at "
           "258 K (target 80 +- 9)",
           dcr268.value, dcr258.value);
  }

  // 3. afterpulse probability at 268 K and its suppression at 288 K
  {
    SimConfig lit288 = base_config(45.0, 288.0, 20.0, 1);
    VectorSink sink288;
    run_simulation(lit288, sink288);
    Uncertain dcr288 = dark_run(45.0, 288.0, 20.0, 3);
    CalibrationReport rep288 =
        make_report(sink288.records, lit288, params, dcr288);

    bool ok268 = std::fabs(rep268.p_ap.value - 0.029) <= 0.003;
    bool ok288 = std::fabs(rep288.p_ap.value - 0.012) <= 0.003;
    report(3, ok268 && ok288,
           "afterpulsing: %.4f at 268 K (target 0.029 +- 0.003), %.4f at "
           "288 K (target 0.012 +- 0.003)",
           rep268.p_ap.value, rep288.p_ap.value);
  }

  // 4. timing response width narrows with bias
  {
    DetectorParams d;
    struct Point {
      double v_ex, target, tol, measured;
    } pts[] = {
        {45.0, 360.0, 20.0, 0.0},
        {bias_for_pde(0.81, d), 430.0, 30.0, 0.0},
        {bias_for_pde(0.75, d), 540.0, 30.0, 0.0},
    };
    bool ok = true;
    for (auto& p : pts) {
      SimConfig cfg = base_config(p.v_ex, 268.0, 20.0, 1);
      VectorSink sink;
      run_simulation(cfg, sink);
      CalibrationReport rep =
          make_report(sink.records, cfg, params, std::nullopt);
      p.measured = rep.fwhm_valid ? rep.fwhm_ps : -1.0;
      ok = ok && rep.fwhm_valid && std::fabs(p.measured - p.target) <= p.tol;
    }
    report(4, ok,
           "response width: %.1f ps at 45.0 V (target 360 +- 20), %.1f ps "
           "at %.1f V (430 +- 30), %.1f ps at %.1f V (540 +- 30)",
           pts[0].measured, pts[1].measured, pts[1].v_ex, pts[2].measured,
           pts[2].v_ex);
  }

  // 5. pile-up inversion is exact, not a small-signal approximation
  {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> mu_dist(0.05, 5.0);
    std::uniform_real_distribution<double> eta_dist(0.01, 0.99);
    double f = 1e5;
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      double mu = mu_dist(rng);
      double eta = eta_dist(rng);
      double r_ph = f * (1.0 - std::exp(-mu * eta));
      double est = estimate_pde(r_ph, mu, f);
      worst = std::max(worst, std::fabs(est - eta) / eta);
    }
    report(5, worst < 1e-12,
           "rate-to-efficiency inversion: worst relative error %.2e over "
           "1000 random (mu, eta) points (limit 1e-12)",
           worst);
  }

  // 6. dead time shows up exactly in the output stream
  {
    SimConfig cfg = base_config(45.0, 268.0, 0.17, 77);
    cfg.source.mu = 0.0;
    cfg.source.system_jitter_fwhm_ps = 0.0;
    cfg.detector = delta_detector();
    cfg.detector.dcr_ref = 5e8;  // saturating dark rate

    VectorSink sink;
    run_simulation(cfg, sink);
    auto dets = detections_of(sink);

    std::int64_t min_gap = std::numeric_limits<std::int64_t>::max();
    for (std::size_t i = 1; i < dets.size(); ++i)
      min_gap = std::min(min_gap, dets[i] - dets[i - 1]);
    double span_s = static_cast<double>(dets.back() - dets.front()) * 1e-12;
    double rate = static_cast<double>(dets.size() - 1) / span_s;

    bool ok = dets.size() >= 1000000 && min_gap >= 80000 &&
              std::fabs(rate - 12.5e6) <= 0.05 * 12.5e6;
    report(6, ok,
           "dead time: %zu detections, smallest gap %lld ps (floor 80000), "
           "saturated rate %.2f MHz (within 5%% of 12.50)",
           dets.size(), static_cast<long long>(min_gap), rate * 1e-6);
  }

  // 7. gate windows confine detections; only hybrid re-arms within one
  {
    GateScan gating = scan_gated_run(Mode::Gating, 2e6, 0.5);
    GateScan hybrid = scan_gated_run(Mode::Hybrid, 2e6, 0.5);
    bool ok = gating.detections > 10000 && gating.folds_in_window &&
              gating.max_per_gate == 1 && hybrid.folds_in_window &&
              hybrid.max_per_gate >= 2;
    report(7, ok,
           "gated modes: %zu gated detections all inside the armed window, "
           "max %d per gate; hybrid re-arms up to %d per gate",
           gating.detections, gating.max_per_gate, hybrid.max_per_gate);
  }

  // 8. bias working point matches a brute-force solution of the network
  {
    CircuitParams c;
    WorkingPoint wp = solve_working_point(c, 1e-6);

    auto f = [&c](double v) {
      return zener_branch_vs(v, c) - balance_branch_vs(v, c);
    };
    int changes = 0;
    double root = 0.0;
    const int n = 430000;  // 10 uV steps across the admissible interval
    double prev = f(0.0);
    for (int i = 1; i <= n; ++i) {
      double v = c.v_zener * static_cast<double>(i) / n;
      double cur = f(v);
      if ((prev > 0) != (cur > 0)) {
        ++changes;
        root = v - 0.5 * c.v_zener / n;
      }
      prev = cur;
    }
    double vs_oracle = zener_branch_vs(root, c);

    bool threw = false;
    CircuitParams open = c;
    open.r_on = 1e9;
    try {
      solve_working_point(open, 1e-6);
    } catch (const NoBracketError&) {
      threw = true;
    }

    bool ok = changes == 1 && std::fabs(wp.v_s - vs_oracle) < 1e-3 &&
              wp.v_gs < 2.5 && wp.v_s > 49.0 && wp.v_s < 53.0 && threw;
    report(8, ok,
           "working point: v_gs = %.6f V, v_s = %.6f V, grid oracle "
           "%.6f V (|diff| < 1 mV), one crossing, open-switch case rejected",
           wp.v_gs, wp.v_s, vs_oracle);
  }

  // 9. bit-exact reproducibility, including the threaded sweep
  {
    TempDir dir("acceptance");
    spd_config* cfg = nullptr;
    bool ok = spd_config_create(&cfg) == SPD_OK &&
              spd_config_set(cfg, "duration_s", "1") == SPD_OK &&
              spd_config_set(cfg, "seed", "5") == SPD_OK;
    std::string a = dir.file("a.txt"), b = dir.file("b.txt");
    ok = ok && spd_simulate_to_file(cfg, a.c_str()) == SPD_OK &&
         spd_simulate_to_file(cfg, b.c_str()) == SPD_OK;
    std::string body_a = slurp(a);
    bool runs_equal = ok && !body_a.empty() && body_a == slurp(b);

    spd_config* sweep_cfg = nullptr;
    ok = spd_config_create(&sweep_cfg) == SPD_OK &&
         spd_config_set(sweep_cfg, "duration_s", "0.1") == SPD_OK &&
         spd_config_set(sweep_cfg, "sweep.v_ex", "33.2,45") == SPD_OK &&
         spd_config_set(sweep_cfg, "sweep.temperature_k", "258,268") == SPD_OK;
    std::string s4 = dir.file("s4.csv"), s1 = dir.file("s1.csv");
    ok = ok && spd_sweep(sweep_cfg, s4.c_str(), 4) == SPD_OK &&
         spd_sweep(sweep_cfg, s1.c_str(), 1) == SPD_OK;
    std::string sweep_body = slurp(s4);
    bool sweeps_equal = ok && !sweep_body.empty() && sweep_body == slurp(s1);
    spd_config_free(cfg);
    spd_config_free(sweep_cfg);

    report(9, runs_equal && sweeps_equal,
           "determinism: repeated runs byte-identical (%zu bytes); 2x2 sweep "
           "with 4 workers matches the single-threaded result",
           body_a.size());
  }

  // 10. width estimator against hand-computed and analytic histograms
  {
    Histogram hand;
    hand.origin_ps = -5.0;
    hand.bin_width_ps = 10.0;
    hand.counts = {0, 1, 3, 8, 10, 8, 3, 1, 0};
    double w_hand = fwhm(hand);

    double sigma = 100.0;
    Histogram gauss;
    gauss.origin_ps = -500.0;
    gauss.bin_width_ps = 10.0;
    gauss.counts.resize(100);
    for (std::size_t i = 0; i < gauss.counts.size(); ++i) {
      double cpos = gauss.center(i);
      gauss.counts[i] = static_cast<std::uint64_t>(
          std::llround(1e6 * std::exp(-cpos * cpos / (2.0 * sigma * sigma))));
    }
    double w_gauss = fwhm(gauss);
    double expected = 2.3548200450309493 * sigma;

    bool ok = w_hand == 32.0 && std::fabs(w_gauss - expected) <= 5.0;
    report(10, ok,
           "width estimator: hand histogram %.6g ps (exactly 32), sampled "
           "Gaussian %.2f ps (expected %.2f +- 5)",
           w_hand, w_gauss, expected);
  }

  std::printf("%d of 10 criteria passed\n", 10 - failures);
  return failures;
}
