#include "sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "errors.hpp"

namespace spdsim {

namespace {

// Decorrelates the dark companion run from the lit run at the same point.
constexpr std::uint64_t kDarkSeedSalt = 0x9e3779b97f4a7c15ULL;

SweepRow run_point(const Config& base, double temperature, double v_ex,
                   std::uint64_t point_seed) {
  SweepRow row;
  row.temperature = temperature;
  row.v_ex = v_ex;
  row.seed = point_seed;

  Config cfg = base;
  cfg.sweep.reset();
  cfg.sim.operating.v_ex = v_ex;
  cfg.sim.operating.temperature = temperature;
  cfg.sim.duration_s = base.sweep->duration_s.value_or(base.sim.duration_s);
  cfg.sim.seed = point_seed;

  VectorSink lit;
  run_simulation(cfg.sim, lit);

  Config dark_cfg = cfg;
  dark_cfg.sim.source.mu = 0.0;
  dark_cfg.sim.seed = point_seed ^ kDarkSeedSalt;
  VectorSink dark;
  run_simulation(dark_cfg.sim, dark);
  Uncertain dcr = estimate_dcr(dark.records, dark_cfg.sim.duration_s);

  row.report = make_report(lit.records, cfg.sim, cfg.cal, dcr);
  return row;
}

std::string csv_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::vector<SweepRow> run_sweep(const Config& cfg, int jobs) {
  validate(cfg);
  if (!cfg.sweep)
    throw ConfigError(ConfigError::Kind::Validation, "sweep.v_ex",
                      "no sweep grid configured");

  struct Point {
    double temperature;
    double v_ex;
    std::uint64_t seed;
  };
  std::vector<Point> points;
  std::uint64_t index = 0;
  for (double tk : cfg.sweep->temperature)
    for (double v : cfg.sweep->v_ex)
      points.push_back({tk, v, cfg.sim.seed ^ index++});

  std::vector<SweepRow> rows(points.size());

  unsigned n_threads = jobs > 0
                           ? static_cast<unsigned>(jobs)
                           : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads,
                                 static_cast<unsigned>(points.size()));
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < points.size(); ++i)
      rows[i] = run_point(cfg, points[i].temperature, points[i].v_ex,
                          points[i].seed);
    return rows;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&]() {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= points.size()) return;
      try {
        rows[i] = run_point(cfg, points[i].temperature, points[i].v_ex,
                            points[i].seed);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> threads;
  for (unsigned i = 0; i < n_threads; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
  return rows;
}

void write_sweep_csv(const std::string& path,
                     const std::vector<SweepRow>& rows) {
  std::string body =
      "temperature_K,v_ex_V,pde,pde_err,dcr_cps,dcr_err,p_ap,p_ap_err,"
      "fwhm_ps,counts_total,seed\n";
  for (const auto& row : rows) {
    const CalibrationReport& r = row.report;
    body += csv_double(row.temperature);
    body += ',';
    body += csv_double(row.v_ex);
    body += ',';
    body += csv_double(r.pde.value);
    body += ',';
    body += csv_double(r.pde.err);
    body += ',';
    body += csv_double(r.dcr_cps.value);
    body += ',';
    body += csv_double(r.dcr_cps.err);
    body += ',';
    body += csv_double(r.p_ap.value);
    body += ',';
    body += csv_double(r.p_ap.err);
    body += ',';
    if (r.fwhm_valid) body += csv_double(r.fwhm_ps);
    body += ',';
    body += std::to_string(r.counts_total);
    body += ',';
    body += std::to_string(row.seed);
    body += '\n';
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << body;
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace spdsim
