#include "spdsim/spdsim.h"

#include <cstring>
#include <memory>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include "characterize.hpp"
#include "circuit.hpp"
#include "config.hpp"
#include "engine.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "sweep.hpp"

using namespace spdsim;

struct spd_config {
  Config cfg;
};

struct spd_records {
  std::vector<TimestampRecord> records;
};

namespace {

thread_local std::string g_last_error = "no error";

void set_error(const std::string& msg) { g_last_error = msg; }

template <class F>
spd_status guarded(F&& f) {
  try {
    f();
    return SPD_OK;
  } catch (const ConfigError& e) {
    set_error(e.what());
    return e.kind() == ConfigError::Kind::Parse ? SPD_ERR_PARSE
                                                : SPD_ERR_VALIDATION;
  } catch (const NoBracketError& e) {
    set_error(e.what());
    return SPD_ERR_NO_BRACKET;
  } catch (const SaturationError& e) {
    set_error(e.what());
    return SPD_ERR_SATURATED;
  } catch (const NoSyncError& e) {
    set_error(e.what());
    return SPD_ERR_NO_SYNC;
  } catch (const HistogramError& e) {
    set_error(e.what());
    return SPD_ERR_BAD_HISTOGRAM;
  } catch (const IoError& e) {
    set_error(e.what());
    return SPD_ERR_IO;
  } catch (const std::invalid_argument& e) {
    set_error(e.what());
    return SPD_ERR_INVALID_ARGUMENT;
  } catch (const std::domain_error& e) {
    set_error(e.what());
    return SPD_ERR_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    set_error("out of memory");
    return SPD_ERR_INTERNAL;
  } catch (const std::exception& e) {
    set_error(e.what());
    return SPD_ERR_INTERNAL;
  }
}

spd_status need(bool ok, const char* what) {
  if (ok) return SPD_OK;
  set_error(std::string("invalid argument: ") + what);
  return SPD_ERR_INVALID_ARGUMENT;
}

spd_report to_c_report(const CalibrationReport& r) {
  spd_report out{};
  out.pde = r.pde.value;
  out.pde_err = r.pde.err;
  out.dcr_cps = r.dcr_cps.value;
  out.dcr_err = r.dcr_cps.err;
  out.p_ap = r.p_ap.value;
  out.p_ap_err = r.p_ap.err;
  out.fwhm_ps = r.fwhm_ps;
  out.r_ph_cps = r.r_ph_cps;
  out.r_ap_cps = r.r_ap_cps;
  out.counts_total = r.counts_total;
  out.fwhm_valid = r.fwhm_valid ? 1 : 0;
  out.clamped = r.clamped ? 1 : 0;
  return out;
}

CalibrationReport from_c_report(const spd_report& r) {
  CalibrationReport out;
  out.pde = {r.pde, r.pde_err};
  out.dcr_cps = {r.dcr_cps, r.dcr_err};
  out.p_ap = {r.p_ap, r.p_ap_err};
  out.fwhm_ps = r.fwhm_ps;
  out.fwhm_valid = r.fwhm_valid != 0;
  out.r_ph_cps = r.r_ph_cps;
  out.r_ap_cps = r.r_ap_cps;
  out.counts_total = r.counts_total;
  out.clamped = r.clamped != 0;
  return out;
}

}  // namespace

extern "C" {

const char* spd_version(void) { return "1.0.0"; }

const char* spd_status_name(spd_status s) {
  switch (s) {
    case SPD_OK: return "ok";
    case SPD_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case SPD_ERR_PARSE: return "parse-error";
    case SPD_ERR_VALIDATION: return "validation-error";
    case SPD_ERR_NO_BRACKET: return "no-bracket";
    case SPD_ERR_IO: return "io-error";
    case SPD_ERR_SATURATED: return "saturated";
    case SPD_ERR_NO_SYNC: return "no-sync";
    case SPD_ERR_BAD_HISTOGRAM: return "bad-histogram";
    case SPD_ERR_INTERNAL: return "internal-error";
  }
  return "unknown";
}

const char* spd_last_error(void) { return g_last_error.c_str(); }

spd_status spd_config_create(spd_config** out) {
  if (auto rc = need(out != nullptr, "out")) return rc;
  return guarded([&] { *out = new spd_config{}; });
}

spd_status spd_config_parse(const char* text, spd_config** out) {
  if (auto rc = need(text && out, "text, out")) return rc;
  return guarded([&] { *out = new spd_config{parse_config(text)}; });
}

spd_status spd_config_load(const char* path, spd_config** out) {
  if (auto rc = need(path && out, "path, out")) return rc;
  return guarded([&] { *out = new spd_config{load_config(path)}; });
}

spd_status spd_config_clone(const spd_config* cfg, spd_config** out) {
  if (auto rc = need(cfg && out, "cfg, out")) return rc;
  return guarded([&] { *out = new spd_config{cfg->cfg}; });
}

spd_status spd_config_set(spd_config* cfg, const char* key, const char* value) {
  if (auto rc = need(cfg && key && value, "cfg, key, value")) return rc;
  return guarded([&] { set_key(cfg->cfg, key, value); });
}

spd_status spd_config_get(const spd_config* cfg, const char* key, char* buf,
                          size_t buf_size) {
  if (auto rc = need(cfg && key && buf, "cfg, key, buf")) return rc;
  return guarded([&] {
    std::string v = get_key(cfg->cfg, key);
    if (v.size() + 1 > buf_size)
      throw std::invalid_argument("buffer too small for value of " +
                                  std::string(key));
    std::memcpy(buf, v.c_str(), v.size() + 1);
  });
}

spd_status spd_config_validate(const spd_config* cfg) {
  if (auto rc = need(cfg != nullptr, "cfg")) return rc;
  return guarded([&] { validate(cfg->cfg); });
}

void spd_config_free(spd_config* cfg) { delete cfg; }

spd_status spd_simulate(const spd_config* cfg, spd_records** out) {
  if (auto rc = need(cfg && out, "cfg, out")) return rc;
  return guarded([&] {
    validate(cfg->cfg);
    auto recs = std::make_unique<spd_records>();
    VectorSink sink;
    run_simulation(cfg->cfg.sim, sink);
    recs->records = std::move(sink.records);
    *out = recs.release();
  });
}

spd_status spd_simulate_to_file(const spd_config* cfg, const char* path) {
  if (auto rc = need(cfg && path, "cfg, path")) return rc;
  return guarded([&] {
    validate(cfg->cfg);
    FileRecordSink sink(path, cfg->cfg);
    run_simulation(cfg->cfg.sim, sink);
    sink.close();
  });
}

spd_status spd_records_load(const char* path, spd_records** out,
                            spd_config** config_out) {
  if (auto rc = need(path && out, "path, out")) return rc;
  return guarded([&] {
    LoadedRecords loaded = load_timestamp_file(path);
    auto recs = std::make_unique<spd_records>();
    recs->records = std::move(loaded.records);
    if (config_out) *config_out = new spd_config{std::move(loaded.config)};
    *out = recs.release();
  });
}

spd_status spd_records_write(const spd_records* recs, const spd_config* cfg,
                             const char* path) {
  if (auto rc = need(recs && cfg && path, "recs, cfg, path")) return rc;
  return guarded([&] { write_timestamp_file(path, cfg->cfg, recs->records); });
}

size_t spd_records_count(const spd_records* recs) {
  return recs ? recs->records.size() : 0;
}

spd_status spd_records_get(const spd_records* recs, size_t index,
                           long long* time_ps_out, int* kind_out) {
  if (auto rc = need(recs && time_ps_out && kind_out,
                     "recs, time_ps_out, kind_out"))
    return rc;
  if (auto rc = need(index < recs->records.size(), "index in range")) return rc;
  *time_ps_out = recs->records[index].time_ps;
  *kind_out = recs->records[index].kind == RecordKind::Detection ? 0 : 1;
  return SPD_OK;
}

void spd_records_free(spd_records* recs) { delete recs; }

spd_status spd_characterize(const spd_records* recs, const spd_config* cfg,
                            double dark_rate_cps, double dark_rate_err,
                            spd_report* out) {
  if (auto rc = need(recs && cfg && out, "recs, cfg, out")) return rc;
  return guarded([&] {
    std::optional<Uncertain> dark;
    if (dark_rate_cps >= 0) dark = Uncertain{dark_rate_cps, dark_rate_err};
    CalibrationReport rep =
        make_report(recs->records, cfg->cfg.sim, cfg->cfg.cal, dark);
    *out = to_c_report(rep);
  });
}

spd_status spd_estimate_dcr(const spd_records* recs, double duration_s,
                            double* dcr_cps_out, double* dcr_err_out) {
  if (auto rc = need(recs && dcr_cps_out && dcr_err_out,
                     "recs, dcr_cps_out, dcr_err_out"))
    return rc;
  return guarded([&] {
    Uncertain u = estimate_dcr(recs->records, duration_s);
    *dcr_cps_out = u.value;
    *dcr_err_out = u.err;
  });
}

spd_status spd_report_write_csv(const spd_report* rep, const spd_config* cfg,
                                const char* path) {
  if (auto rc = need(rep && cfg && path, "rep, cfg, path")) return rc;
  return guarded([&] { write_report_csv(path, from_c_report(*rep), cfg->cfg); });
}

spd_status spd_histogram_write_csv(const spd_records* recs,
                                   const spd_config* cfg, const char* path) {
  if (auto rc = need(recs && cfg && path, "recs, cfg, path")) return rc;
  return guarded([&] {
    const Config& c = cfg->cfg;
    Classified cls = classify_events(recs->records, c.sim.source.rep_rate_hz,
                                     c.cal.window_ns * 1000.0,
                                     c.cal.bin_width_ps);
    write_histogram_csv(path, cls.folded);
  });
}

spd_status spd_working_point_solve(const spd_config* cfg, double tol_v,
                             spd_working_point* out) {
  if (auto rc = need(cfg && out, "cfg, out")) return rc;
  return guarded([&] {
    WorkingPoint wp = solve_working_point(cfg->cfg.sim.circuit, tol_v);
    out->v_gs = wp.v_gs;
    out->v_s = wp.v_s;
    out->i1 = wp.i1;
    out->residual = wp.residual;
  });
}

spd_status spd_waveform(const spd_config* cfg, const char* scenario,
                        const char* path) {
  if (auto rc = need(cfg && scenario && path, "cfg, scenario, path")) return rc;
  return guarded([&] {
    const Config& c = cfg->cfg;
    double gate_width_ns = c.sim.gate ? c.sim.gate->width_ns : 300.0;
    auto points = waveform_scenario(scenario, c.sim.circuit, c.sim.timing,
                                    gate_width_ns);
    write_waveform(path, points);
  });
}

spd_status spd_sweep(const spd_config* cfg, const char* path, int jobs) {
  if (auto rc = need(cfg && path, "cfg, path")) return rc;
  return guarded([&] {
    auto rows = run_sweep(cfg->cfg, jobs);
    write_sweep_csv(path, rows);
  });
}

}  // extern "C"
