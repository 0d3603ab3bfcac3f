#include "config.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>

#include "errors.hpp"

namespace spdsim {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_u64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%llu", static_cast<unsigned long long>(v));
  return buf;
}

std::string fmt_i64(std::int64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(v));
  return buf;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& what) {
  throw ConfigError(ConfigError::Kind::Parse, key, what);
}

double parse_double(const std::string& key, const std::string& s) {
  if (s.empty()) bad_value(key, "empty value");
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) bad_value(key, "not a number: '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& s) {
  if (s.empty() || s[0] == '-') bad_value(key, "not an unsigned integer: '" + s + "'");
  char* end = nullptr;
  std::uint64_t v = std::strtoull(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size()) bad_value(key, "not an unsigned integer: '" + s + "'");
  return v;
}

std::int64_t parse_i64(const std::string& key, const std::string& s) {
  if (s.empty()) bad_value(key, "not an integer: '" + s + "'");
  char* end = nullptr;
  std::int64_t v = std::strtoll(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size()) bad_value(key, "not an integer: '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

struct KeyDef {
  std::string name;
  std::function<std::string(const Config&)> get;
  std::function<void(Config&, const std::string&)> set;
  std::function<bool(const Config&)> present;  // null means always
};

GateSchedule& ensure_gate(Config& c) {
  if (!c.sim.gate) c.sim.gate.emplace();
  return *c.sim.gate;
}

SweepGrid& ensure_sweep(Config& c) {
  if (!c.sweep) c.sweep.emplace();
  return *c.sweep;
}

std::vector<KeyDef> build_table() {
  std::vector<KeyDef> t;

  auto dbl = [&t](const char* name, std::function<double&(Config&)> ref) {
    std::string key = name;
    t.push_back(KeyDef{
        key,
        [ref](const Config& c) { return fmt_double(ref(const_cast<Config&>(c))); },
        [ref, key](Config& c, const std::string& v) { ref(c) = parse_double(key, v); },
        nullptr});
  };

  t.push_back(KeyDef{
      "mode",
      [](const Config& c) { return std::string(to_string(c.sim.mode)); },
      [](Config& c, const std::string& v) {
        if (v == "free-running") c.sim.mode = Mode::FreeRunning;
        else if (v == "gating") c.sim.mode = Mode::Gating;
        else if (v == "hybrid") c.sim.mode = Mode::Hybrid;
        else bad_value("mode", "expected free-running, gating or hybrid");
      },
      nullptr});

  dbl("duration_s", [](Config& c) -> double& { return c.sim.duration_s; });

  t.push_back(KeyDef{
      "seed", [](const Config& c) { return fmt_u64(c.sim.seed); },
      [](Config& c, const std::string& v) { c.sim.seed = parse_u64("seed", v); },
      nullptr});

  t.push_back(KeyDef{
      "tdc.resolution_ps",
      [](const Config& c) { return fmt_i64(c.sim.tdc_resolution_ps); },
      [](Config& c, const std::string& v) {
        c.sim.tdc_resolution_ps = parse_i64("tdc.resolution_ps", v);
      },
      nullptr});

  t.push_back(KeyDef{
      "gate.period_ns",
      [](const Config& c) {
        if (!c.sim.gate) bad_value("gate.period_ns", "not set");
        return fmt_double(c.sim.gate->period_ns);
      },
      [](Config& c, const std::string& v) {
        ensure_gate(c).period_ns = parse_double("gate.period_ns", v);
      },
      [](const Config& c) { return c.sim.gate.has_value(); }});
  t.push_back(KeyDef{
      "gate.width_ns",
      [](const Config& c) {
        if (!c.sim.gate) bad_value("gate.width_ns", "not set");
        return fmt_double(c.sim.gate->width_ns);
      },
      [](Config& c, const std::string& v) {
        ensure_gate(c).width_ns = parse_double("gate.width_ns", v);
      },
      [](const Config& c) { return c.sim.gate.has_value(); }});

  dbl("operating.v_ex", [](Config& c) -> double& { return c.sim.operating.v_ex; });
  dbl("operating.temperature_k",
      [](Config& c) -> double& { return c.sim.operating.temperature; });

  dbl("source.rep_rate_hz", [](Config& c) -> double& { return c.sim.source.rep_rate_hz; });
  dbl("source.mu", [](Config& c) -> double& { return c.sim.source.mu; });
  dbl("source.laser_fwhm_ps", [](Config& c) -> double& { return c.sim.source.laser_fwhm_ps; });
  dbl("source.system_jitter_ps",
      [](Config& c) -> double& { return c.sim.source.system_jitter_fwhm_ps; });

  dbl("detector.v_br", [](Config& c) -> double& { return c.sim.detector.v_br; });
  dbl("detector.eta_max", [](Config& c) -> double& { return c.sim.detector.eta_max; });
  dbl("detector.v_sat", [](Config& c) -> double& { return c.sim.detector.v_sat; });
  dbl("detector.dcr_ref_cps", [](Config& c) -> double& { return c.sim.detector.dcr_ref; });
  dbl("detector.alpha_dcr", [](Config& c) -> double& { return c.sim.detector.alpha_dcr; });
  dbl("detector.beta_dcr", [](Config& c) -> double& { return c.sim.detector.beta_dcr; });
  dbl("detector.pap_ref", [](Config& c) -> double& { return c.sim.detector.pap_ref; });
  dbl("detector.gamma_ap", [](Config& c) -> double& { return c.sim.detector.gamma_ap; });
  dbl("detector.kappa_ap", [](Config& c) -> double& { return c.sim.detector.kappa_ap; });
  dbl("detector.n_ref", [](Config& c) -> double& { return c.sim.detector.n_ref; });
  dbl("detector.tau_trap_ns", [](Config& c) -> double& { return c.sim.detector.tau_trap_ns; });

  t.push_back(KeyDef{
      "detector.jitter_knots",
      [](const Config& c) {
        std::string s;
        for (const auto& k : c.sim.detector.jitter_knots) {
          if (!s.empty()) s += ',';
          s += fmt_double(k.v_ex) + ":" + fmt_double(k.fwhm_ps);
        }
        return s;
      },
      [](Config& c, const std::string& v) {
        std::vector<JitterKnot> knots;
        for (const auto& part : split(v, ',')) {
          auto pv = split(trim(part), ':');
          if (pv.size() != 2)
            bad_value("detector.jitter_knots", "expected v:fwhm pairs");
          knots.push_back({parse_double("detector.jitter_knots", trim(pv[0])),
                           parse_double("detector.jitter_knots", trim(pv[1]))});
        }
        c.sim.detector.jitter_knots = std::move(knots);
      },
      nullptr});

  dbl("detector.tail_frac", [](Config& c) -> double& { return c.sim.detector.frac_tail; });
  dbl("detector.tail_tau_ps", [](Config& c) -> double& { return c.sim.detector.tau_tail_ps; });
  dbl("detector.delay0_ns", [](Config& c) -> double& { return c.sim.detector.delay0_ns; });
  dbl("detector.delay_slope_ns_per_v",
      [](Config& c) -> double& { return c.sim.detector.delay_slope_ns_per_v; });

  dbl("circuit.v_dd", [](Config& c) -> double& { return c.sim.circuit.v_dd; });
  dbl("circuit.v_cc", [](Config& c) -> double& { return c.sim.circuit.v_cc; });
  dbl("circuit.v_zener", [](Config& c) -> double& { return c.sim.circuit.v_zener; });
  dbl("circuit.v_on", [](Config& c) -> double& { return c.sim.circuit.v_on; });
  dbl("circuit.r1", [](Config& c) -> double& { return c.sim.circuit.r1; });
  dbl("circuit.r2", [](Config& c) -> double& { return c.sim.circuit.r2; });
  dbl("circuit.r3", [](Config& c) -> double& { return c.sim.circuit.r3; });
  dbl("circuit.r_on", [](Config& c) -> double& { return c.sim.circuit.r_on; });
  dbl("circuit.r_off", [](Config& c) -> double& { return c.sim.circuit.r_off; });
  dbl("circuit.i0_zener", [](Config& c) -> double& { return c.sim.circuit.i0_zener; });
  dbl("circuit.v_slope", [](Config& c) -> double& { return c.sim.circuit.v_slope; });

  dbl("timing.detect_delay_ns", [](Config& c) -> double& { return c.sim.timing.detect_delay_ns; });
  dbl("timing.holdoff_ns", [](Config& c) -> double& { return c.sim.timing.holdoff_ns; });
  dbl("timing.reset_width_ns", [](Config& c) -> double& { return c.sim.timing.reset_width_ns; });
  dbl("timing.gate_on_delay_ns",
      [](Config& c) -> double& { return c.sim.timing.gate_on_delay_ns; });
  dbl("timing.gate_on_fall_ns",
      [](Config& c) -> double& { return c.sim.timing.gate_on_fall_ns; });
  dbl("timing.gate_off_delay_ns",
      [](Config& c) -> double& { return c.sim.timing.gate_off_delay_ns; });
  dbl("timing.gate_off_rise_ns",
      [](Config& c) -> double& { return c.sim.timing.gate_off_rise_ns; });

  dbl("characterize.window_ns", [](Config& c) -> double& { return c.cal.window_ns; });
  t.push_back(KeyDef{
      "characterize.bin_width_ps",
      [](const Config& c) { return fmt_i64(c.cal.bin_width_ps); },
      [](Config& c, const std::string& v) {
        c.cal.bin_width_ps = parse_i64("characterize.bin_width_ps", v);
      },
      nullptr});

  auto list_get = [](const std::vector<double>& xs) {
    std::string s;
    for (double x : xs) {
      if (!s.empty()) s += ',';
      s += fmt_double(x);
    }
    return s;
  };
  auto list_set = [](const char* key, const std::string& v) {
    std::vector<double> xs;
    for (const auto& part : split(v, ','))
      xs.push_back(parse_double(key, trim(part)));
    return xs;
  };

  t.push_back(KeyDef{
      "sweep.v_ex",
      [list_get](const Config& c) {
        if (!c.sweep) bad_value("sweep.v_ex", "not set");
        return list_get(c.sweep->v_ex);
      },
      [list_set](Config& c, const std::string& v) {
        ensure_sweep(c).v_ex = list_set("sweep.v_ex", v);
      },
      [](const Config& c) { return c.sweep.has_value(); }});
  t.push_back(KeyDef{
      "sweep.temperature_k",
      [list_get](const Config& c) {
        if (!c.sweep) bad_value("sweep.temperature_k", "not set");
        return list_get(c.sweep->temperature);
      },
      [list_set](Config& c, const std::string& v) {
        ensure_sweep(c).temperature = list_set("sweep.temperature_k", v);
      },
      [](const Config& c) { return c.sweep.has_value(); }});
  t.push_back(KeyDef{
      "sweep.duration_s",
      [](const Config& c) {
        if (!c.sweep || !c.sweep->duration_s) bad_value("sweep.duration_s", "not set");
        return fmt_double(*c.sweep->duration_s);
      },
      [](Config& c, const std::string& v) {
        ensure_sweep(c).duration_s = parse_double("sweep.duration_s", v);
      },
      [](const Config& c) { return c.sweep && c.sweep->duration_s; }});

  return t;
}

const std::vector<KeyDef>& table() {
  static const std::vector<KeyDef> t = build_table();
  return t;
}

const KeyDef* find_key(const std::string& key) {
  for (const auto& def : table())
    if (def.name == key) return &def;
  return nullptr;
}

}  // namespace

void set_key(Config& cfg, const std::string& key, const std::string& value) {
  const KeyDef* def = find_key(key);
  if (!def) throw ConfigError(ConfigError::Kind::Parse, key, "unknown key");
  def->set(cfg, value);
}

std::string get_key(const Config& cfg, const std::string& key) {
  const KeyDef* def = find_key(key);
  if (!def) throw ConfigError(ConfigError::Kind::Parse, key, "unknown key");
  return def->get(cfg);
}

Config parse_config(std::string_view text) {
  Config cfg;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    std::string_view raw = text.substr(
        start, nl == std::string_view::npos ? text.size() - start : nl - start);
    ++line_no;
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;

    std::string line(raw);
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;

    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(ConfigError::Kind::Parse, "",
                        "line " + std::to_string(line_no) +
                            ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    try {
      set_key(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(e.kind(), e.key(),
                        "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string echo_config(const Config& cfg) {
  std::string out;
  for (const auto& def : table()) {
    if (def.present && !def.present(cfg)) continue;
    out += def.name;
    out += " = ";
    out += def.get(cfg);
    out += '\n';
  }
  return out;
}

void validate(const Config& cfg) {
  validate_sim(cfg.sim);

  if (!(cfg.cal.window_ns > 0))
    throw ConfigError(ConfigError::Kind::Validation, "characterize.window_ns",
                      "must be positive");
  double period_ns = 1e9 / cfg.sim.source.rep_rate_hz;
  if (!(cfg.cal.window_ns < period_ns))
    throw ConfigError(ConfigError::Kind::Validation, "characterize.window_ns",
                      "must be smaller than the pulse period");
  if (cfg.cal.bin_width_ps <= 0 ||
      cfg.cal.bin_width_ps % cfg.sim.tdc_resolution_ps != 0)
    throw ConfigError(ConfigError::Kind::Validation,
                      "characterize.bin_width_ps",
                      "must be a positive multiple of tdc.resolution_ps");

  if (cfg.sweep) {
    if (cfg.sweep->v_ex.empty())
      throw ConfigError(ConfigError::Kind::Validation, "sweep.v_ex",
                        "at least one bias point required");
    if (cfg.sweep->temperature.empty())
      throw ConfigError(ConfigError::Kind::Validation, "sweep.temperature_k",
                        "at least one temperature required");
    for (double v : cfg.sweep->v_ex)
      if (!(v >= 0 && v <= 50))
        throw ConfigError(ConfigError::Kind::Validation, "sweep.v_ex",
                          "bias points must lie in [0, 50] V");
    for (double tk : cfg.sweep->temperature)
      if (!(tk >= 250 && tk <= 300))
        throw ConfigError(ConfigError::Kind::Validation, "sweep.temperature_k",
                          "temperatures must lie in [250, 300] K");
    if (cfg.sweep->duration_s && !(*cfg.sweep->duration_s > 0))
      throw ConfigError(ConfigError::Kind::Validation, "sweep.duration_s",
                        "must be positive");
  }
}

}  // namespace spdsim
