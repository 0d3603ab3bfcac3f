#include "circuit.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace spdsim {

namespace {

// Gate-drive span over which the channel conductance swings between its
// off and on values.
constexpr double kM1WidthV = 0.05;

double zener_current(double v_gs, const CircuitParams& c) {
  return c.i0_zener * std::exp((v_gs - c.v_zener) / c.v_slope);
}

}  // namespace

void validate(const CircuitParams& c) {
  if (!(c.r1 > 0 && c.r2 > 0 && c.r3 > 0 && c.r_on > 0 && c.r_off > 0))
    throw std::domain_error("circuit resistances must be positive");
  if (!(c.i0_zener > 0 && c.v_slope > 0))
    throw std::domain_error("Zener knee parameters must be positive");
  if (!(c.v_on > 0 && c.v_on < c.v_zener && c.v_zener < c.v_dd))
    throw std::domain_error("require 0 < v_on < v_zener < v_dd");
}

double m1_resistance(double v_gs, const CircuitParams& c) {
  double g_on = 1.0 / c.r_on;
  double g_off = 1.0 / c.r_off;
  double s = 1.0 / (1.0 + std::exp(-(v_gs - c.v_on) / kM1WidthV));
  return 1.0 / (g_off + (g_on - g_off) * s);
}

double zener_branch_vs(double v_gs, const CircuitParams& c) {
  return c.v_dd - zener_current(v_gs, c) * c.r1 - v_gs;
}

double balance_branch_vs(double v_gs, const CircuitParams& c) {
  // i1 + (v_dd - v_s)/r_m1 = v_s/r2, solved for v_s.
  double i1 = zener_current(v_gs, c);
  double g_m1 = 1.0 / m1_resistance(v_gs, c);
  return (i1 + c.v_dd * g_m1) / (1.0 / c.r2 + g_m1);
}

WorkingPoint solve_working_point(const CircuitParams& c, double tol_v) {
  validate(c);
  if (!(tol_v > 0)) throw std::domain_error("tolerance must be positive");

  auto f = [&c](double v_gs) {
    return zener_branch_vs(v_gs, c) - balance_branch_vs(v_gs, c);
  };

  double lo = 0.0;
  double hi = c.v_zener;
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) hi = lo;
  else if (fhi == 0.0) lo = hi;
  else if ((flo > 0.0) == (fhi > 0.0))
    throw NoBracketError("branch curves do not cross on [0, v_zener]");

  while (hi - lo > tol_v) {
    double mid = 0.5 * (lo + hi);
    double fm = f(mid);
    if (fm == 0.0) {
      lo = hi = mid;
      break;
    }
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }

  double v_gs = 0.5 * (lo + hi);
  WorkingPoint wp;
  wp.v_gs = v_gs;
  wp.v_s = zener_branch_vs(v_gs, c);
  wp.i1 = zener_current(v_gs, c);
  wp.residual = f(v_gs);
  return wp;
}

// --- state machine ---------------------------------------------------------

const char* to_string(Phase p) {
  switch (p) {
    case Phase::Armed: return "armed";
    case Phase::Avalanching: return "avalanching";
    case Phase::Quenched: return "quenched";
    case Phase::Resetting: return "resetting";
    case Phase::GateOff: return "gate-off";
    case Phase::GateTurningOn: return "gate-turning-on";
    case Phase::GateTurningOff: return "gate-turning-off";
  }
  return "?";
}

const char* to_string(Mode m) {
  switch (m) {
    case Mode::FreeRunning: return "free-running";
    case Mode::Gating: return "gating";
    case Mode::Hybrid: return "hybrid";
  }
  return "?";
}

const char* to_string(CircuitEvent e) {
  switch (e) {
    case CircuitEvent::AvalancheDetected: return "avalanche-detected";
    case CircuitEvent::HoldoffExpired: return "holdoff-expired";
    case CircuitEvent::ResetDone: return "reset-done";
    case CircuitEvent::GateRise: return "gate-rise";
    case CircuitEvent::GateFall: return "gate-fall";
    case CircuitEvent::GateOnComplete: return "gate-on-complete";
    case CircuitEvent::GateOffComplete: return "gate-off-complete";
  }
  return "?";
}

void validate(const TimingParams& t) {
  if (!(t.detect_delay_ns > 0 && t.holdoff_ns > 0 && t.reset_width_ns > 0 &&
        t.gate_on_delay_ns > 0 && t.gate_on_fall_ns > 0 &&
        t.gate_off_delay_ns > 0 && t.gate_off_rise_ns > 0))
    throw std::domain_error("timing intervals must be positive");
}

QuenchCircuit::QuenchCircuit(Mode mode, const TimingParams& timing)
    : mode_(mode), timing_(timing) {
  validate(timing_);
  if (mode_ == Mode::FreeRunning) {
    phase_ = Phase::Armed;
    gate_high_ = true;
  } else {
    phase_ = Phase::GateOff;
    gate_high_ = false;
  }
}

void QuenchCircuit::cancel_pending() { ++generation_; }

std::optional<ScheduledEvent> QuenchCircuit::enter(
    Phase next, double now_ps, std::optional<CircuitEvent> timer,
    double delay_ns) {
  if (log_enabled_) log_.push_back({now_ps, phase_, next});
  phase_ = next;
  if (!timer) return std::nullopt;
  return ScheduledEvent{*timer, now_ps + delay_ns * 1000.0, generation_};
}

std::optional<ScheduledEvent> QuenchCircuit::begin_avalanche(double now_ps) {
  if (phase_ != Phase::Armed)
    throw IllegalTransition("avalanche outside the armed phase");
  if (mode_ == Mode::Gating)
    return enter(Phase::Avalanching, now_ps, std::nullopt, 0.0);
  return enter(Phase::Avalanching, now_ps, CircuitEvent::AvalancheDetected,
               timing_.detect_delay_ns);
}

std::optional<ScheduledEvent> QuenchCircuit::apply(CircuitEvent event,
                                                   double now_ps) {
  auto illegal = [&]() -> IllegalTransition {
    return IllegalTransition(std::string(to_string(event)) + " while " +
                             to_string(phase_) + " in " + to_string(mode_) +
                             " mode");
  };

  switch (event) {
    case CircuitEvent::AvalancheDetected:
      if (phase_ != Phase::Avalanching) throw illegal();
      return enter(Phase::Quenched, now_ps, CircuitEvent::HoldoffExpired,
                   timing_.holdoff_ns);

    case CircuitEvent::HoldoffExpired:
      if (phase_ != Phase::Quenched) throw illegal();
      if (mode_ == Mode::Hybrid && !gate_high_)
        return enter(Phase::GateOff, now_ps, std::nullopt, 0.0);
      return enter(Phase::Resetting, now_ps, CircuitEvent::ResetDone,
                   timing_.reset_width_ns);

    case CircuitEvent::ResetDone:
      if (phase_ != Phase::Resetting) throw illegal();
      if (mode_ == Mode::Hybrid && !gate_high_)
        return enter(Phase::GateOff, now_ps, std::nullopt, 0.0);
      return enter(Phase::Armed, now_ps, std::nullopt, 0.0);

    case CircuitEvent::GateRise:
      if (mode_ == Mode::FreeRunning || gate_high_) throw illegal();
      gate_high_ = true;
      switch (phase_) {
        case Phase::GateOff:
          return enter(Phase::GateTurningOn, now_ps,
                       CircuitEvent::GateOnComplete,
                       timing_.gate_on_delay_ns + timing_.gate_on_fall_ns);
        case Phase::GateTurningOff:
          cancel_pending();
          return enter(Phase::GateTurningOn, now_ps,
                       CircuitEvent::GateOnComplete,
                       timing_.gate_on_delay_ns + timing_.gate_on_fall_ns);
        case Phase::Quenched:
        case Phase::Resetting:
          // Hybrid: gate came back during the dead time. The running
          // holdoff or reset timer finishes the cycle normally.
          return std::nullopt;
        default:
          throw illegal();
      }

    case CircuitEvent::GateFall:
      if (mode_ == Mode::FreeRunning || !gate_high_) throw illegal();
      gate_high_ = false;
      switch (phase_) {
        case Phase::Armed:
          return enter(Phase::GateTurningOff, now_ps,
                       CircuitEvent::GateOffComplete,
                       timing_.gate_off_delay_ns + timing_.gate_off_rise_ns);
        case Phase::Avalanching:
          // The gate quenches an avalanche in progress. Any pending detect
          // timer is void.
          cancel_pending();
          return enter(Phase::GateTurningOff, now_ps,
                       CircuitEvent::GateOffComplete,
                       timing_.gate_off_delay_ns + timing_.gate_off_rise_ns);
        case Phase::GateTurningOn:
          cancel_pending();
          return enter(Phase::GateTurningOff, now_ps,
                       CircuitEvent::GateOffComplete,
                       timing_.gate_off_delay_ns + timing_.gate_off_rise_ns);
        case Phase::Quenched:
        case Phase::Resetting:
          // Hybrid: dead time outlives the gate. HoldoffExpired or
          // ResetDone will land in GateOff.
          return std::nullopt;
        default:
          throw illegal();
      }

    case CircuitEvent::GateOnComplete:
      if (phase_ != Phase::GateTurningOn) throw illegal();
      return enter(Phase::Armed, now_ps, std::nullopt, 0.0);

    case CircuitEvent::GateOffComplete:
      if (phase_ != Phase::GateTurningOff) throw illegal();
      return enter(Phase::GateOff, now_ps, std::nullopt, 0.0);
  }
  throw illegal();
}

// --- waveform reconstruction -----------------------------------------------

std::vector<WaveformPoint> anode_waveform(
    const std::vector<TransitionRecord>& log, const TimingParams& timing,
    const CircuitParams& circuit, double t_start_ps, double t_end_ps) {
  if (log.empty()) throw std::invalid_argument("empty transition log");

  double v_q = solve_working_point(circuit).v_s;
  double rise_ps = timing.gate_off_rise_ns * 1000.0;
  double fall_ps = timing.gate_on_fall_ns * 1000.0;

  auto level_of = [v_q](Phase p) {
    return (p == Phase::Armed || p == Phase::Avalanching) ? 0.0 : v_q;
  };

  std::vector<WaveformPoint> pts;
  double level = level_of(log.front().from);
  pts.push_back({t_start_ps, level});

  auto ramp = [&](double t0, double v0, double t1, double v1) {
    pts.push_back({t0, v0});
    pts.push_back({t1, v1});
    level = v1;
  };

  for (const auto& rec : log) {
    if (rec.to == Phase::Quenched && level == 0.0) {
      // quench drives the anode up from the detection instant
      ramp(rec.time_ps, 0.0, rec.time_ps + rise_ps, v_q);
    } else if (rec.to == Phase::GateOff && rec.from == Phase::GateTurningOff) {
      ramp(rec.time_ps - rise_ps, 0.0, rec.time_ps, v_q);
    } else if (rec.to == Phase::Armed && rec.from == Phase::Resetting) {
      ramp(rec.time_ps, v_q, rec.time_ps + fall_ps, 0.0);
    } else if (rec.to == Phase::Armed && rec.from == Phase::GateTurningOn) {
      ramp(rec.time_ps - fall_ps, v_q, rec.time_ps, 0.0);
    }
  }

  pts.push_back({t_end_ps, level});

  // Drop zero-length duplicates from back-to-back transitions.
  std::vector<WaveformPoint> out;
  for (const auto& p : pts) {
    if (!out.empty() && out.back().time_ps == p.time_ps &&
        out.back().volts == p.volts)
      continue;
    out.push_back(p);
  }
  return out;
}

std::vector<WaveformPoint> waveform_scenario(const std::string& name,
                                             const CircuitParams& circuit,
                                             const TimingParams& timing,
                                             double gate_width_ns) {
  if (name == "free-running-pulse") {
    QuenchCircuit m(Mode::FreeRunning, timing);
    m.enable_log(true);
    double t0 = 100e3;
    auto s = m.begin_avalanche(t0);
    while (s) s = m.apply(s->event, s->time_ps);
    return anode_waveform(m.log(), timing, circuit, 0.0, t0 + 200e3);
  }
  if (name == "gate-cycle") {
    if (!(gate_width_ns > 0))
      throw std::invalid_argument("gate width must be positive");
    QuenchCircuit m(Mode::Gating, timing);
    m.enable_log(true);
    double rise = 100e3;
    double fall = rise + gate_width_ns * 1000.0;
    auto s = m.apply(CircuitEvent::GateRise, rise);
    while (s && s->time_ps <= fall && s->generation == m.generation())
      s = m.apply(s->event, s->time_ps);
    s = m.apply(CircuitEvent::GateFall, fall);
    while (s && s->generation == m.generation())
      s = m.apply(s->event, s->time_ps);
    return anode_waveform(m.log(), timing, circuit, 0.0, fall + 100e3);
  }
  throw std::invalid_argument("unknown waveform scenario: " + name);
}

}  // namespace spdsim
