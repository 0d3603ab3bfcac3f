#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace spdsim {

// Readout front end: cascode transistor into a Zener-referenced divider,
// with a gate-driven series MOSFET. The working point sets the quench level
// seen at the detector anode.
struct CircuitParams {
  double v_dd = 53.0;     // supply, volts
  double v_cc = 5.0;      // logic supply
  double v_zener = 4.3;   // Zener reference
  double v_on = 2.5;      // MOSFET threshold-ish turn-on midpoint
  double r1 = 1000.0;     // ohms
  double r2 = 20000.0;
  double r3 = 1000.0;
  double r_on = 1.0;      // MOSFET channel, fully on
  double r_off = 1e9;     // MOSFET channel, fully off
  double i0_zener = 1e-5; // amperes; knee scale of the Zener branch
  double v_slope = 0.1;   // volts; Zener exponential slope
};

void validate(const CircuitParams& c);

// Source voltage implied by the Zener branch: v_dd minus the drop R1 takes
// from the knee current at gate-source voltage v_gs.
double zener_branch_vs(double v_gs, const CircuitParams& c);

// Source voltage implied by current balance through the MOSFET channel and
// the R2 path to ground at the same v_gs.
double balance_branch_vs(double v_gs, const CircuitParams& c);

// Channel resistance versus gate drive. Logistic in conductance between
// 1/r_off and 1/r_on, midpoint v_on.
double m1_resistance(double v_gs, const CircuitParams& c);

struct WorkingPoint {
  double v_gs;      // volts
  double v_s;       // volts at the source node (the quench level)
  double i1;        // Zener branch current, amperes
  double residual;  // zener_branch_vs - balance_branch_vs at the solution
};

// Bisection on f(v_gs) = zener_branch_vs - balance_branch_vs over
// [0, v_zener]. Throws NoBracketError when f does not change sign there.
WorkingPoint solve_working_point(const CircuitParams& c, double tol_v = 1e-6);

// --- timed quench/reset state machine -------------------------------------

enum class Mode { FreeRunning, Gating, Hybrid };

enum class Phase {
  Armed,
  Avalanching,
  Quenched,
  Resetting,
  GateOff,
  GateTurningOn,
  GateTurningOff,
};

const char* to_string(Phase p);
const char* to_string(Mode m);

// detect/holdoff/reset come from the comparator-and-monostable chain; the
// gate numbers are the turn-on/turn-off delays and edge times of the series
// switch.
struct TimingParams {
  double detect_delay_ns = 20.0;
  double holdoff_ns = 50.0;
  double reset_width_ns = 10.0;
  double gate_on_delay_ns = 10.0;
  double gate_on_fall_ns = 5.0;
  double gate_off_delay_ns = 15.0;
  double gate_off_rise_ns = 10.0;
};

void validate(const TimingParams& t);

enum class CircuitEvent {
  AvalancheDetected,
  HoldoffExpired,
  ResetDone,
  GateRise,
  GateFall,
  GateOnComplete,
  GateOffComplete,
};

const char* to_string(CircuitEvent e);

// A timer the machine asks its driver to fire later. generation stamps the
// request; the machine bumps its generation when a pending timer is
// cancelled, so the driver can drop the stale firing.
struct ScheduledEvent {
  CircuitEvent event;
  double time_ps;
  std::uint64_t generation;
};

struct TransitionRecord {
  double time_ps;
  Phase from;
  Phase to;
};

class QuenchCircuit {
public:
  QuenchCircuit(Mode mode, const TimingParams& timing);

  Mode mode() const { return mode_; }
  Phase phase() const { return phase_; }
  bool gate_high() const { return gate_high_; }
  std::uint64_t generation() const { return generation_; }

  // Carrier fired while Armed. Returns the detect-delay timer in
  // free-running and hybrid modes; in gating mode the avalanche sits until
  // the gate closes and there is nothing to schedule.
  std::optional<ScheduledEvent> begin_avalanche(double now_ps);

  // Timer firings and gate edges. Returns a follow-up timer if the new
  // phase has one. Throws IllegalTransition for combinations the hardware
  // cannot produce.
  std::optional<ScheduledEvent> apply(CircuitEvent event, double now_ps);

  void enable_log(bool on) { log_enabled_ = on; }
  const std::vector<TransitionRecord>& log() const { return log_; }

private:
  std::optional<ScheduledEvent> enter(Phase next, double now_ps,
                                      std::optional<CircuitEvent> timer,
                                      double delay_ns);
  void cancel_pending();

  Mode mode_;
  TimingParams timing_;
  Phase phase_;
  bool gate_high_;
  std::uint64_t generation_ = 0;
  bool log_enabled_ = false;
  std::vector<TransitionRecord> log_;
};

// Anode voltage breakpoints reconstructed from a transition log: 0 V armed,
// the working-point quench level while quenched or gated off, linear ramps
// on the reset and gate edges. Returned as (time_ps, volts) pairs.
struct WaveformPoint {
  double time_ps;
  double volts;
};

std::vector<WaveformPoint> anode_waveform(const std::vector<TransitionRecord>& log,
                                          const TimingParams& timing,
                                          const CircuitParams& circuit,
                                          double t_start_ps, double t_end_ps);

// Scripted single-shot waveforms. "free-running-pulse" is one carrier at
// 100 ns through the full quench/holdoff/reset cycle; "gate-cycle" is one
// gate window (rise at 100 ns, the given width) with no carrier.
std::vector<WaveformPoint> waveform_scenario(const std::string& name,
                                             const CircuitParams& circuit,
                                             const TimingParams& timing,
                                             double gate_width_ns);

}  // namespace spdsim
