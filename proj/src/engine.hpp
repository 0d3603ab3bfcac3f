#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "circuit.hpp"
#include "detector.hpp"

namespace spdsim {

struct SourceParams {
  double rep_rate_hz = 1e5;
  double mu = 1.0;                     // mean photons per pulse
  double laser_fwhm_ps = 70.0;         // excitation pulse width
  double system_jitter_fwhm_ps = 30.0; // electronics contribution
};

struct GateSchedule {
  double period_ns = 1000.0;
  double width_ns = 300.0;
};

struct SimConfig {
  Mode mode = Mode::FreeRunning;
  double duration_s = 10.0;
  std::uint64_t seed = 1;
  std::int64_t tdc_resolution_ps = 10;
  std::optional<GateSchedule> gate;  // required iff mode is not free-running
  OperatingPoint operating;
  SourceParams source;
  DetectorParams detector;
  CircuitParams circuit;
  TimingParams timing;
};

// Throws ConfigError naming the offending key.
void validate_sim(const SimConfig& cfg);

enum class RecordKind { Detection, SyncPulse };

struct TimestampRecord {
  std::int64_t time_ps;
  RecordKind kind;
};

class RecordSink {
public:
  virtual ~RecordSink() = default;
  virtual void on_record(const TimestampRecord& rec) = 0;
};

class VectorSink : public RecordSink {
public:
  void on_record(const TimestampRecord& rec) override { records.push_back(rec); }
  std::vector<TimestampRecord> records;
};

// Quantise to the TDC grid: round half up to a multiple of resolution_ps.
std::int64_t apply_tdc(double time_ps, std::int64_t resolution_ps);

// One laser pulse worth of photon arrival times (unsorted), appended to out.
// Draw order per pulse: photon count, then one Gaussian offset per photon.
void sample_pulse_photons(double pulse_time_ps, const SourceParams& source,
                          std::mt19937_64& rng, std::vector<double>& out);

// Eagerly sampled photon arrivals, sorted within each pulse. Exposed for
// tests; the engine itself feeds pulses lazily with the same draws.
std::vector<double> generate_photon_arrivals(const SourceParams& source,
                                             double duration_s,
                                             std::mt19937_64& rng);

// Homogeneous Poisson arrivals on [0, duration), sorted.
std::vector<double> generate_dark_arrivals(double rate_cps, double duration_s,
                                           std::mt19937_64& rng);

struct RunStats {
  std::uint64_t pulses = 0;
  std::uint64_t photons = 0;
  std::uint64_t dark_carriers = 0;
  std::uint64_t trap_releases = 0;
  std::uint64_t avalanches = 0;
  std::uint64_t detections = 0;
  std::uint64_t sync_records = 0;
  std::uint64_t carriers_while_dead = 0;
  std::uint64_t photons_undetected = 0;
};

// Run the full simulation. Records reach the sink in non-decreasing time
// order, already quantised. Deterministic for a given config.
RunStats run_simulation(const SimConfig& cfg, RecordSink& sink);

}  // namespace spdsim
