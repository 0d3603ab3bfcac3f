#include "engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "errors.hpp"
#include "rng.hpp"

namespace spdsim {

namespace {

constexpr double kFwhmPerSigma = 2.3548200450309493;

void require(bool ok, const char* key, const std::string& msg) {
  if (!ok) throw ConfigError(ConfigError::Kind::Validation, key, msg);
}

}  // namespace

void validate_sim(const SimConfig& cfg) {
  require(cfg.duration_s > 0, "duration_s", "must be positive");
  require(cfg.tdc_resolution_ps > 0, "tdc.resolution_ps", "must be positive");

  if (cfg.mode == Mode::FreeRunning) {
    require(!cfg.gate.has_value(), "gate.period_ns",
            "gate schedule set but mode is free-running");
  } else {
    require(cfg.gate.has_value(), "gate.period_ns",
            "gate schedule required in gating and hybrid modes");
    require(cfg.gate->period_ns > 0, "gate.period_ns", "must be positive");
    require(cfg.gate->width_ns > 0, "gate.width_ns", "must be positive");
    require(cfg.gate->width_ns < cfg.gate->period_ns, "gate.width_ns",
            "must be smaller than gate.period_ns");
  }

  require(cfg.operating.v_ex >= 0 && cfg.operating.v_ex <= 50,
          "operating.v_ex", "must lie in [0, 50] V");
  require(cfg.operating.temperature >= 250 && cfg.operating.temperature <= 300,
          "operating.temperature_k", "must lie in [250, 300] K");

  require(cfg.source.rep_rate_hz > 0, "source.rep_rate_hz",
          "must be positive");
  require(cfg.source.mu >= 0, "source.mu", "must be non-negative");
  require(cfg.source.laser_fwhm_ps >= 0, "source.laser_fwhm_ps",
          "must be non-negative");
  require(cfg.source.system_jitter_fwhm_ps >= 0, "source.system_jitter_ps",
          "must be non-negative");

  const DetectorParams& d = cfg.detector;
  require(d.v_br > 0, "detector.v_br", "must be positive");
  require(d.eta_max > 0 && d.eta_max <= 1, "detector.eta_max",
          "must lie in (0, 1]");
  require(d.v_sat > 0, "detector.v_sat", "must be positive");
  require(d.dcr_ref >= 0, "detector.dcr_ref_cps", "must be non-negative");
  require(d.pap_ref >= 0, "detector.pap_ref", "must be non-negative");
  require(d.n_ref >= 0, "detector.n_ref", "must be non-negative");
  require(d.tau_trap_ns > 0, "detector.tau_trap_ns", "must be positive");
  require(!d.jitter_knots.empty(), "detector.jitter_knots",
          "at least one knot required");
  for (std::size_t i = 0; i < d.jitter_knots.size(); ++i) {
    require(d.jitter_knots[i].fwhm_ps >= 0, "detector.jitter_knots",
            "widths must be non-negative");
    if (i > 0)
      require(d.jitter_knots[i - 1].v_ex < d.jitter_knots[i].v_ex,
              "detector.jitter_knots", "knots must be sorted by bias");
  }
  require(d.frac_tail >= 0 && d.frac_tail < 1, "detector.tail_frac",
          "must lie in [0, 1)");
  require(d.tau_tail_ps > 0, "detector.tail_tau_ps", "must be positive");

  try {
    validate(cfg.circuit);
  } catch (const std::domain_error& e) {
    throw ConfigError(ConfigError::Kind::Validation, "circuit", e.what());
  }
  try {
    validate(cfg.timing);
  } catch (const std::domain_error& e) {
    throw ConfigError(ConfigError::Kind::Validation, "timing", e.what());
  }
}

std::int64_t apply_tdc(double time_ps, std::int64_t resolution_ps) {
  double bins = std::floor(time_ps / static_cast<double>(resolution_ps) + 0.5);
  return static_cast<std::int64_t>(bins) * resolution_ps;
}

void sample_pulse_photons(double pulse_time_ps, const SourceParams& source,
                          std::mt19937_64& rng, std::vector<double>& out) {
  std::uint64_t n = poisson(rng, source.mu);
  double sigma = source.laser_fwhm_ps / kFwhmPerSigma;
  for (std::uint64_t i = 0; i < n; ++i)
    out.push_back(pulse_time_ps + normal(rng, 0.0, sigma));
}

std::vector<double> generate_photon_arrivals(const SourceParams& source,
                                             double duration_s,
                                             std::mt19937_64& rng) {
  double duration_ps = duration_s * 1e12;
  double period_ps = 1e12 / source.rep_rate_hz;
  std::vector<double> out;
  std::vector<double> pulse;
  for (std::uint64_t k = 0; k * period_ps < duration_ps; ++k) {
    pulse.clear();
    sample_pulse_photons(k * period_ps, source, rng, pulse);
    std::sort(pulse.begin(), pulse.end());
    out.insert(out.end(), pulse.begin(), pulse.end());
  }
  return out;
}

std::vector<double> generate_dark_arrivals(double rate_cps, double duration_s,
                                           std::mt19937_64& rng) {
  std::vector<double> out;
  if (rate_cps <= 0) return out;
  double duration_ps = duration_s * 1e12;
  double mean_gap_ps = 1e12 / rate_cps;
  double t = exponential(rng, mean_gap_ps);
  while (t < duration_ps) {
    out.push_back(t);
    t += exponential(rng, mean_gap_ps);
  }
  return out;
}

namespace {

enum class EvType {
  GateRise,
  GateFall,
  CircuitTimer,
  Photon,
  Dark,
  TrapRelease,
};

// Gate edges act before circuit timers, which act before carriers arriving
// at the same instant; insertion order breaks remaining ties.
int priority_of(EvType t) {
  switch (t) {
    case EvType::GateRise:
    case EvType::GateFall:
      return 0;
    case EvType::CircuitTimer:
      return 1;
    default:
      return 2;
  }
}

struct QueuedEvent {
  double time_ps;
  int priority;
  std::uint64_t seq;
  EvType type;
  CircuitEvent timer;       // valid for CircuitTimer
  std::uint64_t generation; // valid for CircuitTimer
  double payload;           // carrier time for Photon/Dark/TrapRelease
};

struct LaterEvent {
  bool operator()(const QueuedEvent& a, const QueuedEvent& b) const {
    if (a.time_ps != b.time_ps) return a.time_ps > b.time_ps;
    if (a.priority != b.priority) return a.priority > b.priority;
    return a.seq > b.seq;
  }
};

// Lazily walks the pulse train so long runs never hold the full photon list
// in memory. Draws match generate_photon_arrivals exactly.
class PulseFeed {
public:
  PulseFeed(const SourceParams& source, double duration_ps,
            std::mt19937_64& rng)
      : source_(source), rng_(rng) {
    period_ps_ = 1e12 / source.rep_rate_hz;
    double q = duration_ps / period_ps_;
    n_pulses_ = static_cast<std::uint64_t>(std::ceil(q));
    while (n_pulses_ > 0 &&
           static_cast<double>(n_pulses_ - 1) * period_ps_ >= duration_ps)
      --n_pulses_;
  }

  std::uint64_t pulse_count() const { return n_pulses_; }
  double period_ps() const { return period_ps_; }

  std::optional<double> next() {
    while (pos_ == buf_.size()) {
      if (next_pulse_ == n_pulses_) return std::nullopt;
      buf_.clear();
      pos_ = 0;
      sample_pulse_photons(static_cast<double>(next_pulse_) * period_ps_,
                           source_, rng_, buf_);
      std::sort(buf_.begin(), buf_.end());
      ++next_pulse_;
    }
    return buf_[pos_++];
  }

private:
  const SourceParams& source_;
  std::mt19937_64& rng_;
  double period_ps_;
  std::uint64_t n_pulses_ = 0;
  std::uint64_t next_pulse_ = 0;
  std::vector<double> buf_;
  std::size_t pos_ = 0;
};

class DarkFeed {
public:
  DarkFeed(double rate_cps, double duration_ps, std::mt19937_64& rng)
      : rng_(rng), duration_ps_(duration_ps) {
    mean_gap_ps_ = rate_cps > 0 ? 1e12 / rate_cps : 0.0;
    if (rate_cps > 0) t_ = exponential(rng_, mean_gap_ps_);
    else t_ = std::numeric_limits<double>::infinity();
  }

  std::optional<double> next() {
    if (t_ >= duration_ps_) return std::nullopt;
    double cur = t_;
    t_ += exponential(rng_, mean_gap_ps_);
    return cur;
  }

private:
  std::mt19937_64& rng_;
  double duration_ps_;
  double mean_gap_ps_;
  double t_;
};

// Detections can be produced out of order (the response delay varies per
// avalanche), so they sit in a small heap until no earlier record can still
// appear; sync markers merge in on the way out. At equal quantised times a
// sync precedes a detection, and earlier avalanches precede later ones.
class OrderedEmitter {
public:
  OrderedEmitter(RecordSink& sink, std::uint64_t n_pulses, double period_ps,
                 std::int64_t resolution_ps, RunStats& stats)
      : sink_(sink),
        n_pulses_(n_pulses),
        period_ps_(period_ps),
        resolution_ps_(resolution_ps),
        stats_(stats) {}

  void add_detection(std::int64_t time_q) {
    heap_.push({time_q, next_seq_++});
  }

  void flush_below(std::int64_t horizon_q) {
    while (true) {
      std::int64_t sync_q = next_sync_time_q();
      bool have_det = !heap_.empty();
      std::int64_t det_q =
          have_det ? heap_.top().time_q : std::numeric_limits<std::int64_t>::max();
      if (sync_q <= det_q) {
        if (sync_q >= horizon_q) break;
        sink_.on_record({sync_q, RecordKind::SyncPulse});
        ++stats_.sync_records;
        ++next_sync_;
      } else {
        if (det_q >= horizon_q) break;
        sink_.on_record({det_q, RecordKind::Detection});
        ++stats_.detections;
        heap_.pop();
      }
    }
  }

  void finish() { flush_below(std::numeric_limits<std::int64_t>::max()); }

private:
  struct Pending {
    std::int64_t time_q;
    std::uint64_t seq;
    bool operator>(const Pending& o) const {
      if (time_q != o.time_q) return time_q > o.time_q;
      return seq > o.seq;
    }
  };

  std::int64_t next_sync_time_q() {
    if (next_sync_ >= n_pulses_) return std::numeric_limits<std::int64_t>::max();
    return apply_tdc(static_cast<double>(next_sync_) * period_ps_,
                     resolution_ps_);
  }

  RecordSink& sink_;
  std::uint64_t n_pulses_;
  double period_ps_;
  std::int64_t resolution_ps_;
  RunStats& stats_;
  std::priority_queue<Pending, std::vector<Pending>, std::greater<Pending>>
      heap_;
  std::uint64_t next_sync_ = 0;
  std::uint64_t next_seq_ = 0;
};

}  // namespace

RunStats run_simulation(const SimConfig& cfg, RecordSink& sink) {
  validate_sim(cfg);

  RunStats stats;
  double duration_ps = cfg.duration_s * 1e12;

  auto src_rng = make_stream(cfg.seed, Stream::Source);
  auto dark_rng = make_stream(cfg.seed, Stream::Dark);
  auto thin_rng = make_stream(cfg.seed, Stream::Thinning);
  auto trap_rng = make_stream(cfg.seed, Stream::Traps);
  auto resp_rng = make_stream(cfg.seed, Stream::Response);
  auto sys_rng = make_stream(cfg.seed, Stream::SystemJitter);

  PulseFeed photons(cfg.source, duration_ps, src_rng);
  DarkFeed dark(dark_rate(cfg.operating, cfg.detector), duration_ps, dark_rng);

  OrderedEmitter emitter(sink, photons.pulse_count(), photons.period_ps(),
                         cfg.tdc_resolution_ps, stats);
  stats.pulses = photons.pulse_count();

  QuenchCircuit circuit(cfg.mode, cfg.timing);

  std::priority_queue<QueuedEvent, std::vector<QueuedEvent>, LaterEvent> queue;
  std::uint64_t seq = 0;

  auto push = [&](double t, EvType type, CircuitEvent timer,
                  std::uint64_t gen) {
    queue.push({t, priority_of(type), seq++, type, timer, gen, 0.0});
  };
  auto push_carrier = [&](double t, EvType type) {
    queue.push({t, priority_of(type), seq++, type, CircuitEvent::GateRise, 0,
                t});
  };
  auto schedule = [&](const std::optional<ScheduledEvent>& s) {
    if (s) push(s->time_ps, EvType::CircuitTimer, s->event, s->generation);
  };

  auto feed_photon = [&]() {
    if (auto t = photons.next()) {
      push_carrier(*t, EvType::Photon);
      ++stats.photons;
    }
  };
  auto feed_dark = [&]() {
    if (auto t = dark.next()) {
      push_carrier(*t, EvType::Dark);
      ++stats.dark_carriers;
    }
  };

  feed_photon();
  feed_dark();

  std::uint64_t next_gate = 0;
  if (cfg.mode != Mode::FreeRunning) {
    push(0.0, EvType::GateRise, CircuitEvent::GateRise, 0);
  }

  double pde_val = pde(cfg.operating, cfg.detector);
  AfterpulseIntensity traps = afterpulse_intensity(cfg.operating, cfg.detector);
  double tau_trap_ps = traps.tau_ns * 1000.0;

  auto avalanche = [&](double t) {
    ++stats.avalanches;
    double offset = sample_response_delay_ps(cfg.operating, cfg.detector,
                                             resp_rng);
    double sys_sigma = cfg.source.system_jitter_fwhm_ps / kFwhmPerSigma;
    offset += normal(sys_rng, 0.0, sys_sigma);
    // the output edge cannot precede the avalanche that caused it
    if (offset < 0) offset = 0;
    emitter.add_detection(apply_tdc(t + offset, cfg.tdc_resolution_ps));

    std::uint64_t n = poisson(trap_rng, traps.expected_traps);
    for (std::uint64_t i = 0; i < n; ++i) {
      double release = t + exponential(trap_rng, tau_trap_ps);
      if (release < duration_ps) {
        push_carrier(release, EvType::TrapRelease);
        ++stats.trap_releases;
      }
    }

    schedule(circuit.begin_avalanche(t));
  };

  auto on_carrier = [&](double t, EvType type) {
    if (type == EvType::Photon) {
      if (uniform01(thin_rng) >= pde_val) {
        ++stats.photons_undetected;
        return;
      }
    }
    if (circuit.phase() != Phase::Armed) {
      ++stats.carriers_while_dead;
      return;
    }
    avalanche(t);
  };

  while (!queue.empty()) {
    QueuedEvent ev = queue.top();
    queue.pop();
    if (ev.time_ps >= duration_ps) break;

    emitter.flush_below(apply_tdc(ev.time_ps, cfg.tdc_resolution_ps));

    switch (ev.type) {
      case EvType::GateRise: {
        schedule(circuit.apply(CircuitEvent::GateRise, ev.time_ps));
        double fall = ev.time_ps + cfg.gate->width_ns * 1000.0;
        if (fall < duration_ps) push(fall, EvType::GateFall, CircuitEvent::GateFall, 0);
        break;
      }
      case EvType::GateFall: {
        schedule(circuit.apply(CircuitEvent::GateFall, ev.time_ps));
        ++next_gate;
        double rise = static_cast<double>(next_gate) * cfg.gate->period_ns * 1000.0;
        if (rise < duration_ps) push(rise, EvType::GateRise, CircuitEvent::GateRise, 0);
        break;
      }
      case EvType::CircuitTimer:
        if (ev.generation != circuit.generation()) break;  // cancelled
        schedule(circuit.apply(ev.timer, ev.time_ps));
        break;
      case EvType::Photon:
        feed_photon();
        on_carrier(ev.payload, EvType::Photon);
        break;
      case EvType::Dark:
        feed_dark();
        on_carrier(ev.payload, EvType::Dark);
        break;
      case EvType::TrapRelease:
        on_carrier(ev.payload, EvType::TrapRelease);
        break;
    }
  }

  emitter.finish();
  return stats;
}

}  // namespace spdsim
