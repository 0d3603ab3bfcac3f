#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "engine.hpp"

namespace spdsim {

struct Histogram {
  double origin_ps = 0.0;
  double bin_width_ps = 10.0;
  std::vector<std::uint64_t> counts;

  double center(std::size_t i) const {
    return origin_ps + (static_cast<double>(i) + 0.5) * bin_width_ps;
  }
};

struct CharacterizeParams {
  double window_ns = 2.0;       // photon acceptance window around the peak
  std::int64_t bin_width_ps = 10;
};

// Detection probability per photon from the photon-coincidence rate, a mean
// photon number and the pulse rate. Exact inversion of the Poisson pile-up:
// eta = -ln(1 - r_ph/f) / mu. Throws SaturationError for r_ph >= f.
double estimate_pde(double r_ph, double mu, double f);

// Binomial standard error of the estimate above for a run of f*duration
// pulses.
double estimate_pde_stderr(double r_ph, double mu, double f,
                           double duration_s);

struct Classified {
  std::uint64_t photon_counts = 0;
  std::uint64_t other_counts = 0;
  Histogram folded;        // detections folded onto one pulse period
  double peak_ps = 0.0;    // folded peak position (bin center)
};

// Fold detections onto the sync period and split them into in-window
// (photon) and out-of-window (other) populations. The window is centred on
// the histogram peak. Requires at least one sync record and
// window < 1/rep_rate.
Classified classify_events(std::span<const TimestampRecord> records,
                           double rep_rate_hz, double window_ps,
                           std::int64_t bin_width_ps);

struct Uncertain {
  double value = 0.0;
  double err = 0.0;
};

struct AfterpulseEstimate {
  Uncertain p_ap;
  double r_ph_cps = 0.0;  // dark-corrected photon rate
  double r_ap_cps = 0.0;
  bool clamped = false;   // dark expectation exceeded the raw counts
};

// Afterpulse probability per detected photon. Out-of-window counts beyond
// the dark-rate expectation are attributed to afterpulses; both rates are
// referred to the full run duration.
AfterpulseEstimate estimate_afterpulse(std::uint64_t photon_counts,
                                       std::uint64_t other_counts,
                                       double dark_rate_cps, double duration_s,
                                       double window_ps, double rep_rate_hz);

// Dark count rate from a dark run (detections per second).
Uncertain estimate_dcr(std::span<const TimestampRecord> records,
                       double duration_s);

// Full width at half maximum by linear interpolation between bin centers on
// both flanks of the peak. Throws HistogramError when the histogram is
// empty, flat, or never falls below half maximum on either side.
double fwhm(const Histogram& h);

struct CalibrationReport {
  Uncertain pde;
  Uncertain dcr_cps;
  Uncertain p_ap;
  double fwhm_ps = 0.0;
  bool fwhm_valid = false;
  double r_ph_cps = 0.0;
  double r_ap_cps = 0.0;
  std::uint64_t counts_total = 0;
  bool clamped = false;
};

// Run the whole pipeline on one set of records. dark is the measured dark
// rate from a companion dark run; without it the dark correction and the
// reported dcr are zero.
CalibrationReport make_report(std::span<const TimestampRecord> records,
                              const SimConfig& cfg,
                              const CharacterizeParams& params,
                              std::optional<Uncertain> dark);

}  // namespace spdsim
