#include "characterize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "errors.hpp"

namespace spdsim {

double estimate_pde(double r_ph, double mu, double f) {
  if (!(mu > 0)) throw std::invalid_argument("mu must be positive");
  if (!(f > 0)) throw std::invalid_argument("rep rate must be positive");
  if (r_ph < 0) throw std::invalid_argument("negative photon rate");
  double q = r_ph / f;
  if (q >= 1.0)
    throw SaturationError("photon rate at or above the pulse rate");
  return -std::log1p(-q) / mu;
}

double estimate_pde_stderr(double r_ph, double mu, double f,
                           double duration_s) {
  double q = r_ph / f;
  double n = f * duration_s;
  if (n <= 0 || q <= 0 || q >= 1) return 0.0;
  // delta method through eta = -ln(1-q)/mu
  return std::sqrt(q * (1.0 - q) / n) / (mu * (1.0 - q));
}

Classified classify_events(std::span<const TimestampRecord> records,
                           double rep_rate_hz, double window_ps,
                           std::int64_t bin_width_ps) {
  if (!(rep_rate_hz > 0)) throw std::invalid_argument("rep rate must be positive");
  if (!(bin_width_ps > 0)) throw std::invalid_argument("bin width must be positive");
  double period_ps = 1e12 / rep_rate_hz;
  if (!(window_ps > 0 && window_ps < period_ps))
    throw std::invalid_argument("window must lie in (0, pulse period)");

  const TimestampRecord* sync0 = nullptr;
  for (const auto& r : records) {
    if (r.kind == RecordKind::SyncPulse) {
      sync0 = &r;
      break;
    }
  }
  if (!sync0) throw NoSyncError("no sync records in the input");

  Classified out;
  out.folded.origin_ps = 0.0;
  out.folded.bin_width_ps = static_cast<double>(bin_width_ps);
  auto n_bins = static_cast<std::size_t>(
      std::ceil(period_ps / static_cast<double>(bin_width_ps)));
  out.folded.counts.assign(n_bins, 0);

  std::vector<double> folds;
  for (const auto& r : records) {
    if (r.kind != RecordKind::Detection) continue;
    double fold = std::fmod(static_cast<double>(r.time_ps - sync0->time_ps),
                            period_ps);
    if (fold < 0) fold += period_ps;
    folds.push_back(fold);
    auto bin = static_cast<std::size_t>(fold / static_cast<double>(bin_width_ps));
    if (bin >= n_bins) bin = n_bins - 1;
    ++out.folded.counts[bin];
  }

  std::size_t peak = 0;
  std::uint64_t best = 0;
  for (std::size_t i = 0; i < out.folded.counts.size(); ++i) {
    if (out.folded.counts[i] > best) {
      best = out.folded.counts[i];
      peak = i;
    }
  }
  out.peak_ps = out.folded.center(peak);

  double half_window = 0.5 * window_ps;
  for (double fold : folds) {
    double d = std::fabs(fold - out.peak_ps);
    d = std::min(d, period_ps - d);
    if (d <= half_window) ++out.photon_counts;
    else ++out.other_counts;
  }
  return out;
}

AfterpulseEstimate estimate_afterpulse(std::uint64_t photon_counts,
                                       std::uint64_t other_counts,
                                       double dark_rate_cps, double duration_s,
                                       double window_ps, double rep_rate_hz) {
  if (!(duration_s > 0)) throw std::invalid_argument("duration must be positive");
  if (!(rep_rate_hz > 0)) throw std::invalid_argument("rep rate must be positive");
  if (dark_rate_cps < 0) throw std::invalid_argument("negative dark rate");

  double period_ps = 1e12 / rep_rate_hz;
  double window_fraction = window_ps / period_ps;

  // Dark counts land uniformly over the period; share them between the
  // window and the rest of it.
  double dark_in_window = dark_rate_cps * duration_s * window_fraction;
  double dark_outside = dark_rate_cps * duration_s * (1.0 - window_fraction);

  AfterpulseEstimate out;
  double ph = static_cast<double>(photon_counts) - dark_in_window;
  double ap = static_cast<double>(other_counts) - dark_outside;
  if (ph < 0) {
    ph = 0;
    out.clamped = true;
  }
  if (ap < 0) {
    ap = 0;
    out.clamped = true;
  }
  out.r_ph_cps = ph / duration_s;
  out.r_ap_cps = ap / duration_s;

  if (out.r_ph_cps > 0) {
    out.p_ap.value = out.r_ap_cps / out.r_ph_cps;
    double var_ap = static_cast<double>(other_counts);
    double var_ph = static_cast<double>(photon_counts);
    double d_ap = std::sqrt(var_ap) / duration_s;
    double d_ph = std::sqrt(var_ph) / duration_s;
    out.p_ap.err = std::sqrt(
        (d_ap * d_ap) / (out.r_ph_cps * out.r_ph_cps) +
        (out.r_ap_cps * out.r_ap_cps * d_ph * d_ph) /
            (out.r_ph_cps * out.r_ph_cps * out.r_ph_cps * out.r_ph_cps));
  }
  return out;
}

Uncertain estimate_dcr(std::span<const TimestampRecord> records,
                       double duration_s) {
  if (!(duration_s > 0)) throw std::invalid_argument("duration must be positive");
  std::uint64_t n = 0;
  for (const auto& r : records)
    if (r.kind == RecordKind::Detection) ++n;
  Uncertain u;
  u.value = static_cast<double>(n) / duration_s;
  u.err = std::sqrt(static_cast<double>(n)) / duration_s;
  return u;
}

double fwhm(const Histogram& h) {
  if (h.counts.empty()) throw HistogramError("empty histogram");

  std::size_t peak = 0;
  std::uint64_t best = 0;
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    if (h.counts[i] > best) {
      best = h.counts[i];
      peak = i;
    }
  }
  if (best == 0) throw HistogramError("histogram has no counts");

  double half = static_cast<double>(best) / 2.0;

  auto interpolate = [&](std::size_t inside, std::size_t outside) {
    double n_in = static_cast<double>(h.counts[inside]);
    double n_out = static_cast<double>(h.counts[outside]);
    double t = (n_in - half) / (n_in - n_out);
    return h.center(inside) + t * (h.center(outside) - h.center(inside));
  };

  double left = 0.0;
  bool found = false;
  for (std::size_t i = peak; i-- > 0;) {
    if (static_cast<double>(h.counts[i]) < half) {
      left = interpolate(i + 1, i);
      found = true;
      break;
    }
  }
  if (!found) throw HistogramError("no half-maximum crossing left of the peak");

  double right = 0.0;
  found = false;
  for (std::size_t i = peak + 1; i < h.counts.size(); ++i) {
    if (static_cast<double>(h.counts[i]) < half) {
      right = interpolate(i - 1, i);
      found = true;
      break;
    }
  }
  if (!found) throw HistogramError("no half-maximum crossing right of the peak");

  return right - left;
}

CalibrationReport make_report(std::span<const TimestampRecord> records,
                              const SimConfig& cfg,
                              const CharacterizeParams& params,
                              std::optional<Uncertain> dark) {
  if (!(params.window_ns > 0))
    throw ConfigError(ConfigError::Kind::Validation, "characterize.window_ns",
                      "must be positive");
  if (params.bin_width_ps <= 0 ||
      params.bin_width_ps % cfg.tdc_resolution_ps != 0)
    throw ConfigError(ConfigError::Kind::Validation,
                      "characterize.bin_width_ps",
                      "must be a positive multiple of tdc.resolution_ps");

  double window_ps = params.window_ns * 1000.0;
  double f = cfg.source.rep_rate_hz;

  Classified cls = classify_events(records, f, window_ps, params.bin_width_ps);

  double dark_rate_cps = dark ? dark->value : 0.0;
  AfterpulseEstimate ap = estimate_afterpulse(
      cls.photon_counts, cls.other_counts, dark_rate_cps, cfg.duration_s,
      window_ps, f);

  CalibrationReport rep;
  rep.pde.value = estimate_pde(ap.r_ph_cps, cfg.source.mu, f);
  rep.pde.err = estimate_pde_stderr(ap.r_ph_cps, cfg.source.mu, f,
                                    cfg.duration_s);
  rep.dcr_cps = dark ? *dark : Uncertain{};
  rep.p_ap = ap.p_ap;
  rep.r_ph_cps = ap.r_ph_cps;
  rep.r_ap_cps = ap.r_ap_cps;
  rep.clamped = ap.clamped;
  rep.counts_total = cls.photon_counts + cls.other_counts;

  try {
    rep.fwhm_ps = fwhm(cls.folded);
    rep.fwhm_valid = true;
  } catch (const HistogramError&) {
    rep.fwhm_ps = 0.0;
    rep.fwhm_valid = false;
  }
  return rep;
}

}  // namespace spdsim
