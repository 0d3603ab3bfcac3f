#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "characterize.hpp"
#include "doctest.h"
#include "engine.hpp"
#include "errors.hpp"

using namespace spdsim;

TEST_CASE("pile-up inversion recovers the true efficiency exactly") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> mu_dist(0.05, 5.0);
  std::uniform_real_distribution<double> eta_dist(0.01, 0.99);
  double f = 1e5;
  for (int i = 0; i < 100; ++i) {
    double mu = mu_dist(rng);
    double eta = eta_dist(rng);
    // coincidence rate a detector with efficiency eta would produce
    double r_ph = f * (1.0 - std::exp(-mu * eta));
    double est = estimate_pde(r_ph, mu, f);
    CHECK(std::fabs(est - eta) <= 1e-12 * eta);
  }
}

TEST_CASE("pile-up inversion rejects saturated and nonsense inputs") {
  CHECK_THROWS_AS(estimate_pde(1e5, 1.0, 1e5), SaturationError);
  CHECK_THROWS_AS(estimate_pde(2e5, 1.0, 1e5), SaturationError);
  CHECK_THROWS_AS(estimate_pde(1.0, 0.0, 1e5), std::invalid_argument);
  CHECK_THROWS_AS(estimate_pde(1.0, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(estimate_pde(-1.0, 1.0, 1e5), std::invalid_argument);
  CHECK(estimate_pde(0.0, 1.0, 1e5) == 0.0);
}

TEST_CASE("efficiency standard error shrinks with run length") {
  double e1 = estimate_pde_stderr(5e4, 1.0, 1e5, 1.0);
  double e4 = estimate_pde_stderr(5e4, 1.0, 1e5, 4.0);
  CHECK(e1 > 0.0);
  CHECK(e4 == doctest::Approx(e1 / 2.0).epsilon(1e-12));
  CHECK(estimate_pde_stderr(0.0, 1.0, 1e5, 1.0) == 0.0);
}

TEST_CASE("classification splits window and background populations") {
  double period = 1e7;  // 100 kHz
  std::vector<TimestampRecord> recs;
  for (int k = 0; k < 10; ++k)
    recs.push_back({static_cast<std::int64_t>(k * period), RecordKind::SyncPulse});
  for (int k = 0; k < 5; ++k)
    recs.push_back({static_cast<std::int64_t>(k * period + 5000),
                    RecordKind::Detection});
  for (int k = 0; k < 3; ++k)
    recs.push_back({static_cast<std::int64_t>(k * period + 2500000),
                    RecordKind::Detection});

  Classified cls = classify_events(recs, 1e5, 2000.0, 10);
  CHECK(cls.photon_counts == 5);
  CHECK(cls.other_counts == 3);
  CHECK(cls.peak_ps == doctest::Approx(5005.0));
  CHECK(cls.folded.counts.size() == 1000000);

  std::uint64_t total = 0;
  for (auto c : cls.folded.counts) total += c;
  CHECK(total == 8);
}

TEST_CASE("classification is relative to the first sync marker") {
  double period = 1e7;
  std::int64_t t0 = 777130;
  std::vector<TimestampRecord> recs;
  for (int k = 0; k < 4; ++k)
    recs.push_back({t0 + static_cast<std::int64_t>(k * period),
                    RecordKind::SyncPulse});
  for (int k = 0; k < 4; ++k)
    recs.push_back({t0 + static_cast<std::int64_t>(k * period + 5000),
                    RecordKind::Detection});

  Classified cls = classify_events(recs, 1e5, 2000.0, 10);
  CHECK(cls.photon_counts == 4);
  CHECK(cls.other_counts == 0);
  CHECK(cls.peak_ps == doctest::Approx(5005.0));
}

TEST_CASE("window membership wraps across the period boundary") {
  double period = 1e7;
  std::vector<TimestampRecord> recs;
  recs.push_back({0, RecordKind::SyncPulse});
  // main population just after the sync, echo just before the next one
  for (int i = 0; i < 8; ++i)
    recs.push_back({50, RecordKind::Detection});
  for (int i = 0; i < 7; ++i)
    recs.push_back({static_cast<std::int64_t>(period) - 50,
                    RecordKind::Detection});

  Classified cls = classify_events(recs, 1e5, 2000.0, 10);
  // the late population is only 100 ps from the peak going the short way
  CHECK(cls.photon_counts == 15);
  CHECK(cls.other_counts == 0);
}

TEST_CASE("classification input validation") {
  std::vector<TimestampRecord> recs;
  recs.push_back({100, RecordKind::Detection});
  CHECK_THROWS_AS(classify_events(recs, 1e5, 2000.0, 10), NoSyncError);

  recs.push_back({0, RecordKind::SyncPulse});
  CHECK_THROWS_AS(classify_events(recs, 1e5, 1e7, 10), std::invalid_argument);
  CHECK_THROWS_AS(classify_events(recs, 1e5, 2e7, 10), std::invalid_argument);
  CHECK_THROWS_AS(classify_events(recs, 1e5, 0.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(classify_events(recs, 1e5, 2000.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(classify_events(recs, 0.0, 2000.0, 10), std::invalid_argument);
}

TEST_CASE("afterpulse arithmetic with a dark-rate correction") {
  // window takes 2e-4 of the period, so almost all dark lands outside
  AfterpulseEstimate est =
      estimate_afterpulse(1000, 100, 50.0, 1.0, 2000.0, 1e5);
  double dark_in = 50.0 * 1.0 * 2e-4;
  double dark_out = 50.0 * 1.0 * (1.0 - 2e-4);
  CHECK(est.r_ph_cps == doctest::Approx(1000.0 - dark_in).epsilon(1e-12));
  CHECK(est.r_ap_cps == doctest::Approx(100.0 - dark_out).epsilon(1e-12));
  CHECK(est.p_ap.value ==
        doctest::Approx((100.0 - dark_out) / (1000.0 - dark_in)).epsilon(1e-12));
  CHECK(est.p_ap.err > 0.0);
  CHECK_FALSE(est.clamped);

  // without dark correction the ratio is plain counting
  AfterpulseEstimate raw = estimate_afterpulse(1000, 100, 0.0, 2.0, 2000.0, 1e5);
  CHECK(raw.r_ph_cps == doctest::Approx(500.0));
  CHECK(raw.r_ap_cps == doctest::Approx(50.0));
  CHECK(raw.p_ap.value == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("afterpulse estimate clamps when dark outweighs the counts") {
  AfterpulseEstimate est =
      estimate_afterpulse(1000, 10, 1000.0, 1.0, 2000.0, 1e5);
  CHECK(est.clamped);
  CHECK(est.r_ap_cps == 0.0);
  CHECK(est.p_ap.value == 0.0);

  CHECK_THROWS_AS(estimate_afterpulse(1, 1, 1.0, 0.0, 2000.0, 1e5),
                  std::invalid_argument);
  CHECK_THROWS_AS(estimate_afterpulse(1, 1, -1.0, 1.0, 2000.0, 1e5),
                  std::invalid_argument);
}

TEST_CASE("dark rate estimate is a Poisson count over the duration") {
  std::vector<TimestampRecord> recs = {
      {100, RecordKind::Detection},
      {200, RecordKind::SyncPulse},
      {300, RecordKind::Detection},
      {400, RecordKind::Detection},
  };
  Uncertain u = estimate_dcr(recs, 2.0);
  CHECK(u.value == doctest::Approx(1.5));
  CHECK(u.err == doctest::Approx(std::sqrt(3.0) / 2.0));
  CHECK_THROWS_AS(estimate_dcr(recs, 0.0), std::invalid_argument);
}

TEST_CASE("width of a small hand-checked histogram") {
  Histogram h;
  h.origin_ps = -5.0;
  h.bin_width_ps = 10.0;
  h.counts = {0, 1, 3, 8, 10, 8, 3, 1, 0};
  // half max 5: crossings at 29 and 61 by linear interpolation
  CHECK(fwhm(h) == doctest::Approx(32.0).epsilon(1e-12));

  // scaling every count leaves the width unchanged
  Histogram h7 = h;
  for (auto& c : h7.counts) c *= 7;
  CHECK(fwhm(h7) == doctest::Approx(32.0).epsilon(1e-12));
}

TEST_CASE("width of a finely sampled Gaussian") {
  double sigma = 100.0;
  Histogram h;
  h.origin_ps = -500.0;
  h.bin_width_ps = 10.0;
  h.counts.resize(100);
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    double c = h.center(i);
    h.counts[i] = static_cast<std::uint64_t>(
        std::llround(1e6 * std::exp(-c * c / (2.0 * sigma * sigma))));
  }
  double expected = 2.3548200450309493 * sigma;
  CHECK(std::fabs(fwhm(h) - expected) < 5.0);
}

TEST_CASE("width estimation failure modes") {
  Histogram h;
  CHECK_THROWS_AS(fwhm(h), HistogramError);

  h.counts = {0, 0, 0};
  CHECK_THROWS_AS(fwhm(h), HistogramError);

  h.counts = {5, 5, 5, 5};
  CHECK_THROWS_AS(fwhm(h), HistogramError);

  h.counts = {1, 2, 4, 9};  // rises into the edge, no right flank
  CHECK_THROWS_AS(fwhm(h), HistogramError);

  h.counts = {9, 4, 2, 1};  // peak on the left edge, no left flank
  CHECK_THROWS_AS(fwhm(h), HistogramError);

  h.counts = {0, 1, 9, 1, 0};
  CHECK(fwhm(h) > 0.0);
}

TEST_CASE("report pipeline glues the estimators together") {
  SimConfig cfg;
  cfg.duration_s = 0.01;

  double period = 1e7;
  std::vector<TimestampRecord> recs;
  for (int k = 0; k < 1000; ++k)
    recs.push_back({static_cast<std::int64_t>(k * period), RecordKind::SyncPulse});
  // peaked photon population, 120 counts in each of five adjacent bins
  for (int k = 0; k < 600; ++k)
    recs.push_back({static_cast<std::int64_t>((k % 1000) * period + 91420 +
                                              (k % 5) * 10),
                    RecordKind::Detection});
  // background population half a period away
  for (int k = 0; k < 40; ++k)
    recs.push_back({static_cast<std::int64_t>(k * period + 5000000),
                    RecordKind::Detection});

  CharacterizeParams params;

  SUBCASE("no dark run") {
    CalibrationReport rep = make_report(recs, cfg, params, std::nullopt);
    CHECK(rep.counts_total == 640);
    CHECK(rep.r_ph_cps == doctest::Approx(60000.0));
    CHECK(rep.r_ap_cps == doctest::Approx(4000.0));
    CHECK(rep.p_ap.value == doctest::Approx(rep.r_ap_cps / rep.r_ph_cps));
    CHECK(rep.pde.value ==
          doctest::Approx(estimate_pde(60000.0, cfg.source.mu,
                                       cfg.source.rep_rate_hz)));
    CHECK(rep.dcr_cps.value == 0.0);
    CHECK(rep.fwhm_valid);
    CHECK(rep.fwhm_ps > 0.0);
    CHECK_FALSE(rep.clamped);
  }

  SUBCASE("dark run feeds the correction and passes through") {
    Uncertain dark{1000.0, 10.0};
    CalibrationReport rep = make_report(recs, cfg, params, dark);
    CHECK(rep.dcr_cps.value == 1000.0);
    CHECK(rep.dcr_cps.err == 10.0);
    double wf = 2000.0 / period;
    double r_ph = (600.0 - 1000.0 * 0.01 * wf) / 0.01;
    double r_ap = (40.0 - 1000.0 * 0.01 * (1.0 - wf)) / 0.01;
    CHECK(rep.r_ph_cps == doctest::Approx(r_ph).epsilon(1e-12));
    CHECK(rep.r_ap_cps == doctest::Approx(r_ap).epsilon(1e-12));
    CHECK(rep.p_ap.value == doctest::Approx(r_ap / r_ph).epsilon(1e-12));
  }

  SUBCASE("bin width must sit on the quantisation grid") {
    params.bin_width_ps = 15;  // not a multiple of the 10 ps resolution
    try {
      make_report(recs, cfg, params, std::nullopt);
      FAIL("expected a validation error");
    } catch (const ConfigError& e) {
      CHECK(e.key() == "characterize.bin_width_ps");
    }
    params.bin_width_ps = 10;
    params.window_ns = 0.0;
    try {
      make_report(recs, cfg, params, std::nullopt);
      FAIL("expected a validation error");
    } catch (const ConfigError& e) {
      CHECK(e.key() == "characterize.window_ns");
    }
  }
}
