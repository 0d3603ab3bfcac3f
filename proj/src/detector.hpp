#pragma once

#include <random>
#include <vector>

namespace spdsim {

// Bias above breakdown and chip temperature. Everything the detector model
// produces is a function of these two numbers.
struct OperatingPoint {
  double v_ex = 45.0;        // excess bias, volts above breakdown
  double temperature = 268.0;  // kelvin
};

// Throws std::domain_error outside 0 <= v_ex <= 50, 250 <= T <= 300.
void validate(const OperatingPoint& op);

struct JitterKnot {
  double v_ex;     // volts
  double fwhm_ps;  // detector-only response FWHM at that bias
};

struct DetectorParams {
  DetectorParams();  // fills the calibrated defaults

  double v_br;      // breakdown voltage, volts
  double eta_max;   // saturation value of the detection efficiency
  double v_sat;     // volts; scale of the efficiency saturation

  double dcr_ref;   // dark counts per second at (45 V, 268 K)
  double alpha_dcr; // 1/V
  double beta_dcr;  // 1/K

  double pap_ref;   // afterpulse probability anchor at (45 V, 268 K)
  double gamma_ap;  // 1/K
  double kappa_ap;  // 1/V
  double n_ref;     // mean trapped carriers per avalanche at (45 V, 268 K)
  double tau_trap_ns;

  // Piecewise-linear detector-only FWHM versus excess bias, clamped outside
  // the knot range. Knots must be sorted by v_ex.
  std::vector<JitterKnot> jitter_knots;
  double frac_tail;    // weight of the exponential tail component
  double tau_tail_ps;  // tail time constant

  double delay0_ns;            // propagation delay at zero excess bias
  double delay_slope_ns_per_v; // delay decreases linearly with bias
};

// Photon detection probability in (0, 1).
double pde(const OperatingPoint& op, const DetectorParams& p);

// Excess bias at which pde() equals eta. Inverse of the saturating law.
double bias_for_pde(double eta, const DetectorParams& p);

// Dark counts per second.
double dark_rate(const OperatingPoint& op, const DetectorParams& p);

struct AfterpulseIntensity {
  double expected_traps;  // mean carriers trapped per avalanche
  double tau_ns;          // exponential release time constant
};

AfterpulseIntensity afterpulse_intensity(const OperatingPoint& op,
                                         const DetectorParams& p);

// Gaussian core width of the single-photon response at a given bias.
double sigma_core_ps(double v_ex, const DetectorParams& p);

// Deterministic part of the response delay.
double response_delay_ns(double v_ex, const DetectorParams& p);

// One sample of avalanche-onset -> output-edge delay, in picoseconds:
// deterministic delay plus a Gaussian core, with probability frac_tail
// widened by an exponential (right side only).
double sample_response_delay_ps(const OperatingPoint& op,
                                const DetectorParams& p,
                                std::mt19937_64& rng);

}  // namespace spdsim
