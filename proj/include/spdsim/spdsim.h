/* C interface to the single-photon detector simulator.
 *
 * All functions return spd_status; anything but SPD_OK leaves a
 * human-readable detail string in spd_last_error() (thread local).
 * Objects created here must be released with the matching _free call.
 */

#ifndef SPDSIM_H
#define SPDSIM_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum spd_status {
  SPD_OK = 0,
  SPD_ERR_INVALID_ARGUMENT = 1, /* null pointer, bad enum, bad numeric input */
  SPD_ERR_PARSE = 2,            /* unknown key or malformed value */
  SPD_ERR_VALIDATION = 3,       /* keys parse but the configuration is inconsistent */
  SPD_ERR_NO_BRACKET = 4,       /* working-point curves do not cross */
  SPD_ERR_IO = 5,               /* file cannot be read or written */
  SPD_ERR_SATURATED = 6,        /* photon rate at or above the pulse rate */
  SPD_ERR_NO_SYNC = 7,          /* timestamp data carries no sync records */
  SPD_ERR_BAD_HISTOGRAM = 8,    /* width undefined for this histogram */
  SPD_ERR_INTERNAL = 9
} spd_status;

typedef struct spd_config spd_config;   /* full run configuration */
typedef struct spd_records spd_records; /* timestamp record list */

typedef struct spd_report {
  double pde;
  double pde_err;
  double dcr_cps;
  double dcr_err;
  double p_ap;
  double p_ap_err;
  double fwhm_ps;      /* meaningful only when fwhm_valid != 0 */
  double r_ph_cps;     /* dark-corrected photon coincidence rate */
  double r_ap_cps;
  unsigned long long counts_total;
  int fwhm_valid;
  int clamped;         /* dark expectation exceeded raw counts somewhere */
} spd_report;

typedef struct spd_working_point {
  double v_gs;
  double v_s;
  double i1;
  double residual;
} spd_working_point;

const char* spd_version(void);
const char* spd_status_name(spd_status s);

/* Detail for the most recent failure on this thread. Never NULL. */
const char* spd_last_error(void);

/* --- configuration -------------------------------------------------------*/

/* Calibrated defaults. */
spd_status spd_config_create(spd_config** out);
spd_status spd_config_parse(const char* text, spd_config** out);
spd_status spd_config_load(const char* path, spd_config** out);
spd_status spd_config_clone(const spd_config* cfg, spd_config** out);

spd_status spd_config_set(spd_config* cfg, const char* key, const char* value);
/* Writes the value into buf (NUL terminated). Fails with
 * SPD_ERR_INVALID_ARGUMENT if the buffer is too small. */
spd_status spd_config_get(const spd_config* cfg, const char* key, char* buf,
                          size_t buf_size);
spd_status spd_config_validate(const spd_config* cfg);
void spd_config_free(spd_config* cfg);

/* --- simulation ----------------------------------------------------------*/

spd_status spd_simulate(const spd_config* cfg, spd_records** out);
/* Streams records straight to a timestamp file with a config-echo header. */
spd_status spd_simulate_to_file(const spd_config* cfg, const char* path);

spd_status spd_records_load(const char* path, spd_records** out,
                            spd_config** config_out /* may be NULL */);
spd_status spd_records_write(const spd_records* recs, const spd_config* cfg,
                             const char* path);
size_t spd_records_count(const spd_records* recs);
/* kind_out: 0 detection, 1 sync pulse. */
spd_status spd_records_get(const spd_records* recs, size_t index,
                           long long* time_ps_out, int* kind_out);
void spd_records_free(spd_records* recs);

/* --- characterization ----------------------------------------------------*/

/* dark_rate_cps < 0 means "no dark run available"; the dark correction and
 * the reported dcr are zero then. */
spd_status spd_characterize(const spd_records* recs, const spd_config* cfg,
                            double dark_rate_cps, double dark_rate_err,
                            spd_report* out);
spd_status spd_estimate_dcr(const spd_records* recs, double duration_s,
                            double* dcr_cps_out, double* dcr_err_out);
spd_status spd_report_write_csv(const spd_report* rep, const spd_config* cfg,
                                const char* path);
/* Folded arrival-time histogram of the records, as bin_start_ps,count. */
spd_status spd_histogram_write_csv(const spd_records* recs,
                                   const spd_config* cfg, const char* path);

/* --- circuit -------------------------------------------------------------*/

spd_status spd_working_point_solve(const spd_config* cfg, double tol_v,
                             spd_working_point* out);
/* scenario: "free-running-pulse" or "gate-cycle". */
spd_status spd_waveform(const spd_config* cfg, const char* scenario,
                        const char* path);

/* --- sweep ---------------------------------------------------------------*/

/* Characterization grid over sweep.v_ex x sweep.temperature_k, written as
 * CSV. jobs <= 0 picks the hardware thread count. */
spd_status spd_sweep(const spd_config* cfg, const char* path, int jobs);

#ifdef __cplusplus
}
#endif

#endif /* SPDSIM_H */
