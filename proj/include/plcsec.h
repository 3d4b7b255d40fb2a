/*
 * plcsec — physical-layer security analysis of broadband power-line links
 * against a radiated-side-channel eavesdropper.
 *
 * C interface of the shared library. All functions are thread-safe; every
 * failure sets a thread-local message retrievable with plcsec_last_error()
 * and is reported through the status code (or a NULL handle for
 * constructors). Arrays are caller-allocated; sizes are in subchannels.
 */

#ifndef PLCSEC_H
#define PLCSEC_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum plcsec_status {
    PLCSEC_OK = 0,
    PLCSEC_ERR_INVALID_ARGUMENT = 1,
    PLCSEC_ERR_IO = 2,
    PLCSEC_ERR_FORMAT = 3,
    PLCSEC_ERR_NO_CONVERGENCE = 4,
    PLCSEC_ERR_INTERNAL = 5
} plcsec_status;

const char* plcsec_version(void);

/* Message for the most recent failure on the calling thread ("" if none). */
const char* plcsec_last_error(void);

/* Frees strings returned by this library. */
void plcsec_string_free(char* s);

/* ------------------------------------------------------------------ *
 * Experiment configuration (opaque handle)
 *
 * A config describes grids, channel families, sweep axes, the ensemble
 * size, the master seed and output locations. Constructors apply the
 * PLCSEC_OUT_DIR / PLCSEC_THREADS environment overrides; the setters below
 * take precedence over both the file values and the environment.
 * ------------------------------------------------------------------ */

typedef struct plcsec_config plcsec_config;

plcsec_config* plcsec_config_default(void);
plcsec_config* plcsec_config_from_json(const char* json_text);
plcsec_config* plcsec_config_from_json_file(const char* path);
void plcsec_config_free(plcsec_config* cfg);

plcsec_status plcsec_config_set_seed(plcsec_config* cfg, uint64_t seed);
plcsec_status plcsec_config_set_out_dir(plcsec_config* cfg, const char* dir);
plcsec_status plcsec_config_set_threads(plcsec_config* cfg, int threads);
plcsec_status plcsec_config_set_ensemble_dir(plcsec_config* cfg, const char* dir);

/* Full configuration as a JSON string (free with plcsec_string_free). */
char* plcsec_config_to_json(const plcsec_config* cfg);

/* Hash of the scientific content (grid, families, sweeps, seed, size);
 * excludes out_dir/threads/ensemble_dir. Embedded in every CSV header. */
plcsec_status plcsec_config_hash(const plcsec_config* cfg, uint64_t* hash_out);

/* ------------------------------------------------------------------ *
 * Batch commands (same behavior as the CLI subcommands)
 * ------------------------------------------------------------------ */

plcsec_status plcsec_run_generate(const plcsec_config* cfg);
plcsec_status plcsec_run_calibrate(const plcsec_config* cfg);
plcsec_status plcsec_run_sweep_rate(const plcsec_config* cfg);
plcsec_status plcsec_run_sweep_outage_r(const plcsec_config* cfg);
plcsec_status plcsec_run_sweep_outage_pt(const plcsec_config* cfg);
plcsec_status plcsec_run_stats(const plcsec_config* cfg);

/* ------------------------------------------------------------------ *
 * Direct numerics
 * ------------------------------------------------------------------ */

plcsec_status plcsec_dbm_to_watts(double dbm, double* watts_out);
plcsec_status plcsec_watts_to_dbm(double watts, double* dbm_out);

/* Water-filling over channel gains g_k = |H_k|^2 / P_noise_k. powers_out
 * receives n entries summing to total_power_w; water_level_out may be NULL. */
plcsec_status plcsec_waterfill(const double* gains, size_t n, double total_power_w,
                               double* powers_out, double* water_level_out);

/* Equal split over active bins (mask of n bytes; NULL = all active). */
plcsec_status plcsec_uniform_allocation(size_t n, double total_power_w,
                                        const uint8_t* active_mask, double* powers_out);

/* sum_k log2(1 + P_k |H_k|^2 / P_noise_k), bits per block use. */
plcsec_status plcsec_link_capacity(size_t n, const double* cfr_re, const double* cfr_im,
                                   const double* noise_w, const double* powers_w,
                                   double* bits_out);

/* Normalized multichannel SNR of a channel, in dB. */
plcsec_status plcsec_nsnr_db(size_t n, const double* cfr_re, const double* cfr_im,
                             const double* noise_w, double* nsnr_db_out);

/* Receiver-quality bin of a multichannel SNR: 1, 2 or 3; 0 = out of range. */
int plcsec_classify_bin(double nsnr_db);

/* Achievable secrecy rate of one channel pair under a shared allocation,
 * bits/s/Hz. */
plcsec_status plcsec_secrecy_rate(size_t n, const double* bob_cfr_re, const double* bob_cfr_im,
                                  const double* bob_noise_w, const double* eve_cfr_re,
                                  const double* eve_cfr_im, const double* eve_noise_w,
                                  const double* powers_w, double* rate_out);

/* ------------------------------------------------------------------ *
 * Ensemble files (opaque handle)
 * ------------------------------------------------------------------ */

typedef struct plcsec_ensemble plcsec_ensemble;

#define PLCSEC_SIDE_BOB 0
#define PLCSEC_SIDE_EVE 1
#define PLCSEC_ALLOC_OA 0
#define PLCSEC_ALLOC_UA 1

plcsec_ensemble* plcsec_ensemble_open(const char* path);
void plcsec_ensemble_free(plcsec_ensemble* ens);

int64_t plcsec_ensemble_count(const plcsec_ensemble* ens);
plcsec_status plcsec_ensemble_grid(const plcsec_ensemble* ens, uint32_t* n_subchannels,
                                   double* f_start_hz, double* f_stop_hz);

/* Multichannel-SNR statistics of one side, dB:
 * out[0..4] = max, mean, min, sd, p90. */
plcsec_status plcsec_ensemble_stats(const plcsec_ensemble* ens, int side, double out[5]);

/* Ergodic secrecy rate (bits/s) and its standard error over the ensemble. */
plcsec_status plcsec_ensemble_ergodic_rate(const plcsec_ensemble* ens, int allocator,
                                           double total_power_w, double bandwidth_hz,
                                           double* rate_bps_out, double* stderr_bps_out);

/* Secrecy outage probability with its Wilson-score 95% interval. */
plcsec_status plcsec_ensemble_outage(const plcsec_ensemble* ens, int allocator,
                                     double total_power_w, double target_rate_bps_hz,
                                     double* p_out, double* ci_lo_out, double* ci_hi_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* PLCSEC_H */
