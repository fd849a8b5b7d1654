#ifndef DYNUNC_H
#define DYNUNC_H

/*
 * C interface to the dynunc library: deconvolution and uncertainty
 * propagation for dynamic measurements.
 *
 * All objects are opaque handles created and destroyed by the library.
 * Every fallible call returns a dynunc_status; on failure the thread-local
 * message from dynunc_last_error() describes what went wrong. Output
 * handles are written only on DYNUNC_OK. Matrices cross the boundary in
 * row-major order.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DYNUNC_API __declspec(dllexport)
#else
#define DYNUNC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dynunc_status {
  DYNUNC_OK = 0,
  DYNUNC_ERR_INVALID = 1, /* precondition or argument violation */
  DYNUNC_ERR_NUMERIC = 2, /* numerical failure (instability, ill-posedness) */
  DYNUNC_ERR_IO = 3,      /* file access or parse failure */
  DYNUNC_ERR_INTERNAL = 4
} dynunc_status;

DYNUNC_API const char* dynunc_last_error(void);
DYNUNC_API const char* dynunc_version(void);

typedef struct dynunc_ts dynunc_ts;             /* sampled signal + uncertainty */
typedef struct dynunc_spectrum dynunc_spectrum; /* half-spectrum + covariance */
typedef struct dynunc_ampphase dynunc_ampphase; /* amplitude/phase + covariance */
typedef struct dynunc_filter dynunc_filter;     /* digital filter + covariance */
typedef struct dynunc_fresp dynunc_fresp;       /* frequency-response data */
typedef struct dynunc_sos dynunc_sos;           /* second-order-system parameters */

/* ------------------------------------------------------------------ */
/* time series                                                         */
/* ------------------------------------------------------------------ */

DYNUNC_API dynunc_status dynunc_ts_create(const double* values, size_t n, double dt,
                                          double t0, dynunc_ts** out);
DYNUNC_API dynunc_status dynunc_ts_set_white_noise(dynunc_ts* ts, double sigma);
DYNUNC_API dynunc_status dynunc_ts_set_pointwise_unc(dynunc_ts* ts, const double* sigmas,
                                                     size_t n);
DYNUNC_API dynunc_status dynunc_ts_set_covariance(dynunc_ts* ts, const double* cov,
                                                  size_t n);
DYNUNC_API size_t dynunc_ts_size(const dynunc_ts* ts);
DYNUNC_API double dynunc_ts_dt(const dynunc_ts* ts);
DYNUNC_API double dynunc_ts_t0(const dynunc_ts* ts);
DYNUNC_API dynunc_status dynunc_ts_values(const dynunc_ts* ts, double* out, size_t n);
DYNUNC_API dynunc_status dynunc_ts_std(const dynunc_ts* ts, double* out, size_t n);
DYNUNC_API dynunc_status dynunc_ts_covariance(const dynunc_ts* ts, double* out, size_t n);
DYNUNC_API void dynunc_ts_free(dynunc_ts* ts);

DYNUNC_API dynunc_status dynunc_ts_read_csv(const char* path, dynunc_ts** out);
DYNUNC_API dynunc_status dynunc_ts_write_csv(const char* path, const dynunc_ts* ts);

/* ------------------------------------------------------------------ */
/* spectra                                                             */
/* ------------------------------------------------------------------ */

DYNUNC_API dynunc_status dynunc_spectrum_create(const double* freqs, const double* re,
                                                const double* im, size_t bins,
                                                int nyquist_bin, dynunc_spectrum** out);
DYNUNC_API dynunc_status dynunc_spectrum_set_covariance(dynunc_spectrum* s,
                                                        const double* cov, size_t dim);
DYNUNC_API size_t dynunc_spectrum_bins(const dynunc_spectrum* s);
DYNUNC_API dynunc_status dynunc_spectrum_freqs(const dynunc_spectrum* s, double* out,
                                               size_t bins);
DYNUNC_API dynunc_status dynunc_spectrum_values(const dynunc_spectrum* s, double* re,
                                                double* im, size_t bins);
DYNUNC_API dynunc_status dynunc_spectrum_covariance(const dynunc_spectrum* s, double* out,
                                                    size_t dim);
DYNUNC_API void dynunc_spectrum_free(dynunc_spectrum* s);

DYNUNC_API dynunc_status dynunc_spectrum_read_csv(const char* path, int nyquist_bin,
                                                  dynunc_spectrum** out);
DYNUNC_API dynunc_status dynunc_spectrum_write_csv(const char* path,
                                                   const dynunc_spectrum* s);

/* ------------------------------------------------------------------ */
/* DFT with uncertainty                                                */
/* ------------------------------------------------------------------ */

DYNUNC_API dynunc_status dynunc_gum_dft(const dynunc_ts* x, dynunc_spectrum** out);
DYNUNC_API dynunc_status dynunc_gum_idft(const dynunc_spectrum* f, size_t nout,
                                         dynunc_ts** out);
DYNUNC_API dynunc_status dynunc_dft_multiply(const dynunc_spectrum* x,
                                             const dynunc_spectrum* h,
                                             dynunc_spectrum** out);
DYNUNC_API dynunc_status dynunc_dft_deconv(const dynunc_spectrum* x,
                                           const dynunc_spectrum* h, double mag_floor,
                                           dynunc_spectrum** out);
DYNUNC_API dynunc_status dynunc_dft_transferfunction(const dynunc_ts* yref,
                                                     const dynunc_ts* xmeas,
                                                     double mag_floor,
                                                     dynunc_spectrum** out);

DYNUNC_API dynunc_status dynunc_ampphase_create(const double* freqs, const double* amplitude,
                                                const double* phase, size_t bins,
                                                int nyquist_bin, dynunc_ampphase** out);
DYNUNC_API dynunc_status dynunc_ampphase_set_covariance(dynunc_ampphase* ap,
                                                        const double* cov, size_t dim);
DYNUNC_API size_t dynunc_ampphase_bins(const dynunc_ampphase* ap);
DYNUNC_API dynunc_status dynunc_ampphase_values(const dynunc_ampphase* ap, double* amplitude,
                                                double* phase, size_t bins);
DYNUNC_API dynunc_status dynunc_ampphase_covariance(const dynunc_ampphase* ap, double* out,
                                                    size_t dim);
DYNUNC_API void dynunc_ampphase_free(dynunc_ampphase* ap);

DYNUNC_API dynunc_status dynunc_amp_phase_to_dft(const dynunc_ampphase* ap,
                                                 dynunc_spectrum** out);
DYNUNC_API dynunc_status dynunc_dft_to_amp_phase(const dynunc_spectrum* f, int unwrap,
                                                 dynunc_ampphase** out);

/* ------------------------------------------------------------------ */
/* digital filters                                                     */
/* ------------------------------------------------------------------ */

DYNUNC_API dynunc_status dynunc_filter_create(const double* b, size_t nb, const double* a,
                                              size_t na, int delay_n0, dynunc_filter** out);
DYNUNC_API dynunc_status dynunc_filter_set_covariance(dynunc_filter* f, const double* cov,
                                                      size_t dim);
DYNUNC_API size_t dynunc_filter_nb(const dynunc_filter* f);
DYNUNC_API size_t dynunc_filter_na(const dynunc_filter* f);
DYNUNC_API int dynunc_filter_delay(const dynunc_filter* f);
DYNUNC_API dynunc_status dynunc_filter_coeffs(const dynunc_filter* f, double* b, size_t nb,
                                              double* a, size_t na);
DYNUNC_API void dynunc_filter_free(dynunc_filter* f);

DYNUNC_API dynunc_status dynunc_filter_read_json(const char* path, dynunc_filter** out);
DYNUNC_API dynunc_status dynunc_filter_write_json(const char* path, const dynunc_filter* f);

DYNUNC_API dynunc_status dynunc_fir_unc_filter(const dynunc_ts* x, const dynunc_filter* f,
                                               dynunc_ts** out);
DYNUNC_API dynunc_status dynunc_iir_ss_filter(const dynunc_ts* x, const dynunc_filter* f,
                                              dynunc_ts** out);
DYNUNC_API dynunc_status dynunc_smc_filter(const dynunc_ts* x, const dynunc_filter* f,
                                           long draws, size_t block, uint64_t seed,
                                           dynunc_ts** out);
DYNUNC_API dynunc_status dynunc_isstable(const dynunc_filter* f, int* stable);
DYNUNC_API dynunc_status dynunc_group_delay(const dynunc_filter* f, const double* freqs,
                                            size_t n, double fs, double* out);

/* Pointwise bound on the dynamic deconvolution error. h_re/h_im sample the
 * system response on the spectrum's grid; w1/w2 (rad/s) split the reported
 * contributions. The bound is constant over the record; it is returned once. */
DYNUNC_API dynunc_status dynunc_dynamic_error_bound(const dynunc_filter* f,
                                                    const double* h_re, const double* h_im,
                                                    const dynunc_spectrum* x, double w1,
                                                    double w2, double* bound);

/* ------------------------------------------------------------------ */
/* filter design                                                       */
/* ------------------------------------------------------------------ */

DYNUNC_API dynunc_status dynunc_fresp_create(const double* freqs, const double* re,
                                             const double* im, size_t n,
                                             dynunc_fresp** out);
DYNUNC_API dynunc_status dynunc_fresp_set_covariance(dynunc_fresp* h, const double* cov,
                                                     size_t dim);
DYNUNC_API size_t dynunc_fresp_size(const dynunc_fresp* h);
DYNUNC_API dynunc_status dynunc_fresp_values(const dynunc_fresp* h, double* freqs,
                                             double* re, double* im, size_t n);
DYNUNC_API void dynunc_fresp_free(dynunc_fresp* h);
DYNUNC_API dynunc_status dynunc_fresp_read_csv(const char* path, dynunc_fresp** out);
DYNUNC_API dynunc_status dynunc_fresp_write_csv(const char* path, const dynunc_fresp* h);

/* Least-squares FIR fit to the delayed inverse (inverse != 0) or forward
 * response. weights may be NULL (uniform). mc_draws > 0 with response
 * covariance present adds a coefficient covariance by Monte Carlo refits. */
DYNUNC_API dynunc_status dynunc_lsfir(const dynunc_fresp* h, int order, int delay_n0,
                                      double fs, const double* weights, int inverse,
                                      int mc_draws, uint64_t seed, double* residual,
                                      dynunc_filter** out);
DYNUNC_API dynunc_status dynunc_lsiir(const dynunc_fresp* h, int nb, int na, int delay_n0,
                                      double fs, int inverse, int max_iter,
                                      double* residual, int* stabilized,
                                      dynunc_filter** out);
DYNUNC_API dynunc_status dynunc_kaiser_lowpass(int order, double cutoff_hz, double fs,
                                               double beta, dynunc_filter** out);
DYNUNC_API dynunc_status dynunc_savgol(const double* x, size_t n, int window, int polyorder,
                                       int deriv, double dt, double* out);

/* ------------------------------------------------------------------ */
/* second-order sensor model                                           */
/* ------------------------------------------------------------------ */

DYNUNC_API dynunc_status dynunc_sos_create(double s0, double delta, double f0,
                                           const double* cov3x3_or_null, dynunc_sos** out);
DYNUNC_API dynunc_status dynunc_sos_params(const dynunc_sos* p, double* s0, double* delta,
                                           double* f0);
DYNUNC_API dynunc_status dynunc_sos_covariance(const dynunc_sos* p, double* cov3x3);
DYNUNC_API void dynunc_sos_free(dynunc_sos* p);

DYNUNC_API dynunc_status dynunc_sos_freq_resp(const dynunc_sos* p, const double* freqs,
                                              size_t n, double* re, double* im);
/* Continuous transfer function: num has 1 coefficient, den has 3
 * (descending powers of s). */
DYNUNC_API dynunc_status dynunc_sos_phys2filter(const dynunc_sos* p, double* num1,
                                                double* den3);
DYNUNC_API dynunc_status dynunc_sos_mc_response(const dynunc_sos* p, const double* freqs,
                                                size_t n, long draws, uint64_t seed,
                                                dynunc_fresp** out);
DYNUNC_API dynunc_status dynunc_fit_sos(const dynunc_fresp* s, int weighted, long mc_draws,
                                        uint64_t seed, dynunc_sos** out);
DYNUNC_API dynunc_status dynunc_bilinear(const double* num, size_t nnum, const double* den,
                                         size_t nden, double fs, double prewarp_hz,
                                         dynunc_filter** out);

/* ------------------------------------------------------------------ */
/* test signals                                                        */
/* ------------------------------------------------------------------ */

DYNUNC_API dynunc_status dynunc_signal_shock(double t0, double sigma, double m0, double fs,
                                             double duration, dynunc_ts** out);
DYNUNC_API dynunc_status dynunc_signal_gauss(double t0, double sigma, double m0, double fs,
                                             double duration, dynunc_ts** out);
DYNUNC_API dynunc_status dynunc_signal_rect(double t0, double width, double height,
                                            double fs, double duration, dynunc_ts** out);
DYNUNC_API dynunc_status dynunc_signal_squarepulse(double height, int count, double fs,
                                                   double duration, dynunc_ts** out);
DYNUNC_API dynunc_status dynunc_signal_sine(double amplitude, double frequency, double phase,
                                            double fs, double duration, dynunc_ts** out);
DYNUNC_API dynunc_status dynunc_add_noise(const dynunc_ts* x, double sigma, uint64_t seed,
                                          dynunc_ts** out);

/* ------------------------------------------------------------------ */
/* Monte Carlo propagation                                             */
/* ------------------------------------------------------------------ */

/* Model callback: fill y (length ny) from x (length nx); return nonzero to
 * signal failure for this draw. */
typedef int (*dynunc_model_fn)(const double* x, size_t nx, double* y, size_t ny, void* ctx);

DYNUNC_API dynunc_status dynunc_mc_propagate(dynunc_model_fn model, void* ctx,
                                             const double* est, size_t nx,
                                             const double* cov, size_t ny_out, long draws,
                                             uint64_t seed, double* mean_out,
                                             double* std_out);

/* ------------------------------------------------------------------ */
/* pipelines                                                           */
/* ------------------------------------------------------------------ */

/* Runs a pipeline config file (demo_ringing, shock, compensate, hydrophone,
 * ibp). outdir_or_null overrides [pipeline] outdir; seed_or_zero overrides
 * [pipeline] seed. */
DYNUNC_API dynunc_status dynunc_pipeline_run(const char* config_path,
                                             const char* outdir_or_null,
                                             uint64_t seed_or_zero);

#ifdef __cplusplus
}
#endif

#endif /* DYNUNC_H */
