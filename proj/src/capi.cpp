#include "dynunc/dynunc.h"

#include <cstring>
#include <string>

#include "dynunc/core.hpp"
#include "dynunc/design.hpp"
#include "dynunc/dft.hpp"
#include "dynunc/filter.hpp"
#include "dynunc/io.hpp"
#include "dynunc/mc.hpp"
#include "dynunc/pipeline.hpp"
#include "dynunc/signals.hpp"
#include "dynunc/sos.hpp"

using namespace dynunc;

struct dynunc_ts {
  TimeSeriesU v;
};
struct dynunc_spectrum {
  SpectrumU v;
};
struct dynunc_ampphase {
  AmpPhaseU v;
};
struct dynunc_filter {
  filt::DigitalFilterU v;
};
struct dynunc_fresp {
  design::FreqRespData v;
};
struct dynunc_sos {
  sos::SosParams v;
};

namespace {

thread_local std::string t_last_error;

template <typename Fn>
dynunc_status wrap(Fn&& fn) {
  try {
    fn();
    return DYNUNC_OK;
  } catch (const InvalidArgument& e) {
    t_last_error = e.what();
    return DYNUNC_ERR_INVALID;
  } catch (const NumericError& e) {
    t_last_error = e.what();
    return DYNUNC_ERR_NUMERIC;
  } catch (const IoError& e) {
    t_last_error = e.what();
    return DYNUNC_ERR_IO;
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return DYNUNC_ERR_INTERNAL;
  } catch (...) {
    t_last_error = "unknown error";
    return DYNUNC_ERR_INTERNAL;
  }
}

void require(bool ok, const char* message) {
  if (!ok) throw InvalidArgument(message);
}

Vec to_vec(const double* p, size_t n) {
  require(p != nullptr || n == 0, "null array");
  return Eigen::Map<const Vec>(p, static_cast<Index>(n));
}

Mat to_mat(const double* p, size_t dim) {
  require(p != nullptr, "null matrix");
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                        Eigen::RowMajor>>(p, static_cast<Index>(dim),
                                                          static_cast<Index>(dim));
}

void copy_out(const Vec& v, double* out, size_t n, const char* what) {
  require(out != nullptr, "null output buffer");
  require(static_cast<size_t>(v.size()) == n, what);
  std::memcpy(out, v.data(), sizeof(double) * n);
}

void copy_out(const Mat& m, double* out, size_t dim, const char* what) {
  require(out != nullptr, "null output buffer");
  require(static_cast<size_t>(m.rows()) == dim && static_cast<size_t>(m.cols()) == dim, what);
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      out, m.rows(), m.cols()) = m;
}

}  // namespace

extern "C" {

const char* dynunc_last_error(void) { return t_last_error.c_str(); }

const char* dynunc_version(void) { return "0.1.0"; }

/* ---------------- time series ---------------- */

dynunc_status dynunc_ts_create(const double* values, size_t n, double dt, double t0,
                               dynunc_ts** out) {
  return wrap([&] {
    require(out != nullptr, "null output handle");
    require(n >= 2, "time series needs at least two samples");
    TimeSeriesU x;
    x.values = to_vec(values, n);
    x.dt = dt;
    x.t0 = t0;
    x.validate();
    *out = new dynunc_ts{std::move(x)};
  });
}

dynunc_status dynunc_ts_set_white_noise(dynunc_ts* ts, double sigma) {
  return wrap([&] {
    require(ts != nullptr, "null handle");
    ts->v.unc = Uncertainty::white(sigma);
  });
}

dynunc_status dynunc_ts_set_pointwise_unc(dynunc_ts* ts, const double* sigmas, size_t n) {
  return wrap([&] {
    require(ts != nullptr, "null handle");
    Uncertainty u = Uncertainty::pointwise(to_vec(sigmas, n));
    u.validate(ts->v.size());
    ts->v.unc = std::move(u);
  });
}

dynunc_status dynunc_ts_set_covariance(dynunc_ts* ts, const double* cov, size_t n) {
  return wrap([&] {
    require(ts != nullptr, "null handle");
    Uncertainty u = Uncertainty::full(to_mat(cov, n));
    u.validate(ts->v.size());
    ts->v.unc = std::move(u);
  });
}

size_t dynunc_ts_size(const dynunc_ts* ts) { return ts ? static_cast<size_t>(ts->v.size()) : 0; }

double dynunc_ts_dt(const dynunc_ts* ts) { return ts ? ts->v.dt : 0.0; }

double dynunc_ts_t0(const dynunc_ts* ts) { return ts ? ts->v.t0 : 0.0; }

dynunc_status dynunc_ts_values(const dynunc_ts* ts, double* out, size_t n) {
  return wrap([&] {
    require(ts != nullptr, "null handle");
    copy_out(ts->v.values, out, n, "value buffer length mismatch");
  });
}

dynunc_status dynunc_ts_std(const dynunc_ts* ts, double* out, size_t n) {
  return wrap([&] {
    require(ts != nullptr, "null handle");
    copy_out(ts->v.unc.pointwise_std(ts->v.size()), out, n, "std buffer length mismatch");
  });
}

dynunc_status dynunc_ts_covariance(const dynunc_ts* ts, double* out, size_t n) {
  return wrap([&] {
    require(ts != nullptr, "null handle");
    copy_out(ts->v.unc.full_cov(ts->v.size()), out, n, "covariance buffer mismatch");
  });
}

void dynunc_ts_free(dynunc_ts* ts) { delete ts; }

dynunc_status dynunc_ts_read_csv(const char* path, dynunc_ts** out) {
  return wrap([&] {
    require(path && out, "null argument");
    *out = new dynunc_ts{io::read_timeseries_csv(path)};
  });
}

dynunc_status dynunc_ts_write_csv(const char* path, const dynunc_ts* ts) {
  return wrap([&] {
    require(path && ts, "null argument");
    io::write_timeseries_csv(path, ts->v);
  });
}

/* ---------------- spectra ---------------- */

dynunc_status dynunc_spectrum_create(const double* freqs, const double* re, const double* im,
                                     size_t bins, int nyquist_bin, dynunc_spectrum** out) {
  return wrap([&] {
    require(out != nullptr, "null output handle");
    SpectrumU s;
    s.freqs = to_vec(freqs, bins);
    s.reim = Vec(2 * static_cast<Index>(bins));
    s.reim.head(static_cast<Index>(bins)) = to_vec(re, bins);
    s.reim.tail(static_cast<Index>(bins)) = to_vec(im, bins);
    s.nyquist_bin = nyquist_bin != 0;
    s.validate();
    *out = new dynunc_spectrum{std::move(s)};
  });
}

dynunc_status dynunc_spectrum_set_covariance(dynunc_spectrum* s, const double* cov,
                                             size_t dim) {
  return wrap([&] {
    require(s != nullptr, "null handle");
    require(dim == 2 * static_cast<size_t>(s->v.bins()), "covariance must be 2M x 2M");
    s->v.cov = to_mat(cov, dim);
    s->v.validate();
  });
}

size_t dynunc_spectrum_bins(const dynunc_spectrum* s) {
  return s ? static_cast<size_t>(s->v.bins()) : 0;
}

dynunc_status dynunc_spectrum_freqs(const dynunc_spectrum* s, double* out, size_t bins) {
  return wrap([&] {
    require(s != nullptr, "null handle");
    copy_out(s->v.freqs, out, bins, "frequency buffer mismatch");
  });
}

dynunc_status dynunc_spectrum_values(const dynunc_spectrum* s, double* re, double* im,
                                     size_t bins) {
  return wrap([&] {
    require(s != nullptr, "null handle");
    copy_out(Vec(s->v.reim.head(s->v.bins())), re, bins, "re buffer mismatch");
    copy_out(Vec(s->v.reim.tail(s->v.bins())), im, bins, "im buffer mismatch");
  });
}

dynunc_status dynunc_spectrum_covariance(const dynunc_spectrum* s, double* out, size_t dim) {
  return wrap([&] {
    require(s != nullptr, "null handle");
    const Index m = s->v.bins();
    const Mat cov = s->v.has_cov() ? s->v.cov : Mat(Mat::Zero(2 * m, 2 * m));
    copy_out(cov, out, dim, "covariance buffer mismatch");
  });
}

void dynunc_spectrum_free(dynunc_spectrum* s) { delete s; }

dynunc_status dynunc_spectrum_read_csv(const char* path, int nyquist_bin,
                                       dynunc_spectrum** out) {
  return wrap([&] {
    require(path && out, "null argument");
    *out = new dynunc_spectrum{io::read_spectrum_csv(path, nyquist_bin != 0)};
  });
}

dynunc_status dynunc_spectrum_write_csv(const char* path, const dynunc_spectrum* s) {
  return wrap([&] {
    require(path && s, "null argument");
    io::write_spectrum_csv(path, s->v);
  });
}

/* ---------------- DFT ops ---------------- */

dynunc_status dynunc_gum_dft(const dynunc_ts* x, dynunc_spectrum** out) {
  return wrap([&] {
    require(x && out, "null argument");
    *out = new dynunc_spectrum{dft::gum_dft(x->v)};
  });
}

dynunc_status dynunc_gum_idft(const dynunc_spectrum* f, size_t nout, dynunc_ts** out) {
  return wrap([&] {
    require(f && out, "null argument");
    *out = new dynunc_ts{dft::gum_idft(f->v, static_cast<Index>(nout))};
  });
}

dynunc_status dynunc_dft_multiply(const dynunc_spectrum* x, const dynunc_spectrum* h,
                                  dynunc_spectrum** out) {
  return wrap([&] {
    require(x && h && out, "null argument");
    *out = new dynunc_spectrum{dft::dft_multiply(x->v, h->v)};
  });
}

dynunc_status dynunc_dft_deconv(const dynunc_spectrum* x, const dynunc_spectrum* h,
                                double mag_floor, dynunc_spectrum** out) {
  return wrap([&] {
    require(x && h && out, "null argument");
    *out = new dynunc_spectrum{dft::dft_deconv(x->v, h->v, mag_floor)};
  });
}

dynunc_status dynunc_dft_transferfunction(const dynunc_ts* yref, const dynunc_ts* xmeas,
                                          double mag_floor, dynunc_spectrum** out) {
  return wrap([&] {
    require(yref && xmeas && out, "null argument");
    *out = new dynunc_spectrum{dft::dft_transferfunction(yref->v, xmeas->v, mag_floor)};
  });
}

/* ---------------- amplitude/phase ---------------- */

dynunc_status dynunc_ampphase_create(const double* freqs, const double* amplitude,
                                     const double* phase, size_t bins, int nyquist_bin,
                                     dynunc_ampphase** out) {
  return wrap([&] {
    require(out != nullptr, "null output handle");
    AmpPhaseU ap;
    ap.freqs = to_vec(freqs, bins);
    ap.amplitude = to_vec(amplitude, bins);
    ap.phase = to_vec(phase, bins);
    ap.nyquist_bin = nyquist_bin != 0;
    ap.validate();
    *out = new dynunc_ampphase{std::move(ap)};
  });
}

dynunc_status dynunc_ampphase_set_covariance(dynunc_ampphase* ap, const double* cov,
                                             size_t dim) {
  return wrap([&] {
    require(ap != nullptr, "null handle");
    require(dim == 2 * static_cast<size_t>(ap->v.bins()), "covariance must be 2M x 2M");
    ap->v.cov = to_mat(cov, dim);
    ap->v.validate();
  });
}

size_t dynunc_ampphase_bins(const dynunc_ampphase* ap) {
  return ap ? static_cast<size_t>(ap->v.bins()) : 0;
}

dynunc_status dynunc_ampphase_values(const dynunc_ampphase* ap, double* amplitude,
                                     double* phase, size_t bins) {
  return wrap([&] {
    require(ap != nullptr, "null handle");
    copy_out(ap->v.amplitude, amplitude, bins, "amplitude buffer mismatch");
    copy_out(ap->v.phase, phase, bins, "phase buffer mismatch");
  });
}

dynunc_status dynunc_ampphase_covariance(const dynunc_ampphase* ap, double* out, size_t dim) {
  return wrap([&] {
    require(ap != nullptr, "null handle");
    const Index m = ap->v.bins();
    const Mat cov = ap->v.has_cov() ? ap->v.cov : Mat(Mat::Zero(2 * m, 2 * m));
    copy_out(cov, out, dim, "covariance buffer mismatch");
  });
}

void dynunc_ampphase_free(dynunc_ampphase* ap) { delete ap; }

dynunc_status dynunc_amp_phase_to_dft(const dynunc_ampphase* ap, dynunc_spectrum** out) {
  return wrap([&] {
    require(ap && out, "null argument");
    *out = new dynunc_spectrum{dft::amp_phase_to_dft(ap->v)};
  });
}

dynunc_status dynunc_dft_to_amp_phase(const dynunc_spectrum* f, int unwrap,
                                      dynunc_ampphase** out) {
  return wrap([&] {
    require(f && out, "null argument");
    *out = new dynunc_ampphase{dft::dft_to_amp_phase(f->v, unwrap != 0)};
  });
}

/* ---------------- filters ---------------- */

dynunc_status dynunc_filter_create(const double* b, size_t nb, const double* a, size_t na,
                                   int delay_n0, dynunc_filter** out) {
  return wrap([&] {
    require(out != nullptr, "null output handle");
    filt::DigitalFilterU f;
    f.b = to_vec(b, nb);
    f.a = na == 0 ? Vec(Vec::Ones(1)) : to_vec(a, na);
    f.delay_n0 = delay_n0;
    f.validate();
    *out = new dynunc_filter{std::move(f)};
  });
}

dynunc_status dynunc_filter_set_covariance(dynunc_filter* f, const double* cov, size_t dim) {
  return wrap([&] {
    require(f != nullptr, "null handle");
    require(dim == static_cast<size_t>(f->v.n_params()), "covariance must cover (b, a-tail)");
    f->v.cov = to_mat(cov, dim);
    f->v.validate();
  });
}

size_t dynunc_filter_nb(const dynunc_filter* f) {
  return f ? static_cast<size_t>(f->v.b.size()) : 0;
}

size_t dynunc_filter_na(const dynunc_filter* f) {
  return f ? static_cast<size_t>(f->v.a.size()) : 0;
}

int dynunc_filter_delay(const dynunc_filter* f) { return f ? f->v.delay_n0 : 0; }

dynunc_status dynunc_filter_coeffs(const dynunc_filter* f, double* b, size_t nb, double* a,
                                   size_t na) {
  return wrap([&] {
    require(f != nullptr, "null handle");
    copy_out(f->v.b, b, nb, "b buffer mismatch");
    copy_out(f->v.a, a, na, "a buffer mismatch");
  });
}

void dynunc_filter_free(dynunc_filter* f) { delete f; }

dynunc_status dynunc_filter_read_json(const char* path, dynunc_filter** out) {
  return wrap([&] {
    require(path && out, "null argument");
    *out = new dynunc_filter{io::read_filter_json(path)};
  });
}

dynunc_status dynunc_filter_write_json(const char* path, const dynunc_filter* f) {
  return wrap([&] {
    require(path && f, "null argument");
    io::write_filter_json(path, f->v);
  });
}

dynunc_status dynunc_fir_unc_filter(const dynunc_ts* x, const dynunc_filter* f,
                                    dynunc_ts** out) {
  return wrap([&] {
    require(x && f && out, "null argument");
    *out = new dynunc_ts{filt::fir_unc_filter(x->v, f->v)};
  });
}

dynunc_status dynunc_iir_ss_filter(const dynunc_ts* x, const dynunc_filter* f,
                                   dynunc_ts** out) {
  return wrap([&] {
    require(x && f && out, "null argument");
    *out = new dynunc_ts{filt::iir_ss_filter(x->v, f->v)};
  });
}

dynunc_status dynunc_smc_filter(const dynunc_ts* x, const dynunc_filter* f, long draws,
                                size_t block, uint64_t seed, dynunc_ts** out) {
  return wrap([&] {
    require(x && f && out, "null argument");
    filt::SmcOptions opt;
    opt.draws = draws;
    opt.block = static_cast<Index>(block);
    opt.seed = seed;
    *out = new dynunc_ts{filt::smc_filter(x->v, f->v, opt)};
  });
}

dynunc_status dynunc_isstable(const dynunc_filter* f, int* stable) {
  return wrap([&] {
    require(f && stable, "null argument");
    *stable = design::isstable(f->v) ? 1 : 0;
  });
}

dynunc_status dynunc_group_delay(const dynunc_filter* f, const double* freqs, size_t n,
                                 double fs, double* out) {
  return wrap([&] {
    require(f && out, "null argument");
    copy_out(design::group_delay(f->v, to_vec(freqs, n), fs), out, n,
             "group-delay buffer mismatch");
  });
}

dynunc_status dynunc_dynamic_error_bound(const dynunc_filter* f, const double* h_re,
                                         const double* h_im, const dynunc_spectrum* x,
                                         double w1, double w2, double* bound) {
  return wrap([&] {
    require(f && h_re && h_im && x && bound, "null argument");
    const Index m = x->v.bins();
    CVec h(m);
    for (Index k = 0; k < m; ++k)
      h[k] = Complex(h_re[k], h_im[k]);
    const Vec b = filt::dynamic_error_bound(f->v, h, x->v, w1, w2);
    *bound = b[0];
  });
}

/* ---------------- design ---------------- */

dynunc_status dynunc_fresp_create(const double* freqs, const double* re, const double* im,
                                  size_t n, dynunc_fresp** out) {
  return wrap([&] {
    require(out != nullptr, "null output handle");
    design::FreqRespData h;
    h.freqs = to_vec(freqs, n);
    h.re = to_vec(re, n);
    h.im = to_vec(im, n);
    h.validate();
    *out = new dynunc_fresp{std::move(h)};
  });
}

dynunc_status dynunc_fresp_set_covariance(dynunc_fresp* h, const double* cov, size_t dim) {
  return wrap([&] {
    require(h != nullptr, "null handle");
    require(dim == 2 * static_cast<size_t>(h->v.size()), "covariance must be 2M x 2M");
    h->v.cov = to_mat(cov, dim);
    h->v.validate();
  });
}

size_t dynunc_fresp_size(const dynunc_fresp* h) {
  return h ? static_cast<size_t>(h->v.size()) : 0;
}

dynunc_status dynunc_fresp_values(const dynunc_fresp* h, double* freqs, double* re, double* im,
                                  size_t n) {
  return wrap([&] {
    require(h != nullptr, "null handle");
    copy_out(h->v.freqs, freqs, n, "frequency buffer mismatch");
    copy_out(h->v.re, re, n, "re buffer mismatch");
    copy_out(h->v.im, im, n, "im buffer mismatch");
  });
}

void dynunc_fresp_free(dynunc_fresp* h) { delete h; }

dynunc_status dynunc_fresp_read_csv(const char* path, dynunc_fresp** out) {
  return wrap([&] {
    require(path && out, "null argument");
    *out = new dynunc_fresp{io::read_freqresp_csv(path)};
  });
}

dynunc_status dynunc_fresp_write_csv(const char* path, const dynunc_fresp* h) {
  return wrap([&] {
    require(path && h, "null argument");
    io::write_freqresp_csv(path, h->v);
  });
}

dynunc_status dynunc_lsfir(const dynunc_fresp* h, int order, int delay_n0, double fs,
                           const double* weights, int inverse, int mc_draws, uint64_t seed,
                           double* residual, dynunc_filter** out) {
  return wrap([&] {
    require(h && out, "null argument");
    design::LsfirOptions opt;
    opt.order = order;
    opt.delay_n0 = delay_n0;
    opt.fs = fs;
    if (weights) opt.weights = to_vec(weights, static_cast<size_t>(h->v.size()));
    opt.inverse = inverse != 0;
    opt.mc_draws = mc_draws;
    opt.seed = seed;
    *out = new dynunc_filter{design::lsfir(h->v, opt, residual)};
  });
}

dynunc_status dynunc_lsiir(const dynunc_fresp* h, int nb, int na, int delay_n0, double fs,
                           int inverse, int max_iter, double* residual, int* stabilized,
                           dynunc_filter** out) {
  return wrap([&] {
    require(h && out, "null argument");
    design::LsiirOptions opt;
    opt.nb = nb;
    opt.na = na;
    opt.delay_n0 = delay_n0;
    opt.fs = fs;
    opt.inverse = inverse != 0;
    opt.max_iter = max_iter;
    const auto res = design::lsiir(h->v, opt);
    if (residual) *residual = res.residual;
    if (stabilized) *stabilized = res.stabilized ? 1 : 0;
    *out = new dynunc_filter{res.filter};
  });
}

dynunc_status dynunc_kaiser_lowpass(int order, double cutoff_hz, double fs, double beta,
                                    dynunc_filter** out) {
  return wrap([&] {
    require(out != nullptr, "null output handle");
    *out = new dynunc_filter{design::kaiser_lowpass(order, cutoff_hz, fs, beta)};
  });
}

dynunc_status dynunc_savgol(const double* x, size_t n, int window, int polyorder, int deriv,
                            double dt, double* out) {
  return wrap([&] {
    require(x && out, "null argument");
    copy_out(design::savgol(to_vec(x, n), window, polyorder, deriv, dt), out, n,
             "savgol buffer mismatch");
  });
}

/* ---------------- second-order model ---------------- */

dynunc_status dynunc_sos_create(double s0, double delta, double f0,
                                const double* cov3x3_or_null, dynunc_sos** out) {
  return wrap([&] {
    require(out != nullptr, "null output handle");
    sos::SosParams p;
    p.s0 = s0;
    p.delta = delta;
    p.f0 = f0;
    if (cov3x3_or_null) p.cov = to_mat(cov3x3_or_null, 3);
    p.validate();
    *out = new dynunc_sos{std::move(p)};
  });
}

dynunc_status dynunc_sos_params(const dynunc_sos* p, double* s0, double* delta, double* f0) {
  return wrap([&] {
    require(p != nullptr, "null handle");
    if (s0) *s0 = p->v.s0;
    if (delta) *delta = p->v.delta;
    if (f0) *f0 = p->v.f0;
  });
}

dynunc_status dynunc_sos_covariance(const dynunc_sos* p, double* cov3x3) {
  return wrap([&] {
    require(p && cov3x3, "null argument");
    const Mat cov = p->v.has_cov() ? p->v.cov : Mat(Mat::Zero(3, 3));
    copy_out(cov, cov3x3, 3, "covariance buffer mismatch");
  });
}

void dynunc_sos_free(dynunc_sos* p) { delete p; }

dynunc_status dynunc_sos_freq_resp(const dynunc_sos* p, const double* freqs, size_t n,
                                   double* re, double* im) {
  return wrap([&] {
    require(p && re && im, "null argument");
    const CVec s = sos::sos_freq_resp(p->v, to_vec(freqs, n));
    for (size_t k = 0; k < n; ++k) {
      re[k] = s[static_cast<Index>(k)].real();
      im[k] = s[static_cast<Index>(k)].imag();
    }
  });
}

dynunc_status dynunc_sos_phys2filter(const dynunc_sos* p, double* num1, double* den3) {
  return wrap([&] {
    require(p && num1 && den3, "null argument");
    const auto tf = sos::sos_phys2filter(p->v);
    num1[0] = tf.num[0];
    for (int i = 0; i < 3; ++i) den3[i] = tf.den[i];
  });
}

dynunc_status dynunc_sos_mc_response(const dynunc_sos* p, const double* freqs, size_t n,
                                     long draws, uint64_t seed, dynunc_fresp** out) {
  return wrap([&] {
    require(p && out, "null argument");
    const auto r =
        sos::sos_mc_response(p->v, to_vec(freqs, n), draws, sos::ResponseForm::ReIm, seed);
    *out = new dynunc_fresp{r.reim};
  });
}

dynunc_status dynunc_fit_sos(const dynunc_fresp* s, int weighted, long mc_draws,
                             uint64_t seed, dynunc_sos** out) {
  return wrap([&] {
    require(s && out, "null argument");
    sos::FitSosOptions opt;
    opt.weighted = weighted != 0;
    opt.mc_draws = mc_draws;
    opt.seed = seed;
    *out = new dynunc_sos{sos::fit_sos(s->v, opt)};
  });
}

dynunc_status dynunc_bilinear(const double* num, size_t nnum, const double* den, size_t nden,
                              double fs, double prewarp_hz, dynunc_filter** out) {
  return wrap([&] {
    require(out != nullptr, "null output handle");
    sos::ContinuousTf tf;
    tf.num = to_vec(num, nnum);
    tf.den = to_vec(den, nden);
    *out = new dynunc_filter{sos::bilinear_discretize(tf, fs, prewarp_hz)};
  });
}

/* ---------------- signals ---------------- */

dynunc_status dynunc_signal_shock(double t0, double sigma, double m0, double fs,
                                  double duration, dynunc_ts** out) {
  return wrap([&] {
    require(out != nullptr, "null output handle");
    sig::ShockParams p;
    p.t0 = t0;
    p.sigma = sigma;
    p.m0 = m0;
    *out = new dynunc_ts{sig::shock_like(p, fs, duration)};
  });
}

dynunc_status dynunc_signal_gauss(double t0, double sigma, double m0, double fs,
                                  double duration, dynunc_ts** out) {
  return wrap([&] {
    require(out != nullptr, "null output handle");
    sig::SignalSpec spec;
    spec.kind = sig::SignalSpec::Kind::Gauss;
    spec.fs = fs;
    spec.duration = duration;
    spec.t0 = t0;
    spec.sigma = sigma;
    spec.m0 = m0;
    *out = new dynunc_ts{sig::primitive_signal(spec)};
  });
}

dynunc_status dynunc_signal_rect(double t0, double width, double height, double fs,
                                 double duration, dynunc_ts** out) {
  return wrap([&] {
    require(out != nullptr, "null output handle");
    sig::SignalSpec spec;
    spec.kind = sig::SignalSpec::Kind::Rect;
    spec.fs = fs;
    spec.duration = duration;
    spec.t0 = t0;
    spec.width = width;
    spec.height = height;
    *out = new dynunc_ts{sig::primitive_signal(spec)};
  });
}

dynunc_status dynunc_signal_squarepulse(double height, int count, double fs, double duration,
                                        dynunc_ts** out) {
  return wrap([&] {
    require(out != nullptr, "null output handle");
    sig::SignalSpec spec;
    spec.kind = sig::SignalSpec::Kind::SquarePulse;
    spec.fs = fs;
    spec.duration = duration;
    spec.height = height;
    spec.count = count;
    *out = new dynunc_ts{sig::primitive_signal(spec)};
  });
}

dynunc_status dynunc_signal_sine(double amplitude, double frequency, double phase, double fs,
                                 double duration, dynunc_ts** out) {
  return wrap([&] {
    require(out != nullptr, "null output handle");
    sig::SignalSpec spec;
    spec.kind = sig::SignalSpec::Kind::Sine;
    spec.fs = fs;
    spec.duration = duration;
    spec.amplitude = amplitude;
    spec.frequency = frequency;
    spec.phase = phase;
    *out = new dynunc_ts{sig::primitive_signal(spec)};
  });
}

dynunc_status dynunc_add_noise(const dynunc_ts* x, double sigma, uint64_t seed,
                               dynunc_ts** out) {
  return wrap([&] {
    require(x && out, "null argument");
    *out = new dynunc_ts{sig::add_noise(x->v, sigma, seed)};
  });
}

/* ---------------- Monte Carlo ---------------- */

dynunc_status dynunc_mc_propagate(dynunc_model_fn model, void* ctx, const double* est,
                                  size_t nx, const double* cov, size_t ny_out, long draws,
                                  uint64_t seed, double* mean_out, double* std_out) {
  return wrap([&] {
    require(model && est && cov && mean_out && std_out, "null argument");
    const Vec e = to_vec(est, nx);
    const Mat c = to_mat(cov, nx);
    mc::McOptions opt;
    opt.draws = draws;
    opt.seed = seed;
    Vec ybuf(static_cast<Index>(ny_out));
    auto fn = [&](const Vec& x) -> Vec {
      if (model(x.data(), nx, ybuf.data(), ny_out, ctx) != 0)
        throw NumericError("model callback reported failure");
      return ybuf;
    };
    const auto r = mc::mc_propagate(fn, e, c, opt);
    copy_out(r.mean, mean_out, ny_out, "mean buffer mismatch");
    copy_out(r.std_dev, std_out, ny_out, "std buffer mismatch");
  });
}

/* ---------------- pipelines ---------------- */

dynunc_status dynunc_pipeline_run(const char* config_path, const char* outdir_or_null,
                                  uint64_t seed_or_zero) {
  return wrap([&] {
    require(config_path != nullptr, "null config path");
    const io::Config cfg = io::Config::parse_file(config_path);
    pipeline::run_pipeline(cfg, outdir_or_null ? outdir_or_null : "", seed_or_zero);
  });
}

}  // extern "C"
