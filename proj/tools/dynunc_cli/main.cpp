// dynunc command-line front end. Talks to the library exclusively through
// the C API in dynunc/dynunc.h, the same surface external callers get.
//
// Exit codes: 0 success, 1 configuration/usage error, 2 numerical failure.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "dynunc/dynunc.h"

namespace {

struct TsDeleter {
  void operator()(dynunc_ts* p) const { dynunc_ts_free(p); }
};
struct SpecDeleter {
  void operator()(dynunc_spectrum* p) const { dynunc_spectrum_free(p); }
};
struct FiltDeleter {
  void operator()(dynunc_filter* p) const { dynunc_filter_free(p); }
};
struct FrespDeleter {
  void operator()(dynunc_fresp* p) const { dynunc_fresp_free(p); }
};
struct SosDeleter {
  void operator()(dynunc_sos* p) const { dynunc_sos_free(p); }
};

using TsPtr = std::unique_ptr<dynunc_ts, TsDeleter>;
using SpecPtr = std::unique_ptr<dynunc_spectrum, SpecDeleter>;
using FiltPtr = std::unique_ptr<dynunc_filter, FiltDeleter>;
using FrespPtr = std::unique_ptr<dynunc_fresp, FrespDeleter>;
using SosPtr = std::unique_ptr<dynunc_sos, SosDeleter>;

/// Stage-labelled exit on a failed library call.
class CliError : public std::runtime_error {
public:
  CliError(int code, const std::string& what) : std::runtime_error(what), code(code) {}
  int code;
};

void check(dynunc_status st, const std::string& stage) {
  if (st == DYNUNC_OK) return;
  const int code = (st == DYNUNC_ERR_NUMERIC) ? 2 : 1;
  throw CliError(code, stage + ": " + dynunc_last_error());
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("DYNUNC_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw CliError(1, std::string("DYNUNC_SEED is not an integer: ") + env);
    }
  }
  return 1;
}

int run_simulate(const std::string& kind, double fs, double duration, double t0, double sigma,
                 double m0, double width, double height, int count, double amplitude,
                 double frequency, double phase, double noise, std::uint64_t seed,
                 const std::string& out) {
  dynunc_ts* raw = nullptr;
  if (kind == "shock") {
    check(dynunc_signal_shock(t0, sigma, m0, fs, duration, &raw), "simulate");
  } else if (kind == "gauss") {
    check(dynunc_signal_gauss(t0, sigma, m0, fs, duration, &raw), "simulate");
  } else if (kind == "rect") {
    check(dynunc_signal_rect(t0, width, height, fs, duration, &raw), "simulate");
  } else if (kind == "squarepulse") {
    check(dynunc_signal_squarepulse(height, count, fs, duration, &raw), "simulate");
  } else if (kind == "sine") {
    check(dynunc_signal_sine(amplitude, frequency, phase, fs, duration, &raw), "simulate");
  } else {
    throw CliError(1, "simulate: unknown signal kind '" + kind + "'");
  }
  TsPtr signal(raw);
  if (noise > 0.0) {
    dynunc_ts* noisy = nullptr;
    check(dynunc_add_noise(signal.get(), noise, seed, &noisy), "simulate.noise");
    signal.reset(noisy);
  }
  check(dynunc_ts_write_csv(out.c_str(), signal.get()), "simulate.write");
  std::printf("wrote %s (%zu samples)\n", out.c_str(), dynunc_ts_size(signal.get()));
  return 0;
}

int run_dft(const std::string& in, const std::string& out, bool inverse, long nout) {
  if (!inverse) {
    dynunc_ts* ts = nullptr;
    check(dynunc_ts_read_csv(in.c_str(), &ts), "dft.read");
    TsPtr x(ts);
    dynunc_spectrum* spec = nullptr;
    check(dynunc_gum_dft(x.get(), &spec), "dft");
    SpecPtr f(spec);
    check(dynunc_spectrum_write_csv(out.c_str(), f.get()), "dft.write");
    std::printf("wrote %s (%zu bins)\n", out.c_str(), dynunc_spectrum_bins(f.get()));
  } else {
    dynunc_spectrum* spec = nullptr;
    check(dynunc_spectrum_read_csv(in.c_str(), nout % 2 == 0 ? 1 : 0, &spec), "idft.read");
    SpecPtr f(spec);
    dynunc_ts* ts = nullptr;
    check(dynunc_gum_idft(f.get(), static_cast<size_t>(nout), &ts), "idft");
    TsPtr x(ts);
    check(dynunc_ts_write_csv(out.c_str(), x.get()), "idft.write");
    std::printf("wrote %s (%zu samples)\n", out.c_str(), dynunc_ts_size(x.get()));
  }
  return 0;
}

int run_deconv(const std::string& num, const std::string& den, const std::string& out,
               double mag_floor, bool multiply, bool odd) {
  dynunc_spectrum *ns = nullptr, *ds = nullptr;
  check(dynunc_spectrum_read_csv(num.c_str(), odd ? 0 : 1, &ns), "deconv.read");
  SpecPtr x(ns);
  check(dynunc_spectrum_read_csv(den.c_str(), odd ? 0 : 1, &ds), "deconv.read");
  SpecPtr h(ds);
  dynunc_spectrum* y = nullptr;
  if (multiply)
    check(dynunc_dft_multiply(x.get(), h.get(), &y), "multiply");
  else
    check(dynunc_dft_deconv(x.get(), h.get(), mag_floor, &y), "deconv");
  SpecPtr result(y);
  check(dynunc_spectrum_write_csv(out.c_str(), result.get()), "deconv.write");
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

int run_design_fir(const std::string& resp, int order, int delay, double fs, bool forward,
                   int mc_draws, std::uint64_t seed, const std::string& out) {
  dynunc_fresp* h = nullptr;
  check(dynunc_fresp_read_csv(resp.c_str(), &h), "design-fir.read");
  FrespPtr hr(h);
  double residual = 0.0;
  dynunc_filter* f = nullptr;
  check(dynunc_lsfir(hr.get(), order, delay, fs, nullptr, forward ? 0 : 1, mc_draws, seed,
                     &residual, &f),
        "design-fir");
  FiltPtr flt(f);
  check(dynunc_filter_write_json(out.c_str(), flt.get()), "design-fir.write");
  std::printf("wrote %s (order %d, residual %.6g)\n", out.c_str(), order, residual);
  return 0;
}

int run_design_iir(const std::string& resp, int nb, int na, int delay, double fs,
                   bool forward, int max_iter, const std::string& out) {
  dynunc_fresp* h = nullptr;
  check(dynunc_fresp_read_csv(resp.c_str(), &h), "design-iir.read");
  FrespPtr hr(h);
  double residual = 0.0;
  int stabilized = 0;
  dynunc_filter* f = nullptr;
  check(dynunc_lsiir(hr.get(), nb, na, delay, fs, forward ? 0 : 1, max_iter, &residual,
                     &stabilized, &f),
        "design-iir");
  FiltPtr flt(f);
  check(dynunc_filter_write_json(out.c_str(), flt.get()), "design-iir.write");
  std::printf("wrote %s (residual %.6g%s)\n", out.c_str(), residual,
              stabilized ? ", poles reflected for stability" : "");
  return 0;
}

int run_fit_sos(const std::string& resp, bool weighted, long mc_draws, std::uint64_t seed) {
  dynunc_fresp* h = nullptr;
  check(dynunc_fresp_read_csv(resp.c_str(), &h), "fit-sos.read");
  FrespPtr hr(h);
  dynunc_sos* p = nullptr;
  check(dynunc_fit_sos(hr.get(), weighted ? 1 : 0, mc_draws, seed, &p), "fit-sos");
  SosPtr fit(p);
  double s0 = 0.0, delta = 0.0, f0 = 0.0;
  check(dynunc_sos_params(fit.get(), &s0, &delta, &f0), "fit-sos");
  double cov[9] = {};
  check(dynunc_sos_covariance(fit.get(), cov), "fit-sos");
  std::printf("s0    = %.9g  (u = %.3g)\n", s0, std::sqrt(cov[0]));
  std::printf("delta = %.9g  (u = %.3g)\n", delta, std::sqrt(cov[4]));
  std::printf("f0    = %.9g  (u = %.3g)\n", f0, std::sqrt(cov[8]));
  return 0;
}

int run_filter(const std::string& in, const std::string& filter_path, const std::string& out,
               const std::string& method, long draws, long block, std::uint64_t seed) {
  dynunc_ts* ts = nullptr;
  check(dynunc_ts_read_csv(in.c_str(), &ts), "filter.read");
  TsPtr x(ts);
  dynunc_filter* f = nullptr;
  check(dynunc_filter_read_json(filter_path.c_str(), &f), "filter.read");
  FiltPtr flt(f);

  dynunc_ts* y = nullptr;
  if (method == "fir")
    check(dynunc_fir_unc_filter(x.get(), flt.get(), &y), "filter.fir");
  else if (method == "ss")
    check(dynunc_iir_ss_filter(x.get(), flt.get(), &y), "filter.ss");
  else if (method == "smc")
    check(dynunc_smc_filter(x.get(), flt.get(), draws, static_cast<size_t>(block), seed, &y),
          "filter.smc");
  else
    throw CliError(1, "filter: unknown method '" + method + "' (fir, ss, smc)");
  TsPtr result(y);
  check(dynunc_ts_write_csv(out.c_str(), result.get()), "filter.write");
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

int run_pipeline_cmd(const std::string& config, const std::string& outdir,
                     std::uint64_t seed) {
  check(dynunc_pipeline_run(config.c_str(), outdir.empty() ? nullptr : outdir.c_str(), seed),
        "pipeline");
  std::printf("pipeline finished: %s\n", config.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dynunc: deconvolution and uncertainty propagation for dynamic measurements"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(dynunc_version()));

  std::uint64_t seed = 0;  // resolved after parsing (env DYNUNC_SEED, then 1)

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a test signal as CSV");
  std::string sim_kind = "shock", sim_out = "signal.csv";
  double sim_fs = 1000.0, sim_duration = 1.0, sim_t0 = 0.1, sim_sigma = 0.01, sim_m0 = 1.0;
  double sim_width = 0.1, sim_height = 1.0, sim_amp = 1.0, sim_freq = 10.0, sim_phase = 0.0;
  double sim_noise = 0.0;
  int sim_count = 1;
  sim->add_option("--kind", sim_kind, "shock | gauss | rect | squarepulse | sine")
      ->capture_default_str();
  sim->add_option("--fs", sim_fs, "sampling rate, Hz")->capture_default_str();
  sim->add_option("--duration", sim_duration, "record length, s")->capture_default_str();
  sim->add_option("--t0", sim_t0, "pulse centre / rect start, s")->capture_default_str();
  sim->add_option("--sigma", sim_sigma, "Gaussian width, s")->capture_default_str();
  sim->add_option("--m0", sim_m0, "pulse height")->capture_default_str();
  sim->add_option("--width", sim_width, "rect width, s")->capture_default_str();
  sim->add_option("--height", sim_height, "rect/square height")->capture_default_str();
  sim->add_option("--count", sim_count, "square pulse count")->capture_default_str();
  sim->add_option("--amplitude", sim_amp, "sine amplitude")->capture_default_str();
  sim->add_option("--frequency", sim_freq, "sine frequency, Hz")->capture_default_str();
  sim->add_option("--phase", sim_phase, "sine phase, rad")->capture_default_str();
  sim->add_option("--noise", sim_noise, "white noise std to add")->capture_default_str();
  sim->add_option("-o,--output", sim_out, "output CSV")->capture_default_str();

  // dft / idft
  auto* dft = app.add_subcommand("dft", "DFT of a time-series CSV with covariance");
  std::string dft_in, dft_out = "spectrum.csv";
  bool dft_inverse = false;
  long dft_nout = 0;
  dft->add_option("input", dft_in, "time-series CSV (spectrum CSV with --inverse)")
      ->required();
  dft->add_option("-o,--output", dft_out, "output CSV")->capture_default_str();
  dft->add_flag("--inverse", dft_inverse, "inverse transform back to the time domain");
  dft->add_option("--samples", dft_nout,
                  "output length for --inverse (default 2(M-1), even records)");

  // deconv / multiply
  auto* dec = app.add_subcommand("deconv",
                                 "frequency-domain division (or --multiply) of two spectra");
  std::string dec_num, dec_den, dec_out = "deconvolved.csv";
  double dec_floor = 1e-6;
  bool dec_mult = false, dec_odd = false;
  dec->add_option("--num", dec_num, "numerator spectrum CSV")->required();
  dec->add_option("--den", dec_den, "denominator (response) spectrum CSV")->required();
  dec->add_option("-o,--output", dec_out, "output CSV")->capture_default_str();
  dec->add_option("--mag-floor", dec_floor, "relative magnitude floor")->capture_default_str();
  dec->add_flag("--multiply", dec_mult, "multiply instead of divide");
  dec->add_flag("--odd", dec_odd, "spectra come from odd-length records");

  // design-fir
  auto* dfir = app.add_subcommand("design-fir", "LSFIR (inverse) filter design");
  std::string dfir_resp, dfir_out = "filter.json";
  int dfir_order = 48, dfir_delay = 24, dfir_draws = 0;
  double dfir_fs = 0.0;
  bool dfir_forward = false;
  dfir->add_option("--response", dfir_resp, "frequency-response CSV")->required();
  dfir->add_option("--order", dfir_order, "FIR order")->capture_default_str();
  dfir->add_option("--delay", dfir_delay, "regularization delay n0, samples")
      ->capture_default_str();
  dfir->add_option("--fs", dfir_fs, "sampling rate, Hz")->required();
  dfir->add_flag("--forward", dfir_forward, "fit the forward response instead of the inverse");
  dfir->add_option("--mc-draws", dfir_draws,
                   "response draws for the coefficient covariance (0 = off)")
      ->capture_default_str();
  dfir->add_option("-o,--output", dfir_out, "output filter JSON")->capture_default_str();

  // design-iir
  auto* diir = app.add_subcommand("design-iir", "LSIIR (inverse) filter design");
  std::string diir_resp, diir_out = "filter.json";
  int diir_nb = 6, diir_na = 6, diir_delay = 0, diir_iter = 50;
  double diir_fs = 0.0;
  bool diir_forward = false;
  diir->add_option("--response", diir_resp, "frequency-response CSV")->required();
  diir->add_option("--nb", diir_nb, "numerator order")->capture_default_str();
  diir->add_option("--na", diir_na, "denominator order")->capture_default_str();
  diir->add_option("--delay", diir_delay, "regularization delay n0, samples")
      ->capture_default_str();
  diir->add_option("--fs", diir_fs, "sampling rate, Hz")->required();
  diir->add_flag("--forward", diir_forward, "fit the forward response instead of the inverse");
  diir->add_option("--max-iter", diir_iter, "iteration limit")->capture_default_str();
  diir->add_option("-o,--output", diir_out, "output filter JSON")->capture_default_str();

  // fit-sos
  auto* fsos = app.add_subcommand("fit-sos", "second-order model fit to a frequency response");
  std::string fsos_resp;
  bool fsos_weighted = false;
  long fsos_draws = 2000;
  fsos->add_option("--response", fsos_resp, "frequency-response CSV")->required();
  fsos->add_flag("--weighted", fsos_weighted, "weight by the reciprocal-response variances");
  fsos->add_option("--mc-draws", fsos_draws, "draws for the parameter covariance")
      ->capture_default_str();

  // filter
  auto* filt = app.add_subcommand("filter", "apply a filter JSON to a time-series CSV");
  std::string filt_in, filt_json, filt_out = "filtered.csv", filt_method = "fir";
  long filt_draws = 10000, filt_block = 1024;
  filt->add_option("input", filt_in, "time-series CSV")->required();
  filt->add_option("--filter", filt_json, "filter JSON")->required();
  filt->add_option("--method", filt_method, "fir | ss | smc")->capture_default_str();
  filt->add_option("--draws", filt_draws, "SMC draws")->capture_default_str();
  filt->add_option("--block", filt_block, "SMC block length")->capture_default_str();
  filt->add_option("-o,--output", filt_out, "output CSV")->capture_default_str();

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "run a pipeline config (INI)");
  std::string pipe_cfg, pipe_outdir;
  pipe->add_option("config", pipe_cfg, "pipeline config file")->required();
  pipe->add_option("--outdir", pipe_outdir, "override [pipeline] outdir");

  app.add_option("--seed", seed, "seed override (default: DYNUNC_SEED env, then 1)");
  for (auto* sub : {sim, dft, dec, dfir, diir, fsos, filt, pipe}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (seed == 0 && !pipe->parsed()) seed = default_seed();
    if (sim->parsed())
      return run_simulate(sim_kind, sim_fs, sim_duration, sim_t0, sim_sigma, sim_m0, sim_width,
                          sim_height, sim_count, sim_amp, sim_freq, sim_phase, sim_noise, seed,
                          sim_out);
    if (dft->parsed()) return run_dft(dft_in, dft_out, dft_inverse, dft_nout);
    if (dec->parsed()) return run_deconv(dec_num, dec_den, dec_out, dec_floor, dec_mult, dec_odd);
    if (dfir->parsed())
      return run_design_fir(dfir_resp, dfir_order, dfir_delay, dfir_fs, dfir_forward,
                            dfir_draws, seed == 0 ? default_seed() : seed, dfir_out);
    if (diir->parsed())
      return run_design_iir(diir_resp, diir_nb, diir_na, diir_delay, diir_fs, diir_forward,
                            diir_iter, diir_out);
    if (fsos->parsed())
      return run_fit_sos(fsos_resp, fsos_weighted, fsos_draws, seed == 0 ? default_seed() : seed);
    if (filt->parsed())
      return run_filter(filt_in, filt_json, filt_out, filt_method, filt_draws, filt_block,
                        seed == 0 ? default_seed() : seed);
    if (pipe->parsed()) {
      // pipelines fall back to the config seed unless overridden here or by env
      std::uint64_t pseed = seed;
      if (pseed == 0 && std::getenv("DYNUNC_SEED")) pseed = default_seed();
      return run_pipeline_cmd(pipe_cfg, pipe_outdir, pseed);
    }
  } catch (const CliError& e) {
    std::fprintf(stderr, "error (%s): %s\n", e.code == 2 ? "numerical" : "config", e.what());
    return e.code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
