// Exercises the shared-library C interface exactly as an external caller
// would: only dynunc/dynunc.h, raw arrays, status codes.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "dynunc/dynunc.h"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("dynunc_capi_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

}  // namespace

TEST_CASE("capi: time series round trip and uncertainty accessors") {
  std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  dynunc_ts* ts = nullptr;
  REQUIRE(dynunc_ts_create(v.data(), v.size(), 0.25, 1.0, &ts) == DYNUNC_OK);
  CHECK(dynunc_ts_size(ts) == 4);
  CHECK(dynunc_ts_dt(ts) == 0.25);
  CHECK(dynunc_ts_t0(ts) == 1.0);

  REQUIRE(dynunc_ts_set_white_noise(ts, 0.5) == DYNUNC_OK);
  double stds[4];
  REQUIRE(dynunc_ts_std(ts, stds, 4) == DYNUNC_OK);
  CHECK(stds[2] == 0.5);

  double cov[16];
  REQUIRE(dynunc_ts_covariance(ts, cov, 4) == DYNUNC_OK);
  CHECK(cov[0] == 0.25);
  CHECK(cov[1] == 0.0);

  double out[4];
  REQUIRE(dynunc_ts_values(ts, out, 4) == DYNUNC_OK);
  CHECK(out[3] == 4.0);

  // wrong buffer size reports invalid and fills the error message
  CHECK(dynunc_ts_values(ts, out, 3) == DYNUNC_ERR_INVALID);
  CHECK(std::string(dynunc_last_error()).size() > 0);
  dynunc_ts_free(ts);
}

TEST_CASE("capi: dft round trip through handles") {
  std::vector<double> v(16);
  for (size_t i = 0; i < v.size(); ++i) v[i] = std::sin(0.3 * double(i)) + 0.1 * double(i);
  dynunc_ts* ts = nullptr;
  REQUIRE(dynunc_ts_create(v.data(), v.size(), 0.5, 0.0, &ts) == DYNUNC_OK);
  REQUIRE(dynunc_ts_set_white_noise(ts, 0.01) == DYNUNC_OK);

  dynunc_spectrum* spec = nullptr;
  REQUIRE(dynunc_gum_dft(ts, &spec) == DYNUNC_OK);
  CHECK(dynunc_spectrum_bins(spec) == 9);

  dynunc_ts* back = nullptr;
  REQUIRE(dynunc_gum_idft(spec, 0, &back) == DYNUNC_OK);
  double out[16];
  REQUIRE(dynunc_ts_values(back, out, 16) == DYNUNC_OK);
  for (size_t i = 0; i < 16; ++i) CHECK(std::abs(out[i] - v[i]) <= 1e-10);

  dynunc_ts_free(back);
  dynunc_spectrum_free(spec);
  dynunc_ts_free(ts);
}

TEST_CASE("capi: deconvolution failure surfaces as a numeric status") {
  const double freqs[3] = {0.0, 1.0, 2.0};
  const double re[3] = {1.0, 1.0, 1.0};
  const double im[3] = {0.0, 0.0, 0.0};
  const double hre[3] = {1.0, 1e-12, 1.0};
  dynunc_spectrum *x = nullptr, *h = nullptr;
  REQUIRE(dynunc_spectrum_create(freqs, re, im, 3, 1, &x) == DYNUNC_OK);
  REQUIRE(dynunc_spectrum_create(freqs, hre, im, 3, 1, &h) == DYNUNC_OK);
  dynunc_spectrum* y = nullptr;
  CHECK(dynunc_dft_deconv(x, h, 1e-6, &y) == DYNUNC_ERR_NUMERIC);
  CHECK(std::string(dynunc_last_error()).find("ill-posed") != std::string::npos);
  CHECK(y == nullptr);
  dynunc_spectrum_free(x);
  dynunc_spectrum_free(h);
}

TEST_CASE("capi: design, stability check and filtering chain") {
  // inverse of a mild second-order response, then filter a signal with it
  dynunc_sos* sys = nullptr;
  REQUIRE(dynunc_sos_create(1.0, 0.4, 0.1, nullptr, &sys) == DYNUNC_OK);
  const size_t m = 48;
  std::vector<double> freqs(m), re(m), im(m);
  for (size_t k = 0; k < m; ++k) freqs[k] = 0.5 * double(k) / double(m - 1);
  REQUIRE(dynunc_sos_freq_resp(sys, freqs.data(), m, re.data(), im.data()) == DYNUNC_OK);

  dynunc_fresp* resp = nullptr;
  REQUIRE(dynunc_fresp_create(freqs.data(), re.data(), im.data(), m, &resp) == DYNUNC_OK);
  double residual = -1.0;
  dynunc_filter* inv = nullptr;
  REQUIRE(dynunc_lsfir(resp, 24, 12, 1.0, nullptr, 1, 0, 1, &residual, &inv) == DYNUNC_OK);
  CHECK(residual >= 0.0);
  CHECK(dynunc_filter_nb(inv) == 25);
  int stable = 0;
  REQUIRE(dynunc_isstable(inv, &stable) == DYNUNC_OK);
  CHECK(stable == 1);

  dynunc_ts* sig = nullptr;
  REQUIRE(dynunc_signal_gauss(40.0, 6.0, 1.0, 1.0, 128.0, &sig) == DYNUNC_OK);
  REQUIRE(dynunc_ts_set_white_noise(sig, 0.001) == DYNUNC_OK);
  dynunc_ts* est = nullptr;
  REQUIRE(dynunc_fir_unc_filter(sig, inv, &est) == DYNUNC_OK);
  CHECK(dynunc_ts_size(est) == 128);

  dynunc_ts* est_smc = nullptr;
  REQUIRE(dynunc_smc_filter(sig, inv, 500, 64, 7, &est_smc) == DYNUNC_OK);
  CHECK(dynunc_ts_size(est_smc) == 128);

  dynunc_ts_free(est_smc);
  dynunc_ts_free(est);
  dynunc_ts_free(sig);
  dynunc_filter_free(inv);
  dynunc_fresp_free(resp);
  dynunc_sos_free(sys);
}

TEST_CASE("capi: fit_sos recovers generator parameters through the C surface") {
  dynunc_sos* truth = nullptr;
  REQUIRE(dynunc_sos_create(0.4, 0.05, 8000.0, nullptr, &truth) == DYNUNC_OK);
  const size_t m = 20;
  std::vector<double> freqs(m), re(m), im(m);
  for (size_t k = 0; k < m; ++k) freqs[k] = 500.0 + 15500.0 * double(k) / double(m - 1);
  REQUIRE(dynunc_sos_freq_resp(truth, freqs.data(), m, re.data(), im.data()) == DYNUNC_OK);
  dynunc_fresp* resp = nullptr;
  REQUIRE(dynunc_fresp_create(freqs.data(), re.data(), im.data(), m, &resp) == DYNUNC_OK);

  dynunc_sos* fit = nullptr;
  REQUIRE(dynunc_fit_sos(resp, 0, 0, 1, &fit) == DYNUNC_OK);
  double s0 = 0, delta = 0, f0 = 0;
  REQUIRE(dynunc_sos_params(fit, &s0, &delta, &f0) == DYNUNC_OK);
  CHECK(s0 == doctest::Approx(0.4).epsilon(1e-6));
  CHECK(delta == doctest::Approx(0.05).epsilon(1e-6));
  CHECK(f0 == doctest::Approx(8000.0).epsilon(1e-6));

  double num = 0.0, den[3] = {};
  REQUIRE(dynunc_sos_phys2filter(fit, &num, den) == DYNUNC_OK);
  CHECK(den[0] == 1.0);
  dynunc_filter* flt = nullptr;
  const double cden[3] = {den[0], den[1], den[2]};
  REQUIRE(dynunc_bilinear(&num, 1, cden, 3, 100000.0, f0, &flt) == DYNUNC_OK);
  int stable = 0;
  REQUIRE(dynunc_isstable(flt, &stable) == DYNUNC_OK);
  CHECK(stable == 1);

  dynunc_filter_free(flt);
  dynunc_sos_free(fit);
  dynunc_fresp_free(resp);
  dynunc_sos_free(truth);
}

TEST_CASE("capi: mc_propagate with a C callback") {
  auto model = [](const double* x, size_t nx, double* y, size_t ny, void*) -> int {
    if (nx != 2 || ny != 1) return 1;
    y[0] = 3.0 * x[0] - x[1];
    return 0;
  };
  const double est[2] = {1.0, 2.0};
  const double cov[4] = {0.04, 0.0, 0.0, 0.09};
  double mean = 0.0, sd = 0.0;
  REQUIRE(dynunc_mc_propagate(model, nullptr, est, 2, cov, 1, 100000, 3, &mean, &sd) ==
          DYNUNC_OK);
  CHECK(mean == doctest::Approx(1.0).epsilon(0.02));
  // var = 9*0.04 + 0.09 = 0.45
  CHECK(sd * sd == doctest::Approx(0.45).epsilon(0.03));
}

TEST_CASE("capi: csv and json files through the C surface") {
  TempDir dir;
  dynunc_ts* sig = nullptr;
  REQUIRE(dynunc_signal_sine(2.0, 5.0, 0.3, 100.0, 1.0, &sig) == DYNUNC_OK);
  const auto csv = (dir.path / "sine.csv").string();
  REQUIRE(dynunc_ts_write_csv(csv.c_str(), sig) == DYNUNC_OK);
  dynunc_ts* back = nullptr;
  REQUIRE(dynunc_ts_read_csv(csv.c_str(), &back) == DYNUNC_OK);
  CHECK(dynunc_ts_size(back) == dynunc_ts_size(sig));
  dynunc_ts_free(back);
  dynunc_ts_free(sig);

  CHECK(dynunc_ts_read_csv((dir.path / "absent.csv").string().c_str(), &back) ==
        DYNUNC_ERR_IO);
}

TEST_CASE("capi: pipeline runner") {
  TempDir dir;
  const auto cfg = dir.path / "demo.ini";
  std::ofstream(cfg) << "[pipeline]\nkind = demo_ringing\nseed = 7\noutdir = "
                     << (dir.path / "out").string() << "\n";
  REQUIRE(dynunc_pipeline_run(cfg.string().c_str(), nullptr, 0) == DYNUNC_OK);
  CHECK(fs::exists(dir.path / "out" / "report.txt"));
  CHECK(dynunc_pipeline_run((dir.path / "nope.ini").string().c_str(), nullptr, 0) ==
        DYNUNC_ERR_IO);
}
