#include "doctest.h"

#include <cmath>
#include <numbers>

#include "dynunc/design.hpp"
#include "dynunc/filter.hpp"
#include "dynunc/sos.hpp"
#include "support/test_utils.hpp"

using namespace dynunc;

namespace {

constexpr double kPi = std::numbers::pi;

// Normalized-fs SOS fixture shared by the deconvolution design tests:
// resonance at fs/8, light damping.
struct SosFixture {
  sos::SosParams params;
  double fs = 1.0;
  design::FreqRespData grid;  // M points on [0, fs/2]

  explicit SosFixture(Index m = 128) {
    params.s0 = 1.0;
    params.delta = 0.05;
    params.f0 = fs / 8.0;
    grid.freqs = Vec::LinSpaced(m, 0.0, fs / 2.0);
    const CVec s = sos::sos_freq_resp(params, grid.freqs);
    grid.re = s.real();
    grid.im = s.imag();
  }

  // emphasis on the band to be inverted; the out-of-band response is left
  // to the low-pass stage
  Vec passband_weights(double edge_over_f0 = 1.6, double out_weight = 1e-3) const {
    Vec w(grid.size());
    for (Index k = 0; k < grid.size(); ++k)
      w[k] = grid.freqs[k] <= edge_over_f0 * params.f0 ? 1.0 : out_weight;
    return w;
  }
};

/// max |H(jw) F(e^{jw Ts}) - e^{-jw tau0}| over w <= wmax
double passband_error(const sos::SosParams& p, const filt::DigitalFilterU& flt, double fs,
                      double wmax, Index npts = 400) {
  const Vec freqs = Vec::LinSpaced(npts, 0.0, wmax / (2.0 * kPi));
  const CVec h = sos::sos_freq_resp(p, freqs);
  const CVec f = filt::freq_resp(flt, freqs, fs);
  double worst = 0.0;
  for (Index k = 0; k < npts; ++k) {
    const Complex target =
        std::polar(1.0, -2.0 * kPi * freqs[k] / fs * double(flt.delay_n0));
    worst = std::max(worst, std::abs(h[k] * f[k] - target));
  }
  return worst;
}

design::FreqRespData unity_response(Index m, double fs) {
  design::FreqRespData d;
  d.freqs = Vec::LinSpaced(m, 0.0, fs / 2.0);
  d.re = Vec::Ones(m);
  d.im = Vec::Zero(m);
  return d;
}

}  // namespace

TEST_SUITE("design") {

TEST_CASE("lsfir: inverse of unity is a pure delay") {
  const design::FreqRespData h = unity_response(48, 1.0);
  design::LsfirOptions opt;
  opt.order = 12;
  opt.delay_n0 = 5;
  opt.fs = 1.0;
  double residual = -1.0;
  const auto flt = design::lsfir(h, opt, &residual);
  CHECK(residual <= 1e-8);
  for (Index i = 0; i < flt.b.size(); ++i) {
    CHECK(std::abs(flt.b[i] - (i == 5 ? 1.0 : 0.0)) <= 1e-8);
  }
  CHECK(flt.delay_n0 == 5);
  CHECK(flt.is_fir());
}

TEST_CASE("lsfir: order-48 inverse of the fs/8 resonance meets the 1e-3 passband error") {
  const SosFixture fx;
  design::LsfirOptions opt;
  opt.order = 48;
  opt.delay_n0 = 24;
  opt.fs = fx.fs;
  opt.weights = fx.passband_weights();
  const auto flt = design::lsfir(fx.grid, opt);
  const double w0 = 2.0 * kPi * fx.params.f0;
  CHECK(passband_error(fx.params, flt, fx.fs, 0.8 * w0) < 1e-3);
}

TEST_CASE("lsfir: passband error is non-increasing over nested orders") {
  const SosFixture fx;
  const double w0 = 2.0 * kPi * fx.params.f0;
  double prev = std::numeric_limits<double>::infinity();
  for (int order : {8, 16, 32, 48}) {
    design::LsfirOptions opt;
    opt.order = order;
    opt.delay_n0 = order / 2;
    opt.fs = fx.fs;
    opt.weights = fx.passband_weights();
    const auto flt = design::lsfir(fx.grid, opt);
    const double err = passband_error(fx.params, flt, fx.fs, 0.8 * w0);
    CHECK(err <= prev * (1.0 + 1e-9));
    prev = err;
  }
}

TEST_CASE("lsfir: coefficient covariance from response draws covers a known deconvolution") {
  // calibration of the fs/8 resonance with 0.5% re/im noise
  SosFixture fx(64);
  const Index m = fx.grid.size();
  Vec diag(2 * m);
  for (Index k = 0; k < m; ++k) {
    const double s = 0.005 * std::abs(fx.grid.value(k));
    diag[k] = s * s;
    diag[m + k] = s * s;
  }

  rng::Xoshiro256ss gen(7);
  design::FreqRespData measured = fx.grid;
  for (Index k = 0; k < m; ++k) {
    measured.re[k] += std::sqrt(diag[k]) * gen.normal();
    measured.im[k] += std::sqrt(diag[m + k]) * gen.normal();
  }
  measured.cov = diag.asDiagonal();

  design::LsfirOptions opt;
  opt.order = 36;
  opt.delay_n0 = 18;
  opt.fs = fx.fs;
  opt.weights = fx.passband_weights();
  opt.mc_draws = 1000;
  opt.seed = 21;
  const auto flt = design::lsfir(measured, opt);
  REQUIRE(flt.has_cov());

  // very band-limited measurand so the truncation bias is negligible
  const Index n = 512;
  Vec y(n);
  for (Index i = 0; i < n; ++i) {
    const double t = double(i) - 128.0;
    y[i] = std::exp(-0.5 * std::pow(t / 24.0, 2));
  }
  const auto sysd = sos::bilinear_discretize(sos::sos_phys2filter(fx.params), fx.fs);
  TimeSeriesU x;
  x.dt = 1.0;
  x.values = filt::filter_values(sysd.b, sysd.a, y);

  const TimeSeriesU est = filt::fir_unc_filter(x, flt);
  const Vec u = est.unc.pointwise_std(n);
  Index covered = 0, counted = 0;
  for (Index i = opt.order + 1; i < n; ++i) {
    if (i < opt.delay_n0) continue;
    const double truth = y[i - opt.delay_n0];
    if (std::abs(truth) < 1e-3) continue;  // only where the measurand lives
    ++counted;
    if (std::abs(est.values[i] - truth) <= 1.96 * u[i]) ++covered;
  }
  REQUIRE(counted > 50);
  CHECK(double(covered) / double(counted) >= 0.90);
}

TEST_CASE("lsfir: argument guards") {
  const design::FreqRespData h = unity_response(6, 1.0);
  design::LsfirOptions opt;
  opt.order = 8;  // 2(order+1) > 2M
  opt.fs = 1.0;
  CHECK_THROWS_AS(design::lsfir(h, opt), InvalidArgument);
  opt.order = 2;
  opt.delay_n0 = -1;
  CHECK_THROWS_AS(design::lsfir(h, opt), InvalidArgument);
}

TEST_CASE("lsiir: recovers a one-pole generator exactly") {
  filt::DigitalFilterU gener;
  gener.b = Vec::Constant(1, 0.4);
  gener.a = (Vec(2) << 1.0, -0.5).finished();
  const double fs = 1.0;
  design::FreqRespData h;
  h.freqs = Vec::LinSpaced(20, 0.01, 0.49);
  const CVec resp = filt::freq_resp(gener, h.freqs, fs);
  h.re = resp.real();
  h.im = resp.imag();

  design::LsiirOptions opt;
  opt.nb = 1;
  opt.na = 1;
  opt.fs = fs;
  opt.inverse = false;
  const auto res = design::lsiir(h, opt);
  CHECK(res.filter.b[0] == doctest::Approx(0.4).epsilon(1e-6));
  CHECK(std::abs(res.filter.b[1]) <= 1e-6);
  CHECK(res.filter.a[1] == doctest::Approx(-0.5).epsilon(1e-6));
  CHECK(res.residual <= 1e-6);
  CHECK(!res.stabilized);
  CHECK(design::isstable(res.filter));
}

TEST_CASE("lsiir: unity response gives a delayed impulse") {
  const design::FreqRespData h = unity_response(32, 1.0);
  design::LsiirOptions opt;
  opt.nb = 6;
  opt.na = 1;
  opt.delay_n0 = 3;
  opt.fs = 1.0;
  const auto res = design::lsiir(h, opt);
  CHECK(res.residual <= 1e-7);
  CHECK(std::abs(res.filter.b[3] - 1.0) <= 1e-6);
  CHECK(std::abs(res.filter.a[1]) <= 1e-6);
}

TEST_CASE("lsiir: stabilization kicks in for a non-minimum-phase inverse") {
  // zero outside the unit circle: the exact inverse is unstable
  filt::DigitalFilterU gener;
  gener.b = (Vec(2) << 1.0, -1.5).finished();
  gener.a = Vec::Ones(1);
  design::FreqRespData h;
  h.freqs = Vec::LinSpaced(40, 0.005, 0.495);
  const CVec resp = filt::freq_resp(gener, h.freqs, 1.0);
  h.re = resp.real();
  h.im = resp.imag();

  design::LsiirOptions opt;
  opt.nb = 2;
  opt.na = 2;
  opt.delay_n0 = 0;
  opt.fs = 1.0;
  opt.inverse = true;
  const auto res = design::lsiir(h, opt);
  CHECK(res.stabilized);
  CHECK(design::isstable(res.filter));
}

TEST_CASE("lsiir: every returned filter is stable across random fixtures") {
  rng::Xoshiro256ss gen(3);
  for (int rep = 0; rep < 10; ++rep) {
    sos::SosParams p;
    p.s0 = 0.2 + gen.uniform01();
    p.delta = 0.03 + 0.3 * gen.uniform01();
    p.f0 = 0.05 + 0.15 * gen.uniform01();
    design::FreqRespData h;
    h.freqs = Vec::LinSpaced(48, 0.0, 0.5);
    const CVec s = sos::sos_freq_resp(p, h.freqs);
    h.re = s.real();
    h.im = s.imag();
    design::LsiirOptions opt;
    opt.nb = 5;
    opt.na = 5;
    opt.delay_n0 = 2 + int(gen.next() % 4);
    opt.fs = 1.0;
    const auto res = design::lsiir(h, opt);
    CHECK(design::isstable(res.filter));
  }
}

TEST_CASE("kaiser_lowpass: unit DC gain and rectangular-window limit") {
  const auto flt = design::kaiser_lowpass(32, 0.1, 1.0, 6.0);
  CHECK(flt.b.sum() == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(flt.delay_n0 == 16);

  // beta = 0: Kaiser window degenerates to rectangular
  const auto rect = design::kaiser_lowpass(16, 0.1, 1.0, 0.0);
  const double fc = 2.0 * 0.1;
  Vec expect(17);
  for (int i = 0; i <= 16; ++i) {
    const double t = double(i) - 8.0;
    const double x = fc * t;
    expect[i] = fc * (x == 0.0 ? 1.0 : std::sin(kPi * x) / (kPi * x));
  }
  expect /= expect.sum();
  CHECK((rect.b - expect).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("kaiser_lowpass: 40 dB stopband beyond 1.5x cutoff for order 64, beta 8") {
  const double fs = 1.0, cutoff = fs / 8.0;
  const auto flt = design::kaiser_lowpass(64, cutoff, fs, 8.0);
  const Vec freqs = Vec::LinSpaced(300, 1.5 * cutoff, fs / 2.0);
  const CVec resp = filt::freq_resp(flt, freqs, fs);
  double worst = 0.0;
  for (Index k = 0; k < freqs.size(); ++k) worst = std::max(worst, std::abs(resp[k]));
  CHECK(worst <= 0.01);  // -40 dB
}

TEST_CASE("kaiser_lowpass: parameter guards") {
  CHECK_THROWS_AS(design::kaiser_lowpass(15, 0.1, 1.0, 6.0), InvalidArgument);
  CHECK_THROWS_AS(design::kaiser_lowpass(16, 0.6, 1.0, 6.0), InvalidArgument);
  CHECK_THROWS_AS(design::kaiser_lowpass(16, 0.0, 1.0, 6.0), InvalidArgument);
}

TEST_CASE("cascade of inverse filter and Kaiser low pass deconvolves in band, attenuates out of band") {
  const SosFixture fx;
  design::LsfirOptions opt;
  opt.order = 48;
  opt.delay_n0 = 24;
  opt.fs = fx.fs;
  opt.weights = fx.passband_weights();
  const auto inv = design::lsfir(fx.grid, opt);
  const auto low = design::kaiser_lowpass(64, 1.6 * fx.params.f0, fx.fs, 8.0);

  // cascade: convolution of coefficient vectors, delays add
  filt::DigitalFilterU casc;
  casc.b = Vec::Zero(inv.b.size() + low.b.size() - 1);
  for (Index i = 0; i < inv.b.size(); ++i)
    for (Index j = 0; j < low.b.size(); ++j) casc.b[i + j] += inv.b[i] * low.b[j];
  casc.a = Vec::Ones(1);
  casc.delay_n0 = inv.delay_n0 + low.delay_n0;

  const double w1 = 2.0 * kPi * 0.8 * fx.params.f0;
  const double w2 = 2.0 * kPi * 2.75 * fx.params.f0;
  CHECK(passband_error(fx.params, casc, fx.fs, w1) < 1e-2);

  const Vec stop = Vec::LinSpaced(100, w2 / (2.0 * kPi), fx.fs / 2.0);
  const CVec hstop = sos::sos_freq_resp(fx.params, stop);
  const CVec fstop = filt::freq_resp(casc, stop, fx.fs);
  for (Index k = 0; k < stop.size(); ++k)
    CHECK(std::abs(hstop[k] * fstop[k]) < 1e-2);
}

TEST_CASE("group_delay: pure delay and linear-phase FIR") {
  filt::DigitalFilterU delay;
  delay.b = Vec::Zero(9);
  delay.b[4] = 1.0;
  const Vec freqs = Vec::LinSpaced(16, 0.0, 0.45);
  const Vec tau = design::group_delay(delay, freqs, 1.0);
  for (Index k = 0; k < tau.size(); ++k) CHECK(tau[k] == doctest::Approx(4.0).epsilon(1e-9));

  const auto lp = design::kaiser_lowpass(24, 0.1, 1.0, 5.0);
  const Vec freqs2 = Vec::LinSpaced(10, 0.0, 0.08);
  const Vec tau2 = design::group_delay(lp, freqs2, 1.0);
  for (Index k = 0; k < tau2.size(); ++k) CHECK(tau2[k] == doctest::Approx(12.0).epsilon(1e-9));
}

TEST_CASE("group_delay: one-pole filter matches a finite-difference of the phase") {
  filt::DigitalFilterU flt;
  flt.b = Vec::Constant(1, 0.3);
  flt.a = (Vec(2) << 1.0, -0.7).finished();
  const Vec freqs = Vec::LinSpaced(12, 0.02, 0.4);
  const Vec tau = design::group_delay(flt, freqs, 1.0);

  const double h = 1e-6;
  for (Index k = 0; k < freqs.size(); ++k) {
    Vec pair(2);
    pair << freqs[k] - h, freqs[k] + h;
    const CVec r = filt::freq_resp(flt, pair, 1.0);
    double dphi = std::arg(r[1]) - std::arg(r[0]);
    dphi = std::remainder(dphi, 2.0 * kPi);
    const double fd = -dphi / (2.0 * kPi * 2.0 * h);  // samples at fs = 1
    CHECK(std::abs(tau[k] - fd) <= 1e-3);
  }
}

TEST_CASE("group_delay: zero response bin throws") {
  filt::DigitalFilterU flt;
  flt.b = (Vec(2) << 1.0, 1.0).finished();  // null at Nyquist
  const Vec freqs = Vec::Constant(1, 0.5);
  CHECK_THROWS_AS(design::group_delay(flt, freqs, 1.0), NumericError);
}

TEST_CASE("isstable: explicit denominators and constructed root radii") {
  filt::DigitalFilterU flt;
  flt.b = Vec::Ones(1);
  flt.a = (Vec(2) << 1.0, -0.5).finished();
  CHECK(design::isstable(flt));
  flt.a = (Vec(2) << 1.0, -2.0).finished();
  CHECK(!design::isstable(flt));

  rng::Xoshiro256ss gen(8);
  for (double radius : {0.999, 1.001}) {
    const double angle = kPi * gen.uniform01();
    // conjugate pole pair at the given radius
    const double re = radius * std::cos(angle), im = radius * std::sin(angle);
    filt::DigitalFilterU f2;
    f2.b = Vec::Ones(1);
    f2.a = (Vec(3) << 1.0, -2.0 * re, re * re + im * im).finished();
    CHECK(design::isstable(f2) == (radius < 1.0));
  }
}

TEST_CASE("savgol: reproduces polynomials and differentiates ramps") {
  const Index n = 64;
  Vec cubic(n), ramp(n);
  for (Index i = 0; i < n; ++i) {
    const double t = double(i);
    cubic[i] = 1.0 - 0.5 * t + 0.02 * t * t - 1e-4 * t * t * t;
    ramp[i] = 3.0 + 2.5 * t;
  }
  const Vec smoothed = design::savgol(cubic, 11, 3);
  for (Index i = 0; i < n; ++i) {
    CHECK(std::abs(smoothed[i] - cubic[i]) <= 1e-10 * std::max(1.0, std::abs(cubic[i])));
  }

  // ramp[i] = 3 + 2.5 i, so the time derivative is 2.5/dt
  const double dt = 0.1;
  const Vec slope = design::savgol(ramp, 11, 3, 1, dt);
  for (Index i = 0; i < n; ++i) CHECK(slope[i] == doctest::Approx(2.5 / dt).epsilon(1e-9));
}

TEST_CASE("savgol: smooths a noisy sine at least threefold") {
  // The window-21 cubic kernel attenuates white-noise variance by 0.1076,
  // i.e. a 3.05x std reduction at best; a slow sine keeps the distortion
  // negligible and the boundary fits (higher variance by construction) are
  // excluded. Averaged over seeds to pin the ratio.
  const Index n = 4000;
  Vec clean(n);
  for (Index i = 0; i < n; ++i) clean[i] = std::sin(2.0 * kPi * double(i) / 500.0);

  double raw2 = 0.0, smooth2 = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    rng::Xoshiro256ss gen(seed);
    Vec noisy = clean;
    for (Index i = 0; i < n; ++i) noisy[i] += 0.1 * gen.normal();
    const Vec smoothed = design::savgol(noisy, 21, 3);
    for (Index i = 10; i < n - 10; ++i) {
      raw2 += std::pow(noisy[i] - clean[i], 2);
      smooth2 += std::pow(smoothed[i] - clean[i], 2);
    }
  }
  CHECK(std::sqrt(smooth2) <= std::sqrt(raw2) / 3.0);
}

TEST_CASE("savgol: parameter guards") {
  const Vec x = Vec::Zero(32);
  CHECK_THROWS_AS(design::savgol(x, 10, 3), InvalidArgument);
  CHECK_THROWS_AS(design::savgol(x, 11, 11), InvalidArgument);
  CHECK_THROWS_AS(design::savgol(x, 11, 3, 4), InvalidArgument);
  CHECK_THROWS_AS(design::savgol(Vec::Zero(5), 11, 3), InvalidArgument);
}

}  // TEST_SUITE
