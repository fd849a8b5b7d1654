#include "dynunc/sos.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "dynunc/mc.hpp"
#include "dynunc/rng.hpp"

namespace dynunc::sos {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

double SosParams::omega0() const { return kTwoPi * f0; }

void SosParams::validate() const {
  if (!(f0 > 0.0)) throw InvalidArgument("sos: f0 must be > 0");
  if (!(delta > 0.0)) throw InvalidArgument("sos: delta must be > 0");
  if (!std::isfinite(s0)) throw InvalidArgument("sos: non-finite gain");
  if (has_cov()) {
    if (cov.rows() != 3 || cov.cols() != 3)
      throw InvalidArgument("sos: parameter covariance must be 3x3");
    require_symmetric(cov, 1e-8, "sos parameter covariance");
  }
}

CVec sos_freq_resp(const SosParams& p, const Vec& freqs) {
  p.validate();
  if ((freqs.array() < 0.0).any()) throw InvalidArgument("sos_freq_resp: negative frequency");
  const double w0 = p.omega0();
  CVec out(freqs.size());
  for (Index k = 0; k < freqs.size(); ++k) {
    const double w = kTwoPi * freqs[k];
    out[k] = p.s0 * w0 * w0 / Complex(w0 * w0 - w * w, 2.0 * w * p.delta * w0);
  }
  return out;
}

ContinuousTf sos_phys2filter(const SosParams& p) {
  p.validate();
  const double w0 = p.omega0();
  ContinuousTf tf;
  tf.num = Vec::Constant(1, p.s0 * w0 * w0);
  tf.den = Vec(3);
  tf.den << 1.0, 2.0 * p.delta * w0, w0 * w0;
  return tf;
}

McResponseResult sos_mc_response(const SosParams& p, const Vec& freqs, long draws,
                                 ResponseForm form, std::uint64_t seed) {
  p.validate();
  if (draws < 100) throw InvalidArgument("sos_mc_response: need at least 100 draws");
  const Index m = freqs.size();
  if (m < 1) throw InvalidArgument("sos_mc_response: empty frequency grid");

  McResponseResult out;
  out.form = form;

  Vec est(3);
  est << p.s0, p.delta, p.f0;
  const bool exact = !p.has_cov() || max_abs(p.cov) == 0.0;
  const Mat factor = exact ? Mat() : chol_psd(p.cov);

  rng::Xoshiro256ss gen(seed);
  mc::RunningStats stats(2 * m, /*track_cov=*/true);
  long accepted = 0;
  long rejected = 0;
  Vec sample(2 * m);
  while (accepted < draws) {
    SosParams q = p;
    if (!exact) {
      const Vec draw = mc::sample_normal(est, factor, gen);
      q.s0 = draw[0];
      q.delta = draw[1];
      q.f0 = draw[2];
      if (!(q.delta > 0.0) || !(q.f0 > 0.0)) {
        ++rejected;
        if (rejected > accepted + draws)  // rejection rate above 50%
          throw NumericError("sos_mc_response: over half of the parameter draws are non-physical");
        continue;
      }
    }
    q.cov = Mat();
    const CVec resp = sos_freq_resp(q, freqs);
    if (form == ResponseForm::ReIm) {
      for (Index k = 0; k < m; ++k) {
        sample[k] = resp[k].real();
        sample[m + k] = resp[k].imag();
      }
    } else {
      for (Index k = 0; k < m; ++k) {
        sample[k] = std::abs(resp[k]);
        sample[m + k] = std::atan2(resp[k].imag(), resp[k].real());
      }
    }
    stats.update(sample);
    ++accepted;
    if (exact) {
      // degenerate MC: every draw is identical
      break;
    }
  }

  const Vec mean = stats.mean();
  const Mat cov = exact ? Mat::Zero(2 * m, 2 * m) : stats.covariance();
  if (form == ResponseForm::ReIm) {
    out.reim.freqs = freqs;
    out.reim.re = mean.head(m);
    out.reim.im = mean.tail(m);
    out.reim.cov = cov;
  } else {
    out.ampphase.freqs = freqs;
    out.ampphase.amplitude = mean.head(m);
    out.ampphase.phase = mean.tail(m);
    out.ampphase.cov = cov;
  }
  out.rejected = rejected;
  return out;
}

namespace {

struct ReciprocalFit {
  Vec coeffs;  // (1/S0, 2 delta/(S0 w0), 1/(S0 w0^2))
};

SosParams params_from_coeffs(const Vec& c) {
  if (!(c[0] > 0.0) || !(c[2] > 0.0))
    throw NumericError("fit_sos: no physical second-order system fits the data "
                       "(non-positive normal-form coefficients)");
  SosParams p;
  p.s0 = 1.0 / c[0];
  const double w0 = std::sqrt(c[0] / c[2]);
  p.f0 = w0 / kTwoPi;
  p.delta = c[1] * w0 / (2.0 * c[0]);
  if (!(p.delta > 0.0))
    throw NumericError("fit_sos: fitted damping is non-positive");
  return p;
}

Vec fit_reciprocal(const Vec& omega, const CVec& recip, const Vec& wre, const Vec& wim) {
  const Index m = omega.size();
  Mat a = Mat::Zero(2 * m, 3);
  Vec rhs(2 * m);
  for (Index k = 0; k < m; ++k) {
    a(k, 0) = wre[k];
    a(k, 2) = -wre[k] * omega[k] * omega[k];
    rhs[k] = wre[k] * recip[k].real();
    a(m + k, 1) = wim[k] * omega[k];
    rhs[m + k] = wim[k] * recip[k].imag();
  }
  Eigen::ColPivHouseholderQR<Mat> qr(a);
  qr.setThreshold(1e-12);
  if (qr.rank() < 3)
    throw NumericError("fit_sos: singular design (frequencies must span distinct values)");
  return qr.solve(rhs);
}

}  // namespace

SosParams fit_sos(const design::FreqRespData& s, const FitSosOptions& opt) {
  s.validate();
  const Index m = s.size();
  if (m < 3) throw InvalidArgument("fit_sos: need at least three frequencies");
  for (Index k = 0; k < m; ++k) {
    if (std::abs(s.value(k)) == 0.0)
      throw InvalidArgument("fit_sos: zero response value, reciprocal undefined");
  }

  const Vec omega = kTwoPi * s.freqs;
  auto reciprocal = [m](const CVec& resp) {
    CVec r(m);
    for (Index k = 0; k < m; ++k) r[k] = 1.0 / resp[k];
    return r;
  };

  // optional 1/variance weights for the reciprocal, from the per-bin 2x2
  // input covariance through the complex-reciprocal Jacobian
  Vec wre = Vec::Ones(m), wim = Vec::Ones(m);
  if (opt.weighted) {
    if (!s.has_cov()) throw InvalidArgument("fit_sos: weighting requested without covariance");
    for (Index k = 0; k < m; ++k) {
      const double c = s.re[k], d = s.im[k];
      const double mag2 = c * c + d * d;
      // K = 1/S: dReK = ((d^2-c^2) dc - 2cd dd)/mag2^2, dImK = (2cd dc + (d^2-c^2) dd)/mag2^2
      const double j11 = (d * d - c * c) / (mag2 * mag2);
      const double j12 = -2.0 * c * d / (mag2 * mag2);
      const double j21 = 2.0 * c * d / (mag2 * mag2);
      const double j22 = (d * d - c * c) / (mag2 * mag2);
      const double vcc = s.cov(k, k);
      const double vdd = s.cov(m + k, m + k);
      const double vcd = s.cov(k, m + k);
      const double var_re = j11 * j11 * vcc + 2.0 * j11 * j12 * vcd + j12 * j12 * vdd;
      const double var_im = j21 * j21 * vcc + 2.0 * j21 * j22 * vcd + j22 * j22 * vdd;
      wre[k] = var_re > 0.0 ? 1.0 / std::sqrt(var_re) : 1.0;
      wim[k] = var_im > 0.0 ? 1.0 / std::sqrt(var_im) : 1.0;
    }
  }

  SosParams fit = params_from_coeffs(fit_reciprocal(omega, reciprocal(s.values()), wre, wim));

  if (s.has_cov() && max_abs(s.cov) > 0.0 && opt.mc_draws > 0) {
    if (opt.mc_draws < 100) throw InvalidArgument("fit_sos: mc_draws must be >= 100");
    const Mat factor = chol_psd(s.cov);
    const Vec est = s.stacked();
    rng::Xoshiro256ss gen(opt.seed);
    mc::RunningStats stats(3, /*track_cov=*/true);
    long attempts = 0;
    const long max_attempts = 10 * opt.mc_draws;
    Vec sample(3);
    while (stats.count() < opt.mc_draws) {
      if (++attempts > max_attempts)
        throw NumericError("fit_sos: too many non-physical refit draws");
      const Vec draw = mc::sample_normal(est, factor, gen);
      CVec resp(m);
      bool ok = true;
      for (Index k = 0; k < m; ++k) {
        resp[k] = Complex(draw[k], draw[m + k]);
        if (std::abs(resp[k]) == 0.0) ok = false;
      }
      if (!ok) continue;
      try {
        const SosParams q = params_from_coeffs(fit_reciprocal(omega, reciprocal(resp), wre, wim));
        sample << q.s0, q.delta, q.f0;
      } catch (const NumericError&) {
        continue;
      }
      stats.update(sample);
    }
    fit.cov = psd_clipped(stats.covariance());
  }
  return fit;
}

filt::DigitalFilterU bilinear_discretize(const ContinuousTf& tf, double fs, double prewarp_hz) {
  if (!(fs > 0.0)) throw InvalidArgument("bilinear_discretize: fs must be > 0");
  if (tf.num.size() == 0 || tf.den.size() == 0)
    throw InvalidArgument("bilinear_discretize: empty polynomial");
  if (tf.num.size() > tf.den.size())
    throw InvalidArgument("bilinear_discretize: numerator degree exceeds denominator degree");
  if (prewarp_hz < 0.0 || prewarp_hz >= fs / 2.0)
    throw InvalidArgument("bilinear_discretize: prewarp frequency must lie in [0, fs/2)");

  double k;
  if (prewarp_hz > 0.0) {
    const double wp = kTwoPi * prewarp_hz;
    k = wp / std::tan(wp / (2.0 * fs));
  } else {
    k = 2.0 * fs;
  }

  // s = k (1 - u)/(1 + u) with u = z^-1: each s^d term contributes
  // k^d (1-u)^d (1+u)^(L-d), expanded by binomial convolution.
  const Index l = tf.den.size() - 1;
  auto times_linear = [](const Vec& p, double c1) {
    Vec t = Vec::Zero(p.size() + 1);
    for (Index i = 0; i < p.size(); ++i) {
      t[i] += p[i];
      t[i + 1] += p[i] * c1;
    }
    return t;
  };
  auto expand = [&](const Vec& poly) {
    const Index deg = poly.size() - 1;
    Vec acc = Vec::Zero(l + 1);
    for (Index j = 0; j <= deg; ++j) {
      const double coeff = poly[j];
      if (coeff == 0.0) continue;
      const Index d = deg - j;  // descending powers
      Vec term = Vec::Ones(1);
      for (Index r = 0; r < d; ++r) term = times_linear(term, -1.0);
      for (Index r = 0; r < l - d; ++r) term = times_linear(term, 1.0);
      acc += coeff * std::pow(k, static_cast<double>(d)) * term;
    }
    return acc;
  };

  Vec num = expand(tf.num);
  Vec den = expand(tf.den);
  if (std::abs(den[0]) < 1e-300 * std::max(1.0, den.cwiseAbs().maxCoeff()))
    throw NumericError("bilinear_discretize: degenerate denominator after substitution");

  filt::DigitalFilterU out;
  out.b = num / den[0];
  out.a = den / den[0];
  return out;
}

}  // namespace dynunc::sos
