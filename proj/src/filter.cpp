#include "dynunc/filter.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "dynunc/design.hpp"
#include "dynunc/dft.hpp"
#include "dynunc/mc.hpp"
#include "dynunc/rng.hpp"

namespace dynunc::filt {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

DigitalFilterU DigitalFilterU::fir(Vec b, int delay_n0) {
  DigitalFilterU f;
  f.b = std::move(b);
  f.a = Vec::Ones(1);
  f.delay_n0 = delay_n0;
  return f;
}

void DigitalFilterU::validate() const {
  if (b.size() == 0) throw InvalidArgument("filter: empty numerator");
  if (a.size() == 0 || a[0] != 1.0) throw InvalidArgument("filter: a0 must be exactly 1");
  if (!b.allFinite() || !a.allFinite()) throw InvalidArgument("filter: non-finite coefficients");
  if (delay_n0 < 0) throw InvalidArgument("filter: delay must be >= 0");
  if (has_cov()) {
    if (cov.rows() != n_params() || cov.cols() != n_params())
      throw InvalidArgument("filter: covariance must cover (b, a-tail)");
    require_symmetric(cov, 1e-8, "filter covariance");
  }
}

Vec filter_values(const Vec& b, const Vec& a, const Vec& x) {
  const Index order = std::max(b.size(), a.size()) - 1;
  Vec bp = Vec::Zero(order + 1);
  bp.head(b.size()) = b;
  Vec ap = Vec::Zero(order + 1);
  ap.head(a.size()) = a;

  Vec z = Vec::Zero(order);
  Vec y(x.size());
  for (Index n = 0; n < x.size(); ++n) {
    const double xn = x[n];
    const double yn = bp[0] * xn + (order > 0 ? z[0] : 0.0);
    for (Index i = 0; i + 1 < order; ++i) z[i] = bp[i + 1] * xn + z[i + 1] - ap[i + 1] * yn;
    if (order > 0) z[order - 1] = bp[order] * xn - ap[order] * yn;
    y[n] = yn;
  }
  return y;
}

CVec freq_resp(const DigitalFilterU& flt, const Vec& freqs, double fs) {
  if (!(fs > 0.0)) throw InvalidArgument("freq_resp: fs must be > 0");
  CVec out(freqs.size());
  for (Index k = 0; k < freqs.size(); ++k) {
    const double omega = kTwoPi * freqs[k] / fs;
    const Complex w = std::polar(1.0, -omega);
    Complex num(0.0, 0.0), den(0.0, 0.0);
    Complex zm(1.0, 0.0);
    for (Index i = 0; i < std::max(flt.b.size(), flt.a.size()); ++i) {
      if (i < flt.b.size()) num += flt.b[i] * zm;
      if (i < flt.a.size()) den += flt.a[i] * zm;
      zm *= w;
    }
    out[k] = num / den;
  }
  return out;
}

TimeSeriesU fir_unc_filter(const TimeSeriesU& x, const DigitalFilterU& flt) {
  x.validate();
  flt.validate();
  if (!flt.is_fir())
    throw InvalidArgument("fir_unc_filter: filter has a recursive part; use iir_ss_filter or smc_filter");

  const Index n = x.size();
  const Index taps = flt.b.size();
  TimeSeriesU out;
  out.dt = x.dt;
  out.t0 = x.t0;
  out.values = filter_values(flt.b, flt.a, x.values);

  Vec var = Vec::Zero(n);

  // input-noise contribution
  using Kind = Uncertainty::Kind;
  switch (x.unc.kind) {
    case Kind::None:
      break;
    case Kind::White: {
      const double s2 = x.unc.white_std * x.unc.white_std;
      double acc = 0.0;
      for (Index nn = 0; nn < n; ++nn) {
        if (nn < taps) acc += flt.b[nn] * flt.b[nn];
        var[nn] += s2 * acc;
      }
      break;
    }
    case Kind::Pointwise: {
      for (Index nn = 0; nn < n; ++nn) {
        double acc = 0.0;
        for (Index k = 0; k < taps && k <= nn; ++k) {
          const double s = x.unc.stds[nn - k];
          acc += flt.b[k] * flt.b[k] * s * s;
        }
        var[nn] += acc;
      }
      break;
    }
    case Kind::Full: {
      for (Index nn = 0; nn < n; ++nn) {
        double acc = 0.0;
        for (Index k = 0; k < taps && k <= nn; ++k) {
          for (Index l = 0; l < taps && l <= nn; ++l)
            acc += flt.b[k] * flt.b[l] * x.unc.cov(nn - k, nn - l);
        }
        var[nn] += acc;
      }
      break;
    }
  }

  // coefficient contribution through the regressor of past inputs
  if (flt.has_cov() && max_abs(flt.cov) > 0.0) {
    Vec window = Vec::Zero(taps);
    for (Index nn = 0; nn < n; ++nn) {
      for (Index k = std::min(taps - 1, nn); k >= 1; --k) window[k] = window[k - 1];
      window[0] = x.values[nn];
      var[nn] += window.dot(flt.cov * window);
    }
  }

  out.unc = Uncertainty::pointwise(var.cwiseMax(0.0).cwiseSqrt());
  return out;
}

StateSpace tf_to_state_space(const DigitalFilterU& flt) {
  flt.validate();
  const Index p = std::max(flt.order_b(), flt.order_a());
  Vec bp = Vec::Zero(p + 1);
  bp.head(flt.b.size()) = flt.b;
  Vec ap = Vec::Zero(p + 1);
  ap.head(flt.a.size()) = flt.a;

  StateSpace ss;
  ss.state = Mat::Zero(p, p);
  ss.input = Mat::Zero(p, 1);
  ss.output = Mat::Zero(1, p);
  ss.feedthrough = Mat::Constant(1, 1, bp[0]);
  if (p == 0) return ss;

  for (Index i = 0; i < p; ++i) ss.state(0, i) = -ap[i + 1];
  for (Index i = 1; i < p; ++i) ss.state(i, i - 1) = 1.0;
  ss.input(0, 0) = 1.0;
  for (Index i = 0; i < p; ++i) ss.output(0, i) = bp[i + 1] - ap[i + 1] * bp[0];
  ss.validate();
  return ss;
}

TimeSeriesU iir_ss_filter(const TimeSeriesU& x, const DigitalFilterU& flt) {
  x.validate();
  flt.validate();
  if (flt.has_cov() && max_abs(flt.cov) > 0.0)
    throw InvalidArgument("iir_ss_filter: coefficient covariance not supported; use smc_filter");
  if (x.unc.kind == Uncertainty::Kind::Full)
    throw InvalidArgument("iir_ss_filter: full input covariance not supported; use mc_propagate");
  if (!design::isstable(flt)) throw NumericError("iir_ss_filter: unstable filter");

  const Index n = x.size();
  TimeSeriesU out;
  out.dt = x.dt;
  out.t0 = x.t0;
  out.values = filter_values(flt.b, flt.a, x.values);

  const StateSpace ss = tf_to_state_space(flt);
  const Index p = ss.state.rows();
  const double d = ss.feedthrough(0, 0);

  Vec var(n);
  if (p == 0) {
    for (Index nn = 0; nn < n; ++nn) var[nn] = d * d * x.unc.variance_at(nn);
  } else {
    Mat pcov = Mat::Zero(p, p);
    for (Index nn = 0; nn < n; ++nn) {
      if (nn > 0) {
        pcov = ss.state * pcov * ss.state.transpose() +
               ss.input * x.unc.variance_at(nn - 1) * ss.input.transpose();
      }
      var[nn] = (ss.output * pcov * ss.output.transpose())(0, 0) +
                d * d * x.unc.variance_at(nn);
    }
  }

  out.unc = Uncertainty::pointwise(var.cwiseMax(0.0).cwiseSqrt());
  return out;
}

TimeSeriesU smc_filter(const TimeSeriesU& x, const DigitalFilterU& flt, const SmcOptions& opt) {
  x.validate();
  flt.validate();
  if (opt.draws < 100) throw InvalidArgument("smc_filter: need at least 100 draws");
  if (opt.block < 1) throw InvalidArgument("smc_filter: block must be >= 1");
  if (x.unc.kind == Uncertainty::Kind::Full)
    throw InvalidArgument("smc_filter: full input covariance not supported");

  const Index n = x.size();
  const Index nb = flt.b.size();
  const Index na = flt.a.size();
  const Index order = std::max(nb, na) - 1;
  const Index nparams = flt.n_params();

  Vec theta_mean(nparams);
  theta_mean.head(nb) = flt.b;
  if (na > 1) theta_mean.tail(na - 1) = flt.a.tail(na - 1);
  const bool sample_coeffs = flt.has_cov() && max_abs(flt.cov) > 0.0;
  const Mat factor = sample_coeffs ? chol_psd(flt.cov) : Mat();

  const long m = opt.draws;
  const long max_attempts = 10 * m;
  long attempts = 0;

  // Per-draw generators: draw k's stream is independent of the block size,
  // so the running statistics are bit-identical under re-blocking.
  std::vector<rng::Xoshiro256ss> gens;
  gens.reserve(m);
  std::vector<Vec> bs(m), as(m);  // padded to order+1
  auto pad = [order](const Vec& v) {
    Vec p = Vec::Zero(order + 1);
    p.head(v.size()) = v;
    return p;
  };
  for (long k = 0; k < m; ++k) {
    gens.push_back(rng::Xoshiro256ss::substream(opt.seed, static_cast<std::uint64_t>(k)));
    if (!sample_coeffs) {
      bs[k] = pad(flt.b);
      as[k] = pad(flt.a);
      continue;
    }
    for (;;) {
      if (++attempts > max_attempts)
        throw NumericError("smc_filter: coefficient covariance implies instability "
                           "(too many unstable draws)");
      const Vec theta = mc::sample_normal(theta_mean, factor, gens[k]);
      Vec bk = theta.head(nb);
      Vec ak = Vec::Ones(na);
      if (na > 1) ak.tail(na - 1) = theta.tail(na - 1);
      DigitalFilterU cand;
      cand.b = bk;
      cand.a = ak;
      if (design::isstable(cand)) {
        bs[k] = pad(bk);
        as[k] = pad(ak);
        break;
      }
    }
  }

  std::vector<Vec> states(m, Vec::Zero(order));
  Vec mean = Vec::Zero(n);
  Vec m2 = Vec::Zero(n);
  Vec xblock(opt.block);

  for (Index start = 0; start < n; start += opt.block) {
    const Index len = std::min(opt.block, n - start);
    for (long k = 0; k < m; ++k) {
      // per-draw noisy input for this block, in sample order
      for (Index i = 0; i < len; ++i) {
        double v = x.values[start + i];
        const double s = x.unc.kind == Uncertainty::Kind::None
                             ? 0.0
                             : std::sqrt(x.unc.variance_at(start + i));
        if (s > 0.0) v += s * gens[k].normal();
        xblock[i] = v;
      }
      // continue the draw's filter state across blocks
      Vec& z = states[k];
      const Vec& bp = bs[k];
      const Vec& ap = as[k];
      const double count = static_cast<double>(k + 1);
      for (Index i = 0; i < len; ++i) {
        const double xn = xblock[i];
        const double yn = bp[0] * xn + (order > 0 ? z[0] : 0.0);
        for (Index j = 0; j + 1 < order; ++j) z[j] = bp[j + 1] * xn + z[j + 1] - ap[j + 1] * yn;
        if (order > 0) z[order - 1] = bp[order] * xn - ap[order] * yn;
        const Index idx = start + i;
        const double delta = yn - mean[idx];
        mean[idx] += delta / count;
        m2[idx] += delta * (yn - mean[idx]);
      }
    }
  }

  TimeSeriesU out;
  out.dt = x.dt;
  out.t0 = x.t0;
  out.values = std::move(mean);
  Vec var = m2 / static_cast<double>(m - 1);
  out.unc = Uncertainty::pointwise(var.cwiseMax(0.0).cwiseSqrt());
  return out;
}

Vec dynamic_error_bound(const DigitalFilterU& flt, const CVec& h, const SpectrumU& x,
                        double w1, double w2, BoundBreakdown* breakdown) {
  flt.validate();
  x.validate();
  if (h.size() != x.bins())
    throw InvalidArgument("dynamic_error_bound: response grid does not match the spectrum");
  if (!(w1 >= 0.0) || !(w2 >= w1))
    throw InvalidArgument("dynamic_error_bound: need 0 <= w1 <= w2");

  const Index m = x.bins();
  const Index n = x.signal_length();
  const double df = x.freqs[1] - x.freqs[0];
  const double fs = static_cast<double>(n) * df;
  const double ts = 1.0 / fs;

  const CVec f = freq_resp(flt, x.freqs, fs);
  BoundBreakdown split;
  double total = 0.0;
  for (Index k = 0; k < m; ++k) {
    const double omega = kTwoPi * x.freqs[k];
    const Complex target = std::polar(1.0, -omega * static_cast<double>(flt.delay_n0) * ts);
    const double r = std::abs(h[k] * f[k] - target);
    double wk = 2.0;
    if (k == 0) wk = 1.0;
    if (x.nyquist_bin && k == m - 1) wk = 1.0;
    const double contrib = wk * r * std::abs(x.value(k)) / static_cast<double>(n);
    total += contrib;
    if (omega <= w1)
      split.below_w1 += contrib;
    else if (omega <= w2)
      split.transition += contrib;
    else
      split.above_w2 += contrib;
  }
  if (breakdown) *breakdown = split;
  return Vec::Constant(n, total);
}

DeconvResult deconvolve(const TimeSeriesU& x, const DigitalFilterU& flt, const CVec& h,
                        double w1, double w2) {
  DeconvResult out;
  out.y = fir_unc_filter(x, flt);
  TimeSeriesU values_only;
  values_only.values = out.y.values;
  values_only.dt = out.y.dt;
  out.delta_bound = dynamic_error_bound(flt, h, dft::gum_dft(values_only), w1, w2);
  return out;
}

Index transient_length(const DigitalFilterU& flt) {
  flt.validate();
  const Index nb = flt.order_b();
  if (flt.is_fir()) return nb;
  const CVec roots = design::denominator_roots(flt.a);
  double rho = 0.0;
  for (Index i = 0; i < roots.size(); ++i) rho = std::max(rho, std::abs(roots[i]));
  if (rho >= 1.0) throw NumericError("transient_length: unstable filter");
  if (rho <= 0.0) return nb;
  const double tau = -1.0 / std::log(rho);
  return std::max(nb, static_cast<Index>(std::ceil(3.0 * tau)));
}

}  // namespace dynunc::filt
