#include "dynunc/dft.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

namespace dynunc::dft {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Index half_bins(Index n) { return n % 2 == 0 ? n / 2 + 1 : (n + 1) / 2; }

/// Applies the half-spectrum DFT map R^N -> R^{2M} via one real FFT.
class ForwardMap {
public:
  explicit ForwardMap(Index n) : n_(n), m_(half_bins(n)), in_(n), full_(n) {}

  Index out_dim() const { return 2 * m_; }

  template <typename In, typename Out>
  void apply(const In& v, Out&& out) {
    for (Index i = 0; i < n_; ++i) in_[i] = v[i];
    fft_.fwd(full_, in_);
    for (Index k = 0; k < m_; ++k) {
      out[k] = full_[k].real();
      out[m_ + k] = full_[k].imag();
    }
  }

private:
  Index n_, m_;
  std::vector<double> in_;
  std::vector<std::complex<double>> full_;
  Eigen::FFT<double> fft_;
};

/// Applies the inverse-map Jacobian R^{2M} -> R^{nout}: Hermitian extension
/// (ignoring Im at DC/Nyquist, whose coefficients are zero) followed by the
/// 1/N-normalized inverse FFT, real part.
class InverseMap {
public:
  InverseMap(Index m, bool nyquist_bin, Index nout)
      : m_(m), nyq_(nyquist_bin), nout_(nout), full_(nout), out_(nout) {}

  template <typename In, typename Out>
  void apply(const In& r, Out&& out) {
    full_[0] = std::complex<double>(r[0], 0.0);
    const Index last = m_ - 1;
    for (Index k = 1; k < last; ++k) full_[k] = std::complex<double>(r[k], r[m_ + k]);
    if (last >= 1) {
      if (nyq_)
        full_[last] = std::complex<double>(r[last], 0.0);
      else
        full_[last] = std::complex<double>(r[last], r[m_ + last]);
    }
    for (Index k = last + 1; k < nout_; ++k) full_[k] = std::conj(full_[nout_ - k]);
    fft_.inv(out_, full_);
    for (Index i = 0; i < nout_; ++i) out[i] = out_[i].real();
  }

private:
  Index m_;
  bool nyq_;
  Index nout_;
  std::vector<std::complex<double>> full_;
  std::vector<std::complex<double>> out_;
  Eigen::FFT<double> fft_;
};

/// U' = T U T^T where T has the four diagonal blocks
/// [diag(p) diag(q); diag(r) diag(s)] (per-bin 2x2 Jacobians).
Mat sandwich_diag2(const Vec& p, const Vec& q, const Vec& r, const Vec& s, const Mat& u) {
  const Index m = p.size();
  Mat a(2 * m, 2 * m);
  for (Index k = 0; k < m; ++k) {
    a.row(k) = p[k] * u.row(k) + q[k] * u.row(m + k);
    a.row(m + k) = r[k] * u.row(k) + s[k] * u.row(m + k);
  }
  Mat out(2 * m, 2 * m);
  for (Index k = 0; k < m; ++k) {
    out.col(k) = p[k] * a.col(k) + q[k] * a.col(m + k);
    out.col(m + k) = r[k] * a.col(k) + s[k] * a.col(m + k);
  }
  return symmetrized(out);
}

struct BinJacobians {
  Vec p, q, r, s;  // d(out1)/d(in1), d(out1)/d(in2), d(out2)/d(in1), d(out2)/d(in2)
};

Mat propagate_pair(const BinJacobians& jx, const Mat& ux, const BinJacobians& jh,
                   const Mat& uh) {
  Mat cov;
  if (ux.size() > 0) cov = sandwich_diag2(jx.p, jx.q, jx.r, jx.s, ux);
  if (uh.size() > 0) {
    Mat c2 = sandwich_diag2(jh.p, jh.q, jh.r, jh.s, uh);
    cov = cov.size() > 0 ? Mat(cov + c2) : c2;
  }
  return cov;
}

void require_same_grid(const SpectrumU& x, const SpectrumU& h, const std::string& what) {
  if (x.bins() != h.bins()) throw InvalidArgument(what + ": bin-count mismatch");
  if (x.nyquist_bin != h.nyquist_bin) throw InvalidArgument(what + ": length parity mismatch");
  const double scale = std::max(x.freqs.cwiseAbs().maxCoeff(), 1e-300);
  if ((x.freqs - h.freqs).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw InvalidArgument(what + ": frequency-grid mismatch");
}

}  // namespace

Mat dft_jacobian(Index n) {
  const Index m = half_bins(n);
  Mat j(2 * m, n);
  for (Index k = 0; k < m; ++k) {
    for (Index i = 0; i < n; ++i) {
      const double ang = kTwoPi * static_cast<double>(k) * static_cast<double>(i) /
                         static_cast<double>(n);
      j(k, i) = std::cos(ang);
      j(m + k, i) = -std::sin(ang);
    }
  }
  return j;
}

Mat idft_jacobian(Index m, bool nyquist_bin, Index nout) {
  Mat j = Mat::Zero(nout, 2 * m);
  const double n = static_cast<double>(nout);
  const Index last = m - 1;
  for (Index i = 0; i < nout; ++i) {
    j(i, 0) = 1.0 / n;
    for (Index k = 1; k < last; ++k) {
      const double ang = kTwoPi * static_cast<double>(k) * static_cast<double>(i) / n;
      j(i, k) = 2.0 * std::cos(ang) / n;
      j(i, m + k) = -2.0 * std::sin(ang) / n;
    }
    const double ang = kTwoPi * static_cast<double>(last) * static_cast<double>(i) / n;
    if (nyquist_bin) {
      j(i, last) = std::cos(ang) / n;  // Im column stays zero
    } else {
      j(i, last) = 2.0 * std::cos(ang) / n;
      j(i, m + last) = -2.0 * std::sin(ang) / n;
    }
  }
  return j;
}

SpectrumU gum_dft(const TimeSeriesU& x, CovPath path) {
  x.validate();
  const Index n = x.size();
  if (n < 2) throw InvalidArgument("gum_dft: need at least two samples");
  const Index m = half_bins(n);

  SpectrumU out;
  out.nyquist_bin = (n % 2 == 0);
  out.freqs = Vec(m);
  const double df = 1.0 / (static_cast<double>(n) * x.dt);
  for (Index k = 0; k < m; ++k) out.freqs[k] = static_cast<double>(k) * df;

  ForwardMap fwd(n);
  out.reim = Vec(2 * m);
  fwd.apply(x.values, out.reim);

  if (!x.unc.has_value()) return out;

  if (path == CovPath::Dense) {
    const Mat j = dft_jacobian(n);
    out.cov = symmetrized(j * x.unc.full_cov(n) * j.transpose());
    return out;
  }

  // Structured: B = Ux * J^T one row at a time, then cov column-wise.
  Mat b(n, 2 * m);
  if (x.unc.kind == Uncertainty::Kind::Full) {
    for (Index i = 0; i < n; ++i) fwd.apply(x.unc.cov.row(i), b.row(i));
  } else {
    // Diagonal input: row i of B is var_i times row i of J^T.
    for (Index i = 0; i < n; ++i) {
      const double var = x.unc.variance_at(i);
      const std::complex<double> w =
          std::polar(1.0, -kTwoPi * static_cast<double>(i) / static_cast<double>(n));
      std::complex<double> wk(1.0, 0.0);
      for (Index k = 0; k < m; ++k) {
        b(i, k) = var * wk.real();
        b(i, m + k) = var * wk.imag();
        wk *= w;
      }
    }
  }
  out.cov = Mat(2 * m, 2 * m);
  for (Index c = 0; c < 2 * m; ++c) fwd.apply(b.col(c), out.cov.col(c));
  out.cov = symmetrized(out.cov);
  return out;
}

TimeSeriesU gum_idft(const SpectrumU& f, Index nout, CovPath path) {
  f.validate(/*real_signal=*/true);
  const Index m = f.bins();
  const Index expected = f.signal_length();
  if (nout == 0) nout = expected;
  if (nout != 2 * (m - 1) && nout != 2 * m - 1) {
    std::ostringstream msg;
    msg << "gum_idft: nout " << nout << " incompatible with M = " << m;
    throw InvalidArgument(msg.str());
  }
  const bool nyq = (nout == 2 * (m - 1));
  if (nyq != f.nyquist_bin)
    throw InvalidArgument("gum_idft: nout parity contradicts the spectrum's Nyquist flag");

  TimeSeriesU out;
  const double df = f.freqs[1] - f.freqs[0];
  out.dt = 1.0 / (static_cast<double>(nout) * df);
  out.t0 = 0.0;
  out.values = Vec(nout);

  InverseMap inv(m, nyq, nout);
  inv.apply(f.reim, out.values);

  if (!f.has_cov()) return out;

  if (path == CovPath::Dense) {
    const Mat j = idft_jacobian(m, nyq, nout);
    out.unc = Uncertainty::full(symmetrized(j * f.cov * j.transpose()));
    return out;
  }

  Mat b(2 * m, nout);
  for (Index i = 0; i < 2 * m; ++i) inv.apply(f.cov.row(i), b.row(i));
  Mat cov(nout, nout);
  for (Index c = 0; c < nout; ++c) inv.apply(b.col(c), cov.col(c));
  out.unc = Uncertainty::full(symmetrized(cov));
  return out;
}

SpectrumU dft_multiply(const SpectrumU& x, const SpectrumU& h) {
  x.validate();
  h.validate();
  require_same_grid(x, h, "dft_multiply");
  const Index m = x.bins();

  SpectrumU out;
  out.freqs = x.freqs;
  out.nyquist_bin = x.nyquist_bin;
  out.reim = Vec(2 * m);
  for (Index k = 0; k < m; ++k) {
    const Complex y = x.value(k) * h.value(k);
    out.reim[k] = y.real();
    out.reim[m + k] = y.imag();
  }

  if (!x.has_cov() && !h.has_cov()) return out;

  BinJacobians jx{h.reim.head(m), -h.reim.tail(m), h.reim.tail(m), h.reim.head(m)};
  BinJacobians jh{x.reim.head(m), -x.reim.tail(m), x.reim.tail(m), x.reim.head(m)};
  out.cov = propagate_pair(jx, x.cov, jh, h.cov);
  return out;
}

SpectrumU dft_deconv(const SpectrumU& x, const SpectrumU& h, double mag_floor) {
  x.validate();
  h.validate();
  require_same_grid(x, h, "dft_deconv");
  if (!(mag_floor >= 0.0)) throw InvalidArgument("dft_deconv: mag_floor must be >= 0");
  const Index m = x.bins();

  Vec habs(m);
  for (Index k = 0; k < m; ++k) habs[k] = std::abs(h.value(k));
  const double hmax = habs.maxCoeff();
  const double floor = mag_floor * hmax;
  std::vector<Index> offending;
  for (Index k = 0; k < m; ++k) {
    if (!(habs[k] >= floor) || habs[k] == 0.0) offending.push_back(k);
  }
  if (!offending.empty()) {
    std::ostringstream msg;
    msg << "dft_deconv: division ill-posed, |H| below " << mag_floor << " * max|H| at "
        << offending.size() << " bin(s):";
    for (std::size_t i = 0; i < offending.size() && i < 8; ++i) msg << ' ' << offending[i];
    if (offending.size() > 8) msg << " ...";
    msg << "; apply low-pass regularization before dividing";
    throw NumericError(msg.str());
  }

  SpectrumU out;
  out.freqs = x.freqs;
  out.nyquist_bin = x.nyquist_bin;
  out.reim = Vec(2 * m);
  for (Index k = 0; k < m; ++k) {
    const Complex y = x.value(k) / h.value(k);
    out.reim[k] = y.real();
    out.reim[m + k] = y.imag();
  }

  if (!x.has_cov() && !h.has_cov()) return out;

  // d(Y)/d(X) is multiplication by 1/H. With X = a + jb, H = c + jd:
  //   ReY = (a c + b d)/|H|^2, ImY = (b c - a d)/|H|^2
  // and the quotient rule gives d(Y)/d(H) in terms of Y itself.
  BinJacobians jx, jh;
  jx.p.resize(m); jx.q.resize(m); jx.r.resize(m); jx.s.resize(m);
  jh.p.resize(m); jh.q.resize(m); jh.r.resize(m); jh.s.resize(m);
  for (Index k = 0; k < m; ++k) {
    const double a = x.re(k), b = x.im(k);
    const double c = h.re(k), d = h.im(k);
    const double mag2 = c * c + d * d;
    jx.p[k] = c / mag2;
    jx.q[k] = d / mag2;
    jx.r[k] = -d / mag2;
    jx.s[k] = c / mag2;
    const double yre = out.reim[k], yim = out.reim[m + k];
    jh.p[k] = (a - 2.0 * c * yre) / mag2;
    jh.q[k] = (b - 2.0 * d * yre) / mag2;
    jh.r[k] = (b - 2.0 * c * yim) / mag2;
    jh.s[k] = (-a - 2.0 * d * yim) / mag2;
  }
  out.cov = propagate_pair(jx, x.cov, jh, h.cov);
  return out;
}

SpectrumU dft_transferfunction(const TimeSeriesU& yref, const TimeSeriesU& xmeas,
                               double mag_floor) {
  if (yref.size() != xmeas.size())
    throw InvalidArgument("dft_transferfunction: record lengths differ");
  if (std::abs(yref.dt - xmeas.dt) > 1e-9 * yref.dt)
    throw InvalidArgument("dft_transferfunction: sampling intervals differ");
  return dft_deconv(gum_dft(yref), gum_dft(xmeas), mag_floor);
}

SpectrumU amp_phase_to_dft(const AmpPhaseU& ap) {
  ap.validate();
  const Index m = ap.bins();
  SpectrumU out;
  out.freqs = ap.freqs;
  out.nyquist_bin = ap.nyquist_bin;
  out.reim = Vec(2 * m);
  for (Index k = 0; k < m; ++k) {
    out.reim[k] = ap.amplitude[k] * std::cos(ap.phase[k]);
    out.reim[m + k] = ap.amplitude[k] * std::sin(ap.phase[k]);
  }
  if (!ap.has_cov()) return out;

  BinJacobians j;
  j.p.resize(m); j.q.resize(m); j.r.resize(m); j.s.resize(m);
  for (Index k = 0; k < m; ++k) {
    const double ca = std::cos(ap.phase[k]), sa = std::sin(ap.phase[k]);
    j.p[k] = ca;
    j.q[k] = -ap.amplitude[k] * sa;
    j.r[k] = sa;
    j.s[k] = ap.amplitude[k] * ca;
  }
  out.cov = sandwich_diag2(j.p, j.q, j.r, j.s, ap.cov);
  return out;
}

AmpPhaseU dft_to_amp_phase(const SpectrumU& f, bool unwrap_phase) {
  f.validate();
  const Index m = f.bins();
  AmpPhaseU out;
  out.freqs = f.freqs;
  out.nyquist_bin = f.nyquist_bin;
  out.amplitude = Vec(m);
  out.phase = Vec(m);
  const double scale = f.reim.cwiseAbs().maxCoeff();
  for (Index k = 0; k < m; ++k) {
    const double a = std::abs(f.value(k));
    if (a <= 1e-300 || a < 1e-14 * scale) {
      std::ostringstream msg;
      msg << "dft_to_amp_phase: zero-magnitude bin " << k << " has no defined phase";
      throw NumericError(msg.str());
    }
    out.amplitude[k] = a;
    out.phase[k] = std::atan2(f.im(k), f.re(k));
  }
  if (unwrap_phase) {
    for (Index k = 1; k < m; ++k) {
      double d = out.phase[k] - out.phase[k - 1];
      while (d > std::numbers::pi) {
        out.phase[k] -= kTwoPi;
        d -= kTwoPi;
      }
      while (d < -std::numbers::pi) {
        out.phase[k] += kTwoPi;
        d += kTwoPi;
      }
    }
  }
  if (!f.has_cov()) return out;

  BinJacobians j;
  j.p.resize(m); j.q.resize(m); j.r.resize(m); j.s.resize(m);
  for (Index k = 0; k < m; ++k) {
    const double re = f.re(k), im = f.im(k);
    const double a = out.amplitude[k];
    j.p[k] = re / a;
    j.q[k] = im / a;
    j.r[k] = -im / (a * a);
    j.s[k] = re / (a * a);
  }
  out.cov = sandwich_diag2(j.p, j.q, j.r, j.s, f.cov);
  return out;
}

}  // namespace dynunc::dft
