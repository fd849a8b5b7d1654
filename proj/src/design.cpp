#include "dynunc/design.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "dynunc/mc.hpp"
#include "dynunc/rng.hpp"

namespace dynunc::design {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

CVec poly_eval_unit_circle(const Vec& coeffs, const Vec& omega) {
  // sum_m c_m e^{-j Omega m} on the unit circle
  CVec out(omega.size());
  for (Index k = 0; k < omega.size(); ++k) {
    Complex acc(0.0, 0.0);
    const Complex w = std::polar(1.0, -omega[k]);
    Complex zm(1.0, 0.0);
    for (Index m = 0; m < coeffs.size(); ++m) {
      acc += coeffs[m] * zm;
      zm *= w;
    }
    out[k] = acc;
  }
  return out;
}

Vec normalized_omega(const Vec& freqs, double fs) {
  if (!(fs > 0.0)) throw InvalidArgument("filter design: fs must be > 0");
  return kTwoPi / fs * freqs;
}

/// Target response e^{-j Omega n0} * H^{+-1} on the design grid.
CVec design_target(const CVec& h, const Vec& omega, int delay_n0, bool inverse) {
  CVec t(h.size());
  for (Index k = 0; k < h.size(); ++k) {
    const Complex d = std::polar(1.0, -omega[k] * static_cast<double>(delay_n0));
    if (inverse) {
      if (std::abs(h[k]) == 0.0)
        throw NumericError("filter design: zero response value, inverse target undefined");
      t[k] = d / h[k];
    } else {
      t[k] = d * h[k];
    }
  }
  return t;
}

Vec stack_reim(const CVec& v) {
  Vec out(2 * v.size());
  for (Index k = 0; k < v.size(); ++k) {
    out[k] = v[k].real();
    out[v.size() + k] = v[k].imag();
  }
  return out;
}

/// Minimum-norm LS solve; equation-error systems can be legitimately
/// rank-deficient (e.g. a delay target makes a numerator column collinear
/// with a denominator column).
Vec solve_ls_minnorm(const Mat& a, const Vec& rhs) {
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(a);
  return cod.solve(rhs);
}

Mat fir_design_matrix(const Vec& omega, int order, const Vec& rowscale) {
  const Index m = omega.size();
  Mat a(2 * m, order + 1);
  for (Index k = 0; k < m; ++k) {
    for (Index c = 0; c <= order; ++c) {
      const double ang = omega[k] * static_cast<double>(c);
      a(k, c) = rowscale[k] * std::cos(ang);
      a(m + k, c) = rowscale[k] * -std::sin(ang);
    }
  }
  return a;
}

Vec check_weights(const Vec& weights, Index m, const std::string& what) {
  if (weights.size() == 0) return Vec::Ones(m);
  if (weights.size() != m) throw InvalidArgument(what + ": weight vector length mismatch");
  if ((weights.array() < 0.0).any()) throw InvalidArgument(what + ": negative weight");
  return weights.cwiseSqrt();  // LS weights scale the squared residuals
}

}  // namespace

CVec FreqRespData::values() const {
  CVec v(size());
  for (Index k = 0; k < size(); ++k) v[k] = value(k);
  return v;
}

Vec FreqRespData::stacked() const {
  Vec out(2 * size());
  out.head(size()) = re;
  out.tail(size()) = im;
  return out;
}

void FreqRespData::validate() const {
  const Index m = size();
  if (m < 2) throw InvalidArgument("frequency response: needs at least two points");
  if (re.size() != m || im.size() != m)
    throw InvalidArgument("frequency response: component length mismatch");
  for (Index k = 1; k < m; ++k) {
    if (!(freqs[k] > freqs[k - 1]))
      throw InvalidArgument("frequency response: frequencies must strictly increase");
  }
  if (freqs[0] < 0.0) throw InvalidArgument("frequency response: negative frequency");
  if (has_cov()) {
    if (cov.rows() != 2 * m || cov.cols() != 2 * m)
      throw InvalidArgument("frequency response: covariance must be 2M x 2M");
    require_symmetric(cov, 1e-8, "frequency response covariance");
  }
}

void FreqRespData::validate_against_fs(double fs) const {
  validate();
  if (freqs[size() - 1] > fs / 2.0 * (1.0 + 1e-12))
    throw InvalidArgument("frequency response: grid exceeds fs/2");
}

DigitalFilterU lsfir(const FreqRespData& h, const LsfirOptions& opt, double* residual_out) {
  h.validate_against_fs(opt.fs);
  if (opt.order < 1) throw InvalidArgument("lsfir: order must be >= 1");
  if (opt.delay_n0 < 0) throw InvalidArgument("lsfir: delay must be >= 0");
  const Index m = h.size();
  if (2 * m < 2 * (opt.order + 1))
    throw InvalidArgument("lsfir: not enough frequencies for the requested order");

  const Vec omega = normalized_omega(h.freqs, opt.fs);
  const Vec rowscale = check_weights(opt.weights, m, "lsfir");
  const Mat a = fir_design_matrix(omega, opt.order, rowscale);
  Eigen::ColPivHouseholderQR<Mat> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < a.cols()) throw NumericError("lsfir: rank-deficient design matrix");

  auto fit = [&](const CVec& resp) {
    const CVec target = design_target(resp, omega, opt.delay_n0, opt.inverse);
    Vec rhs = stack_reim(target);
    for (Index k = 0; k < m; ++k) {
      rhs[k] *= rowscale[k];
      rhs[m + k] *= rowscale[k];
    }
    return rhs;
  };

  const Vec rhs = fit(h.values());
  const Vec b = qr.solve(rhs);
  if (residual_out) *residual_out = (a * b - rhs).norm();

  filt::DigitalFilterU out;
  out.b = b;
  out.a = Vec::Ones(1);
  out.delay_n0 = opt.delay_n0;

  if (h.has_cov() && opt.mc_draws > 0) {
    if (opt.mc_draws < 100) throw InvalidArgument("lsfir: mc_draws must be >= 100");
    const Mat factor = chol_psd(h.cov);
    const Vec est = h.stacked();
    rng::Xoshiro256ss gen(opt.seed);
    mc::RunningStats stats(opt.order + 1, /*track_cov=*/true);
    long attempts = 0;
    const long max_attempts = 10 * opt.mc_draws;
    while (stats.count() < opt.mc_draws) {
      if (++attempts > max_attempts)
        throw NumericError("lsfir: too many rejected response draws");
      const Vec draw = mc::sample_normal(est, factor, gen);
      CVec resp(m);
      bool ok = true;
      for (Index k = 0; k < m; ++k) {
        resp[k] = Complex(draw[k], draw[m + k]);
        if (opt.inverse && std::abs(resp[k]) == 0.0) ok = false;
      }
      if (!ok) continue;
      stats.update(qr.solve(fit(resp)));
    }
    out.cov = psd_clipped(stats.covariance());
  }
  return out;
}

CVec denominator_roots(const Vec& a) {
  const Index na = a.size() - 1;
  if (na <= 0) return CVec(0);
  // roots of z^na + a1 z^{na-1} + ... + a_na via the companion matrix
  Mat companion = Mat::Zero(na, na);
  for (Index i = 0; i < na; ++i) companion(0, i) = -a[i + 1];
  for (Index i = 1; i < na; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Mat> es(companion);
  if (es.info() != Eigen::Success) throw NumericError("denominator_roots: eigensolver failed");
  return es.eigenvalues();
}

namespace {

/// Monic real polynomial (1, a1, ..., an) from the given roots; roots come
/// in conjugate pairs so the imaginary residue is rounding only.
Vec poly_from_roots(const CVec& roots) {
  std::vector<Complex> coeffs{Complex(1.0, 0.0)};
  for (Index r = 0; r < roots.size(); ++r) {
    coeffs.push_back(Complex(0.0, 0.0));
    for (Index i = static_cast<Index>(coeffs.size()) - 1; i >= 1; --i)
      coeffs[i] -= roots[r] * coeffs[i - 1];
  }
  Vec out(coeffs.size());
  for (std::size_t i = 0; i < coeffs.size(); ++i) out[static_cast<Index>(i)] = coeffs[i].real();
  return out;
}

Vec reflect_unstable_poles(const Vec& a, bool* changed) {
  CVec roots = denominator_roots(a);
  *changed = false;
  for (Index i = 0; i < roots.size(); ++i) {
    const double mod = std::abs(roots[i]);
    if (mod >= 1.0) {
      roots[i] = roots[i] / (mod * mod);  // conjugate reciprocal, same phase
      *changed = true;
    }
  }
  if (!*changed) return a;

  // Rebuilding the polynomial can round a barely-inside root back onto the
  // circle; clamp the radii with a growing margin until the reconstructed
  // denominator verifies strictly stable.
  double margin = 1e-9;
  for (int attempt = 0; attempt < 7; ++attempt, margin *= 100.0) {
    CVec clamped = roots;
    for (Index i = 0; i < clamped.size(); ++i) {
      const double mod = std::abs(clamped[i]);
      if (mod > 1.0 - margin) clamped[i] *= (1.0 - margin) / mod;
    }
    Vec cand = poly_from_roots(clamped);
    const CVec verify = denominator_roots(cand);
    bool ok = true;
    for (Index i = 0; i < verify.size(); ++i) {
      if (!(std::abs(verify[i]) < 1.0)) ok = false;
    }
    if (ok) return cand;
  }
  throw NumericError("lsiir: pole reflection failed to produce a stable denominator");
}

}  // namespace

LsiirResult lsiir(const FreqRespData& h, const LsiirOptions& opt) {
  h.validate_against_fs(opt.fs);
  if (opt.na < 1) throw InvalidArgument("lsiir: na must be >= 1");
  if (opt.nb < 0) throw InvalidArgument("lsiir: nb must be >= 0");
  if (opt.delay_n0 < 0) throw InvalidArgument("lsiir: delay must be >= 0");
  if (opt.max_iter < 1) throw InvalidArgument("lsiir: max_iter must be >= 1");
  const Index m = h.size();
  const Index nunk = opt.nb + 1 + opt.na;
  if (2 * m < nunk) throw InvalidArgument("lsiir: not enough frequencies for the orders");

  const Vec omega = normalized_omega(h.freqs, opt.fs);
  const CVec target = design_target(h.values(), omega, opt.delay_n0, opt.inverse);

  // z^{-i} per frequency, up to the larger order
  const Index maxord = std::max(opt.nb, opt.na);
  Eigen::MatrixXcd zpow(m, maxord + 1);
  for (Index k = 0; k < m; ++k) {
    const Complex w = std::polar(1.0, -omega[k]);
    Complex acc(1.0, 0.0);
    for (Index c = 0; c <= maxord; ++c) {
      zpow(k, c) = acc;
      acc *= w;
    }
  }

  auto true_residual = [&](const Vec& b, const Vec& a) {
    double acc = 0.0;
    for (Index k = 0; k < m; ++k) {
      Complex bnum(0.0, 0.0), aden(0.0, 0.0);
      for (Index c = 0; c < b.size(); ++c) bnum += b[c] * zpow(k, c);
      for (Index c = 0; c < a.size(); ++c) aden += a[c] * zpow(k, c);
      acc += std::norm(bnum / aden - target[k]);
    }
    return std::sqrt(acc);
  };

  // Equation error, Sanathanan-Koerner reweighted:
  //   sum_c b_c z^{-c} - T_k sum_{i>=1} a_i z^{-i} = T_k, rows / |A_prev|
  auto fit_full = [&](const Vec& sk_weight) {
    Mat a(2 * m, nunk);
    Vec rhs(2 * m);
    for (Index k = 0; k < m; ++k) {
      const double w = sk_weight[k];
      for (Index c = 0; c <= opt.nb; ++c) {
        a(k, c) = w * zpow(k, c).real();
        a(m + k, c) = w * zpow(k, c).imag();
      }
      for (Index i = 1; i <= opt.na; ++i) {
        const Complex v = -target[k] * zpow(k, i);
        a(k, opt.nb + i) = w * v.real();
        a(m + k, opt.nb + i) = w * v.imag();
      }
      rhs[k] = w * target[k].real();
      rhs[m + k] = w * target[k].imag();
    }
    const Vec u = solve_ls_minnorm(a, rhs);
    Vec b = u.head(opt.nb + 1);
    Vec den(opt.na + 1);
    den[0] = 1.0;
    den.tail(opt.na) = u.tail(opt.na);
    return std::pair<Vec, Vec>{b, den};
  };

  // Numerator-only refit with a fixed (stabilized) denominator.
  auto fit_numerator = [&](const Vec& den, const Vec& sk_weight) {
    Mat a(2 * m, opt.nb + 1);
    Vec rhs(2 * m);
    for (Index k = 0; k < m; ++k) {
      Complex aden(0.0, 0.0);
      for (Index c = 0; c < den.size(); ++c) aden += den[c] * zpow(k, c);
      const Complex t = target[k] * aden;
      const double w = sk_weight[k];
      for (Index c = 0; c <= opt.nb; ++c) {
        a(k, c) = w * zpow(k, c).real();
        a(m + k, c) = w * zpow(k, c).imag();
      }
      rhs[k] = w * t.real();
      rhs[m + k] = w * t.imag();
    }
    return solve_ls_minnorm(a, rhs);
  };

  LsiirResult best;
  bool have_best = false;
  double prev_res = std::numeric_limits<double>::infinity();
  Vec sk_weight = Vec::Ones(m);

  for (int it = 0; it < opt.max_iter; ++it) {
    auto [b, den] = fit_full(sk_weight);
    bool reflected = false;
    den = reflect_unstable_poles(den, &reflected);
    if (reflected) b = fit_numerator(den, sk_weight);

    const double res = true_residual(b, den);
    if (!have_best || res < best.residual) {
      best.filter.b = b;
      best.filter.a = den;
      best.filter.delay_n0 = opt.delay_n0;
      best.residual = res;
      best.stabilized = reflected;
      have_best = true;
    }
    if (std::abs(res - prev_res) <= 1e-12 * std::max(1.0, res)) {
      best.converged = true;
      break;
    }
    prev_res = res;

    for (Index k = 0; k < m; ++k) {
      Complex aden(0.0, 0.0);
      for (Index c = 0; c < den.size(); ++c) aden += den[c] * zpow(k, c);
      sk_weight[k] = 1.0 / std::max(std::abs(aden), 1e-12);
    }
  }
  return best;
}

DigitalFilterU kaiser_lowpass(int order, double cutoff_hz, double fs, double beta) {
  if (order < 2 || order % 2 != 0)
    throw InvalidArgument("kaiser_lowpass: order must be even and >= 2");
  if (!(fs > 0.0)) throw InvalidArgument("kaiser_lowpass: fs must be > 0");
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < fs / 2.0))
    throw InvalidArgument("kaiser_lowpass: cutoff must lie in (0, fs/2)");
  if (!(beta >= 0.0)) throw InvalidArgument("kaiser_lowpass: beta must be >= 0");

  const double fc = 2.0 * cutoff_hz / fs;  // cycles per sample, two-sided
  const double half = static_cast<double>(order) / 2.0;
  const double i0beta = std::cyl_bessel_i(0.0, beta);
  Vec b(order + 1);
  for (int m = 0; m <= order; ++m) {
    const double t = static_cast<double>(m) - half;
    const double x = fc * t;
    const double sinc = x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
    const double u = t / half;
    const double win = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - u * u))) / i0beta;
    b[m] = fc * sinc * win;
  }
  b /= b.sum();  // exact unit DC gain

  filt::DigitalFilterU out;
  out.b = b;
  out.a = Vec::Ones(1);
  out.delay_n0 = order / 2;
  return out;
}

Vec group_delay(const DigitalFilterU& flt, const Vec& freqs, double fs) {
  flt.validate();
  const Vec omega = normalized_omega(freqs, fs);

  auto ramped_delay = [&](const Vec& c) {
    Vec ramped(c.size());
    for (Index i = 0; i < c.size(); ++i) ramped[i] = static_cast<double>(i) * c[i];
    const CVec g = poly_eval_unit_circle(c, omega);
    const CVec gr = poly_eval_unit_circle(ramped, omega);
    Vec tau(omega.size());
    const double scale = c.cwiseAbs().sum();
    for (Index k = 0; k < omega.size(); ++k) {
      if (std::abs(g[k]) < 1e-14 * std::max(scale, 1e-300)) {
        std::ostringstream msg;
        msg << "group_delay: zero response at grid point " << k;
        throw NumericError(msg.str());
      }
      tau[k] = (gr[k] / g[k]).real();
    }
    return tau;
  };

  Vec tau = ramped_delay(flt.b);
  if (!flt.is_fir()) tau -= ramped_delay(flt.a);
  return tau;
}

bool isstable(const DigitalFilterU& flt) {
  flt.validate();
  if (flt.is_fir()) return true;
  const CVec roots = denominator_roots(flt.a);
  for (Index i = 0; i < roots.size(); ++i) {
    if (!(std::abs(roots[i]) < 1.0)) return false;
  }
  return true;
}

Vec savgol(const Vec& x, int window, int polyorder, int deriv, double dt) {
  if (window < 1 || window % 2 == 0) throw InvalidArgument("savgol: window must be odd");
  if (polyorder < 0 || polyorder >= window)
    throw InvalidArgument("savgol: polyorder must be < window");
  if (deriv < 0 || deriv > polyorder) throw InvalidArgument("savgol: deriv must be <= polyorder");
  if (!(dt > 0.0)) throw InvalidArgument("savgol: dt must be > 0");
  if (x.size() < window) throw InvalidArgument("savgol: signal shorter than the window");

  const int half = window / 2;
  Mat s(window, polyorder + 1);
  for (int r = 0; r < window; ++r) {
    const double tau = static_cast<double>(r - half);
    double p = 1.0;
    for (int c = 0; c <= polyorder; ++c) {
      s(r, c) = p;
      p *= tau;
    }
  }
  const Mat proj = (s.transpose() * s).ldlt().solve(s.transpose());  // (S^T S)^-1 S^T

  auto factorial = [](int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= static_cast<double>(i);
    return f;
  };
  const double dscale = factorial(deriv) / std::pow(dt, deriv);

  const Index n = x.size();
  Vec out(n);

  // interior: convolution with the center-evaluation kernel
  const Vec kernel = proj.row(deriv).transpose() * dscale;
  for (Index i = half; i < n - half; ++i) {
    double acc = 0.0;
    for (int r = 0; r < window; ++r) acc += kernel[r] * x[i - half + r];
    out[i] = acc;
  }

  // edges: evaluate the boundary-window polynomial fits off-center
  auto poly_deriv_at = [&](const Vec& beta, double tau) {
    double acc = 0.0;
    for (int c = deriv; c <= polyorder; ++c) {
      double coef = beta[c];
      for (int k = 0; k < deriv; ++k) coef *= static_cast<double>(c - k);
      acc += coef * std::pow(tau, c - deriv);
    }
    return acc / std::pow(dt, deriv);
  };
  const Vec beta_head = proj * x.head(window);
  for (Index i = 0; i < half; ++i) out[i] = poly_deriv_at(beta_head, static_cast<double>(i - half));
  const Vec beta_tail = proj * x.tail(window);
  for (Index i = n - half; i < n; ++i)
    out[i] = poly_deriv_at(beta_tail, static_cast<double>(i - (n - 1 - half)));

  return out;
}

}  // namespace dynunc::design
