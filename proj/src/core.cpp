#include "dynunc/core.hpp"

#include <cmath>
#include <sstream>

namespace dynunc {

double max_abs(const Mat& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().maxCoeff();
}

bool is_symmetric(const Mat& u, double rel_tol) {
  if (u.rows() != u.cols()) return false;
  if (u.size() <= 1) return true;
  const double scale = max_abs(u);
  if (scale == 0.0) return true;
  return (u - u.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

void require_symmetric(const Mat& u, double rel_tol, const std::string& what) {
  if (u.rows() != u.cols()) throw InvalidArgument(what + ": matrix is not square");
  if (!is_symmetric(u, rel_tol)) throw InvalidArgument(what + ": matrix is not symmetric");
}

Mat symmetrized(const Mat& u) { return 0.5 * (u + u.transpose()); }

namespace {
constexpr double kClipRelTol = 1e-10;  // eigenvalue clip budget, relative to trace
}

Mat chol_psd(const Mat& u, double jitter) {
  if (u.rows() != u.cols()) throw InvalidArgument("chol_psd: matrix is not square");
  if (jitter < 0.0) throw InvalidArgument("chol_psd: negative jitter");
  const Index n = u.rows();
  if (n == 0) return Mat(0, 0);
  require_symmetric(u, 1e-8, "chol_psd");

  const Mat s = symmetrized(u);
  if (max_abs(s) == 0.0) return Mat::Zero(n, n);

  Eigen::LLT<Mat> llt(s);
  if (llt.info() == Eigen::Success) return Mat(llt.matrixL());

  const double tr = s.trace();
  const double eps = jitter * std::max(tr, 0.0) / static_cast<double>(n);
  if (eps > 0.0) {
    llt.compute(s + eps * Mat::Identity(n, n));
    if (llt.info() == Eigen::Success) return Mat(llt.matrixL());
  }

  Eigen::SelfAdjointEigenSolver<Mat> es(s);
  if (es.info() != Eigen::Success) throw NumericError("chol_psd: eigendecomposition failed");
  const Vec ev = es.eigenvalues();
  const double floor = -kClipRelTol * std::max(tr, 0.0) - 16.0 * eps;
  if (ev.minCoeff() < floor) {
    std::ostringstream msg;
    msg << "chol_psd: matrix indefinite beyond jitter budget (min eigenvalue " << ev.minCoeff()
        << ", floor " << floor << ")";
    throw NumericError(msg.str());
  }
  return es.eigenvectors() * ev.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

Mat psd_clipped(const Mat& u) {
  if (u.size() == 0) return u;
  require_symmetric(u, 1e-8, "psd_clipped");
  const Mat s = symmetrized(u);
  Eigen::SelfAdjointEigenSolver<Mat> es(s);
  if (es.info() != Eigen::Success) throw NumericError("psd_clipped: eigendecomposition failed");
  const Vec ev = es.eigenvalues();
  if (ev.minCoeff() >= 0.0) return s;
  if (ev.minCoeff() < -kClipRelTol * std::max(s.trace(), 0.0)) {
    throw NumericError("psd_clipped: matrix indefinite beyond clip tolerance");
  }
  return symmetrized(es.eigenvectors() * ev.cwiseMax(0.0).asDiagonal() *
                     es.eigenvectors().transpose());
}

// ---------------------------------------------------------------------------
// Uncertainty
// ---------------------------------------------------------------------------

Uncertainty Uncertainty::white(double sigma) {
  if (!(sigma >= 0.0)) throw InvalidArgument("Uncertainty::white: sigma must be >= 0");
  Uncertainty u;
  u.kind = Kind::White;
  u.white_std = sigma;
  return u;
}

Uncertainty Uncertainty::pointwise(Vec sigmas) {
  if ((sigmas.array() < 0.0).any() || !sigmas.allFinite())
    throw InvalidArgument("Uncertainty::pointwise: sigmas must be finite and >= 0");
  Uncertainty u;
  u.kind = Kind::Pointwise;
  u.stds = std::move(sigmas);
  return u;
}

Uncertainty Uncertainty::full(Mat covariance) {
  require_symmetric(covariance, 1e-12, "Uncertainty::full");
  Uncertainty u;
  u.kind = Kind::Full;
  u.cov = std::move(covariance);
  return u;
}

bool Uncertainty::is_zero() const {
  switch (kind) {
    case Kind::None: return true;
    case Kind::White: return white_std == 0.0;
    case Kind::Pointwise: return stds.size() == 0 || stds.maxCoeff() == 0.0;
    case Kind::Full: return max_abs(cov) == 0.0;
  }
  return true;
}

Vec Uncertainty::pointwise_std(Index n) const {
  switch (kind) {
    case Kind::None: return Vec::Zero(n);
    case Kind::White: return Vec::Constant(n, white_std);
    case Kind::Pointwise: return stds;
    case Kind::Full: return cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  }
  return Vec::Zero(n);
}

double Uncertainty::variance_at(Index i) const {
  switch (kind) {
    case Kind::None: return 0.0;
    case Kind::White: return white_std * white_std;
    case Kind::Pointwise: return stds[i] * stds[i];
    case Kind::Full: return cov(i, i);
  }
  return 0.0;
}

Mat Uncertainty::full_cov(Index n) const {
  switch (kind) {
    case Kind::None: return Mat::Zero(n, n);
    case Kind::White: return white_std * white_std * Mat::Identity(n, n);
    case Kind::Pointwise: return stds.array().square().matrix().asDiagonal();
    case Kind::Full: return cov;
  }
  return Mat::Zero(n, n);
}

void Uncertainty::validate(Index n) const {
  switch (kind) {
    case Kind::None:
      return;
    case Kind::White:
      if (!(white_std >= 0.0) || !std::isfinite(white_std))
        throw InvalidArgument("uncertainty: white sigma must be finite and >= 0");
      return;
    case Kind::Pointwise:
      if (stds.size() != n) throw InvalidArgument("uncertainty: sigma vector length mismatch");
      if ((stds.array() < 0.0).any() || !stds.allFinite())
        throw InvalidArgument("uncertainty: sigmas must be finite and >= 0");
      return;
    case Kind::Full:
      if (cov.rows() != n || cov.cols() != n)
        throw InvalidArgument("uncertainty: covariance dimension mismatch");
      require_symmetric(cov, 1e-12, "uncertainty covariance");
      return;
  }
}

// ---------------------------------------------------------------------------
// TimeSeriesU / SpectrumU / AmpPhaseU
// ---------------------------------------------------------------------------

Vec TimeSeriesU::times() const {
  Vec t(size());
  for (Index i = 0; i < size(); ++i) t[i] = t0 + static_cast<double>(i) * dt;
  return t;
}

void TimeSeriesU::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("time series: dt must be > 0");
  if (!values.allFinite()) throw InvalidArgument("time series: non-finite values");
  unc.validate(size());
}

CVec SpectrumU::values() const {
  const Index m = bins();
  CVec v(m);
  for (Index k = 0; k < m; ++k) v[k] = value(k);
  return v;
}

void SpectrumU::validate(bool real_signal) const {
  const Index m = bins();
  if (m < 2) throw InvalidArgument("spectrum: needs at least two bins");
  if (reim.size() != 2 * m) throw InvalidArgument("spectrum: reim length must be 2M");
  if (!reim.allFinite()) throw InvalidArgument("spectrum: non-finite values");
  if (has_cov()) {
    if (cov.rows() != 2 * m || cov.cols() != 2 * m)
      throw InvalidArgument("spectrum: covariance must be 2M x 2M");
    require_symmetric(cov, 1e-8, "spectrum covariance");
  }
  for (Index k = 1; k < m; ++k) {
    if (!(freqs[k] > freqs[k - 1])) throw InvalidArgument("spectrum: frequencies must increase");
  }
  if (real_signal) {
    const double scale = std::max(reim.cwiseAbs().maxCoeff(), 1e-300);
    const double tol = 1e-9 * scale;
    if (std::abs(im(0)) > tol)
      throw InvalidArgument("spectrum: imaginary part at DC must vanish for a real signal");
    if (nyquist_bin && std::abs(im(m - 1)) > tol)
      throw InvalidArgument("spectrum: imaginary part at Nyquist must vanish for a real signal");
  }
}

void AmpPhaseU::validate() const {
  const Index m = bins();
  if (phase.size() != m || freqs.size() != m)
    throw InvalidArgument("amp/phase: component length mismatch");
  if ((amplitude.array() < 0.0).any())
    throw InvalidArgument("amp/phase: amplitudes must be >= 0");
  if (has_cov()) {
    if (cov.rows() != 2 * m || cov.cols() != 2 * m)
      throw InvalidArgument("amp/phase: covariance must be 2M x 2M");
    require_symmetric(cov, 1e-8, "amp/phase covariance");
  }
}

void LinearModel::validate() const {
  if (sens.size() == 0) throw InvalidArgument("linear model: empty sensitivity matrix");
  if (!sens.allFinite()) throw InvalidArgument("linear model: non-finite sensitivities");
}

void StateSpace::validate() const {
  const Index n = state.rows();
  if (state.cols() != n) throw InvalidArgument("state space: state matrix must be square");
  if (input.rows() != n) throw InvalidArgument("state space: input matrix row mismatch");
  if (output.cols() != n) throw InvalidArgument("state space: output matrix column mismatch");
  if (feedthrough.rows() != output.rows() || feedthrough.cols() != input.cols())
    throw InvalidArgument("state space: feedthrough dimension mismatch");
}

// ---------------------------------------------------------------------------
// Propagation
// ---------------------------------------------------------------------------

Propagated linear_propagate(const LinearModel& model, const Vec& x, const Mat& ux) {
  model.validate();
  if (model.sens.cols() != x.size())
    throw InvalidArgument("linear_propagate: model/estimate dimension mismatch");
  if (ux.rows() != x.size() || ux.cols() != x.size())
    throw InvalidArgument("linear_propagate: covariance dimension mismatch");
  require_symmetric(ux, 1e-8, "linear_propagate input covariance");

  Propagated out;
  out.y = model.sens * x;
  out.cov = symmetrized(model.sens * ux * model.sens.transpose());
  return out;
}

LinearModel cumulative_mean_model(Index n, double dt) {
  if (n < 2) throw InvalidArgument("cumulative_mean_model: need at least two samples");
  if (!(dt > 0.0)) throw InvalidArgument("cumulative_mean_model: dt must be > 0");
  Mat c = Mat::Zero(n, n);
  for (Index j = 2; j <= n; ++j) {
    const double denom = static_cast<double>(j - 1);  // (t_j - t_1) / dt
    const Index r = j - 1;
    c(r, 0) = 0.5 / denom;
    for (Index i = 1; i < j - 1; ++i) c(r, i) = 1.0 / denom;
    c(r, j - 1) = 0.5 / denom;
  }
  return LinearModel{std::move(c)};
}

}  // namespace dynunc
