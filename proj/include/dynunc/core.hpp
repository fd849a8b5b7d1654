#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace dynunc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;
using Complex = std::complex<double>;
using CVec = Eigen::VectorXcd;

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Violated precondition or malformed argument.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// Numerical failure: indefinite covariance, ill-conditioned division,
/// unstable filter, non-physical fit.
class NumericError : public Error {
public:
  using Error::Error;
};

/// File access or parse failure.
class IoError : public Error {
public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Covariance helpers
// ---------------------------------------------------------------------------

double max_abs(const Mat& m);

/// max |U - U^T| <= rel_tol * max |U| (empty and 1x1 matrices are symmetric).
bool is_symmetric(const Mat& u, double rel_tol = 1e-12);

void require_symmetric(const Mat& u, double rel_tol, const std::string& what);

Mat symmetrized(const Mat& u);

/// Factor B with B*B^T ~= U for a symmetric PSD matrix.
///
/// Tries a plain Cholesky first, then Cholesky of U + eps*I with
/// eps = jitter*trace(U)/N, and finally an eigenvalue clip: eigenvalues in
/// [-1e-10*trace, 0) are set to zero, anything lower throws NumericError.
/// The result is lower-triangular on the fast paths and a dense square root
/// V*sqrt(max(lambda,0)) on the clip path; deterministic for fixed input.
Mat chol_psd(const Mat& u, double jitter = 1e-12);

/// Symmetric eigen-clip used before sampling: negative eigenvalues above
/// -1e-10*trace are zeroed, anything lower throws.
Mat psd_clipped(const Mat& u);

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Uncertainty attached to a sampled signal. Three encodings so that white
/// noise does not force an N x N matrix; operations normalize to the richest
/// form they need.
struct Uncertainty {
  enum class Kind { None, White, Pointwise, Full };

  Kind kind = Kind::None;
  double white_std = 0.0;  ///< Kind::White
  Vec stds;                ///< Kind::Pointwise
  Mat cov;                 ///< Kind::Full

  static Uncertainty none() { return {}; }
  static Uncertainty white(double sigma);
  static Uncertainty pointwise(Vec sigmas);
  static Uncertainty full(Mat covariance);

  bool has_value() const { return kind != Kind::None; }
  bool is_zero() const;

  /// Pointwise standard uncertainty for a signal of length n (sqrt of the
  /// covariance diagonal in the Full case).
  Vec pointwise_std(Index n) const;
  /// Variance at one sample index.
  double variance_at(Index i) const;
  /// Materialize the full covariance (dense; desk scale only).
  Mat full_cov(Index n) const;

  void validate(Index n) const;
};

/// Equidistantly sampled signal with its uncertainty.
struct TimeSeriesU {
  Vec values;
  double dt = 0.0;  ///< sampling interval, s
  double t0 = 0.0;  ///< time of the first sample, s
  Uncertainty unc;

  Index size() const { return values.size(); }
  double fs() const { return 1.0 / dt; }
  Vec times() const;

  void validate() const;
};

/// Half-spectrum of a real signal: stacked (Re_0..Re_{M-1}, Im_0..Im_{M-1})
/// with a joint 2M x 2M covariance. An empty cov means exactly known.
/// `nyquist_bin` records whether the last bin is the Nyquist bin of an
/// even-length signal (the two cases are not distinguishable from the
/// frequency grid alone).
struct SpectrumU {
  Vec reim;
  Vec freqs;  ///< Hz, length M
  Mat cov;    ///< 2M x 2M or empty
  bool nyquist_bin = true;

  Index bins() const { return freqs.size(); }
  /// Length of the time signal this half-spectrum corresponds to.
  Index signal_length() const { return nyquist_bin ? 2 * (bins() - 1) : 2 * bins() - 1; }

  double re(Index k) const { return reim[k]; }
  double im(Index k) const { return reim[bins() + k]; }
  Complex value(Index k) const { return {re(k), im(k)}; }
  CVec values() const;

  bool has_cov() const { return cov.size() > 0; }

  /// Dimensional consistency; with `real_signal` also checks that the
  /// imaginary parts at DC (and Nyquist) vanish, as required for the
  /// spectrum of a real signal.
  void validate(bool real_signal = false) const;
};

/// Amplitude/phase form of a half-spectrum with covariance over the stacked
/// (amplitude, phase) vector. Frequencies and the Nyquist flag are carried
/// along so the conversion back to re/im form is self-contained.
struct AmpPhaseU {
  Vec amplitude;
  Vec phase;  ///< rad
  Vec freqs;
  Mat cov;  ///< 2M x 2M or empty
  bool nyquist_bin = true;

  Index bins() const { return amplitude.size(); }
  bool has_cov() const { return cov.size() > 0; }
  void validate() const;
};

/// Multivariate linear measurement model Y = C * X.
struct LinearModel {
  Mat sens;  ///< K x N sensitivity matrix

  void validate() const;
};

/// Discrete-time linear state-space model
///   z[n] = state * z[n-1] + input * x[n-1]
///   y[n] = output * z[n] + feedthrough * x[n]
struct StateSpace {
  Mat state;        ///< n x n
  Mat input;        ///< n x p
  Mat output;       ///< q x n
  Mat feedthrough;  ///< q x p

  void validate() const;
};

// ---------------------------------------------------------------------------
// GUM-S2 linear propagation
// ---------------------------------------------------------------------------

struct Propagated {
  Vec y;
  Mat cov;
};

/// y = C*x, Uy = C*Ux*C^T (symmetrized). Ux must be symmetric to 1e-8
/// relative; propagated covariances accumulate rounding asymmetry, so the
/// gate is looser than the construction-time invariant.
Propagated linear_propagate(const LinearModel& model, const Vec& x, const Mat& ux);

/// Model matrix mapping samples X_1..X_N to running means
///   Y_1 = 0,  Y_j = trapezoid(X_1..X_j) / (t_j - t_1)
/// so a constant input maps to itself for j >= 2.
LinearModel cumulative_mean_model(Index n, double dt);

}  // namespace dynunc
