#pragma once

#include <cstdint>

#include "dynunc/core.hpp"
#include "dynunc/filter.hpp"

namespace dynunc::design {

using filt::DigitalFilterU;

/// Calibrated frequency response: complex values per frequency with an
/// optional 2M x 2M covariance over the stacked (Re, Im) vector.
struct FreqRespData {
  Vec freqs;  ///< Hz, strictly increasing
  Vec re;
  Vec im;
  Mat cov;  ///< 2M x 2M or empty

  Index size() const { return freqs.size(); }
  Complex value(Index k) const { return {re[k], im[k]}; }
  CVec values() const;
  bool has_cov() const { return cov.size() > 0; }
  Vec stacked() const;

  void validate() const;
  /// Frequencies must lie in [0, fs/2] once a sampling rate is attached.
  void validate_against_fs(double fs) const;
};

struct LsfirOptions {
  int order = 8;       ///< Nb, filter has order+1 taps
  int delay_n0 = 0;    ///< regularization delay in samples
  double fs = 1.0;     ///< Hz
  Vec weights;         ///< optional per-frequency LS weights (empty = uniform)
  bool inverse = true; ///< fit e^{-jw tau0}/H instead of e^{-jw tau0} H
  int mc_draws = 0;    ///< >0 and H.cov present: coefficient covariance by MC refit
  std::uint64_t seed = 1;
};

/// Least-squares FIR fit to the delayed inverse (or forward) of a measured
/// frequency response. Coefficient covariance, when requested, comes from
/// refitting Monte Carlo draws of the response, not from the LS normal
/// equations: the reciprocal target is a nonlinear function of H.
DigitalFilterU lsfir(const FreqRespData& h, const LsfirOptions& opt,
                     double* residual_out = nullptr);

struct LsiirOptions {
  int nb = 4;
  int na = 4;
  int delay_n0 = 0;
  double fs = 1.0;
  bool inverse = true;
  int max_iter = 50;
};

struct LsiirResult {
  DigitalFilterU filter;
  double residual = 0.0;  ///< ||B/A - T||_2 of the returned iterate
  bool stabilized = false;  ///< pole reflection was needed for the returned filter
  bool converged = false;
};

/// Equation-error IIR fit with Sanathanan-Koerner reweighting; poles with
/// modulus >= 1 are reflected to their conjugate reciprocals and the
/// numerator refitted with the denominator fixed. The returned filter always
/// satisfies isstable; on non-convergence the best stable iterate is
/// returned with converged = false.
LsiirResult lsiir(const FreqRespData& h, const LsiirOptions& opt);

/// Windowed-sinc FIR low pass with a Kaiser window, scaled to unit DC gain.
/// order must be even (linear phase); delay_n0 = order/2.
DigitalFilterU kaiser_lowpass(int order, double cutoff_hz, double fs, double beta);

/// Group delay in samples on the given grid, by the ramped-coefficient
/// method extended to rational filters.
Vec group_delay(const DigitalFilterU& flt, const Vec& freqs, double fs);

/// True iff all denominator roots have modulus strictly below one.
bool isstable(const DigitalFilterU& flt);

/// Savitzky-Golay smoothing / differentiation with polynomial boundary
/// handling; deriv > 0 scales by dt^-deriv.
Vec savgol(const Vec& x, int window, int polyorder, int deriv = 0, double dt = 1.0);

/// Roots of the denominator polynomial 1 + a1 z^-1 + ... (helper shared with
/// the stabilization step; FIR filters have none).
CVec denominator_roots(const Vec& a);

}  // namespace dynunc::design
