#pragma once

#include <cstdint>

#include "dynunc/core.hpp"
#include "dynunc/design.hpp"
#include "dynunc/filter.hpp"

namespace dynunc::sos {

/// Second-order sensor model S(w) = S0 w0^2 / (w0^2 + 2j w delta w0 - w^2)
/// parameterized by static gain, damping and resonance frequency in Hz
/// (w0 = 2 pi f0), with a 3x3 parameter covariance (may be empty).
struct SosParams {
  double s0 = 1.0;
  double delta = 0.1;
  double f0 = 1.0;  ///< Hz
  Mat cov;          ///< 3x3 over (s0, delta, f0) or empty

  double omega0() const;
  bool has_cov() const { return cov.size() > 0; }
  void validate() const;
};

/// S(w) on a grid of non-negative frequencies in Hz.
CVec sos_freq_resp(const SosParams& p, const Vec& freqs);

/// Continuous-time rational transfer function, coefficients in descending
/// powers of s.
struct ContinuousTf {
  Vec num;
  Vec den;
};

/// H(s) = S0 w0^2 / (s^2 + 2 delta w0 s + w0^2).
ContinuousTf sos_phys2filter(const SosParams& p);

enum class ResponseForm { ReIm, AmpPhase };

struct McResponseResult {
  ResponseForm form = ResponseForm::ReIm;
  design::FreqRespData reim;  ///< filled for ReIm
  AmpPhaseU ampphase;         ///< filled for AmpPhase
  long rejected = 0;          ///< draws discarded for delta <= 0 or f0 <= 0
};

/// Monte Carlo propagation of the physical-parameter covariance to the
/// frequency response (re/im or amplitude/phase form). Draws with
/// non-physical delta or f0 are rejected and resampled; more than 50%
/// rejections abort.
McResponseResult sos_mc_response(const SosParams& p, const Vec& freqs, long draws,
                                 ResponseForm form, std::uint64_t seed = 1);

struct FitSosOptions {
  bool weighted = false;   ///< weight equations by 1/var(Re 1/S), 1/var(Im 1/S)
  long mc_draws = 2000;    ///< response draws for the parameter covariance
  std::uint64_t seed = 1;
};

/// Identify (S0, delta, f0) from a measured complex response by the
/// normalized reciprocal form
///   1/S(w) = 1/S0 + (2 delta/(S0 w0)) jw - (1/(S0 w0^2)) w^2,
/// which is linear in c = (1/S0, 2 delta/(S0 w0), 1/(S0 w0^2)). Parameter
/// covariance by Monte Carlo refit over response draws when S carries one.
SosParams fit_sos(const design::FreqRespData& s, const FitSosOptions& opt = {});

/// Tustin transform with optional prewarp frequency; den degree must be
/// >= num degree.
filt::DigitalFilterU bilinear_discretize(const ContinuousTf& tf, double fs,
                                         double prewarp_hz = 0.0);

}  // namespace dynunc::sos
