#pragma once

#include <cstdint>

#include "dynunc/core.hpp"

namespace dynunc::filt {

/// Digital filter with uncertain coefficients. `a` always starts with
/// a0 = 1; a.size() == 1 means FIR. `cov` is the joint covariance over the
/// stacked (b, a-tail) vector and may be empty (exactly known coefficients).
/// `delay_n0` is the nominal reconstruction delay in samples (tau0 = n0*Ts).
struct DigitalFilterU {
  Vec b;
  Vec a = Vec::Ones(1);
  Mat cov;
  int delay_n0 = 0;

  static DigitalFilterU fir(Vec b, int delay_n0 = 0);

  Index order_b() const { return b.size() - 1; }
  Index order_a() const { return a.size() - 1; }
  Index n_params() const { return b.size() + a.size() - 1; }
  bool is_fir() const { return a.size() <= 1; }
  bool has_cov() const { return cov.size() > 0; }

  void validate() const;
};

/// Deconvolution output: the measurand estimate plus the pointwise bound on
/// the dynamic error introduced by the imperfect deconvolution filter.
struct DeconvResult {
  TimeSeriesU y;
  Vec delta_bound;
};

/// Plain zero-initial-state filtering (direct form II transposed), no
/// uncertainty. Shared workhorse for the Monte Carlo paths.
Vec filter_values(const Vec& b, const Vec& a, const Vec& x);

/// Filter frequency response B(e^{-j w})/A(e^{-j w}) on a grid in Hz.
CVec freq_resp(const DigitalFilterU& flt, const Vec& freqs, double fs);

/// FIR filtering with the closed-form first-order variance: input noise and
/// coefficient uncertainty contribute independently, pointwise output
/// uncertainty. The input may carry white, pointwise or full covariance.
TimeSeriesU fir_unc_filter(const TimeSeriesU& x, const DigitalFilterU& flt);

/// IIR filtering of a signal with white/pointwise noise via the discrete
/// state-space covariance recursion
///   P[n] = A P[n-1] A^T + B var_x[n-1] B^T,  u_y^2[n] = C P[n] C^T + D^2 var_x[n].
/// Exact coefficients only; with coefficient covariance use smc_filter.
TimeSeriesU iir_ss_filter(const TimeSeriesU& x, const DigitalFilterU& flt);

struct SmcOptions {
  long draws = 10000;
  Index block = 1024;
  std::uint64_t seed = 1;
};

/// Memory-efficient sequential Monte Carlo filtering: `draws` filter
/// instances with coefficients sampled from the filter covariance (unstable
/// draws rejected and resampled, at most 10x draws attempts) run in lockstep
/// over the signal, holding per-instance filter state only. Input noise is
/// taken from x.unc (white or pointwise). Memory scales with
/// draws*(filter order) + block, never draws*N, and the result is
/// bit-identical for a fixed seed regardless of block size.
TimeSeriesU smc_filter(const TimeSeriesU& x, const DigitalFilterU& flt,
                       const SmcOptions& opt = {});

struct BoundBreakdown {
  double below_w1 = 0.0;
  double transition = 0.0;
  double above_w2 = 0.0;
};

/// Pointwise bound on the dynamic error of a deconvolution filter: with
/// residual R(w_k) = H(j w_k) F(e^{j w_k Ts}) - e^{-j w_k n0 Ts},
///   |Delta[n]| <= (1/N) sum_k w_k |R(w_k)| |X_k|
/// (w_k the Hermitian-symmetry weight). X is the spectrum of the signal
/// whose content the residual acts on -- the known measurand in validation
/// studies, the deconvolved estimate in production use. The (w1, w2) design
/// band only splits the reported contributions; every bin enters the bound.
Vec dynamic_error_bound(const DigitalFilterU& flt, const CVec& h, const SpectrumU& x,
                        double w1, double w2, BoundBreakdown* breakdown = nullptr);

/// FIR deconvolution in one step: filters the record and attaches the
/// dynamic-error bound evaluated against the system response h on the
/// record's DFT grid (with the estimate's own spectrum as the content).
DeconvResult deconvolve(const TimeSeriesU& x, const DigitalFilterU& flt, const CVec& h,
                        double w1, double w2);

/// Direct-form state-space realization of (b, a) in the shape consumed by
/// iir_ss_filter.
StateSpace tf_to_state_space(const DigitalFilterU& flt);

/// Number of leading samples dominated by the zero-initial-state transient:
/// max(Nb, 3 * dominant time constant of the poles).
Index transient_length(const DigitalFilterU& flt);

}  // namespace dynunc::filt
