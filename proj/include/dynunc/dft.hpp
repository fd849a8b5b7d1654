#pragma once

#include "dynunc/core.hpp"

namespace dynunc::dft {

/// Covariance propagation route. Structured applies the DFT linear map
/// row/column-wise with an FFT (O(N^2 log N)); Dense materializes the full
/// Jacobian and is the correctness reference the tests select explicitly.
enum class CovPath { Auto, Structured, Dense };

/// Forward DFT (X_k = sum_n x_n exp(-2*pi*i*k*n/N), no forward normalization)
/// of a real signal, returning the half-spectrum with its exact covariance
/// J*Ux*J^T. Odd N is supported (no Nyquist bin).
SpectrumU gum_dft(const TimeSeriesU& x, CovPath path = CovPath::Auto);

/// Inverse of gum_dft back to nout samples with exact covariance propagation.
/// nout = 0 picks the length implied by the spectrum's Nyquist flag; an
/// explicit nout must equal 2(M-1) or 2M-1.
TimeSeriesU gum_idft(const SpectrumU& f, Index nout = 0, CovPath path = CovPath::Auto);

/// Per-bin complex product Y = X.*H with first-order covariance propagation;
/// the operands are treated as statistically independent.
SpectrumU dft_multiply(const SpectrumU& x, const SpectrumU& h);

/// Per-bin complex division Y = X./H (frequency-domain deconvolution).
/// Bins with |H| below mag_floor * max|H| signal an ill-posed division and
/// throw NumericError listing the offending bins; regularize (low-pass)
/// before dividing.
SpectrumU dft_deconv(const SpectrumU& x, const SpectrumU& h, double mag_floor = 1e-6);

/// Compensation transfer function H = DFT(yref) ./ DFT(xmeas) with full
/// covariance, for two simultaneously sampled records.
SpectrumU dft_transferfunction(const TimeSeriesU& yref, const TimeSeriesU& xmeas,
                               double mag_floor = 1e-6);

/// (A, phi) -> (A cos phi, A sin phi) with the per-bin Jacobian.
SpectrumU amp_phase_to_dft(const AmpPhaseU& ap);

/// (Re, Im) -> (|F|, atan2) with the per-bin Jacobian; phase optionally
/// unwrapped along frequency. Zero-magnitude bins have no defined phase.
AmpPhaseU dft_to_amp_phase(const SpectrumU& f, bool unwrap_phase = true);

/// Dense half-spectrum DFT Jacobian (2M x N); reference path and test oracle.
Mat dft_jacobian(Index n);

/// Dense inverse-map Jacobian (nout x 2M); the columns for Im at DC (and
/// Nyquist) are zero, matching the real-signal reconstruction formula.
Mat idft_jacobian(Index m, bool nyquist_bin, Index nout);

}  // namespace dynunc::dft
