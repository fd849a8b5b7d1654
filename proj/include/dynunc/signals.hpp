#pragma once

#include <cstdint>

#include "dynunc/core.hpp"

namespace dynunc::sig {

/// Shock-like excitation: a Gaussian followed by a smaller Gaussian of
/// opposite sign. The doublet shape parameters (undershoot ratio, delay in
/// sigmas, width ratio) default to this library's choices and are all
/// overridable.
struct ShockParams {
  double t0 = 0.0;     ///< s, centre of the main pulse
  double sigma = 1.0;  ///< s, main pulse width
  double m0 = 1.0;     ///< peak height
  double undershoot = 0.4;
  double delay_sigmas = 2.0;
  double width_ratio = 1.2;
};

TimeSeriesU shock_like(const ShockParams& p, double fs, double duration);

struct SignalSpec {
  enum class Kind { Shock, Gauss, Rect, SquarePulse, Sine };

  Kind kind = Kind::Gauss;
  double fs = 1.0;        ///< Hz
  double duration = 1.0;  ///< s

  // Gauss / Shock
  double t0 = 0.0;
  double sigma = 1.0;
  double m0 = 1.0;
  ShockParams shock{};

  // Rect / SquarePulse
  double height = 1.0;
  double width = 1.0;  ///< s
  int count = 1;       ///< pulses in the square train

  // Sine
  double amplitude = 1.0;
  double frequency = 1.0;  ///< Hz
  double phase = 0.0;      ///< rad

  void validate() const;
};

/// Exact sample-wise evaluation of the named primitive.
TimeSeriesU primitive_signal(const SignalSpec& spec);

/// Adds seeded white normal noise with the given standard deviation and
/// records it in the uncertainty (combined in quadrature with any existing
/// pointwise uncertainty). sigma = 0 returns the input unchanged.
TimeSeriesU add_noise(const TimeSeriesU& x, double sigma, std::uint64_t seed);
TimeSeriesU add_noise(const TimeSeriesU& x, const Vec& sigma, std::uint64_t seed);

}  // namespace dynunc::sig
