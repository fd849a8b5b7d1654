#include "dynunc/signals.hpp"

#include <cmath>
#include <numbers>

#include "dynunc/rng.hpp"

namespace dynunc::sig {

namespace {

Index sample_count(double fs, double duration) {
  const auto n = static_cast<Index>(std::floor(duration * fs + 0.5));
  if (n < 2) throw InvalidArgument("signal: duration too short for the sampling rate");
  return n;
}

double gauss(double t, double t0, double sigma, double m0) {
  const double u = (t - t0) / sigma;
  return m0 * std::exp(-0.5 * u * u);
}

}  // namespace

TimeSeriesU shock_like(const ShockParams& p, double fs, double duration) {
  if (!(fs > 0.0)) throw InvalidArgument("shock_like: fs must be > 0");
  if (!(duration > 0.0)) throw InvalidArgument("shock_like: duration must be > 0");
  if (!(p.sigma > 0.0)) throw InvalidArgument("shock_like: sigma must be > 0");
  if (!(p.width_ratio > 0.0)) throw InvalidArgument("shock_like: width ratio must be > 0");
  if (!(p.t0 + 5.0 * p.sigma < duration))
    throw InvalidArgument("shock_like: pulse truncated by the window (t0 + 5*sigma >= duration)");

  TimeSeriesU out;
  out.dt = 1.0 / fs;
  out.t0 = 0.0;
  const Index n = sample_count(fs, duration);
  out.values = Vec(n);
  const double d = p.delay_sigmas * p.sigma;
  const double w = p.width_ratio * p.sigma;
  for (Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * out.dt;
    out.values[i] = gauss(t, p.t0, p.sigma, p.m0) - p.undershoot * gauss(t, p.t0 + d, w, p.m0);
  }
  return out;
}

void SignalSpec::validate() const {
  if (!(fs > 0.0)) throw InvalidArgument("signal: fs must be > 0");
  if (!(duration > 0.0)) throw InvalidArgument("signal: duration must be > 0");
  switch (kind) {
    case Kind::Shock:
    case Kind::Gauss:
      if (!(sigma > 0.0)) throw InvalidArgument("signal: sigma must be > 0");
      break;
    case Kind::Rect:
      if (!(width > 0.0)) throw InvalidArgument("signal: width must be > 0");
      break;
    case Kind::SquarePulse:
      if (count < 1) throw InvalidArgument("signal: square pulse needs count >= 1");
      break;
    case Kind::Sine:
      if (!(frequency > 0.0)) throw InvalidArgument("signal: frequency must be > 0");
      break;
  }
}

TimeSeriesU primitive_signal(const SignalSpec& spec) {
  using Kind = SignalSpec::Kind;
  spec.validate();
  if (spec.kind == Kind::Shock) {
    ShockParams p = spec.shock;
    p.t0 = spec.t0;
    p.sigma = spec.sigma;
    p.m0 = spec.m0;
    return shock_like(p, spec.fs, spec.duration);
  }

  TimeSeriesU out;
  out.dt = 1.0 / spec.fs;
  out.t0 = 0.0;
  const Index n = sample_count(spec.fs, spec.duration);
  out.values = Vec(n);
  for (Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * out.dt;
    double v = 0.0;
    switch (spec.kind) {
      case Kind::Gauss:
        v = gauss(t, spec.t0, spec.sigma, spec.m0);
        break;
      case Kind::Rect:
        v = (t >= spec.t0 && t < spec.t0 + spec.width) ? spec.height : 0.0;
        break;
      case Kind::SquarePulse: {
        // count pulses spread over the duration, 50% duty cycle
        const double period = spec.duration / static_cast<double>(spec.count);
        const double local = std::fmod(t, period);
        v = (local < 0.5 * period) ? spec.height : 0.0;
        break;
      }
      case Kind::Sine:
        v = spec.amplitude *
            std::sin(2.0 * std::numbers::pi * spec.frequency * t + spec.phase);
        break;
      case Kind::Shock:
        break;  // handled above
    }
    out.values[i] = v;
  }
  return out;
}

namespace {

TimeSeriesU add_noise_impl(const TimeSeriesU& x, const Vec& sigma, bool scalar,
                           double scalar_sigma, std::uint64_t seed) {
  x.validate();
  if ((sigma.array() < 0.0).any())
    throw InvalidArgument("add_noise: sigma must be >= 0");
  if (sigma.size() != x.size())
    throw InvalidArgument("add_noise: sigma vector length mismatch");
  if (sigma.maxCoeff() == 0.0) return x;

  TimeSeriesU out = x;
  rng::Xoshiro256ss gen(seed);
  for (Index i = 0; i < x.size(); ++i) out.values[i] += sigma[i] * gen.normal();

  using Kind = Uncertainty::Kind;
  switch (x.unc.kind) {
    case Kind::None:
      out.unc = scalar ? Uncertainty::white(scalar_sigma) : Uncertainty::pointwise(sigma);
      break;
    case Kind::White:
      if (scalar) {
        out.unc = Uncertainty::white(std::hypot(x.unc.white_std, scalar_sigma));
      } else {
        Vec s(x.size());
        for (Index i = 0; i < x.size(); ++i) s[i] = std::hypot(x.unc.white_std, sigma[i]);
        out.unc = Uncertainty::pointwise(std::move(s));
      }
      break;
    case Kind::Pointwise: {
      Vec s(x.size());
      for (Index i = 0; i < x.size(); ++i) s[i] = std::hypot(x.unc.stds[i], sigma[i]);
      out.unc = Uncertainty::pointwise(std::move(s));
      break;
    }
    case Kind::Full: {
      Mat cov = x.unc.cov;
      cov.diagonal() += sigma.array().square().matrix();
      out.unc = Uncertainty::full(std::move(cov));
      break;
    }
  }
  return out;
}

}  // namespace

TimeSeriesU add_noise(const TimeSeriesU& x, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw InvalidArgument("add_noise: sigma must be >= 0");
  return add_noise_impl(x, Vec::Constant(x.size(), sigma), true, sigma, seed);
}

TimeSeriesU add_noise(const TimeSeriesU& x, const Vec& sigma, std::uint64_t seed) {
  return add_noise_impl(x, sigma, false, 0.0, seed);
}

}  // namespace dynunc::sig
