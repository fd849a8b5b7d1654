#pragma once

#include <cstdint>
#include <functional>

#include "dynunc/core.hpp"
#include "dynunc/rng.hpp"

namespace dynunc::mc {

/// Streaming (Welford) mean and variance over vector-valued samples.
/// One pass matches a two-pass computation to ~1e-10 relative at desk-scale
/// draw counts; optionally tracks the full covariance.
class RunningStats {
public:
  explicit RunningStats(Index dim, bool track_cov = false);

  void update(const Vec& sample);

  long count() const { return n_; }
  const Vec& mean() const { return mean_; }
  /// Sample variance (denominator n-1); zero before the second sample.
  Vec variance() const;
  Vec std_dev() const;
  /// Sample covariance; requires track_cov.
  Mat covariance() const;

private:
  long n_ = 0;
  Vec mean_;
  Vec m2_;
  Mat c2_;
  bool track_cov_;
};

struct McOptions {
  long draws = 2000;
  std::uint64_t seed = 1;
  bool full_cov = false;      ///< buffer-free streaming cov; output dim <= 512
  bool skip_failures = false; ///< skip-and-count instead of abort on model failure
};

struct McResult {
  Vec mean;
  Vec std_dev;
  Mat cov;  ///< empty unless full_cov requested
  long draws = 0;
  long failures = 0;
};

using ModelFn = std::function<Vec(const Vec&)>;

/// Monte Carlo propagation of a multivariate normal input through an
/// arbitrary model, with chol_psd-based sampling and streaming statistics.
McResult mc_propagate(const ModelFn& model, const Vec& est, const Mat& cov,
                      const McOptions& opt = {});

/// One draw from N(est, factor*factor^T) using the given generator.
Vec sample_normal(const Vec& est, const Mat& factor, rng::Xoshiro256ss& gen);

}  // namespace dynunc::mc
