#include "dynunc/mc.hpp"

#include <sstream>

namespace dynunc::mc {

RunningStats::RunningStats(Index dim, bool track_cov)
    : mean_(Vec::Zero(dim)), m2_(Vec::Zero(dim)), track_cov_(track_cov) {
  if (dim <= 0) throw InvalidArgument("RunningStats: dimension must be positive");
  if (track_cov_) c2_ = Mat::Zero(dim, dim);
}

void RunningStats::update(const Vec& sample) {
  if (sample.size() != mean_.size())
    throw InvalidArgument("RunningStats: sample dimension mismatch");
  ++n_;
  const Vec delta = sample - mean_;
  mean_ += delta / static_cast<double>(n_);
  const Vec delta2 = sample - mean_;
  m2_ += delta.cwiseProduct(delta2);
  if (track_cov_) c2_ += delta * delta2.transpose();
}

Vec RunningStats::variance() const {
  if (n_ < 2) return Vec::Zero(mean_.size());
  return m2_ / static_cast<double>(n_ - 1);
}

Vec RunningStats::std_dev() const { return variance().cwiseMax(0.0).cwiseSqrt(); }

Mat RunningStats::covariance() const {
  if (!track_cov_) throw InvalidArgument("RunningStats: covariance tracking not enabled");
  if (n_ < 2) return Mat::Zero(mean_.size(), mean_.size());
  return symmetrized(c2_ / static_cast<double>(n_ - 1));
}

Vec sample_normal(const Vec& est, const Mat& factor, rng::Xoshiro256ss& gen) {
  Vec z(factor.cols());
  for (Index i = 0; i < z.size(); ++i) z[i] = gen.normal();
  return est + factor * z;
}

McResult mc_propagate(const ModelFn& model, const Vec& est, const Mat& cov,
                      const McOptions& opt) {
  if (!model) throw InvalidArgument("mc_propagate: no model");
  if (opt.draws < 100) throw InvalidArgument("mc_propagate: need at least 100 draws");
  if (cov.rows() != est.size() || cov.cols() != est.size())
    throw InvalidArgument("mc_propagate: covariance dimension mismatch");

  McResult out;

  // Exactly known input: a single evaluation gives the degenerate result.
  if (max_abs(cov) == 0.0) {
    out.mean = model(est);
    out.std_dev = Vec::Zero(out.mean.size());
    if (opt.full_cov) out.cov = Mat::Zero(out.mean.size(), out.mean.size());
    out.draws = opt.draws;
    return out;
  }

  const Mat factor = chol_psd(cov);
  rng::Xoshiro256ss gen(opt.seed);

  RunningStats stats(1, false);
  bool stats_ready = false;
  for (long d = 0; d < opt.draws; ++d) {
    const Vec x = sample_normal(est, factor, gen);
    Vec y;
    try {
      y = model(x);
    } catch (const std::exception& e) {
      if (!opt.skip_failures) {
        std::ostringstream msg;
        msg << "mc_propagate: model failed on draw " << d << ": " << e.what();
        throw NumericError(msg.str());
      }
      ++out.failures;
      continue;
    }
    if (!stats_ready) {
      if (opt.full_cov && y.size() > 512)
        throw InvalidArgument("mc_propagate: full covariance limited to output dim <= 512");
      stats = RunningStats(y.size(), opt.full_cov);
      stats_ready = true;
    }
    stats.update(y);
  }
  if (!stats_ready) throw NumericError("mc_propagate: all draws failed");

  out.mean = stats.mean();
  out.std_dev = stats.std_dev();
  if (opt.full_cov) out.cov = stats.covariance();
  out.draws = stats.count();
  return out;
}

}  // namespace dynunc::mc
