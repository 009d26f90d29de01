#include "kpiguard/mvn.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>

#include "kpiguard/error.hpp"

namespace kpiguard {

namespace {

constexpr double kJitterScale = 1e-6;

void factorize(MvnModel& model) {
  const double trace = model.cov.trace();
  model.jitter = kJitterScale * trace / 6.0;
  if (trace <= 0.0) {
    // Zero-variance fit (all samples identical): the factor is the zero
    // matrix and sampling degenerates to the mean.
    model.chol.setZero();
    return;
  }
  Mat6 shifted = model.cov + model.jitter * Mat6::Identity();
  Eigen::LLT<Mat6> llt(shifted);
  if (llt.info() != Eigen::Success) {
    throw NumericError("covariance factorization failed after jitter");
  }
  model.chol = llt.matrixL();
}

}  // namespace

MvnModel fit_mvn(const std::vector<Vec6>& samples) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  if (n < kNumKpiFeatures + 1) {
    throw InsufficientDataError(
        "need at least " + std::to_string(kNumKpiFeatures + 1) +
        " samples to fit a " + std::to_string(kNumKpiFeatures) +
        "-dimensional normal, got " + std::to_string(n));
  }
  Eigen::MatrixXd x(n, kNumKpiFeatures);
  for (Eigen::Index i = 0; i < n; ++i) {
    x.row(i) = samples[static_cast<std::size_t>(i)].transpose();
  }
  MvnModel model;
  model.mean = x.colwise().mean().transpose();
  Eigen::MatrixXd centered = x.rowwise() - model.mean.transpose();
  Mat6 cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  model.cov = 0.5 * (cov + cov.transpose());  // exact symmetry
  factorize(model);
  return model;
}

MvnModel fit_mvn(const std::vector<KpiRecord>& records) {
  std::vector<Vec6> samples;
  samples.reserve(records.size());
  for (const auto& r : records) samples.push_back(r.features());
  return fit_mvn(samples);
}

MvnModel amplify(const MvnModel& model, double factor) {
  if (!(factor > 0.0)) {
    throw DomainError("amplification factor must be positive");
  }
  MvnModel out;
  out.mean = factor * model.mean;
  out.cov = factor * model.cov;
  factorize(out);
  return out;
}

Vec6 sample(const MvnModel& model, Rng& rng) {
  Vec6 z;
  for (int i = 0; i < kNumKpiFeatures; ++i) z[i] = rng.normal();
  Vec6 raw = model.mean + model.chol * z;
  Vec6 out;
  for (int f = 0; f < kNumKpiFeatures; ++f) {
    if (is_integer_feature(f)) {
      out[f] = static_cast<double>(
          std::max<std::int64_t>(0, std::llround(raw[f])));
    } else {
      out[f] = std::max(0.0, raw[f]);
    }
  }
  return out;
}

double mahalanobis(const MvnModel& model, const Vec6& x) {
  const Vec6 r = x - model.mean;
  // Forward substitution with explicit zero-pivot handling so degenerate
  // models still score sensibly.
  Vec6 y;
  for (int i = 0; i < kNumKpiFeatures; ++i) {
    double s = r[i];
    for (int j = 0; j < i; ++j) s -= model.chol(i, j) * y[j];
    const double pivot = model.chol(i, i);
    if (pivot > 0.0) {
      y[i] = s / pivot;
    } else if (std::abs(s) < 1e-12) {
      y[i] = 0.0;
    } else {
      return std::numeric_limits<double>::infinity();
    }
  }
  return y.norm();
}

}  // namespace kpiguard
