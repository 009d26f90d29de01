#pragma once

#include <vector>

#include "kpiguard/kpi.hpp"
#include "kpiguard/rng.hpp"

namespace kpiguard {

// Multivariate normal model over the six KPI features. The lower-triangular
// factor is computed once over cov + jitter*I so that near-singular sample
// covariances (the packet counts track the throughputs almost exactly)
// stay factorizable.
struct MvnModel {
  Vec6 mean = Vec6::Zero();
  Mat6 cov = Mat6::Zero();
  Mat6 chol = Mat6::Zero();  // lower factor of cov + jitter*I
  double jitter = 0.0;       // 1e-6 * trace(cov) / 6
};

// Sample mean and unbiased sample covariance. Requires more samples than
// features (>= 7 rows); throws InsufficientDataError otherwise and
// NumericError if the jittered factorization fails.
MvnModel fit_mvn(const std::vector<Vec6>& samples);
MvnModel fit_mvn(const std::vector<KpiRecord>& records);

// Scales mean and covariance by the same factor and refactorizes.
// Throws DomainError for factor <= 0.
MvnModel amplify(const MvnModel& model, double factor);

// Draws mean + chol*z with z standard normal, then maps the result into the
// KPI domain: throughputs clamped at zero, count features rounded to the
// nearest non-negative integer.
Vec6 sample(const MvnModel& model, Rng& rng);

// Mahalanobis distance sqrt((x-mean)' (cov + jitter I)^-1 (x-mean)) computed
// through the stored factor. A zero factor (all-identical fit) yields 0 for
// x == mean and +inf otherwise.
double mahalanobis(const MvnModel& model, const Vec6& x);

}  // namespace kpiguard
