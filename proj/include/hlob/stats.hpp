#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace hlob::stats {

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double se = 0.0;        // standard error of the mean
  double variance_se = 0.0;  // standard error of the sample variance
};

Summary summarize(std::span<const double> xs);

/// Kolmogorov survival function Q(t) = P(sup|B| > t) = 2 sum (-1)^{k-1} exp(-2 k^2 t^2).
double kolmogorov_survival(double t);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

KsResult ks_one_sample(std::vector<double> xs, const std::function<double(double)>& cdf);
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

double pearson(std::span<const double> a, std::span<const double> b);

/// Sample covariance with the standard error of the estimate, computed from the
/// per-replicate products (x - mean_x)(y - mean_y).
struct CovarianceEstimate {
  double estimate = 0.0;
  double se = 0.0;
};
CovarianceEstimate covariance(std::span<const double> a, std::span<const double> b);

}  // namespace hlob::stats
