#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace mcsle {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double n_eff = 0.0;  // effective sample size (KS) or degrees of freedom (chi-square)
};

// P(K > lambda) for the Kolmogorov distribution.
double kolmogorov_survival(double lambda);

// Two-sample Kolmogorov-Smirnov with optional nonnegative weights (empty span
// means unit weights). Weighted samples enter through Kish effective sizes.
TestResult ks_two_sample(std::span<const double> x, std::span<const double> wx, std::span<const double> y,
                         std::span<const double> wy);
TestResult ks_two_sample(std::span<const double> x, std::span<const double> y);

// Pearson goodness of fit; bins with expected count below `min_expected` are
// pooled into their neighbour.
TestResult chi_square_gof(std::span<const double> observed, std::span<const double> expected,
                          double min_expected = 5.0);

// Observed counts of a nonnegative integer variable against Poisson(mean).
TestResult poisson_count_test(std::span<const std::int64_t> counts, double mean);

double binomial_stderr(double p, std::int64_t n);

struct WeightedMoments {
  double mean = 0.0;
  double variance = 0.0;
  double sum_weights = 0.0;
  double n_eff = 0.0;
};
WeightedMoments weighted_moments(std::span<const double> x, std::span<const double> w);

}  // namespace mcsle
