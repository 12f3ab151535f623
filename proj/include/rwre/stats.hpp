#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace rwre {

/// Welford accumulator.
class RunningStats {
 public:
  void add(double x);
  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const;  // unbiased
  double stderr_of_mean() const;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

double normal_cdf(double x);

/// P[chi^2_df >= stat].
double chi_square_sf(double stat, double df);

/// Asymptotic Kolmogorov tail P[K > lambda].
double kolmogorov_sf(double lambda);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double df = 0.0;
};

/// One-sample Kolmogorov-Smirnov against a continuous CDF; p-value with the
/// Stephens small-sample correction.
TestResult ks_test(std::span<const double> samples, const std::function<double(double)>& cdf);

/// Two-sample chi-square homogeneity test on paired category counts.
/// Categories whose pooled count is below min_pooled are merged into one bin.
TestResult chi_square_two_sample(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                                 std::uint64_t min_pooled = 10);

/// Chi-square goodness of fit of observed counts against probabilities.
TestResult chi_square_goodness_of_fit(std::span<const std::uint64_t> observed, std::span<const double> probs);

/// Mean and standard error of a correlated series from `batches` batch means.
struct BatchMeans {
  double mean = 0.0;
  double stderr_of_mean = 0.0;
};
BatchMeans batch_means(std::span<const double> series, std::size_t batches);

}  // namespace rwre
