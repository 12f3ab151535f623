#include "rwre/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <cmath>

#include "rwre/error.hpp"

namespace rwre {

void RunningStats::add(double x) {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

double RunningStats::variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }

double RunningStats::stderr_of_mean() const {
  return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
}

double normal_cdf(double x) { return boost::math::cdf(boost::math::normal_distribution<>(), x); }

double chi_square_sf(double stat, double df) {
  if (df <= 0.0) return 1.0;
  if (stat <= 0.0) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<>(df), stat));
}

double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

TestResult ks_test(std::span<const double> samples, const std::function<double(double)>& cdf) {
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const auto n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  TestResult r;
  r.statistic = d;
  const double sn = std::sqrt(n);
  r.p_value = kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d);
  return r;
}

TestResult chi_square_two_sample(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                                 std::uint64_t min_pooled) {
  if (a.size() != b.size()) throw Error(ErrorCode::InvalidSpec, "category count mismatch");
  double total_a = 0.0;
  double total_b = 0.0;
  for (auto v : a) total_a += static_cast<double>(v);
  for (auto v : b) total_b += static_cast<double>(v);
  if (total_a == 0.0 || total_b == 0.0) return {};

  std::vector<std::pair<double, double>> bins;
  std::pair<double, double> rest{0.0, 0.0};
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] + b[k] == 0) continue;
    if (a[k] + b[k] < min_pooled) {
      rest.first += static_cast<double>(a[k]);
      rest.second += static_cast<double>(b[k]);
    } else {
      bins.emplace_back(static_cast<double>(a[k]), static_cast<double>(b[k]));
    }
  }
  if (rest.first + rest.second > 0.0) bins.push_back(rest);

  // Homogeneity statistic for two samples of possibly unequal size.
  const double ka = std::sqrt(total_b / total_a);
  const double kb = std::sqrt(total_a / total_b);
  TestResult r;
  for (const auto& [x, y] : bins) {
    const double diff = ka * x - kb * y;
    r.statistic += diff * diff / (x + y);
  }
  r.df = static_cast<double>(bins.size()) - 1.0;
  r.p_value = chi_square_sf(r.statistic, r.df);
  return r;
}

TestResult chi_square_goodness_of_fit(std::span<const std::uint64_t> observed, std::span<const double> probs) {
  if (observed.size() != probs.size()) throw Error(ErrorCode::InvalidSpec, "category count mismatch");
  double total = 0.0;
  for (auto v : observed) total += static_cast<double>(v);
  TestResult r;
  int used = 0;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    if (probs[k] <= 0.0) {
      if (observed[k] > 0) r.statistic = std::numeric_limits<double>::infinity();
      continue;
    }
    const double e = total * probs[k];
    const double diff = static_cast<double>(observed[k]) - e;
    r.statistic += diff * diff / e;
    ++used;
  }
  r.df = used - 1.0;
  r.p_value = std::isinf(r.statistic) ? 0.0 : chi_square_sf(r.statistic, r.df);
  return r;
}

BatchMeans batch_means(std::span<const double> series, std::size_t batches) {
  if (batches < 2 || series.size() < batches) throw Error(ErrorCode::InvalidSpec, "not enough data for batch means");
  const std::size_t len = series.size() / batches;
  RunningStats stats;
  for (std::size_t b = 0; b < batches; ++b) {
    double acc = 0.0;
    for (std::size_t i = b * len; i < (b + 1) * len; ++i) acc += series[i];
    stats.add(acc / static_cast<double>(len));
  }
  return {stats.mean(), stats.stderr_of_mean()};
}

}  // namespace rwre
