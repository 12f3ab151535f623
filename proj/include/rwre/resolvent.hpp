#pragma once

// R_n g = sum_j (1 - 1/n^2)^j L^j g on the periodised environment, computed
// both by the truncated series and by a sparse direct solve.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "rwre/env_laws.hpp"
#include "rwre/lattice.hpp"
#include "rwre/torus.hpp"

namespace rwre {

struct ResolventResult {
  enum class Method { Series, Direct };

  RealVector values;
  Method method = Method::Direct;
  std::size_t terms = 0;  // series: number of powers summed
  double residual = 0.0;  // direct: || [I - (1-1/n^2)L] R - g ||_inf
};

/// Solves [I - (1 - 1/n^2) L] R = g.
ResolventResult resolvent_direct(const TorusKernel& kernel, std::span<const double> g);
ResolventResult resolvent_direct(const TorusEnvironment& env, const EnvironmentTransform& t,
                                 std::span<const double> g);

/// Partial sum up to J = ceil(n^2 ln(n^2 ||g||_inf / tol)), tail <= tol.
ResolventResult resolvent_series(const TorusKernel& kernel, std::span<const double> g, double tol);
ResolventResult resolvent_series(const TorusEnvironment& env, const EnvironmentTransform& t,
                                 std::span<const double> g, double tol);

/// ||R_n g||_inf / (n^2 ||g/c||_d).
double resolvent_ratio(const TorusEnvironment& env, const EnvironmentTransform& t, std::span<const double> g);

struct ResolventBoundReport {
  std::vector<int> sizes;
  std::vector<std::vector<double>> ratios;  // [size][trial]
  std::vector<double> max_ratio;            // per size
  double max_growth = 0.0;                  // max over consecutive sizes of max_ratio[k+1]/max_ratio[k]
  bool bounded = false;                     // max_growth <= growth_limit
  double growth_limit = 1.5;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

/// Samples `trials` environments per size from the law (its n overridden by
/// each size) and nonnegative g uniform on [0,1) per site.
ResolventBoundReport verify_resolvent_bound(const LawSpec& law, const EnvironmentTransform& t, const std::vector<int>& sizes,
                           int trials, double growth_limit = 1.5);

/// Smallest integer K with (d^2+1)/K^2 < 1/2 - 1/e.
int doob_constant(int d);

struct ExitDiagnostic {
  int d = 0;
  int n = 0;
  int K = 0;
  double bound = 0.0;  // (d^2+1)/K^2
  std::size_t starts = 0;
  std::size_t paths_per_start = 0;
  double sup_estimate = 0.0;
  double sup_stderr = 0.0;
  Point worst_start;
  bool within_bound = false;           // sup_estimate <= bound + 3 stderr
  bool within_pointwise_bound = false; // every start below (n^2+|x|_1^2)/(K^2 n^2) + 3 stderr
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

/// Monte Carlo P_x[tau_{Kn} <= n^2] over `starts` sites of T_n (all sites if
/// starts >= |T_n|), each with `paths` walks on the periodised environment.
ExitDiagnostic exit_probability_diagnostic(const TorusEnvironment& env, const EnvironmentTransform& t,
                                           std::size_t starts, std::size_t paths, std::uint64_t seed);

}  // namespace rwre
