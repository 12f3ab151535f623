#pragma once

// Walk kernel on the torus T_n, its invariant density, and the density
// norm bound diagnostics.

#include <Eigen/SparseCore>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>

#include "rwre/lattice.hpp"
#include "rwre/rng.hpp"

namespace rwre {

using SparseKernel = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Row-stochastic transition matrix of the periodised walk, indexed by the
/// row-major site order of TorusEnvironment.
struct TorusKernel {
  int d = 0;
  int n = 0;
  SparseKernel matrix;

  std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
};

/// Entry (x, x+v) = E(omega)(x, v); moves wrapping onto the same state add up.
TorusKernel build_kernel(const EnvironmentView& env);
TorusKernel build_kernel(const TorusEnvironment& env, const EnvironmentTransform& t);

/// Strong connectivity of the positive off-diagonal pattern.
bool is_irreducible(const TorusKernel& kernel);

/// Density of the stationary law w.r.t. normalized counting measure:
/// mean(phi) = 1 and phi^T K = phi^T.
struct InvariantDensity {
  int d = 0;
  int n = 0;
  RealVector phi;
  double residual = 0.0;
  std::string method;
  std::size_t iterations = 0;
};

enum class DensityMethod { Auto, Power, Direct };

inline constexpr std::size_t kPowerIterationCap = 1'000'000;
inline constexpr std::size_t kDirectSolveMaxStates = std::size_t{1} << 24;

/// Auto runs lazy power iteration and falls back to the direct solve when the
/// residual stalls or the iteration cap is reached.
InvariantDensity invariant_density(const TorusKernel& kernel, double tol = 1e-10,
                                   DensityMethod method = DensityMethod::Auto);

/// || phi^T K - phi^T ||_1
double stationarity_residual(const TorusKernel& kernel, std::span<const double> phi);

struct DensityBoundReport {
  int n = 0;
  double p = 0.0;
  double lhs = 0.0;       // ||phi_n||_{p/(p-1)}
  double rhs_base = 0.0;  // ||1/c||_p^{d/(p-d)}
  double ratio = 0.0;     // lhs / rhs_base
};

/// Requires p > d and every c(E, x) > 0 (DegenerateSite otherwise).
DensityBoundReport density_norm_bound(const TorusEnvironment& env, const EnvironmentTransform& t, double p);

/// (1/(2n)^d) sum_x f(tau_x omega_n).
double empirical_measure_integral(const EnvironmentView& env,
                                  const std::function<double(const EnvironmentView&)>& f);

/// Draws x with probability phi(x)/(2n)^d.
class DensitySampler {
 public:
  explicit DensitySampler(const InvariantDensity& density);
  std::size_t draw_index(CounterRng& rng) const;
  Point draw(CounterRng& rng) const;

 private:
  TorusEnvironment geometry_;
  RealVector cdf_;
};

Point sample_site_from_density(const InvariantDensity& density, std::uint64_t seed);

/// CSV: index,x_1..x_d,phi
void write_density_csv(std::ostream& out, const InvariantDensity& density);

}  // namespace rwre
