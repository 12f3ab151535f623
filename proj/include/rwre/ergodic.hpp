#pragma once

// Statistical checks of the limit theorems on periodised environments:
// velocity (LLN), martingale CLT covariance, the finite kernel identities of
// the linear-transformation action, and the local-process coupling.

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "json.hpp"
#include "rwre/lattice.hpp"
#include "rwre/stats.hpp"
#include "rwre/torus.hpp"

namespace rwre {

/// Conditional covariance of one step from `site`:
/// diag T_i + T_{i+d} - (T_i - T_{i+d})^2, off-diag -(T_i - T_{i+d})(T_j - T_{j+d}).
Eigen::MatrixXd step_covariance(const SimplexPoint& site);

struct VelocityEstimate {
  RealVector v_hat;
  RealVector stderr_of_mean;
  std::size_t n_steps = 0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

/// Mean of X(steps)/steps over independent paths from the origin.
VelocityEstimate velocity_estimate(const EnvironmentView& env, std::size_t steps, std::size_t paths,
                                   std::uint64_t seed);
VelocityEstimate velocity_estimate(const TorusEnvironment& env, const EnvironmentTransform& t, std::size_t steps,
                                   std::size_t paths, std::uint64_t seed);

/// sum_x drift(omega, x) phi(x) / (2n)^d, with phi checked to be stationary
/// for the embedded kernel (DensityMismatch otherwise).
RealVector annealed_velocity(const TorusEnvironment& env, const InvariantDensity& density);

/// Drift of the original environment averaged against an arbitrary density
/// (no stationarity requirement); the torus velocity when phi is the
/// walk's own invariant density.
RealVector weighted_drift(const TorusEnvironment& env, std::span<const double> phi);

struct TimeAverageDrift {
  RealVector mean;
  RealVector stderr_of_mean;  // batch means
  std::size_t steps = 0;
};

/// (1/steps) sum_k drift(omega, X_k) along one coupled trajectory
/// (same streams as simulate_coupled).
TimeAverageDrift coupled_time_average_drift(const TorusEnvironment& env, const Point& start, std::size_t steps,
                                            std::uint64_t seed_walk, std::uint64_t seed_gamma,
                                            std::size_t batches = 100);

enum class StartMode { Origin, Stationary };

struct CltReport {
  Eigen::MatrixXd sigma_hat;  // sample covariance of U(steps)/sqrt(steps)
  Eigen::MatrixXd reference;  // path-averaged (1/steps) sum_k Sigma_k
  double frobenius_rel_error = 0.0;
  RealVector variance_ratio;  // sigma_hat_ii / reference_ii
  std::vector<TestResult> ks;  // per coordinate, standardized by reference_ii
  bool nondegenerate = false;
  std::size_t steps = 0;
  std::size_t paths = 0;
  StartMode start = StartMode::Origin;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

CltReport clt_check(const EnvironmentView& env, std::size_t steps, std::size_t paths, std::uint64_t seed,
                    StartMode start = StartMode::Origin);

struct KernelIdentityReport {
  double shift_max_dev = 0.0;        // tau_x (T.omega) vs T(tau_{Tx} omega), random probes
  double conjugation_max_dev = 0.0;  // K_d(T.omega, T B) vs K_d^T(omega, B), all sites and targets
  double reflection_max_dev = 0.0;   // K_gamma(alpha.omega, B) vs K_{1-gamma}(omega, alpha.B)
  double pushed_density_residual = 0.0;  // stationarity of the pushed embedded density
  bool pass = false;

  nlohmann::json to_json() const;
};

inline constexpr double kIdentityTolerance = 1e-15;
inline constexpr double kStationarityTolerance = 1e-10;

KernelIdentityReport kernel_identity_checks(const TorusEnvironment& env, int gamma, const DirectionPermutation& T,
                                            std::uint64_t seed = 0, std::size_t probes = 20);

/// K_gamma(omega at x, {tau_y omega}) = gamma K_d + (1-gamma) G_d.
double conditional_kernel(const EnvironmentView& env, int gamma, const Point& x, const Point& y);

enum class CouplingComparison {
  OriginalVsEmbedded,  // the law equality under test
  CoupledVsEmbedded,   // gamma marginalized; equal by construction
};

struct CouplingReport {
  int horizon = 0;
  std::size_t paths = 0;
  double alpha = 0.01;
  std::vector<TestResult> per_horizon;  // h = 1..horizon, joint law of sites 0..h
  double min_p_value = 1.0;
  bool pass = false;  // every p > alpha / horizon
  CouplingComparison comparison = CouplingComparison::OriginalVsEmbedded;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

/// Starts drawn from the embedded kernel's invariant density; the local
/// process is keyed by site identity on the torus.
CouplingReport coupling_distribution_test(const TorusEnvironment& env, int horizon, std::size_t paths,
                                          std::uint64_t seed,
                                          CouplingComparison comparison = CouplingComparison::OriginalVsEmbedded,
                                          double alpha = 0.01);

}  // namespace rwre
