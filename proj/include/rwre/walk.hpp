#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "rwre/lattice.hpp"
#include "rwre/rng.hpp"

namespace rwre {

/// Positions of a walk on Z^d (unwrapped), plus the coupling bits if any.
struct Trajectory {
  Point start;
  std::vector<Point> positions;       // N+1 entries, positions[0] == start
  std::vector<std::uint8_t> gammas;   // N entries for coupled walks, else empty

  std::size_t steps() const { return positions.empty() ? 0 : positions.size() - 1; }
};

struct LocalProcessPath {
  std::vector<SimplexPoint> points;
};

/// Per-site cumulative move probabilities and torus neighbours of a view.
class WalkTable {
 public:
  explicit WalkTable(const EnvironmentView& view);

  int dim() const noexcept { return d_; }
  int moves() const noexcept { return m_; }
  const TorusEnvironment& geometry() const noexcept { return geometry_; }

  /// Inverse CDF over the fixed move order (hold, +e_1.., -e_1..).
  int sample_move(std::size_t site, double u) const;
  std::size_t next(std::size_t site, int k) const { return next_[site * static_cast<std::size_t>(m_) + static_cast<std::size_t>(k)]; }
  double prob(std::size_t site, int k) const;
  const Point& move(int k) const { return moves_[static_cast<std::size_t>(k)]; }

 private:
  int d_;
  int m_;
  TorusEnvironment geometry_;
  std::vector<double> cdf_;
  std::vector<int> last_positive_;
  std::vector<std::size_t> next_;
  std::vector<Point> moves_;
};

/// Streaming walker: consumes exactly one uniform per step from its stream.
class Walker {
 public:
  Walker(const WalkTable& table, const Point& start, CounterRng rng);

  int step();
  const Point& position() const noexcept { return pos_; }
  std::size_t site() const noexcept { return site_; }

 private:
  const WalkTable* table_;
  Point pos_;
  std::size_t site_;
  CounterRng rng_;
};

/// Seed of the i-th member of an ensemble.
std::uint64_t path_seed(std::uint64_t master, std::uint64_t index);

Trajectory simulate(const EnvironmentView& env, const Point& start, std::size_t steps, std::uint64_t seed);
Trajectory simulate(const TorusEnvironment& env, const EnvironmentTransform& t, const Point& start,
                    std::size_t steps, std::uint64_t seed);

/// Each step draws gamma ~ Bernoulli(1/2) from the gamma stream, then moves
/// with the original kernel (gamma = 1) or the reflected one (gamma = 0).
/// The walk stream is consumed exactly as in simulate().
Trajectory simulate_coupled(const TorusEnvironment& env, const Point& start, std::size_t steps,
                            std::uint64_t seed_walk, std::uint64_t seed_gamma);
/// Same, with the gamma sequence given (length >= steps).
Trajectory simulate_coupled(const TorusEnvironment& env, const Point& start, std::size_t steps,
                            std::uint64_t seed_walk, std::span<const std::uint8_t> gammas);

/// First m with |X(m)|_1 >= radius (exit time of the L1 ball about the origin).
std::optional<std::size_t> hitting_time(const Trajectory& traj, long long radius);

/// U_k = X(k) - X(0) - sum_{m<k} drift(X(m)); U_0 = 0.
std::vector<RealVector> martingale_component(const Trajectory& traj, const EnvironmentView& env);
std::vector<RealVector> martingale_component(const Trajectory& traj, const TorusEnvironment& env,
                                             const EnvironmentTransform& t);

/// points[k] = env(X(k)).
LocalProcessPath local_process(const Trajectory& traj, const TorusEnvironment& env);

/// CSV: step,x_1..x_d,gamma (gamma blank when uncoupled). Every stride-th row.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, std::size_t stride = 1);

}  // namespace rwre
