#pragma once

// Discrete concave analysis on the L1 ball D_n = {|x|_1 <= n}.
//
// A grid is a RealVector indexed by L1Ball site order. For a concave grid
// every second difference is <= 0, so |Mz(x)| = prod_i (-Delta_i z(x)); all
// class inequalities below are written on those nonnegative factors.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "rwre/lattice.hpp"

namespace rwre {

class L1Ball {
 public:
  L1Ball(int d, int n);

  int dim() const noexcept { return d_; }
  int radius() const noexcept { return n_; }
  std::size_t size() const noexcept { return sites_.size(); }

  const Point& site(std::size_t i) const { return sites_[i]; }
  std::optional<std::size_t> index_of(const Point& x) const;
  bool is_boundary(std::size_t i) const { return sites_[i].l1() == n_; }
  bool is_interior(std::size_t i) const { return sites_[i].l1() < n_; }
  const std::vector<std::size_t>& interior() const noexcept { return interior_; }
  const std::vector<std::size_t>& boundary() const noexcept { return boundary_; }

  /// Neighbour x + sign*e_axis of an interior site (always inside D_n).
  std::size_t neighbour(std::size_t i, int axis, int sign) const;

 private:
  int d_;
  int n_;
  std::vector<Point> sites_;
  std::vector<long long> box_to_ball_;
  std::vector<std::size_t> interior_;
  std::vector<std::size_t> boundary_;
  std::vector<std::size_t> nbr_;  // 2d per site, interior sites only

  std::size_t box_index(const Point& x) const;
};

using Grid = RealVector;

/// z(x+e_i) + z(x-e_i) - 2 z(x); OutOfDomain unless x is interior.
double second_difference(const L1Ball& ball, const Grid& z, const Point& x, int axis);
/// prod_i Delta_i z(x).
double monge_ampere_op(const L1Ball& ball, const Grid& z, const Point& x);

/// f(x)/c(E,x) on every site; zero where f is zero. NotElliptic when f > 0
/// meets c = 0, InvalidSpec when f is negative or nonzero on the boundary.
Grid source_ratio(const L1Ball& ball, const EnvironmentView& env, const Grid& f);

struct ClassCheck {
  bool member = false;
  double max_boundary = 0.0;     // max |z| on the boundary
  double max_second_diff = 0.0;  // max Delta_i z over interior (<= 0 when concave)
  double min_slack = 0.0;        // min |Mz|^{1/d} - f/c over interior
};

/// Membership in A(E, f): zero boundary, concave, |Mz|^{1/d} >= f/c.
ClassCheck check_class(const L1Ball& ball, const EnvironmentView& env, const Grid& f, const Grid& z,
                       double tol = 1e-12);

/// u(x) = n(n+1) - |x|_1(|x|_1+1).
Grid bowl(const L1Ball& ball);

struct Supersolution {
  Grid grid;
  double gamma = 0.0;
};

/// gamma * bowl with the smallest gamma putting it in A(E, f).
Supersolution supersolution(const L1Ball& ball, const EnvironmentView& env, const Grid& f);

enum class SweepOrder { Forward, Backward, Random };

inline constexpr std::size_t kMaxSweeps = 100'000;

struct MongeAmpereSolution {
  Grid z;
  std::size_t sweeps = 0;
  double last_update = 0.0;
  double max_residual = 0.0;  // max | |Mz|^{1/d} - f/c | over interior
};

/// Monotone Gauss-Seidel lowering from the supersolution: each site is set
/// to the root beta >= max_i s_i/2 of prod_i (2 beta - s_i) = (f/c)^d, where
/// s_i is the neighbour sum along axis i. Stops when the largest update in a
/// sweep drops below tol/10.
MongeAmpereSolution solve_monge_ampere(const L1Ball& ball, const EnvironmentView& env, const Grid& f,
                                       double tol, SweepOrder order = SweepOrder::Forward,
                                       std::uint64_t seed = 0);

/// Root of prod_i (2 beta - s_i) = target^d above max_i s_i/2, by bisection.
double lowering_root(std::span<const double> neighbour_sums, double target);

/// Qf(x) = E_x[sum_{k <= tau_n} f(X_k)] by sparse direct solve.
Grid occupation_functional(const L1Ball& ball, const EnvironmentView& env, const Grid& f);

struct OccupationBoundReport {
  double q_sup = 0.0;
  double z_sup = 0.0;
  double scale = 0.0;  // n^2 ||f/c||_{d, D_n}
  double z_ratio = 0.0;
  double q_ratio = 0.0;
  bool ordering_holds = false;  // ||Qf||_inf <= ||z||_inf + 1e-8
  std::size_t sweeps = 0;
};

OccupationBoundReport verify_occupation_bound(const L1Ball& ball, const EnvironmentView& env, const Grid& f,
                                double tol = 1e-9);

struct GradientCell {
  RealVector lower;  // z(x+e_i) - z(x)
  RealVector upper;  // z(x) - z(x-e_i)
  double volume = 0.0;
};

GradientCell gradient_cell(const L1Ball& ball, const Grid& z, const Point& x);

/// True iff z(y) <= z(x0) + a.(y - x0) for every y in D_n.
bool supports(const L1Ball& ball, const Grid& z, const Point& x0, std::span<const double> slope,
              double tol = 1e-12);

bool cell_contains(const GradientCell& cell, std::span<const double> slope, double tol = 1e-12);

struct CoveringCheck {
  double cell_volume_sum = 0.0;
  double box_volume = 0.0;  // meas{ |a|_inf <= ||z||_inf / (4n) }
  bool holds = false;
};

CoveringCheck covering_check(const L1Ball& ball, const Grid& z);

/// CSV: x_1..x_d,value,d2_1..d2_d,Mz,f_over_c (difference columns blank on the boundary).
void write_grid_csv(std::ostream& out, const L1Ball& ball, const Grid& z, const Grid& f_over_c);

}  // namespace rwre
