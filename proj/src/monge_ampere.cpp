#include "rwre/monge_ampere.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "rwre/rng.hpp"

namespace rwre {

// ---------------------------------------------------------------- L1Ball

L1Ball::L1Ball(int d, int n) : d_(d), n_(n) {
  if (d < 1 || d > kMaxDim) throw Error(ErrorCode::InvalidSpec, "d out of range");
  if (n < 1) throw Error(ErrorCode::InvalidSpec, "radius must be >= 1");
  std::size_t box = 1;
  for (int i = 0; i < d; ++i) box *= static_cast<std::size_t>(2 * n + 1);
  box_to_ball_.assign(box, -1);
  for (std::size_t b = 0; b < box; ++b) {
    Point x(d);
    auto rem = b;
    for (int i = d - 1; i >= 0; --i) {
      x[i] = static_cast<long long>(rem % static_cast<std::size_t>(2 * n + 1)) - n;
      rem /= static_cast<std::size_t>(2 * n + 1);
    }
    if (x.l1() > n) continue;
    box_to_ball_[b] = static_cast<long long>(sites_.size());
    (x.l1() == n ? boundary_ : interior_).push_back(sites_.size());
    sites_.push_back(x);
  }
  nbr_.assign(sites_.size() * static_cast<std::size_t>(2 * d), 0);
  for (auto i : interior_) {
    for (int a = 0; a < d; ++a) {
      for (int sgn = 0; sgn < 2; ++sgn) {
        Point y = sites_[i];
        y[a] += sgn == 0 ? 1 : -1;
        nbr_[i * static_cast<std::size_t>(2 * d) + static_cast<std::size_t>(2 * a + sgn)] =
            static_cast<std::size_t>(box_to_ball_[box_index(y)]);
      }
    }
  }
}

std::size_t L1Ball::box_index(const Point& x) const {
  std::size_t b = 0;
  for (int i = 0; i < d_; ++i) b = b * static_cast<std::size_t>(2 * n_ + 1) + static_cast<std::size_t>(x[i] + n_);
  return b;
}

std::optional<std::size_t> L1Ball::index_of(const Point& x) const {
  if (x.dim() != d_ || x.l1() > n_) return std::nullopt;
  return static_cast<std::size_t>(box_to_ball_[box_index(x)]);
}

std::size_t L1Ball::neighbour(std::size_t i, int axis, int sign) const {
  return nbr_[i * static_cast<std::size_t>(2 * d_) + static_cast<std::size_t>(2 * axis + (sign > 0 ? 0 : 1))];
}

// ---------------------------------------------------------------- operators

namespace {

std::size_t interior_index(const L1Ball& ball, const Point& x) {
  const auto i = ball.index_of(x);
  if (!i || !ball.is_interior(*i)) throw Error(ErrorCode::OutOfDomain, x.str() + " is not interior to D_n");
  return *i;
}

double diff_at(const L1Ball& ball, const Grid& z, std::size_t i, int axis) {
  return z[ball.neighbour(i, axis, 1)] + z[ball.neighbour(i, axis, -1)] - 2.0 * z[i];
}

// |Mz(x)|^{1/d} with negative-part factors.
double root_mass(const L1Ball& ball, const Grid& z, std::size_t i) {
  double prod = 1.0;
  for (int a = 0; a < ball.dim(); ++a) prod *= std::max(0.0, -diff_at(ball, z, i, a));
  return std::pow(prod, 1.0 / ball.dim());
}

void check_grid(const L1Ball& ball, const Grid& g) {
  if (g.size() != ball.size()) throw Error(ErrorCode::InvalidSpec, "grid size does not match the ball");
}

}  // namespace

double second_difference(const L1Ball& ball, const Grid& z, const Point& x, int axis) {
  check_grid(ball, z);
  return diff_at(ball, z, interior_index(ball, x), axis);
}

double monge_ampere_op(const L1Ball& ball, const Grid& z, const Point& x) {
  check_grid(ball, z);
  const auto i = interior_index(ball, x);
  double prod = 1.0;
  for (int a = 0; a < ball.dim(); ++a) prod *= diff_at(ball, z, i, a);
  return prod;
}

Grid source_ratio(const L1Ball& ball, const EnvironmentView& env, const Grid& f) {
  check_grid(ball, f);
  Grid r(ball.size(), 0.0);
  for (std::size_t i = 0; i < ball.size(); ++i) {
    if (f[i] < 0.0) throw Error(ErrorCode::InvalidSpec, "source term is negative at " + ball.site(i).str());
    if (f[i] == 0.0) continue;
    if (ball.is_boundary(i)) throw Error(ErrorCode::InvalidSpec, "source term must vanish on the boundary");
    const double c = ellipticity_constant(env.at(ball.site(i)));
    if (c == 0.0) throw Error(ErrorCode::NotElliptic, "c = 0 at " + ball.site(i).str() + " where f > 0");
    r[i] = f[i] / c;
  }
  return r;
}

ClassCheck check_class(const L1Ball& ball, const EnvironmentView& env, const Grid& f, const Grid& z, double tol) {
  check_grid(ball, z);
  const Grid ratio = source_ratio(ball, env, f);
  ClassCheck out;
  for (auto i : ball.boundary()) out.max_boundary = std::max(out.max_boundary, std::abs(z[i]));
  out.max_second_diff = -std::numeric_limits<double>::infinity();
  out.min_slack = std::numeric_limits<double>::infinity();
  double scale = 1.0;
  for (double v : z) scale = std::max(scale, std::abs(v));
  for (auto i : ball.interior()) {
    for (int a = 0; a < ball.dim(); ++a) out.max_second_diff = std::max(out.max_second_diff, diff_at(ball, z, i, a));
    out.min_slack = std::min(out.min_slack, root_mass(ball, z, i) - ratio[i]);
  }
  if (ball.interior().empty()) {
    out.max_second_diff = 0.0;
    out.min_slack = 0.0;
  }
  // Rounding in z is relative to its magnitude.
  const double t = tol * scale;
  out.member = out.max_boundary <= t && out.max_second_diff <= t && out.min_slack >= -t;
  return out;
}

Grid bowl(const L1Ball& ball) {
  const double n = ball.radius();
  Grid u(ball.size());
  for (std::size_t i = 0; i < ball.size(); ++i) {
    const double r = static_cast<double>(ball.site(i).l1());
    u[i] = n * (n + 1.0) - r * (r + 1.0);
  }
  return u;
}

Supersolution supersolution(const L1Ball& ball, const EnvironmentView& env, const Grid& f) {
  const Grid ratio = source_ratio(ball, env, f);
  const Grid u = bowl(ball);
  Supersolution out;
  for (auto i : ball.interior()) {
    if (ratio[i] == 0.0) continue;
    out.gamma = std::max(out.gamma, ratio[i] / root_mass(ball, u, i));
  }
  out.grid.resize(ball.size());
  for (std::size_t i = 0; i < ball.size(); ++i) out.grid[i] = out.gamma * u[i];
  return out;
}

double lowering_root(std::span<const double> neighbour_sums, double target) {
  double lo = *std::max_element(neighbour_sums.begin(), neighbour_sums.end()) / 2.0;
  if (target <= 0.0) return lo;
  const int d = static_cast<int>(neighbour_sums.size());
  const double goal = std::pow(target, d);
  auto product = [&](double beta) {
    double p = 1.0;
    for (double s : neighbour_sums) p *= 2.0 * beta - s;
    return p;
  };
  // Every factor is >= target at lo + target/2.
  double hi = lo + target / 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (product(mid) >= goal ? hi : lo) = mid;
  }
  return hi;
}

MongeAmpereSolution solve_monge_ampere(const L1Ball& ball, const EnvironmentView& env, const Grid& f, double tol,
                                       SweepOrder order, std::uint64_t seed) {
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidSpec, "tolerance must be > 0");
  const Grid ratio = source_ratio(ball, env, f);
  MongeAmpereSolution out;
  out.z = supersolution(ball, env, f).grid;
  Grid& z = out.z;

  std::vector<std::size_t> sites = ball.interior();
  if (order == SweepOrder::Backward) std::reverse(sites.begin(), sites.end());
  auto rng = CounterRng::stream(seed, StreamTag::Trial, 0x5eed);
  std::array<double, kMaxDim> sums{};
  const auto sums_span = std::span<const double>(sums.data(), static_cast<std::size_t>(ball.dim()));

  for (out.sweeps = 1; out.sweeps <= kMaxSweeps; ++out.sweeps) {
    if (order == SweepOrder::Random) {
      for (std::size_t k = sites.size(); k > 1; --k) std::swap(sites[k - 1], sites[rng.below(k)]);
    }
    double max_update = 0.0;
    for (auto i : sites) {
      for (int a = 0; a < ball.dim(); ++a) sums[a] = z[ball.neighbour(i, a, 1)] + z[ball.neighbour(i, a, -1)];
      const double beta = std::min(z[i], lowering_root(sums_span, ratio[i]));
      max_update = std::max(max_update, z[i] - beta);
      z[i] = beta;
    }
    out.last_update = max_update;
    if (max_update < tol / 10.0) break;
  }
  if (out.sweeps > kMaxSweeps) {
    throw Error(ErrorCode::NoConvergence, "Monge-Ampere sweeps hit the cap of " + std::to_string(kMaxSweeps));
  }
  for (auto i : ball.interior()) {
    out.max_residual = std::max(out.max_residual, std::abs(root_mass(ball, z, i) - ratio[i]));
  }
  return out;
}

Grid occupation_functional(const L1Ball& ball, const EnvironmentView& env, const Grid& f) {
  check_grid(ball, f);
  const auto& interior = ball.interior();
  std::vector<long long> row(ball.size(), -1);
  for (std::size_t r = 0; r < interior.size(); ++r) row[interior[r]] = static_cast<long long>(r);

  const int d = ball.dim();
  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(interior.size()));
  for (std::size_t r = 0; r < interior.size(); ++r) {
    const auto i = interior[r];
    const SimplexPoint p = env.at(ball.site(i));
    triplets.emplace_back(r, r, 1.0 - p.hold());
    for (int a = 0; a < d; ++a) {
      const std::size_t up = ball.neighbour(i, a, 1);
      const std::size_t down = ball.neighbour(i, a, -1);
      if (row[up] >= 0 && p.plus(a) != 0.0) triplets.emplace_back(r, row[up], -p.plus(a));
      if (row[down] >= 0 && p.minus(a) != 0.0) triplets.emplace_back(r, row[down], -p.minus(a));
    }
    rhs[static_cast<Eigen::Index>(r)] = f[i];
  }
  const auto m = static_cast<Eigen::Index>(interior.size());
  Eigen::SparseMatrix<double> a(m, m);
  a.setFromTriplets(triplets.begin(), triplets.end());
  a.makeCompressed();

  Grid q(ball.size(), 0.0);
  if (m == 0) return q;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "occupation system is singular");
  const Eigen::VectorXd x = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !x.allFinite()) {
    throw Error(ErrorCode::SingularSystem, "occupation solve failed");
  }
  const double residual = (a * x - rhs).lpNorm<Eigen::Infinity>();
  if (!(residual < 1e-10)) {
    throw Error(ErrorCode::SingularSystem, "occupation residual " + std::to_string(residual));
  }
  for (std::size_t r = 0; r < interior.size(); ++r) q[interior[r]] = x[static_cast<Eigen::Index>(r)];
  return q;
}

OccupationBoundReport verify_occupation_bound(const L1Ball& ball, const EnvironmentView& env, const Grid& f, double tol) {
  const Grid ratio = source_ratio(ball, env, f);
  const auto q = occupation_functional(ball, env, f);
  const auto sol = solve_monge_ampere(ball, env, f, tol);
  OccupationBoundReport r;
  r.q_sup = lp_norm(q, std::numeric_limits<double>::infinity());
  r.z_sup = lp_norm(sol.z, std::numeric_limits<double>::infinity());
  const double n = ball.radius();
  r.scale = n * n * lp_norm(ratio, ball.dim());
  r.z_ratio = r.scale > 0.0 ? r.z_sup / r.scale : 0.0;
  r.q_ratio = r.scale > 0.0 ? r.q_sup / r.scale : 0.0;
  r.ordering_holds = r.q_sup <= r.z_sup + 1e-8;
  r.sweeps = sol.sweeps;
  return r;
}

GradientCell gradient_cell(const L1Ball& ball, const Grid& z, const Point& x) {
  check_grid(ball, z);
  const auto i = interior_index(ball, x);
  GradientCell cell;
  cell.volume = 1.0;
  for (int a = 0; a < ball.dim(); ++a) {
    const double lo = z[ball.neighbour(i, a, 1)] - z[i];
    const double hi = z[i] - z[ball.neighbour(i, a, -1)];
    cell.lower.push_back(lo);
    cell.upper.push_back(hi);
    cell.volume *= std::max(0.0, hi - lo);
  }
  return cell;
}

bool supports(const L1Ball& ball, const Grid& z, const Point& x0, std::span<const double> slope, double tol) {
  const auto i0 = ball.index_of(x0);
  if (!i0) throw Error(ErrorCode::OutOfDomain, x0.str() + " is outside D_n");
  for (std::size_t j = 0; j < ball.size(); ++j) {
    double plane = z[*i0];
    for (int a = 0; a < ball.dim(); ++a) plane += slope[a] * static_cast<double>(ball.site(j)[a] - x0[a]);
    if (z[j] > plane + tol) return false;
  }
  return true;
}

bool cell_contains(const GradientCell& cell, std::span<const double> slope, double tol) {
  for (std::size_t a = 0; a < cell.lower.size(); ++a) {
    if (slope[a] < cell.lower[a] - tol || slope[a] > cell.upper[a] + tol) return false;
  }
  return true;
}

CoveringCheck covering_check(const L1Ball& ball, const Grid& z) {
  CoveringCheck out;
  for (auto i : ball.interior()) out.cell_volume_sum += gradient_cell(ball, z, ball.site(i)).volume;
  const double half = lp_norm(z, std::numeric_limits<double>::infinity()) / (4.0 * ball.radius());
  out.box_volume = std::pow(2.0 * half, ball.dim());
  out.holds = out.cell_volume_sum >= out.box_volume * (1.0 - 1e-12);
  return out;
}

void write_grid_csv(std::ostream& out, const L1Ball& ball, const Grid& z, const Grid& f_over_c) {
  const int d = ball.dim();
  for (int a = 1; a <= d; ++a) out << "x_" << a << ',';
  out << "value";
  for (int a = 1; a <= d; ++a) out << ",d2_" << a;
  out << ",Mz,f_over_c\n";
  out.precision(17);
  for (std::size_t i = 0; i < ball.size(); ++i) {
    for (int a = 0; a < d; ++a) out << ball.site(i)[a] << ',';
    out << z[i];
    if (ball.is_interior(i)) {
      double prod = 1.0;
      for (int a = 0; a < d; ++a) {
        const double v = diff_at(ball, z, i, a);
        prod *= v;
        out << ',' << v;
      }
      out << ',' << prod;
    } else {
      for (int a = 0; a <= d; ++a) out << ',';
    }
    out << ',' << f_over_c[i] << '\n';
  }
}

}  // namespace rwre
