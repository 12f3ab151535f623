#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rwre/env_laws.hpp"
#include "rwre/monge_ampere.hpp"
#include "rwre/walk.hpp"

using namespace rwre;

namespace {

template <class Fn>
Grid tabulate(const L1Ball& ball, Fn fn) {
  Grid z(ball.size());
  for (std::size_t i = 0; i < ball.size(); ++i) z[i] = fn(ball.site(i));
  return z;
}

Grid interior_indicator(const L1Ball& ball, double value = 1.0) {
  Grid f(ball.size(), 0.0);
  for (auto i : ball.interior()) f[i] = value;
  return f;
}

double at(const L1Ball& ball, const Grid& z, const Point& x) { return z[*ball.index_of(x)]; }

const SimplexPoint kFair = SimplexPoint::make({0.0, 0.5, 0.5});

TorusEnvironment random_balanced(int d, int n, std::uint64_t seed) {
  return apply_transform(EnvironmentTransform::embedding(), sample_environment(LawSpec::dirichlet(d, n, seed)));
}

}  // namespace

TEST(L1Ball, SitesAndBoundary) {
  const L1Ball ball(2, 3);
  EXPECT_EQ(ball.size(), 25u);           // 2n^2 + 2n + 1
  EXPECT_EQ(ball.boundary().size(), 12u);  // 4n
  EXPECT_EQ(ball.interior().size(), 13u);
  EXPECT_FALSE(ball.index_of(Point{2, 2}).has_value());
  EXPECT_TRUE(ball.index_of(Point{-1, 2}).has_value());
}

TEST(SecondDifference, Examples) {
  const L1Ball ball(2, 3);
  const auto linear = tabulate(ball, [](const Point& x) { return 0.7 * x[0] - 1.3 * x[1] + 2.0; });
  for (auto i : ball.interior()) {
    for (int a = 0; a < 2; ++a) EXPECT_NEAR(second_difference(ball, linear, ball.site(i), a), 0.0, 1e-12);
  }
  const L1Ball line(1, 5);
  const auto quad = tabulate(line, [](const Point& x) { return (25.0 - static_cast<double>(x[0] * x[0])) / 2.0; });
  for (auto i : line.interior()) EXPECT_DOUBLE_EQ(second_difference(line, quad, line.site(i), 0), -1.0);
  EXPECT_THROW(second_difference(line, quad, Point{5}, 0), Error);

  const L1Ball small(2, 2);
  const auto u = bowl(small);
  EXPECT_EQ(second_difference(small, u, Point{0, 0}, 0), -4.0);
  EXPECT_EQ(second_difference(small, u, Point{0, 0}, 1), -4.0);
  for (auto i : small.interior()) {
    for (int a = 0; a < 2; ++a) EXPECT_LE(second_difference(small, u, small.site(i), a), -2.0);
  }
}

TEST(MongeAmpereOp, Examples) {
  const L1Ball ball(2, 3);
  const auto z = tabulate(ball, [](const Point& x) {
    return -static_cast<double>(x[0] * x[0]) - 1.5 * static_cast<double>(x[1] * x[1]);
  });
  EXPECT_DOUBLE_EQ(monge_ampere_op(ball, z, Point{0, 1}), 6.0);
  const auto flat = tabulate(ball, [](const Point& x) { return -static_cast<double>(x[0] * x[0]); });
  EXPECT_EQ(monge_ampere_op(ball, flat, Point{1, 0}), 0.0);
  const L1Ball line(1, 4);
  const auto q = tabulate(line, [](const Point& x) { return -3.0 * static_cast<double>(x[0] * x[0]); });
  EXPECT_DOUBLE_EQ(monge_ampere_op(line, q, Point{1}), second_difference(line, q, Point{1}, 0));
}

TEST(Supersolution, Examples) {
  const L1Ball line(1, 2);
  const auto u = bowl(line);
  const std::vector<double> expect{0, 4, 6, 4, 0};
  for (long long x = -2; x <= 2; ++x) EXPECT_EQ(at(line, u, Point{x}), expect[static_cast<std::size_t>(x + 2)]);

  const auto env = random_balanced(2, 4, 1);
  const L1Ball ball(2, 4);
  const auto zero = supersolution(ball, EnvironmentView(env), Grid(ball.size(), 0.0));
  EXPECT_EQ(zero.gamma, 0.0);
  for (double v : zero.grid) EXPECT_EQ(v, 0.0);

  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Grid f(ball.size(), 0.0);
  for (auto i : ball.interior()) f[i] = unif(gen);
  const auto sup = supersolution(ball, EnvironmentView(env), f);
  EXPECT_GT(sup.gamma, 0.0);
  EXPECT_TRUE(check_class(ball, EnvironmentView(env), f, sup.grid).member);
}

TEST(SourceRatio, Errors) {
  const L1Ball line(1, 2);
  const auto env = TorusEnvironment::constant(3, kFair);
  Grid f(line.size(), 0.0);
  f[*line.index_of(Point{2})] = 1.0;
  EXPECT_THROW(source_ratio(line, EnvironmentView(env), f), Error);
  f.assign(line.size(), 0.0);
  f[*line.index_of(Point{0})] = -1.0;
  EXPECT_THROW(source_ratio(line, EnvironmentView(env), f), Error);
  const auto hold = TorusEnvironment::constant(3, SimplexPoint::make({1.0, 0.0, 0.0}));
  EXPECT_THROW(source_ratio(line, EnvironmentView(hold), interior_indicator(line)), Error);
}

TEST(LoweringRoot, ClosedForms) {
  const std::vector<double> one{3.0};
  EXPECT_NEAR(lowering_root(one, 2.0), 2.5, 1e-13);
  const std::vector<double> two{1.0, 3.0};
  const double beta = lowering_root(two, 2.0);
  EXPECT_NEAR((2 * beta - 1.0) * (2 * beta - 3.0), 4.0, 1e-12);
  EXPECT_GE(beta, 1.5);
  EXPECT_EQ(lowering_root(two, 0.0), 1.5);
}

TEST(SolveMongeAmpere, OneDimensionalClosedForm) {
  const L1Ball line(1, 2);
  const auto env = TorusEnvironment::constant(3, SimplexPoint::make({0.2, 0.4, 0.4}));
  const double c = ellipticity_constant(env.site(0));
  const auto sol = solve_monge_ampere(line, EnvironmentView(env), interior_indicator(line, c), 1e-12);
  const std::vector<double> expect{0, 1.5, 2, 1.5, 0};
  for (long long x = -2; x <= 2; ++x) EXPECT_NEAR(at(line, sol.z, Point{x}), expect[static_cast<std::size_t>(x + 2)], 1e-10);
}

TEST(SolveMongeAmpere, ZeroSource) {
  const L1Ball ball(2, 3);
  const auto env = random_balanced(2, 3, 3);
  const auto sol = solve_monge_ampere(ball, EnvironmentView(env), Grid(ball.size(), 0.0), 1e-10);
  for (double v : sol.z) EXPECT_EQ(v, 0.0);
}

TEST(SolveMongeAmpere, MemberAndOrderIndependent) {
  const L1Ball ball(2, 3);
  const auto env = random_balanced(2, 3, 4);
  const EnvironmentView view(env);
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Grid f(ball.size(), 0.0);
  for (auto i : ball.interior()) f[i] = unif(gen);
  const auto fwd = solve_monge_ampere(ball, view, f, 1e-10, SweepOrder::Forward);
  const auto bwd = solve_monge_ampere(ball, view, f, 1e-10, SweepOrder::Backward);
  const auto rnd = solve_monge_ampere(ball, view, f, 1e-10, SweepOrder::Random, 17);
  const auto sup = supersolution(ball, view, f);
  for (std::size_t i = 0; i < ball.size(); ++i) {
    EXPECT_NEAR(fwd.z[i], bwd.z[i], 1e-8);
    EXPECT_NEAR(fwd.z[i], rnd.z[i], 1e-8);
    EXPECT_LE(fwd.z[i], sup.grid[i] + 1e-12);
  }
  EXPECT_TRUE(check_class(ball, view, f, fwd.z, 1e-9).member);
  EXPECT_LE(fwd.max_residual, 1e-8);
}

TEST(ClassCheck, MinimumOfTwoMembers) {
  const L1Ball ball(2, 4);
  const auto env = random_balanced(2, 4, 6);
  const EnvironmentView view(env);
  const auto f = interior_indicator(ball, 0.1);
  const auto a = supersolution(ball, view, f).grid;
  auto b = solve_monge_ampere(ball, view, f, 1e-10).z;
  // scaling a member up keeps it in the class
  for (double& v : b) v *= 1.3;
  ASSERT_TRUE(check_class(ball, view, f, a).member);
  ASSERT_TRUE(check_class(ball, view, f, b).member);
  Grid m(ball.size());
  for (std::size_t i = 0; i < ball.size(); ++i) m[i] = std::min(a[i], b[i]);
  EXPECT_TRUE(check_class(ball, view, f, m).member);
  const auto bad = tabulate(ball, [](const Point& x) { return static_cast<double>(x[0] * x[0]); });
  EXPECT_FALSE(check_class(ball, view, f, bad).member);
}

TEST(Occupation, FairWalkClosedForm) {
  const L1Ball line(1, 7);
  const auto env = TorusEnvironment::constant(8, kFair);
  const auto q = occupation_functional(line, EnvironmentView(env), interior_indicator(line));
  for (long long x = -7; x <= 7; ++x) EXPECT_NEAR(at(line, q, Point{x}), static_cast<double>(49 - x * x), 1e-9);
  const auto zero = occupation_functional(line, EnvironmentView(env), Grid(line.size(), 0.0));
  for (double v : zero) EXPECT_EQ(v, 0.0);
}

TEST(Occupation, MonteCarlo) {
  const L1Ball ball(2, 3);
  const auto env = random_balanced(2, 4, 7);
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Grid f(ball.size(), 0.0);
  for (auto i : ball.interior()) f[i] = unif(gen);
  const auto q = occupation_functional(ball, EnvironmentView(env), f);
  const Point x{1, 0};
  double sum = 0.0;
  double sum2 = 0.0;
  const int paths = 10'000;
  for (int p = 0; p < paths; ++p) {
    const auto traj = simulate(env, EnvironmentTransform::identity(), x, 4000, path_seed(9, static_cast<std::uint64_t>(p)));
    const auto tau = hitting_time(traj, 3);
    ASSERT_TRUE(tau.has_value());
    double acc = 0.0;
    for (std::size_t k = 0; k <= *tau; ++k) acc += at(ball, f, traj.positions[k]);
    sum += acc;
    sum2 += acc * acc;
  }
  const double mean = sum / paths;
  const double se = std::sqrt((sum2 / paths - mean * mean) / (paths - 1));
  EXPECT_NEAR(mean, at(ball, q, x), 3 * se);
}

TEST(OccupationBound, OneDimensionalClosedForm) {
  const L1Ball line(1, 6);
  const auto env = TorusEnvironment::constant(8, kFair);
  const auto r = verify_occupation_bound(line, EnvironmentView(env), interior_indicator(line));
  EXPECT_NEAR(r.q_sup, 36.0, 1e-8);
  EXPECT_NEAR(r.z_sup, 36.0, 1e-6);
  EXPECT_TRUE(r.ordering_holds);
  const auto zero = verify_occupation_bound(line, EnvironmentView(env), Grid(line.size(), 0.0));
  EXPECT_EQ(zero.q_sup, 0.0);
  EXPECT_EQ(zero.z_sup, 0.0);
  EXPECT_EQ(zero.scale, 0.0);
}

TEST(GradientCell, Examples) {
  const L1Ball ball(2, 3);
  const auto linear = tabulate(ball, [](const Point& x) { return 0.5 * x[0] + 2.0 * x[1]; });
  EXPECT_NEAR(gradient_cell(ball, linear, Point{0, 1}).volume, 0.0, 1e-15);
  const L1Ball line(1, 4);
  const auto quad = tabulate(line, [](const Point& x) { return (16.0 - static_cast<double>(x[0] * x[0])) / 2.0; });
  for (auto i : line.interior()) {
    const auto cell = gradient_cell(line, quad, line.site(i));
    EXPECT_DOUBLE_EQ(cell.volume, 1.0);
    EXPECT_DOUBLE_EQ(cell.upper[0] - cell.lower[0], 1.0);
  }
}

TEST(GradientCell, TangentPlanesLieInCells) {
  const L1Ball ball(2, 5);
  std::mt19937_64 gen(10);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, ball.interior().size() - 1);
  for (int trial = 0; trial < 20; ++trial) {
    const double a11 = 0.2 + unif(gen) * 0.1 + 0.1;
    const double a22 = 0.3 + unif(gen) * 0.1 + 0.1;
    const double a12 = 0.05 * unif(gen);
    const double c1 = unif(gen);
    const double c2 = unif(gen);
    auto z_of = [&](double x, double y) {
      const double u = x - c1;
      const double v = y - c2;
      return -(a11 * u * u + 2 * a12 * u * v + a22 * v * v);
    };
    const auto z = tabulate(ball, [&](const Point& p) { return z_of(static_cast<double>(p[0]), static_cast<double>(p[1])); });
    const Point x0 = ball.site(ball.interior()[pick(gen)]);
    const double u = static_cast<double>(x0[0]) - c1;
    const double v = static_cast<double>(x0[1]) - c2;
    const std::vector<double> slope{-2 * (a11 * u + a12 * v), -2 * (a12 * u + a22 * v)};
    ASSERT_TRUE(supports(ball, z, x0, slope, 1e-12));
    EXPECT_TRUE(cell_contains(gradient_cell(ball, z, x0), slope, 1e-12));
  }
}

TEST(Covering, HoldsForSolutions) {
  const L1Ball ball(2, 4);
  const auto env = random_balanced(2, 4, 11);
  const auto sol = solve_monge_ampere(ball, EnvironmentView(env), interior_indicator(ball, 0.2), 1e-10);
  EXPECT_TRUE(covering_check(ball, sol.z).holds);
  EXPECT_TRUE(covering_check(ball, bowl(ball)).holds);
}
