#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "rwre/env_laws.hpp"
#include "rwre/resolvent.hpp"

using namespace rwre;

namespace {

const auto kId = EnvironmentTransform::identity();

RealVector uniform_g(std::size_t size, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RealVector g(size);
  for (auto& v : g) v = u(gen);
  return g;
}

double sup(const RealVector& v) { return lp_norm(v, std::numeric_limits<double>::infinity()); }

}  // namespace

TEST(Resolvent, ConstantSourceGivesNSquared) {
  const auto env = sample_environment(LawSpec::dirichlet(2, 5, 1));
  const RealVector one(env.size(), 1.0);
  const auto direct = resolvent_direct(env, kId, one);
  const auto series = resolvent_series(env, kId, one, 1e-8);
  for (std::size_t i = 0; i < env.size(); ++i) {
    EXPECT_NEAR(direct.values[i], 25.0, 1e-8);
    EXPECT_NEAR(series.values[i], 25.0, 1e-8);
  }
  EXPECT_LT(direct.residual, 1e-10);
}

TEST(Resolvent, ZeroSource) {
  const auto env = sample_environment(LawSpec::dirichlet(1, 5, 2));
  const RealVector zero(env.size(), 0.0);
  for (double v : resolvent_direct(env, kId, zero).values) EXPECT_EQ(v, 0.0);
  for (double v : resolvent_series(env, kId, zero, 1e-8).values) EXPECT_EQ(v, 0.0);
}

TEST(Resolvent, PureHoldIsScalar) {
  const auto env = TorusEnvironment::constant(3, SimplexPoint::make({1, 0, 0, 0, 0}));
  const auto g = uniform_g(env.size(), 3);
  const auto direct = resolvent_direct(env, kId, g);
  const auto series = resolvent_series(env, kId, g, 1e-10);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_NEAR(direct.values[i], 9.0 * g[i], 1e-10);
    EXPECT_NEAR(series.values[i], 9.0 * g[i], 1e-10);
  }
}

TEST(Resolvent, SeriesMatchesDirect) {
  for (std::uint64_t k = 0; k < 20; ++k) {
    const auto env = sample_environment(LawSpec::dirichlet(1 + static_cast<int>(k % 2), 3 + static_cast<int>(k % 3), 100 + k));
    const auto g = uniform_g(env.size(), k);
    const auto direct = resolvent_direct(env, kId, g);
    const auto series = resolvent_series(env, kId, g, 1e-9);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(series.values[i], direct.values[i], 1e-9 + 1e-10);
    EXPECT_LT(direct.residual, 1e-10);
  }
}

TEST(Resolvent, MonotoneAndBounded) {
  const auto env = sample_environment(LawSpec::dirichlet(2, 4, 4));
  for (std::uint64_t k = 0; k < 10; ++k) {
    auto g = uniform_g(env.size(), 10 + k);
    auto h = g;
    const auto extra = uniform_g(env.size(), 50 + k);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] += extra[i];
    const auto rg = resolvent_direct(env, kId, g).values;
    const auto rh = resolvent_direct(env, kId, h).values;
    for (std::size_t i = 0; i < g.size(); ++i) {
      EXPECT_GE(rg[i], 0.0);
      EXPECT_LE(rg[i], rh[i]);
    }
    EXPECT_LE(sup(rg), 16.0 * sup(g) * (1 + 1e-12));
  }
}

TEST(ResolventRatio, ConstantEnvironmentAnchor) {
  const auto p = SimplexPoint::make({0.2, 0.1, 0.3, 0.1, 0.3});
  const double c0 = ellipticity_constant(p);
  for (int n : {2, 4, 8}) {
    const auto env = TorusEnvironment::constant(n, p);
    EXPECT_NEAR(resolvent_ratio(env, kId, RealVector(env.size(), 1.0)), c0, 1e-9) << n;
  }
}

TEST(ResolventRatio, PointSourceIsFinite) {
  const auto env = sample_environment(LawSpec::controlled_tail(2, 4, 4.0, 5));
  RealVector g(env.size(), 0.0);
  g[env.index_of(Point{0, 0})] = 1.0;
  const double r = resolvent_ratio(env, kId, g);
  EXPECT_TRUE(std::isfinite(r));
  EXPECT_GT(r, 0.0);
}

TEST(ResolventBound, ReportShape) {
  const auto rep = verify_resolvent_bound(LawSpec::controlled_tail(2, 4, 4.0, 6), kId, {2, 4}, 3);
  ASSERT_EQ(rep.max_ratio.size(), 2u);
  ASSERT_EQ(rep.ratios[0].size(), 3u);
  EXPECT_DOUBLE_EQ(rep.max_growth, rep.max_ratio[1] / rep.max_ratio[0]);
  EXPECT_EQ(rep.to_json()["sizes"].size(), 2u);
}

TEST(Doob, Constant) {
  EXPECT_EQ(doob_constant(1), 4);
  for (int d = 1; d <= 4; ++d) {
    const int K = doob_constant(d);
    const double target = 0.5 - std::exp(-1.0);
    EXPECT_LT((d * d + 1.0) / (K * K), target);
    EXPECT_GE((d * d + 1.0) / ((K - 1.0) * (K - 1.0)), target);
    EXPECT_GE(K, d);
  }
}

TEST(ExitDiagnostic, PureHoldNeverExits) {
  const auto env = TorusEnvironment::constant(4, SimplexPoint::make({1, 0, 0}));
  const auto r = exit_probability_diagnostic(env, kId, 3, 50, 1);
  EXPECT_EQ(r.sup_estimate, 0.0);
  EXPECT_TRUE(r.within_bound);
}

TEST(ExitDiagnostic, FairWalkWithinDoobBound) {
  const auto env = TorusEnvironment::constant(10, SimplexPoint::make({0.0, 0.5, 0.5}));
  const auto r = exit_probability_diagnostic(env, kId, 20, 2000, 2);
  EXPECT_EQ(r.K, 4);
  EXPECT_TRUE(r.within_bound);
  EXPECT_TRUE(r.within_pointwise_bound);
}
