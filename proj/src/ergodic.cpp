#include "rwre/ergodic.hpp"

#include <cmath>
#include <numbers>
#include <unordered_map>

#include "rwre/parallel.hpp"
#include "rwre/walk.hpp"

namespace rwre {

Eigen::MatrixXd step_covariance(const SimplexPoint& site) {
  const int d = site.dim();
  Eigen::MatrixXd s(d, d);
  for (int i = 0; i < d; ++i) {
    const double di = site.plus(i) - site.minus(i);
    for (int j = 0; j < d; ++j) {
      const double dj = site.plus(j) - site.minus(j);
      s(i, j) = i == j ? site.plus(i) + site.minus(i) - di * di : -di * dj;
    }
  }
  return s;
}

// ---------------------------------------------------------------- velocity

VelocityEstimate velocity_estimate(const EnvironmentView& env, std::size_t steps, std::size_t paths,
                                   std::uint64_t seed) {
  if (steps < 1 || paths < 1) throw Error(ErrorCode::InvalidSpec, "steps and paths must be >= 1");
  const int d = env.dim();
  const WalkTable table(env);
  const auto finals = parallel_map(paths, [&](std::size_t p) {
    Walker w(table, Point(d), CounterRng::stream(path_seed(seed, p), StreamTag::Walk));
    for (std::size_t k = 0; k < steps; ++k) w.step();
    return w.position();
  });
  std::vector<RunningStats> stats(static_cast<std::size_t>(d));
  for (const auto& x : finals) {
    for (int i = 0; i < d; ++i) stats[i].add(static_cast<double>(x[i]) / static_cast<double>(steps));
  }
  VelocityEstimate v;
  v.n_steps = steps;
  v.n_paths = paths;
  v.seed = seed;
  for (const auto& s : stats) {
    v.v_hat.push_back(s.mean());
    v.stderr_of_mean.push_back(s.stderr_of_mean());
  }
  return v;
}

VelocityEstimate velocity_estimate(const TorusEnvironment& env, const EnvironmentTransform& t, std::size_t steps,
                                   std::size_t paths, std::uint64_t seed) {
  return velocity_estimate(EnvironmentView(env, t), steps, paths, seed);
}

nlohmann::json VelocityEstimate::to_json() const {
  return {{"v_hat", v_hat}, {"stderr", stderr_of_mean}, {"n_steps", n_steps}, {"n_paths", n_paths}, {"seed", seed}};
}

RealVector weighted_drift(const TorusEnvironment& env, std::span<const double> phi) {
  if (phi.size() != env.size()) throw Error(ErrorCode::DensityMismatch, "density does not match the torus");
  RealVector v(static_cast<std::size_t>(env.dim()), 0.0);
  for (std::size_t s = 0; s < env.size(); ++s) {
    const auto dr = drift(env.site(s));
    for (int i = 0; i < env.dim(); ++i) v[i] += dr[i] * phi[s];
  }
  for (auto& x : v) x /= static_cast<double>(env.size());
  return v;
}

RealVector annealed_velocity(const TorusEnvironment& env, const InvariantDensity& density) {
  if (density.phi.size() != env.size() || density.d != env.dim() || density.n != env.half_period()) {
    throw Error(ErrorCode::DensityMismatch, "density does not match the torus");
  }
  const auto kernel = build_kernel(env, EnvironmentTransform::embedding());
  const double r = stationarity_residual(kernel, density.phi);
  if (!(r <= kStationarityTolerance)) {
    throw Error(ErrorCode::DensityMismatch, "density is not stationary for the embedded kernel (residual " +
                                                std::to_string(r) + ")");
  }
  return weighted_drift(env, density.phi);
}

TimeAverageDrift coupled_time_average_drift(const TorusEnvironment& env, const Point& start, std::size_t steps,
                                            std::uint64_t seed_walk, std::uint64_t seed_gamma,
                                            std::size_t batches) {
  const int d = env.dim();
  const WalkTable original{EnvironmentView(env)};
  const WalkTable reflected{EnvironmentView(env, EnvironmentTransform::reflection())};
  std::vector<RealVector> site_drift(env.size());
  for (std::size_t s = 0; s < env.size(); ++s) site_drift[s] = drift(env.site(s));

  auto walk = CounterRng::stream(seed_walk, StreamTag::Walk);
  auto gamma = CounterRng::stream(seed_gamma, StreamTag::Gamma);
  std::vector<RealVector> series(static_cast<std::size_t>(d), RealVector(steps));
  std::size_t site = env.index_of(start);
  for (std::size_t k = 0; k < steps; ++k) {
    for (int i = 0; i < d; ++i) series[i][k] = site_drift[site][i];
    const WalkTable& table = gamma.bernoulli_half() ? original : reflected;
    site = table.next(site, table.sample_move(site, walk.uniform()));
  }
  TimeAverageDrift out;
  out.steps = steps;
  for (int i = 0; i < d; ++i) {
    const auto bm = batch_means(series[i], batches);
    out.mean.push_back(bm.mean);
    out.stderr_of_mean.push_back(bm.stderr_of_mean);
  }
  return out;
}

// ---------------------------------------------------------------- CLT

CltReport clt_check(const EnvironmentView& env, std::size_t steps, std::size_t paths, std::uint64_t seed,
                    StartMode start) {
  if (steps < 1 || paths < 2) throw Error(ErrorCode::InvalidSpec, "clt_check needs steps >= 1 and paths >= 2");
  const int d = env.dim();
  const TorusEnvironment& geom = env.base();
  const WalkTable table(env);
  std::vector<RealVector> site_drift(geom.size());
  std::vector<Eigen::MatrixXd> site_cov(geom.size());
  for (std::size_t s = 0; s < geom.size(); ++s) {
    const auto p = env.at(geom.point_of(s));
    site_drift[s] = drift(p);
    site_cov[s] = step_covariance(p);
  }
  std::optional<DensitySampler> sampler;
  if (start == StartMode::Stationary) sampler.emplace(invariant_density(build_kernel(env)));

  struct PathResult {
    Eigen::VectorXd u;
    Eigen::VectorXd jitter;  // uniform(-1/2, 1/2) per coordinate, KS only
    Eigen::MatrixXd sigma_bar;
  };
  const double root = std::sqrt(static_cast<double>(steps));
  const auto results = parallel_map(paths, [&](std::size_t p) {
    const auto pseed = path_seed(seed, p);
    Point x0(d);
    if (sampler) {
      auto srng = CounterRng::stream(pseed, StreamTag::Start);
      x0 = sampler->draw(srng);
    }
    Walker w(table, x0, CounterRng::stream(pseed, StreamTag::Walk));
    Eigen::VectorXd compensator = Eigen::VectorXd::Zero(d);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t k = 0; k < steps; ++k) {
      const auto s = w.site();
      for (int i = 0; i < d; ++i) compensator[i] += site_drift[s][i];
      acc += site_cov[s];
      w.step();
    }
    PathResult r;
    r.u.resize(d);
    for (int i = 0; i < d; ++i) r.u[i] = (static_cast<double>(w.position()[i] - x0[i]) - compensator[i]) / root;
    r.sigma_bar = acc / static_cast<double>(steps);
    auto jitter_rng = CounterRng::stream(pseed, StreamTag::Trial);
    r.jitter.resize(d);
    for (int i = 0; i < d; ++i) r.jitter[i] = jitter_rng.uniform() - 0.5;
    return r;
  });

  CltReport rep;
  rep.steps = steps;
  rep.paths = paths;
  rep.start = start;
  rep.seed = seed;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  rep.reference = Eigen::MatrixXd::Zero(d, d);
  for (const auto& r : results) {
    mean += r.u;
    rep.reference += r.sigma_bar;
  }
  mean /= static_cast<double>(paths);
  rep.reference /= static_cast<double>(paths);
  rep.sigma_hat = Eigen::MatrixXd::Zero(d, d);
  for (const auto& r : results) rep.sigma_hat += (r.u - mean) * (r.u - mean).transpose();
  rep.sigma_hat /= static_cast<double>(paths - 1);

  const double ref_norm = rep.reference.norm();
  rep.nondegenerate = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(rep.reference).eigenvalues().minCoeff() > 1e-12;
  rep.frobenius_rel_error =
      ref_norm > 0.0 ? (rep.sigma_hat - rep.reference).norm() / ref_norm : std::numeric_limits<double>::infinity();
  for (int i = 0; i < d; ++i) {
    const double ref = rep.reference(i, i);
    rep.variance_ratio.push_back(ref > 0.0 ? rep.sigma_hat(i, i) / ref : std::numeric_limits<double>::infinity());
    if (ref <= 0.0) {
      rep.ks.push_back({1.0, 0.0, 0.0});
      continue;
    }
    // X(steps) lives on Z^d, so U/sqrt(steps) is lattice valued with spacing
    // 1/sqrt(steps); spreading each sample over its lattice cell removes the
    // CDF steps that a continuous KS test would otherwise detect.
    RealVector z;
    z.reserve(paths);
    for (const auto& r : results) z.push_back((r.u[i] + r.jitter[i] / root) / std::sqrt(ref));
    rep.ks.push_back(ks_test(z, normal_cdf));
  }
  return rep;
}

nlohmann::json CltReport::to_json() const {
  auto mat = [](const Eigen::MatrixXd& m) {
    std::vector<std::vector<double>> rows;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      rows.emplace_back();
      for (Eigen::Index j = 0; j < m.cols(); ++j) rows.back().push_back(m(i, j));
    }
    return rows;
  };
  nlohmann::json ks_json = nlohmann::json::array();
  for (const auto& k : ks) ks_json.push_back({{"statistic", k.statistic}, {"p_value", k.p_value}});
  return {{"sigma_hat", mat(sigma_hat)},
          {"reference", mat(reference)},
          {"frobenius_rel_error", frobenius_rel_error},
          {"variance_ratio", variance_ratio},
          {"ks", ks_json},
          {"nondegenerate", nondegenerate},
          {"steps", steps},
          {"paths", paths},
          {"start", start == StartMode::Origin ? "origin" : "stationary"},
          {"seed", seed}};
}

// ---------------------------------------------------------------- identities

double conditional_kernel(const EnvironmentView& env, int gamma, const Point& x, const Point& y) {
  const TorusEnvironment& geom = env.base();
  const auto target = geom.index_of(y);
  auto kd = [&](const EnvironmentView& view) {
    const auto p = view.at(x);
    double acc = 0.0;
    for (int k = 0; k < p.size(); ++k) {
      if (geom.index_of(x + move_vector(env.dim(), k)) == target) acc += p[k];
    }
    return acc;
  };
  // G_d(omega, B) = K_d(alpha.omega, alpha.B); for B = {tau_y omega},
  // alpha.B = {tau_y alpha.omega}, so G_d reads the reflected sites.
  const double g = gamma ? 0.0 : kd(env.transformed(EnvironmentTransform::reflection()));
  const double k = gamma ? kd(env) : 0.0;
  return static_cast<double>(gamma) * k + static_cast<double>(1 - gamma) * g;
}

KernelIdentityReport kernel_identity_checks(const TorusEnvironment& env, int gamma, const DirectionPermutation& T,
                                            std::uint64_t seed, std::size_t probes) {
  if (gamma != 0 && gamma != 1) throw Error(ErrorCode::InvalidSpec, "gamma must be 0 or 1");
  if (T.dim() != env.dim()) throw Error(ErrorCode::InvalidSpec, "permutation dimension mismatch");
  const int d = env.dim();
  const int m = env.moves();
  KernelIdentityReport rep;

  // tau_x (T.omega) from a materialized T.omega, against the composed view.
  const TorusEnvironment t_omega = permutation_action(T, env).materialize();
  auto rng = CounterRng::stream(seed, StreamTag::Trial, 0x1d);
  const auto period = static_cast<std::uint64_t>(env.period());
  auto random_point = [&] {
    Point p(d);
    // Range beyond one period to exercise the reduction.
    for (int i = 0; i < d; ++i) p[i] = static_cast<long long>(rng.below(3 * period)) - static_cast<long long>(period);
    return p;
  };
  for (std::size_t k = 0; k < probes; ++k) {
    const Point x = random_point();
    const Point y = random_point();
    const int v = static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
    const double lhs = t_omega.at(x + y)[v];
    const double rhs = shift_view(env, T.apply(x)).permuted(T).at(y)[v];
    rep.shift_max_dev = std::max(rep.shift_max_dev, std::abs(lhs - rhs));
  }

  // K_d(T.omega, T(B)) against K_d^T(omega, B), B = {tau_y omega}. The state
  // tau_{y'}(T.omega) = T(tau_{T y'} omega) lies in T(B) iff T y' = y.
  const auto t_kernel = build_kernel(t_omega, EnvironmentTransform::identity());
  for (std::size_t s = 0; s < env.size(); ++s) {
    const Point xp = env.point_of(s);
    const Point tx = T.apply(xp);
    std::unordered_map<std::size_t, double> lhs;
    std::unordered_map<std::size_t, double> rhs;
    for (SparseKernel::InnerIterator it(t_kernel.matrix, static_cast<Eigen::Index>(s)); it; ++it) {
      lhs[env.index_of(T.apply(env.point_of(static_cast<std::size_t>(it.col()))))] += it.value();
    }
    const auto site = env.at(tx);
    for (int k = 0; k < m; ++k) {
      if (site[k] == 0.0) continue;
      rhs[env.index_of(tx + T.apply(move_vector(d, k)))] += site[k];
    }
    for (const auto& [y, p] : lhs) rep.conjugation_max_dev = std::max(rep.conjugation_max_dev, std::abs(p - rhs[y]));
    for (const auto& [y, p] : rhs) rep.conjugation_max_dev = std::max(rep.conjugation_max_dev, std::abs(p - lhs[y]));
  }

  // K_gamma(alpha.omega, B) = K_{1-gamma}(omega, alpha.B) with B = {tau_y alpha.omega}.
  const EnvironmentView reflected(apply_transform(EnvironmentTransform::reflection(), env));
  const EnvironmentView plain(env);
  for (std::size_t s = 0; s < env.size(); ++s) {
    const Point x = env.point_of(s);
    for (int k = 0; k < m; ++k) {
      const Point y = x + move_vector(d, k);
      const double lhs = conditional_kernel(reflected, gamma, x, y);
      const double rhs = conditional_kernel(plain, 1 - gamma, x, y);
      rep.reflection_max_dev = std::max(rep.reflection_max_dev, std::abs(lhs - rhs));
    }
  }

  // Embedded stationary density pushed through T is stationary for the walk
  // T X_n: y -> y + T e with probability Lambda(omega)(T^{-1} y, e).
  const auto embedded = EnvironmentView(env, EnvironmentTransform::embedding());
  const auto density = invariant_density(build_kernel(embedded));
  const auto inv = T.inverse();
  std::vector<Eigen::Triplet<double>> triplets;
  RealVector pushed(env.size());
  for (std::size_t s = 0; s < env.size(); ++s) {
    const Point y = env.point_of(s);
    const Point pre = inv.apply(y);
    pushed[s] = density.phi[env.index_of(pre)];
    const auto site = embedded.at(pre);
    for (int k = 0; k < m; ++k) {
      if (site[k] == 0.0) continue;
      triplets.emplace_back(s, env.index_of(y + T.apply(move_vector(d, k))), site[k]);
    }
  }
  TorusKernel pushed_kernel;
  pushed_kernel.d = d;
  pushed_kernel.n = env.half_period();
  pushed_kernel.matrix.resize(static_cast<Eigen::Index>(env.size()), static_cast<Eigen::Index>(env.size()));
  pushed_kernel.matrix.setFromTriplets(triplets.begin(), triplets.end());
  rep.pushed_density_residual = stationarity_residual(pushed_kernel, pushed);

  rep.pass = rep.shift_max_dev <= kIdentityTolerance && rep.conjugation_max_dev <= kIdentityTolerance &&
             rep.reflection_max_dev <= kIdentityTolerance && rep.pushed_density_residual <= kStationarityTolerance;
  return rep;
}

nlohmann::json KernelIdentityReport::to_json() const {
  return {{"shift_max_dev", shift_max_dev},
          {"conjugation_max_dev", conjugation_max_dev},
          {"reflection_max_dev", reflection_max_dev},
          {"pushed_density_residual", pushed_density_residual},
          {"pass", pass}};
}

// ---------------------------------------------------------------- coupling

CouplingReport coupling_distribution_test(const TorusEnvironment& env, int horizon, std::size_t paths,
                                          std::uint64_t seed, CouplingComparison comparison, double alpha) {
  if (horizon < 1 || horizon > 4) throw Error(ErrorCode::InvalidSpec, "horizon must be in 1..4");
  const auto embedded_view = EnvironmentView(env, EnvironmentTransform::embedding());
  const auto density = invariant_density(build_kernel(embedded_view));
  const DensitySampler sampler(density);
  const WalkTable original{EnvironmentView(env)};
  const WalkTable reflected{EnvironmentView(env, EnvironmentTransform::reflection())};
  const WalkTable embedded(embedded_view);
  const auto states = static_cast<std::uint64_t>(env.size());

  // Category key of the site prefix x_0..x_h, per horizon h.
  using Counts = std::vector<std::unordered_map<std::uint64_t, std::uint64_t>>;
  auto run = [&](int sample, bool use_embedded, bool coupled) {
    Counts counts(static_cast<std::size_t>(horizon));
    for (std::size_t p = 0; p < paths; ++p) {
      const auto tag = static_cast<std::uint64_t>(sample);
      auto start_rng = CounterRng::stream(seed, {static_cast<std::uint64_t>(StreamTag::Start), tag, p});
      auto walk = CounterRng::stream(seed, {static_cast<std::uint64_t>(StreamTag::Walk), tag, p});
      auto gamma = CounterRng::stream(seed, {static_cast<std::uint64_t>(StreamTag::Gamma), tag, p});
      std::size_t site = sampler.draw_index(start_rng);
      std::uint64_t key = site;
      for (int h = 1; h <= horizon; ++h) {
        const WalkTable* table = &original;
        if (use_embedded) table = &embedded;
        if (coupled) table = gamma.bernoulli_half() ? &original : &reflected;
        site = table->next(site, table->sample_move(site, walk.uniform()));
        key = key * states + site;
        ++counts[static_cast<std::size_t>(h - 1)][key];
      }
    }
    return counts;
  };
  const bool coupled_first = comparison == CouplingComparison::CoupledVsEmbedded;
  const Counts a = run(0, false, coupled_first);
  const Counts b = run(1, true, false);

  CouplingReport rep;
  rep.horizon = horizon;
  rep.paths = paths;
  rep.alpha = alpha;
  rep.comparison = comparison;
  rep.seed = seed;
  rep.pass = true;
  for (int h = 0; h < horizon; ++h) {
    std::vector<std::uint64_t> keys;
    for (const auto& [k, c] : a[static_cast<std::size_t>(h)]) keys.push_back(k);
    for (const auto& [k, c] : b[static_cast<std::size_t>(h)]) {
      if (!a[static_cast<std::size_t>(h)].contains(k)) keys.push_back(k);
    }
    std::sort(keys.begin(), keys.end());
    std::vector<std::uint64_t> ca;
    std::vector<std::uint64_t> cb;
    for (auto k : keys) {
      const auto ia = a[static_cast<std::size_t>(h)].find(k);
      const auto ib = b[static_cast<std::size_t>(h)].find(k);
      ca.push_back(ia == a[static_cast<std::size_t>(h)].end() ? 0 : ia->second);
      cb.push_back(ib == b[static_cast<std::size_t>(h)].end() ? 0 : ib->second);
    }
    const auto t = chi_square_two_sample(ca, cb);
    rep.per_horizon.push_back(t);
    rep.min_p_value = std::min(rep.min_p_value, t.p_value);
    if (!(t.p_value > alpha / horizon)) rep.pass = false;
  }
  return rep;
}

nlohmann::json CouplingReport::to_json() const {
  nlohmann::json per = nlohmann::json::array();
  for (std::size_t h = 0; h < per_horizon.size(); ++h) {
    per.push_back({{"horizon", h + 1},
                   {"statistic", per_horizon[h].statistic},
                   {"df", per_horizon[h].df},
                   {"p_value", per_horizon[h].p_value}});
  }
  return {{"horizon", horizon},
          {"paths", paths},
          {"alpha", alpha},
          {"bonferroni_threshold", alpha / horizon},
          {"per_horizon", per},
          {"min_p_value", min_p_value},
          {"pass", pass},
          {"comparison", comparison == CouplingComparison::OriginalVsEmbedded ? "original-vs-embedded"
                                                                               : "coupled-vs-embedded"},
          {"seed", seed}};
}

}  // namespace rwre
