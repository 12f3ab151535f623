#include "rwre/experiments.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "rwre/env_laws.hpp"
#include "rwre/ergodic.hpp"
#include "rwre/monge_ampere.hpp"
#include "rwre/parallel.hpp"
#include "rwre/resolvent.hpp"
#include "rwre/snapshot.hpp"
#include "rwre/stats.hpp"
#include "rwre/torus.hpp"
#include "rwre/walk.hpp"

#ifndef RWRE_VERSION
#define RWRE_VERSION "0.0.0"
#endif

namespace rwre {

const char* const kToolVersion = RWRE_VERSION;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const std::vector<KeySpec> kCommonKeys = {
    {"experiment.name", "string", "", "experiment to run (required)"},
    {"experiment.seed", "uint64", "1", "master seed; the RWRE_SEED environment variable overrides it"},
    {"law.kind", "string", "dirichlet", "constant | dirichlet | controlled-tail"},
    {"law.d", "int", "1", "dimension (constant law: taken from law.point)"},
    {"law.n", "int", "4", "torus half-period, T_n = {-n+1..n}^d"},
    {"law.point", "reals", "", "constant law: 2d+1 probabilities (hold, +e_1..+e_d, -e_1..-e_d)"},
    {"law.concentration", "reals", "all ones", "dirichlet law: 2d+1 concentrations"},
    {"law.kappa", "real", "", "controlled-tail law: tail exponent, E[c^-p] < inf iff p < kappa"},
    {"law.transform", "string", "identity", "environment function: identity | embedding | reflection | a+b chain"},
    {"law.snapshot", "path", "", "load the environment from a snapshot instead of sampling"},
    {"output.dir", "path", "rwre-out/<experiment>", "output directory (--out overrides)"},
};

const std::vector<ExperimentInfo> kCatalog = {
    {"sample-env",
     "Sample an environment from the law and save a JSON snapshot.",
     "Environments are i.i.d. draws from the law on the torus T_n, periodised to Z^d. The controlled-tail law "
     "puts s/(2d) on every non-hold move with s ~ kappa s^(kappa-1), so the ellipticity constant c = s/(2d) has "
     "finite negative moments exactly below kappa (the integrability assumption in place of uniform ellipticity).",
     {{"run.moment_p", "real", "d", "exponent of the reported empirical moment of c^-p"}}},
    {"invariant-density",
     "Invariant density of the periodised walk on T_n.",
     "phi_n is the stationary density of the torus chain with respect to normalized counting measure; "
     "lambda_n weights the shifted environments tau_x omega_n by phi_n(x). Computed by power iteration with a "
     "direct sparse solve as fallback.",
     {{"run.tol", "real", "1e-10", "l1 stationarity tolerance"},
      {"run.method", "string", "auto", "auto | power | direct"}}},
    {"solve-ma",
     "Solve the discrete Monge-Ampere problem |Mz|^(1/d) = f/c on the L1 ball with zero boundary data.",
     "Uniqueness principle: the class A(E, f) of concave, zero-boundary grids with |Mz|^(1/d) >= f/c has a "
     "unique member with equality, reached by monotone lowering from the supersolution gamma*(n(n+1) - "
     "|x|_1(|x|_1+1)).",
     {{"run.radius", "int", "law.n", "radius of the L1 ball D_n"},
      {"run.tol", "real", "1e-9", "sweeps stop when the largest update is below tol/10"},
      {"run.order", "string", "forward", "forward | backward | random sweep order"},
      {"run.source", "string", "c", "f on the interior: c (f = c, so f/c = 1) | one | uniform (random)"},
      {"run.residual_limit", "real", "1e-6", "assertion bound on max | |Mz|^(1/d) - f/c |"}}},
    {"occupation",
     "Occupation functional Qf(x) = E_x[sum_{k <= tau_n} f(X_k)] and a Monte Carlo cross-check.",
     "Qf solves Qf = f + L Qf inside D_n with zero boundary data. For balanced walks it is bounded by the "
     "Monge-Ampere solution z (the concave majorant in the occupation bound).",
     {{"run.radius", "int", "law.n", "radius of the L1 ball D_n"},
      {"run.source", "string", "one", "c | one | uniform"},
      {"run.start", "ints", "origin", "start point of the Monte Carlo check"},
      {"run.mc_paths", "int", "10000", "Monte Carlo paths (0 skips the check)"}}},
    {"resolvent-bound",
     "resolvent ratio ||R_n g||_inf / (n^2 ||g/c||_d) across torus sizes, plus an optional Doob exit diagnostic.",
     "R_n g = sum_j (1 - 1/n^2)^j L^j g. the resolvent bound controls ||R_n g||_inf by c_1(d) n^2 ||g/c||_d; the report tracks "
     "the per-size maxima over random environments and g. The exit diagnostic estimates "
     "sup_x P_x[tau_{Kn} <= n^2] against the Doob bound (d^2+1)/K^2 with K the smallest integer such that "
     "(d^2+1)/K^2 < 1/2 - 1/e.",
     {{"run.sizes", "ints", "4,8,16", "torus half-periods n"},
      {"run.trials", "int", "50", "environments (and g) per size"},
      {"run.growth_limit", "real", "1.5", "largest allowed ratio of consecutive per-size maxima"},
      {"run.exit_starts", "int", "20", "start sites for the exit diagnostic"},
      {"run.exit_paths", "int", "0", "paths per start for the exit diagnostic (0 skips it)"}}},
    {"lln",
     "Velocity estimate X(steps)/steps over independent paths, and the annealed velocity cross-check.",
     "Law of large numbers: X(n)/n converges to a deterministic velocity. Balanced environments have v = 0; on "
     "the torus the annealed velocity is the drift averaged against the embedded walk's invariant density, "
     "which the Bernoulli-coupled walk realizes as a time average (Birkhoff).",
     {{"run.steps", "int", "100000", "steps per path"},
      {"run.paths", "int", "32", "independent paths from the origin"},
      {"run.expected", "reals", "", "velocity to test against (3 standard errors); constant laws default to "
                                    "their drift"},
      {"run.coupled_steps", "int", "0", "length of the coupled trajectory for the annealed check (0 skips)"}}},
    {"clt",
     "Martingale CLT check: covariance of U(steps)/sqrt(steps) and normal marginals.",
     "U_k = X(k) - sum_{m<k} drift(X(m)) is a martingale whose step covariance has entries "
     "T_i + T_{i+d} - (T_i - T_{i+d})^2 and -(T_i - T_{i+d})(T_j - T_{j+d}); the empirical covariance is compared "
     "with the path-averaged reference and each marginal with a normal law (Kolmogorov-Smirnov).",
     {{"run.steps", "int", "1000", "steps per path"},
      {"run.paths", "int", "10000", "paths"},
      {"run.start", "string", "origin", "origin | stationary | both"},
      {"run.max_frobenius", "real", "0.05", "bound on the relative Frobenius error"},
      {"run.alpha", "real", "0.01", "KS significance level"}}},
    {"coupling-test",
     "Chi-square comparison of local-process laws of two walks started from the embedded invariant density.",
     "The coupled walk flips a fair coin gamma per step between the original (gamma = 1) and reflected "
     "(gamma = 0) kernels; with gamma averaged out it is the embedded walk. The test compares the joint law "
     "of the site sequence x_0..x_h for h = 1..horizon, with a Bonferroni-corrected level.",
     {{"run.horizon", "int", "3", "number of steps (1..4)"},
      {"run.paths", "int", "100000", "paths per sample"},
      {"run.alpha", "real", "0.01", "family-wise significance level"},
      {"run.comparison", "string", "original-vs-embedded", "original-vs-embedded | coupled-vs-embedded"}}},
    {"kernel-identities",
     "Finite checks of the transformation identities tau_x T.omega = T(tau_{Tx} omega), "
     "K_d(T.omega, T B) = K_d^T(omega, B), K_gamma(alpha.omega, B) = K_{1-gamma}(omega, alpha.B), "
     "and stationarity of the pushed embedded density.",
     "T ranges over signed coordinate permutations. Probability identities are checked to 1e-15 and the "
     "stationarity residual to 1e-10.",
     {{"run.gamma", "ints", "0,1", "gamma values"},
      {"run.permutations", "string", "all", "all | identity"},
      {"run.probes", "int", "20", "random probes for the shift identity"}}},
    {"density-bound",
     "Density norm bound ||phi_n||_{p/(p-1)} against ||1/c||_p^{d/(p-d)} across torus sizes.",
     "Holder and log-convexity of l_p norms bound the invariant density in l_{p/(p-1)} by a power of the "
     "negative moment of c; the report tracks the ratio across n for p > d.",
     {{"run.p", "real", "d+1", "exponent, must exceed d"},
      {"run.sizes", "ints", "4,8,16", "torus half-periods n"},
      {"run.trials", "int", "5", "environments per size"},
      {"run.growth_limit", "real", "1.5", "largest allowed ratio of consecutive per-size maxima"}}},
};

const ExperimentInfo& find_info(const std::string& name) {
  for (const auto& e : kCatalog) {
    if (e.name == name) return e;
  }
  std::string valid;
  for (const auto& e : kCatalog) valid += (valid.empty() ? "" : ", ") + e.name;
  throw Error(ErrorCode::UnknownExperiment, "unknown experiment '" + name + "'; valid names: " + valid);
}

// ---------------------------------------------------------------- context

struct Context {
  const Config& config;
  std::uint64_t seed = 0;
  std::filesystem::path out;

  void write(const std::string& file, const std::function<void(std::ostream&)>& body) const {
    std::ofstream f(out / file);
    if (!f) throw Error(ErrorCode::ConfigError, "cannot write " + (out / file).string());
    body(f);
  }
};

struct Outcome {
  RunResult::Status status = RunResult::Status::Done;
  std::string summary;
  nlohmann::json result;
};

Outcome verdict(bool ok, std::string summary, nlohmann::json result) {
  return {ok ? RunResult::Status::Pass : RunResult::Status::Fail, std::move(summary), std::move(result)};
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int positive_int(const Config& c, const std::string& key, long long fallback) {
  const auto v = c.get_int(key, fallback);
  if (v < 1 || v > std::numeric_limits<int>::max()) {
    throw Error(ErrorCode::ConfigError, "key '" + key + "': must be a positive integer");
  }
  return static_cast<int>(v);
}

std::size_t count_value(const Config& c, const std::string& key, long long fallback) {
  const auto v = c.get_int(key, fallback);
  if (v < 0) throw Error(ErrorCode::ConfigError, "key '" + key + "': must be >= 0");
  return static_cast<std::size_t>(v);
}

double positive_real(const Config& c, const std::string& key, double fallback) {
  const double v = c.get_double(key, fallback);
  if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::ConfigError, "key '" + key + "': must be > 0");
  return v;
}

LawSpec law_from(const Config& c, std::uint64_t seed) {
  LawSpec law;
  std::string kind_text = c.get_string("law.kind", "dirichlet");
  try {
    law.kind = parse_law_kind(kind_text);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, "key 'law.kind': " + std::string(e.what()));
  }
  law.seed = seed;
  law.n = positive_int(c, "law.n", 4);
  law.d = positive_int(c, "law.d", 1);
  if (law.kind == LawSpec::Kind::Constant) {
    const auto w = c.get_doubles("law.point");
    try {
      law.point = SimplexPoint::make(w);
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigError, "key 'law.point': " + std::string(e.what()));
    }
    law.d = law.point->dim();
  }
  if (c.has("law.concentration")) law.concentration = c.get_doubles("law.concentration");
  if (law.kind == LawSpec::Kind::ControlledTail) law.kappa = c.get_double("law.kappa");
  try {
    law.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, "section 'law': " + std::string(e.what()));
  }
  return law;
}

EnvironmentTransform transform_from(const Config& c) {
  try {
    return EnvironmentTransform::parse(c.get_string("law.transform", "identity"));
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, "key 'law.transform': " + std::string(e.what()));
  }
}

TorusEnvironment environment_from(const Context& ctx) {
  if (ctx.config.has("law.snapshot")) return load_environment(ctx.config.get_string("law.snapshot"));
  return sample_environment(law_from(ctx.config, ctx.seed));
}

std::uint64_t trial_seed(std::uint64_t seed, int n, std::size_t k) {
  return CounterRng::stream(seed, {static_cast<std::uint64_t>(StreamTag::Trial), static_cast<std::uint64_t>(n), k})
      .key();
}

Grid source_from(const Context& ctx, const L1Ball& ball, const EnvironmentView& env, const std::string& fallback) {
  const std::string kind = ctx.config.get_string("run.source", fallback);
  Grid f(ball.size(), 0.0);
  auto rng = CounterRng::stream(ctx.seed, StreamTag::Source);
  for (auto i : ball.interior()) {
    if (kind == "c") {
      f[i] = ellipticity_constant(env.at(ball.site(i)));
    } else if (kind == "one") {
      f[i] = 1.0;
    } else if (kind == "uniform") {
      f[i] = rng.uniform();
    } else {
      throw Error(ErrorCode::ConfigError, "key 'run.source': expected c, one or uniform, got '" + kind + "'");
    }
  }
  return f;
}

// ---------------------------------------------------------------- runners

Outcome run_sample_env(const Context& ctx) {
  const auto env = environment_from(ctx);
  const auto t = transform_from(ctx.config);
  save_environment(env, ctx.out / "environment.json");
  const double p = ctx.config.get_double("run.moment_p", env.dim());
  nlohmann::json result = {{"d", env.dim()},
                           {"n", env.half_period()},
                           {"sites", env.size()},
                           {"balanced", is_balanced(env, t)},
                           {"moment_p", p}};
  double moment = kInf;
  try {
    moment = empirical_c_moment(env, t, p);
    result["c_moment"] = moment;
  } catch (const Error&) {
    result["c_moment"] = nullptr;
  }
  return {RunResult::Status::Done,
          fmt("%zu sites, balanced=%s, mean c^-%g = %g", env.size(), is_balanced(env, t) ? "yes" : "no", p, moment),
          result};
}

Outcome run_invariant_density(const Context& ctx) {
  const auto env = environment_from(ctx);
  const auto t = transform_from(ctx.config);
  const double tol = positive_real(ctx.config, "run.tol", 1e-10);
  const std::string m = ctx.config.get_string("run.method", "auto");
  DensityMethod method = DensityMethod::Auto;
  if (m == "power") {
    method = DensityMethod::Power;
  } else if (m == "direct") {
    method = DensityMethod::Direct;
  } else if (m != "auto") {
    throw Error(ErrorCode::ConfigError, "key 'run.method': expected auto, power or direct, got '" + m + "'");
  }
  const auto density = invariant_density(build_kernel(env, t), tol, method);
  ctx.write("density.csv", [&](std::ostream& o) { write_density_csv(o, density); });
  const auto [lo, hi] = std::minmax_element(density.phi.begin(), density.phi.end());
  nlohmann::json result = {{"residual", density.residual}, {"method", density.method},
                           {"iterations", density.iterations}, {"phi_min", *lo},
                           {"phi_max", *hi}, {"tol", tol}};
  return verdict(density.residual <= tol,
                 fmt("residual %.3e (tol %.1e) via %s", density.residual, tol, density.method.c_str()), result);
}

Outcome run_solve_ma(const Context& ctx) {
  const auto env = environment_from(ctx);
  const EnvironmentView view(env, transform_from(ctx.config));
  const L1Ball ball(env.dim(), positive_int(ctx.config, "run.radius", env.half_period()));
  const double tol = positive_real(ctx.config, "run.tol", 1e-9);
  const std::string order_text = ctx.config.get_string("run.order", "forward");
  SweepOrder order = SweepOrder::Forward;
  if (order_text == "backward") {
    order = SweepOrder::Backward;
  } else if (order_text == "random") {
    order = SweepOrder::Random;
  } else if (order_text != "forward") {
    throw Error(ErrorCode::ConfigError, "key 'run.order': expected forward, backward or random");
  }
  const double residual_limit = positive_real(ctx.config, "run.residual_limit", 1e-6);
  const Grid f = source_from(ctx, ball, view, "c");
  const auto sol = solve_monge_ampere(ball, view, f, tol, order, ctx.seed);
  const Grid ratio = source_ratio(ball, view, f);
  const auto cls = check_class(ball, view, f, sol.z, residual_limit);
  ctx.write("grid.csv", [&](std::ostream& o) { write_grid_csv(o, ball, sol.z, ratio); });
  nlohmann::json result = {{"radius", ball.radius()},
                           {"sweeps", sol.sweeps},
                           {"last_update", sol.last_update},
                           {"max_residual", sol.max_residual},
                           {"z_sup", lp_norm(sol.z, kInf)},
                           {"concave", cls.max_second_diff <= 1e-12},
                           {"max_boundary", cls.max_boundary},
                           {"class_member", cls.member}};
  const bool ok = sol.max_residual <= residual_limit && cls.max_boundary == 0.0 && cls.max_second_diff <= 1e-12;
  return verdict(ok, fmt("%zu sweeps, max residual %.2e, ||z||_inf %.6g", sol.sweeps, sol.max_residual,
                         lp_norm(sol.z, kInf)),
                 result);
}

Outcome run_occupation(const Context& ctx) {
  const auto env = environment_from(ctx);
  const EnvironmentView view(env, transform_from(ctx.config));
  const L1Ball ball(env.dim(), positive_int(ctx.config, "run.radius", env.half_period()));
  const Grid f = source_from(ctx, ball, view, "one");
  const Grid q = occupation_functional(ball, view, f);
  ctx.write("occupation.csv", [&](std::ostream& o) { write_grid_csv(o, ball, q, f); });

  Point start(env.dim());
  if (ctx.config.has("run.start")) {
    const auto coords = ctx.config.get_ints("run.start");
    if (static_cast<int>(coords.size()) != env.dim()) {
      throw Error(ErrorCode::ConfigError, "key 'run.start': expected " + std::to_string(env.dim()) + " coordinates");
    }
    for (int i = 0; i < env.dim(); ++i) start[i] = coords[static_cast<std::size_t>(i)];
  }
  const auto start_index = ball.index_of(start);
  if (!start_index) throw Error(ErrorCode::ConfigError, "key 'run.start': point lies outside D_n");
  nlohmann::json result = {{"radius", ball.radius()}, {"q_sup", lp_norm(q, kInf)}, {"start", start.str()},
                           {"q_start", q[*start_index]}};

  const auto paths = count_value(ctx.config, "run.mc_paths", 10000);
  if (paths == 0) return {RunResult::Status::Done, fmt("||Qf||_inf = %.6g", lp_norm(q, kInf)), result};

  const WalkTable table(view);
  constexpr std::size_t kStepGuard = 100'000'000;
  const auto sums = parallel_map(paths, [&](std::size_t p) {
    Walker w(table, start, CounterRng::stream(path_seed(ctx.seed, p), StreamTag::Walk));
    double acc = 0.0;
    for (std::size_t k = 0; k < kStepGuard; ++k) {
      const auto idx = ball.index_of(w.position());
      if (!idx || ball.is_boundary(*idx)) return acc;
      acc += f[*idx];
      w.step();
    }
    throw Error(ErrorCode::NoConvergence, "Monte Carlo path did not leave D_n");
  });
  RunningStats stats;
  for (double s : sums) stats.add(s);
  result["mc_mean"] = stats.mean();
  result["mc_stderr"] = stats.stderr_of_mean();
  result["mc_paths"] = paths;
  const bool ok = std::abs(stats.mean() - q[*start_index]) <= 3.0 * stats.stderr_of_mean();
  return verdict(ok, fmt("Qf(%s) = %.6g, Monte Carlo %.6g +- %.2g", start.str().c_str(), q[*start_index],
                         stats.mean(), stats.stderr_of_mean()),
                 result);
}

Outcome run_resolvent_bound(const Context& ctx) {
  if (ctx.config.has("law.snapshot")) {
    throw Error(ErrorCode::ConfigError, "key 'law.snapshot': resolvent-bound samples environments per size");
  }
  const LawSpec law = law_from(ctx.config, ctx.seed);
  const auto t = transform_from(ctx.config);
  std::vector<int> sizes;
  for (auto n : ctx.config.get_ints("run.sizes", {4, 8, 16})) {
    if (n < 1) throw Error(ErrorCode::ConfigError, "key 'run.sizes': sizes must be positive");
    sizes.push_back(static_cast<int>(n));
  }
  const int trials = positive_int(ctx.config, "run.trials", 50);
  const double growth = positive_real(ctx.config, "run.growth_limit", 1.5);
  const auto rep = verify_resolvent_bound(law, t, sizes, trials, growth);
  ctx.write("ratios.csv", [&](std::ostream& o) {
    o << "n,trial,ratio\n";
    for (std::size_t s = 0; s < sizes.size(); ++s) {
      for (std::size_t k = 0; k < rep.ratios[s].size(); ++k) o << sizes[s] << ',' << k << ',' << rep.ratios[s][k] << '\n';
    }
  });
  nlohmann::json result = {{"resolvent_bound", rep.to_json()}};
  bool ok = rep.bounded;
  std::string summary = fmt("resolvent ratio max growth %.3f (limit %.2f)", rep.max_growth, growth);

  const auto exit_paths = count_value(ctx.config, "run.exit_paths", 0);
  if (exit_paths > 0) {
    const auto env = sample_environment(law);
    const auto diag = exit_probability_diagnostic(env, t, count_value(ctx.config, "run.exit_starts", 20),
                                                  exit_paths, ctx.seed);
    result["exit"] = diag.to_json();
    ok = ok && diag.within_bound;
    summary += fmt("; exit sup %.4f vs Doob bound %.4f (K=%d)", diag.sup_estimate, diag.bound, diag.K);
  }
  return verdict(ok, summary, result);
}

Outcome run_lln(const Context& ctx) {
  const auto env = environment_from(ctx);
  const auto t = transform_from(ctx.config);
  const auto steps = static_cast<std::size_t>(positive_int(ctx.config, "run.steps", 100000));
  const auto paths = static_cast<std::size_t>(positive_int(ctx.config, "run.paths", 32));
  const auto v = velocity_estimate(env, t, steps, paths, ctx.seed);
  nlohmann::json result = {{"velocity", v.to_json()}};
  std::vector<std::string> checks;
  bool ok = true;
  bool asserted = false;

  std::optional<RealVector> expected;
  if (ctx.config.has("run.expected")) {
    expected = ctx.config.get_doubles("run.expected");
    if (static_cast<int>(expected->size()) != env.dim()) {
      throw Error(ErrorCode::ConfigError, "key 'run.expected': expected " + std::to_string(env.dim()) + " values");
    }
  } else if (!ctx.config.has("law.snapshot") && ctx.config.get_string("law.kind", "dirichlet") == "constant") {
    expected = drift(t.apply(env.site(0)));
  }
  if (expected) {
    asserted = true;
    for (int i = 0; i < env.dim(); ++i) {
      if (std::abs(v.v_hat[i] - (*expected)[i]) > 3.0 * v.stderr_of_mean[i]) ok = false;
    }
    result["expected"] = *expected;
    checks.push_back("v_hat within 3 stderr of expected");
  } else if (is_balanced(env, t)) {
    asserted = true;
    for (int i = 0; i < env.dim(); ++i) {
      if (std::abs(v.v_hat[i]) > 4.0 * v.stderr_of_mean[i]) ok = false;
    }
    checks.push_back("balanced: v_hat within 4 stderr of 0");
  }

  const auto coupled = count_value(ctx.config, "run.coupled_steps", 0);
  if (coupled > 0) {
    const auto density = invariant_density(build_kernel(env, EnvironmentTransform::embedding()));
    const auto annealed = annealed_velocity(env, density);
    const auto avg = coupled_time_average_drift(env, Point(env.dim()), coupled, path_seed(ctx.seed, paths),
                                                path_seed(ctx.seed, paths + 1));
    asserted = true;
    for (int i = 0; i < env.dim(); ++i) {
      if (std::abs(annealed[i] - avg.mean[i]) > 4.0 * avg.stderr_of_mean[i]) ok = false;
    }
    result["annealed_velocity"] = annealed;
    result["time_average_drift"] = {{"mean", avg.mean}, {"stderr", avg.stderr_of_mean}, {"steps", avg.steps}};
    checks.push_back("annealed velocity within 4 stderr of the coupled time average");
  }
  result["checks"] = checks;
  std::string vs;
  for (int i = 0; i < env.dim(); ++i) vs += fmt("%s%.5f", i ? ", " : "", v.v_hat[i]);
  const std::string summary = "v_hat = (" + vs + ")";
  if (!asserted) return {RunResult::Status::Done, summary, result};
  return verdict(ok, summary, result);
}

Outcome run_clt(const Context& ctx) {
  const auto env = environment_from(ctx);
  const EnvironmentView view(env, transform_from(ctx.config));
  const auto steps = static_cast<std::size_t>(positive_int(ctx.config, "run.steps", 1000));
  const auto paths = static_cast<std::size_t>(positive_int(ctx.config, "run.paths", 10000));
  if (paths < 2) throw Error(ErrorCode::ConfigError, "key 'run.paths': needs at least 2 paths");
  const double limit = positive_real(ctx.config, "run.max_frobenius", 0.05);
  const double alpha = positive_real(ctx.config, "run.alpha", 0.01);
  const std::string start = ctx.config.get_string("run.start", "origin");
  std::vector<StartMode> modes;
  if (start == "origin" || start == "both") modes.push_back(StartMode::Origin);
  if (start == "stationary" || start == "both") modes.push_back(StartMode::Stationary);
  if (modes.empty()) throw Error(ErrorCode::ConfigError, "key 'run.start': expected origin, stationary or both");

  bool ok = true;
  nlohmann::json reports = nlohmann::json::array();
  std::string summary;
  for (auto mode : modes) {
    const auto r = clt_check(view, steps, paths, ctx.seed, mode);
    reports.push_back(r.to_json());
    ok = ok && r.nondegenerate && r.frobenius_rel_error <= limit;
    double min_p = 1.0;
    for (const auto& k : r.ks) min_p = std::min(min_p, k.p_value);
    ok = ok && min_p > alpha;
    summary += fmt("%s%s start: Frobenius %.4f, min KS p %.3f", summary.empty() ? "" : "; ",
                   mode == StartMode::Origin ? "origin" : "stationary", r.frobenius_rel_error, min_p);
  }
  return verdict(ok, summary, {{"runs", reports}, {"max_frobenius", limit}, {"alpha", alpha}});
}

Outcome run_coupling(const Context& ctx) {
  const auto env = environment_from(ctx);
  const auto horizon = positive_int(ctx.config, "run.horizon", 3);
  const auto paths = static_cast<std::size_t>(positive_int(ctx.config, "run.paths", 100000));
  const double alpha = positive_real(ctx.config, "run.alpha", 0.01);
  const std::string cmp = ctx.config.get_string("run.comparison", "original-vs-embedded");
  CouplingComparison comparison = CouplingComparison::OriginalVsEmbedded;
  if (cmp == "coupled-vs-embedded") {
    comparison = CouplingComparison::CoupledVsEmbedded;
  } else if (cmp != "original-vs-embedded") {
    throw Error(ErrorCode::ConfigError, "key 'run.comparison': expected original-vs-embedded or coupled-vs-embedded");
  }
  if (horizon > 4) throw Error(ErrorCode::ConfigError, "key 'run.horizon': must be in 1..4");
  const auto rep = coupling_distribution_test(env, horizon, paths, ctx.seed, comparison, alpha);
  ctx.write("coupling.csv", [&](std::ostream& o) {
    o << "horizon,statistic,df,p_value\n";
    for (std::size_t h = 0; h < rep.per_horizon.size(); ++h) {
      o << h + 1 << ',' << rep.per_horizon[h].statistic << ',' << rep.per_horizon[h].df << ','
        << rep.per_horizon[h].p_value << '\n';
    }
  });
  return verdict(rep.pass, fmt("%s: min p-value %.3e (threshold %.3e)", cmp.c_str(), rep.min_p_value, alpha / horizon),
                 rep.to_json());
}

Outcome run_kernel_identities(const Context& ctx) {
  const auto env = environment_from(ctx);
  const std::string which = ctx.config.get_string("run.permutations", "all");
  std::vector<DirectionPermutation> perms;
  if (which == "all") {
    perms = DirectionPermutation::all(env.dim());
  } else if (which == "identity") {
    perms = {DirectionPermutation::identity(env.dim())};
  } else {
    throw Error(ErrorCode::ConfigError, "key 'run.permutations': expected all or identity");
  }
  const auto probes = count_value(ctx.config, "run.probes", 20);
  bool ok = true;
  KernelIdentityReport worst;
  nlohmann::json cases = nlohmann::json::array();
  std::ostringstream csv;
  csv << "permutation,gamma,shift,conjugation,reflection,pushed_density_residual,pass\n";
  for (auto g : ctx.config.get_ints("run.gamma", {0, 1})) {
    if (g != 0 && g != 1) throw Error(ErrorCode::ConfigError, "key 'run.gamma': values must be 0 or 1");
    for (const auto& T : perms) {
      const auto r = kernel_identity_checks(env, static_cast<int>(g), T, ctx.seed, probes);
      ok = ok && r.pass;
      worst.shift_max_dev = std::max(worst.shift_max_dev, r.shift_max_dev);
      worst.conjugation_max_dev = std::max(worst.conjugation_max_dev, r.conjugation_max_dev);
      worst.reflection_max_dev = std::max(worst.reflection_max_dev, r.reflection_max_dev);
      worst.pushed_density_residual = std::max(worst.pushed_density_residual, r.pushed_density_residual);
      csv << '"' << T.str() << "\"," << g << ',' << r.shift_max_dev << ',' << r.conjugation_max_dev << ','
          << r.reflection_max_dev << ',' << r.pushed_density_residual << ',' << (r.pass ? 1 : 0) << '\n';
      cases.push_back({{"permutation", T.str()}, {"gamma", g}, {"report", r.to_json()}});
    }
  }
  worst.pass = ok;
  ctx.write("identities.csv", [&](std::ostream& o) { o << csv.str(); });
  return verdict(ok,
                 fmt("%zu cases; worst deviations %.1e / %.1e / %.1e, pushed-density residual %.1e", cases.size(),
                     worst.shift_max_dev, worst.conjugation_max_dev, worst.reflection_max_dev, worst.pushed_density_residual),
                 {{"worst", worst.to_json()}, {"cases", cases}});
}

Outcome run_density_bound(const Context& ctx) {
  if (ctx.config.has("law.snapshot")) {
    throw Error(ErrorCode::ConfigError, "key 'law.snapshot': density-bound samples environments per size");
  }
  LawSpec law = law_from(ctx.config, ctx.seed);
  const auto t = transform_from(ctx.config);
  const double p = ctx.config.get_double("run.p", law.d + 1.0);
  if (!(p > law.d)) throw Error(ErrorCode::ConfigError, "key 'run.p': must exceed d");
  const int trials = positive_int(ctx.config, "run.trials", 5);
  const double growth_limit = positive_real(ctx.config, "run.growth_limit", 1.5);
  nlohmann::json per_size = nlohmann::json::array();
  std::vector<double> maxima;
  std::ostringstream csv;
  csv << "n,trial,lhs,rhs_base,ratio\n";
  for (auto n : ctx.config.get_ints("run.sizes", {4, 8, 16})) {
    if (n < 1) throw Error(ErrorCode::ConfigError, "key 'run.sizes': sizes must be positive");
    double mx = 0.0;
    for (int k = 0; k < trials; ++k) {
      LawSpec spec = law;
      spec.n = static_cast<int>(n);
      spec.seed = trial_seed(ctx.seed, spec.n, static_cast<std::size_t>(k));
      const auto r = density_norm_bound(sample_environment(spec), t, p);
      mx = std::max(mx, r.ratio);
      csv << n << ',' << k << ',' << r.lhs << ',' << r.rhs_base << ',' << r.ratio << '\n';
    }
    maxima.push_back(mx);
    per_size.push_back({{"n", n}, {"max_ratio", mx}});
  }
  double growth = 0.0;
  for (std::size_t k = 1; k < maxima.size(); ++k) growth = std::max(growth, maxima[k] / maxima[k - 1]);
  ctx.write("density_bound.csv", [&](std::ostream& o) { o << csv.str(); });
  return verdict(growth <= growth_limit, fmt("max ratio growth %.3f (limit %.2f)", growth, growth_limit),
                 {{"p", p}, {"per_size", per_size}, {"max_growth", growth}, {"growth_limit", growth_limit}});
}

using Runner = Outcome (*)(const Context&);

Runner runner_for(const std::string& name) {
  if (name == "sample-env") return run_sample_env;
  if (name == "invariant-density") return run_invariant_density;
  if (name == "solve-ma") return run_solve_ma;
  if (name == "occupation") return run_occupation;
  if (name == "resolvent-bound") return run_resolvent_bound;
  if (name == "lln") return run_lln;
  if (name == "clt") return run_clt;
  if (name == "coupling-test") return run_coupling;
  if (name == "kernel-identities") return run_kernel_identities;
  if (name == "density-bound") return run_density_bound;
  find_info(name);  // throws with the list of valid names
  return nullptr;
}

}  // namespace

const std::vector<ExperimentInfo>& experiment_catalog() { return kCatalog; }
const std::vector<KeySpec>& common_keys() { return kCommonKeys; }

const char* to_string(RunResult::Status status) {
  switch (status) {
    case RunResult::Status::Pass: return "PASS";
    case RunResult::Status::Fail: return "FAIL";
    case RunResult::Status::Done: return "DONE";
  }
  return "?";
}

std::string describe_experiment(const std::string& name) {
  const auto& info = find_info(name);
  std::ostringstream out;
  out << info.name << " - " << info.summary << "\n\n" << info.theory << "\n\nExperiment keys:\n";
  auto row = [&](const KeySpec& k) {
    out << "  " << k.key << " (" << k.type << (k.fallback.empty() ? "" : ", default " + k.fallback) << ")\n      "
        << k.help << '\n';
  };
  for (const auto& k : info.keys) row(k);
  out << "\nCommon keys:\n";
  for (const auto& k : kCommonKeys) row(k);
  return out.str();
}

RunResult run_experiment(const Config& config, const RunOptions& options) {
  const std::string name = config.get_string("experiment.name");
  const auto& info = find_info(name);
  std::set<std::string> allowed;
  for (const auto& k : kCommonKeys) allowed.insert(k.key);
  for (const auto& k : info.keys) allowed.insert(k.key);
  config.check_known(allowed);

  Context ctx{config, 0, {}};
  std::string seed_source = config.has("experiment.seed") ? "config" : "default";
  ctx.seed = config.get_uint64("experiment.seed", 1);
  if (options.seed_override) {
    ctx.seed = *options.seed_override;
    seed_source = "RWRE_SEED";
  }
  ctx.out = options.out ? *options.out : std::filesystem::path(config.get_string("output.dir", "rwre-out/" + name));
  std::filesystem::create_directories(ctx.out);

  const Outcome outcome = runner_for(name)(ctx);
  RunResult r;
  r.status = outcome.status;
  r.summary = outcome.summary;
  r.out_dir = ctx.out;
  r.report = {{"tool", "rwre"},
              {"version", kToolVersion},
              {"experiment", name},
              {"config_hash", config.hash()},
              {"config", config.to_json()},
              {"seed", ctx.seed},
              {"seed_source", seed_source},
              {"status", to_string(r.status)},
              {"summary", r.summary},
              {"result", outcome.result}};
  ctx.write("report.json", [&](std::ostream& o) { o << r.report.dump(2) << '\n'; });
  return r;
}

}  // namespace rwre
