#include "rwre/resolvent.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <limits>
#include <numbers>

#include "rwre/parallel.hpp"
#include "rwre/walk.hpp"

namespace rwre {

namespace {

double discount(int n) { return 1.0 - 1.0 / (static_cast<double>(n) * n); }

RealVector multiply(const SparseKernel& k, std::span<const double> x) {
  RealVector y(static_cast<std::size_t>(k.rows()), 0.0);
  for (Eigen::Index r = 0; r < k.outerSize(); ++r) {
    double acc = 0.0;
    for (SparseKernel::InnerIterator it(k, r); it; ++it) acc += it.value() * x[static_cast<std::size_t>(it.col())];
    y[static_cast<std::size_t>(r)] = acc;
  }
  return y;
}

void check_size(const TorusKernel& kernel, std::span<const double> g) {
  if (g.size() != kernel.size()) throw Error(ErrorCode::InvalidSpec, "g does not match the torus size");
  for (double v : g) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidSpec, "g must be finite");
  }
}

}  // namespace

ResolventResult resolvent_direct(const TorusKernel& kernel, std::span<const double> g) {
  check_size(kernel, g);
  const double theta = discount(kernel.n);
  const auto size = static_cast<Eigen::Index>(kernel.size());
  Eigen::SparseMatrix<double> a(size, size);
  {
    std::vector<Eigen::Triplet<double>> triplets;
    for (Eigen::Index r = 0; r < kernel.matrix.outerSize(); ++r) {
      triplets.emplace_back(r, r, 1.0);
      for (SparseKernel::InnerIterator it(kernel.matrix, r); it; ++it) {
        triplets.emplace_back(r, it.col(), -theta * it.value());
      }
    }
    a.setFromTriplets(triplets.begin(), triplets.end());
    a.makeCompressed();
  }
  const Eigen::Map<const Eigen::VectorXd> rhs(g.data(), size);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "resolvent factorization failed");
  Eigen::VectorXd x = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !x.allFinite()) throw Error(ErrorCode::SingularSystem, "resolvent solve failed");

  ResolventResult out;
  out.method = ResolventResult::Method::Direct;
  out.residual = (a * x - rhs).lpNorm<Eigen::Infinity>();
  if (!(out.residual < 1e-10)) {
    throw Error(ErrorCode::SingularSystem, "resolvent residual " + std::to_string(out.residual));
  }
  out.values.assign(x.data(), x.data() + x.size());
  return out;
}

ResolventResult resolvent_direct(const TorusEnvironment& env, const EnvironmentTransform& t,
                                 std::span<const double> g) {
  return resolvent_direct(build_kernel(env, t), g);
}

ResolventResult resolvent_series(const TorusKernel& kernel, std::span<const double> g, double tol) {
  check_size(kernel, g);
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidSpec, "tolerance must be > 0");
  const double theta = discount(kernel.n);
  const double n2 = static_cast<double>(kernel.n) * kernel.n;
  const double sup = lp_norm(g, std::numeric_limits<double>::infinity());

  ResolventResult out;
  out.method = ResolventResult::Method::Series;
  out.values.assign(g.size(), 0.0);
  if (sup == 0.0) return out;
  const double log_arg = std::log(n2 * sup / tol);
  const auto last = static_cast<std::size_t>(std::max(0.0, std::ceil(n2 * log_arg)));

  RealVector term(g.begin(), g.end());  // theta^j L^j g
  for (std::size_t j = 0;; ++j) {
    for (std::size_t i = 0; i < term.size(); ++i) out.values[i] += term[i];
    out.terms = j + 1;
    if (j == last || theta == 0.0) break;
    term = multiply(kernel.matrix, term);
    for (auto& v : term) v *= theta;
  }
  return out;
}

ResolventResult resolvent_series(const TorusEnvironment& env, const EnvironmentTransform& t,
                                 std::span<const double> g, double tol) {
  return resolvent_series(build_kernel(env, t), g, tol);
}

double resolvent_ratio(const TorusEnvironment& env, const EnvironmentTransform& t, std::span<const double> g) {
  RealVector weighted(env.size());
  for (std::size_t s = 0; s < env.size(); ++s) {
    const double c = ellipticity_constant(t.apply(env.site(s)));
    if (g[s] == 0.0) {
      weighted[s] = 0.0;
      continue;
    }
    if (c == 0.0) throw Error(ErrorCode::DegenerateSite, "c = 0 at " + env.point_of(s).str());
    weighted[s] = g[s] / c;
  }
  const double n = env.half_period();
  const double denom = n * n * lp_norm(weighted, env.dim());
  const auto r = resolvent_direct(env, t, g);
  return lp_norm(r.values, std::numeric_limits<double>::infinity()) / denom;
}

ResolventBoundReport verify_resolvent_bound(const LawSpec& law, const EnvironmentTransform& t, const std::vector<int>& sizes,
                           int trials, double growth_limit) {
  ResolventBoundReport rep;
  rep.sizes = sizes;
  rep.seed = law.seed;
  rep.growth_limit = growth_limit;
  for (int n : sizes) {
    auto ratios = parallel_map(static_cast<std::size_t>(trials), [&](std::size_t k) {
      LawSpec spec = law;
      spec.n = n;
      spec.seed = CounterRng::stream(law.seed, {static_cast<std::uint64_t>(StreamTag::Trial),
                                                static_cast<std::uint64_t>(n), k})
                      .key();
      const auto env = sample_environment(spec);
      auto rng = CounterRng::stream(spec.seed, StreamTag::Source);
      RealVector g(env.size());
      for (auto& v : g) v = rng.uniform();
      return resolvent_ratio(env, t, g);
    });
    double mx = 0.0;
    for (double r : ratios) mx = std::max(mx, r);
    rep.max_ratio.push_back(mx);
    rep.ratios.push_back(std::move(ratios));
  }
  rep.max_growth = 0.0;
  for (std::size_t k = 1; k < rep.max_ratio.size(); ++k) {
    rep.max_growth = std::max(rep.max_growth, rep.max_ratio[k] / rep.max_ratio[k - 1]);
  }
  rep.bounded = rep.max_growth <= growth_limit;
  return rep;
}

nlohmann::json ResolventBoundReport::to_json() const {
  return {{"sizes", sizes},       {"ratios", ratios},   {"max_ratio", max_ratio}, {"max_growth", max_growth},
          {"growth_limit", growth_limit}, {"bounded", bounded}, {"seed", seed}};
}

int doob_constant(int d) {
  const double threshold = 0.5 - 1.0 / std::numbers::e;
  const double numer = static_cast<double>(d) * d + 1.0;
  int k = 1;
  while (!(numer / (static_cast<double>(k) * k) < threshold)) ++k;
  if (k < d) throw Error(ErrorCode::InvalidSpec, "K < d: torus would not fit in D_{Kn}");
  return k;
}

ExitDiagnostic exit_probability_diagnostic(const TorusEnvironment& env, const EnvironmentTransform& t,
                                           std::size_t starts, std::size_t paths, std::uint64_t seed) {
  ExitDiagnostic out;
  out.d = env.dim();
  out.n = env.half_period();
  out.K = doob_constant(out.d);
  out.bound = (static_cast<double>(out.d) * out.d + 1.0) / (static_cast<double>(out.K) * out.K);
  out.paths_per_start = paths;
  out.seed = seed;

  std::vector<std::size_t> chosen;
  if (starts >= env.size()) {
    for (std::size_t s = 0; s < env.size(); ++s) chosen.push_back(s);
  } else {
    auto rng = CounterRng::stream(seed, StreamTag::Start);
    for (std::size_t k = 0; k < starts; ++k) chosen.push_back(rng.below(env.size()));
  }
  out.starts = chosen.size();

  const WalkTable table{EnvironmentView(env, t)};
  const long long horizon = static_cast<long long>(out.n) * out.n;
  const long long radius = static_cast<long long>(out.K) * out.n;
  const auto hits = parallel_map(chosen.size(), [&](std::size_t k) {
    const Point x = env.point_of(chosen[k]);
    std::size_t count = 0;
    for (std::size_t p = 0; p < paths; ++p) {
      Walker w(table, x, CounterRng::stream(seed, {static_cast<std::uint64_t>(StreamTag::Walk), k, p}));
      if (x.l1() >= radius) {
        ++count;
        continue;
      }
      for (long long m = 0; m < horizon; ++m) {
        w.step();
        if (w.position().l1() >= radius) {
          ++count;
          break;
        }
      }
    }
    return count;
  });

  out.within_pointwise_bound = true;
  out.sup_estimate = -1.0;
  const double n2 = static_cast<double>(horizon);
  const double k2 = static_cast<double>(out.K) * out.K;
  for (std::size_t k = 0; k < chosen.size(); ++k) {
    const double p = static_cast<double>(hits[k]) / static_cast<double>(paths);
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(paths));
    const Point x = env.point_of(chosen[k]);
    const double l1 = static_cast<double>(x.l1());
    const double pointwise = (n2 + l1 * l1) / (k2 * n2);
    if (p > pointwise + 3.0 * se) out.within_pointwise_bound = false;
    if (p > out.sup_estimate) {
      out.sup_estimate = p;
      out.sup_stderr = se;
      out.worst_start = x;
    }
  }
  out.within_bound = out.sup_estimate <= out.bound + 3.0 * out.sup_stderr;
  return out;
}

nlohmann::json ExitDiagnostic::to_json() const {
  return {{"d", d},
          {"n", n},
          {"K", K},
          {"bound", bound},
          {"starts", starts},
          {"paths_per_start", paths_per_start},
          {"sup_estimate", sup_estimate},
          {"sup_stderr", sup_stderr},
          {"worst_start", worst_start.str()},
          {"within_bound", within_bound},
          {"within_pointwise_bound", within_pointwise_bound},
          {"seed", seed}};
}

}  // namespace rwre
