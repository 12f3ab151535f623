#include "rwre/torus.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <ostream>
#include <vector>

namespace rwre {

namespace {

// Site geometry only; probabilities are irrelevant for index arithmetic.
TorusEnvironment geometry(int d, int n) {
  return TorusEnvironment::constant(n, SimplexPoint::make(std::vector<double>(
                                           [d] {
                                             std::vector<double> w(static_cast<std::size_t>(2 * d + 1), 0.0);
                                             w[0] = 1.0;
                                             return w;
                                           }())));
}

RealVector left_multiply(const SparseKernel& k, std::span<const double> x) {
  RealVector y(static_cast<std::size_t>(k.cols()), 0.0);
  for (Eigen::Index r = 0; r < k.outerSize(); ++r) {
    const double xr = x[static_cast<std::size_t>(r)];
    for (SparseKernel::InnerIterator it(k, r); it; ++it) y[static_cast<std::size_t>(it.col())] += xr * it.value();
  }
  return y;
}

std::vector<std::vector<std::size_t>> adjacency(const SparseKernel& k, bool transpose) {
  std::vector<std::vector<std::size_t>> adj(static_cast<std::size_t>(k.rows()));
  for (Eigen::Index r = 0; r < k.outerSize(); ++r) {
    for (SparseKernel::InnerIterator it(k, r); it; ++it) {
      if (it.value() <= 0.0 || it.col() == r) continue;
      const auto a = static_cast<std::size_t>(r);
      const auto b = static_cast<std::size_t>(it.col());
      if (transpose) {
        adj[b].push_back(a);
      } else {
        adj[a].push_back(b);
      }
    }
  }
  return adj;
}

bool reaches_all(const std::vector<std::vector<std::size_t>>& adj) {
  std::vector<char> seen(adj.size(), 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    for (auto w : adj[v]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count == adj.size();
}

InvariantDensity direct_density(const TorusKernel& kernel) {
  const auto size = kernel.size();
  if (size > kDirectSolveMaxStates) {
    throw Error(ErrorCode::TooLarge, "direct solve refused for " + std::to_string(size) + " states");
  }
  // (K^T - I) phi = 0 with row 0 replaced by sum(phi) = N.
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(kernel.matrix.nonZeros()) + 2 * size);
  for (Eigen::Index r = 0; r < kernel.matrix.outerSize(); ++r) {
    for (SparseKernel::InnerIterator it(kernel.matrix, r); it; ++it) {
      if (it.col() != 0) triplets.emplace_back(it.col(), r, it.value());
    }
  }
  for (std::size_t i = 1; i < size; ++i) triplets.emplace_back(i, i, -1.0);
  for (std::size_t j = 0; j < size; ++j) triplets.emplace_back(0, j, 1.0);
  Eigen::SparseMatrix<double> a(static_cast<Eigen::Index>(size), static_cast<Eigen::Index>(size));
  a.setFromTriplets(triplets.begin(), triplets.end());
  a.makeCompressed();

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw Error(ErrorCode::NoConvergence, "direct stationary solve failed");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size));
  rhs[0] = static_cast<double>(size);
  const Eigen::VectorXd x = lu.solve(rhs);

  InvariantDensity out;
  out.d = kernel.d;
  out.n = kernel.n;
  out.phi.assign(x.data(), x.data() + x.size());
  for (auto& v : out.phi) v = std::max(v, 0.0);
  out.method = "direct";
  return out;
}

struct PowerResult {
  InvariantDensity density;
  bool converged = false;
};

PowerResult power_density(const TorusKernel& kernel, double tol, bool allow_stall_exit) {
  const auto size = kernel.size();
  const double scale = static_cast<double>(size);
  constexpr std::size_t kWindow = 10'000;

  RealVector phi(size, 1.0);
  PowerResult out;
  out.density.d = kernel.d;
  out.density.n = kernel.n;
  out.density.method = "power";
  double window_start = std::numeric_limits<double>::infinity();
  double best_residual = std::numeric_limits<double>::infinity();
  double previous = std::numeric_limits<double>::infinity();
  std::size_t polish_left = 0;
  for (std::size_t it = 1; it <= kPowerIterationCap; ++it) {
    const RealVector next = left_multiply(kernel.matrix, phi);
    double residual = 0.0;
    for (std::size_t i = 0; i < size; ++i) residual += std::abs(next[i] - phi[i]);
    if (residual <= tol * 0.5 && !out.converged) {
      // Converged; keep iterating while the residual still falls so that
      // well-mixing chains land on the floating-point fixed point.
      out.converged = true;
      polish_left = it / 10 + 100;
    }
    if (out.converged) {
      if (residual < best_residual) {
        best_residual = residual;
        out.density.phi = phi;
        out.density.iterations = it;
      }
      if (residual == 0.0 || residual > 0.75 * previous || polish_left-- == 0) return out;
      previous = residual;
    }
    // Lazy step (phi + phi K)/2 has the same fixed point and is aperiodic.
    double sum = 0.0;
    for (std::size_t i = 0; i < size; ++i) sum += phi[i] = 0.5 * (phi[i] + next[i]);
    for (auto& v : phi) v *= scale / sum;

    if (it % kWindow == 0) {
      if (allow_stall_exit && !out.converged && window_start < std::numeric_limits<double>::infinity()) {
        const double rate = residual / window_start;
        const double windows_left = rate < 1.0 ? std::log(tol * 0.5 / residual) / std::log(rate)
                                               : std::numeric_limits<double>::infinity();
        if (rate > 0.99 || static_cast<double>(it) + windows_left * kWindow > kPowerIterationCap) {
          out.density.phi = std::move(phi);
          out.density.iterations = it;
          return out;
        }
      }
      window_start = residual;
    }
  }
  if (!out.converged) {
    out.density.phi = std::move(phi);
    out.density.iterations = kPowerIterationCap;
  }
  return out;
}

}  // namespace

TorusKernel build_kernel(const EnvironmentView& env) {
  const TorusEnvironment& geom = env.base();
  const auto size = geom.size();
  const int m = geom.moves();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(size * static_cast<std::size_t>(m));
  for (std::size_t s = 0; s < size; ++s) {
    const Point x = geom.point_of(s);
    const SimplexPoint p = env.at(x);
    for (int k = 0; k < m; ++k) {
      if (p[k] == 0.0) continue;
      triplets.emplace_back(s, geom.index_of(x + move_vector(env.dim(), k)), p[k]);
    }
  }
  TorusKernel kernel;
  kernel.d = env.dim();
  kernel.n = env.half_period();
  kernel.matrix.resize(static_cast<Eigen::Index>(size), static_cast<Eigen::Index>(size));
  // Duplicates (wrapped moves on small tori) are summed.
  kernel.matrix.setFromTriplets(triplets.begin(), triplets.end());
  kernel.matrix.makeCompressed();
  return kernel;
}

TorusKernel build_kernel(const TorusEnvironment& env, const EnvironmentTransform& t) {
  return build_kernel(EnvironmentView(env, t));
}

bool is_irreducible(const TorusKernel& kernel) {
  if (kernel.size() <= 1) return true;
  return reaches_all(adjacency(kernel.matrix, false)) && reaches_all(adjacency(kernel.matrix, true));
}

double stationarity_residual(const TorusKernel& kernel, std::span<const double> phi) {
  const RealVector next = left_multiply(kernel.matrix, phi);
  double r = 0.0;
  for (std::size_t i = 0; i < next.size(); ++i) r += std::abs(next[i] - phi[i]);
  return r;
}

InvariantDensity invariant_density(const TorusKernel& kernel, double tol, DensityMethod method) {
  if (!is_irreducible(kernel)) throw Error(ErrorCode::NotIrreducible, "torus kernel is not irreducible");
  InvariantDensity out;
  if (method == DensityMethod::Direct) {
    out = direct_density(kernel);
  } else {
    auto power = power_density(kernel, tol, method == DensityMethod::Auto);
    if (power.converged) {
      out = std::move(power.density);
    } else if (method == DensityMethod::Power) {
      throw Error(ErrorCode::NoConvergence, "power iteration did not reach the tolerance");
    } else {
      const auto iterations = power.density.iterations;
      out = direct_density(kernel);
      out.method = "power+direct";
      out.iterations = iterations;
    }
  }
  out.residual = stationarity_residual(kernel, out.phi);
  if (!(out.residual <= tol)) {
    throw Error(ErrorCode::NoConvergence, "stationarity residual " + std::to_string(out.residual) + " above tolerance");
  }
  return out;
}

DensityBoundReport density_norm_bound(const TorusEnvironment& env, const EnvironmentTransform& t, double p) {
  const int d = env.dim();
  if (!(p > d)) throw Error(ErrorCode::InvalidExponent, "density bound needs p > d");
  RealVector inv_c(env.size());
  for (std::size_t s = 0; s < env.size(); ++s) {
    const double c = ellipticity_constant(t.apply(env.site(s)));
    if (c == 0.0) throw Error(ErrorCode::DegenerateSite, "site " + env.point_of(s).str() + " has c = 0");
    inv_c[s] = 1.0 / c;
  }
  const auto density = invariant_density(build_kernel(env, t));
  DensityBoundReport r;
  r.n = env.half_period();
  r.p = p;
  r.lhs = lp_norm(density.phi, p / (p - 1.0));
  r.rhs_base = std::pow(lp_norm(inv_c, p), d / (p - d));
  r.ratio = r.lhs / r.rhs_base;
  return r;
}

double empirical_measure_integral(const EnvironmentView& env,
                                  const std::function<double(const EnvironmentView&)>& f) {
  const TorusEnvironment& geom = env.base();
  double acc = 0.0;
  for (std::size_t s = 0; s < geom.size(); ++s) acc += f(env.shifted(geom.point_of(s)));
  return acc / static_cast<double>(geom.size());
}

DensitySampler::DensitySampler(const InvariantDensity& density) : geometry_(geometry(density.d, density.n)) {
  cdf_.resize(density.phi.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < density.phi.size(); ++i) cdf_[i] = acc += density.phi[i];
  for (auto& v : cdf_) v /= acc;
}

std::size_t DensitySampler::draw_index(CounterRng& rng) const {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.end()) {
    // Rounding gap: last state with positive mass.
    auto last = cdf_.size() - 1;
    while (last > 0 && cdf_[last] == cdf_[last - 1]) --last;
    return last;
  }
  return static_cast<std::size_t>(it - cdf_.begin());
}

Point DensitySampler::draw(CounterRng& rng) const { return geometry_.point_of(draw_index(rng)); }

Point sample_site_from_density(const InvariantDensity& density, std::uint64_t seed) {
  auto rng = CounterRng::stream(seed, StreamTag::Start);
  return DensitySampler(density).draw(rng);
}

void write_density_csv(std::ostream& out, const InvariantDensity& density) {
  const auto geom = geometry(density.d, density.n);
  out << "index";
  for (int i = 1; i <= density.d; ++i) out << ",x_" << i;
  out << ",phi\n";
  out.precision(17);
  for (std::size_t s = 0; s < density.phi.size(); ++s) {
    const Point x = geom.point_of(s);
    out << s;
    for (int i = 0; i < density.d; ++i) out << ',' << x[i];
    out << ',' << density.phi[s] << '\n';
  }
}

}  // namespace rwre
