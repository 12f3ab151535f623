#include "rwre/env_laws.hpp"

#include <cmath>

#include "rwre/rng.hpp"

namespace rwre {

LawSpec LawSpec::constant(int n, const SimplexPoint& p, std::uint64_t seed) {
  LawSpec s;
  s.kind = Kind::Constant;
  s.d = p.dim();
  s.n = n;
  s.seed = seed;
  s.point = p;
  return s;
}

LawSpec LawSpec::dirichlet(int d, int n, std::uint64_t seed, std::vector<double> concentration) {
  LawSpec s;
  s.kind = Kind::IidDirichlet;
  s.d = d;
  s.n = n;
  s.seed = seed;
  s.concentration = std::move(concentration);
  return s;
}

LawSpec LawSpec::controlled_tail(int d, int n, double kappa, std::uint64_t seed) {
  LawSpec s;
  s.kind = Kind::ControlledTail;
  s.d = d;
  s.n = n;
  s.seed = seed;
  s.kappa = kappa;
  return s;
}

void LawSpec::validate() const {
  if (d < 1 || d > kMaxDim) throw Error(ErrorCode::InvalidSpec, "d out of range");
  if (n < 1) throw Error(ErrorCode::InvalidSpec, "n must be >= 1");
  switch (kind) {
    case Kind::Constant:
      if (!point || point->dim() != d) throw Error(ErrorCode::InvalidSpec, "constant law needs a point of dimension d");
      break;
    case Kind::IidDirichlet:
      if (!concentration.empty()) {
        if (concentration.size() != static_cast<std::size_t>(2 * d + 1)) {
          throw Error(ErrorCode::InvalidSpec, "concentration needs 2d+1 entries");
        }
        for (double a : concentration) {
          if (!(a > 0.0)) throw Error(ErrorCode::InvalidSpec, "concentrations must be > 0");
        }
      }
      break;
    case Kind::ControlledTail:
      if (!(kappa > 0.0)) throw Error(ErrorCode::InvalidSpec, "kappa must be > 0");
      break;
  }
}

const char* to_string(LawSpec::Kind kind) {
  switch (kind) {
    case LawSpec::Kind::Constant: return "constant";
    case LawSpec::Kind::IidDirichlet: return "dirichlet";
    case LawSpec::Kind::ControlledTail: return "controlled-tail";
  }
  return "?";
}

LawSpec::Kind parse_law_kind(const std::string& text) {
  if (text == "constant") return LawSpec::Kind::Constant;
  if (text == "dirichlet") return LawSpec::Kind::IidDirichlet;
  if (text == "controlled-tail") return LawSpec::Kind::ControlledTail;
  throw Error(ErrorCode::InvalidSpec, "unknown law kind '" + text + "'");
}

TorusEnvironment sample_environment(const LawSpec& spec) {
  spec.validate();
  if (spec.kind == LawSpec::Kind::Constant) return TorusEnvironment::constant(spec.n, *spec.point);

  const int d = spec.d;
  const auto m = static_cast<std::size_t>(2 * d + 1);
  std::size_t count = 1;
  for (int i = 0; i < d; ++i) count *= static_cast<std::size_t>(2 * spec.n);

  std::vector<double> alpha = spec.concentration;
  if (alpha.empty()) alpha.assign(m, 1.0);

  std::vector<double> probs(count * m);
  for (std::size_t s = 0; s < count; ++s) {
    auto rng = CounterRng::stream(spec.seed, StreamTag::Site, s);
    double* site = probs.data() + s * m;
    if (spec.kind == LawSpec::Kind::IidDirichlet) {
      const auto w = dirichlet(rng, alpha);
      std::copy(w.begin(), w.end(), site);
    } else {
      const double scale = std::pow(rng.uniform_open(), 1.0 / spec.kappa);
      site[0] = 1.0 - scale;
      for (std::size_t k = 1; k < m; ++k) site[k] = scale / (2.0 * d);
    }
  }
  return TorusEnvironment(d, spec.n, std::move(probs));
}

double empirical_c_moment(const TorusEnvironment& env, const EnvironmentTransform& t, double p) {
  if (!(p > 0.0)) throw Error(ErrorCode::InvalidExponent, "moment order must be > 0");
  double acc = 0.0;
  for (std::size_t s = 0; s < env.size(); ++s) {
    const double c = ellipticity_constant(t.apply(env.site(s)));
    if (c == 0.0) throw Error(ErrorCode::DegenerateSite, "site " + env.point_of(s).str() + " has c = 0");
    acc += std::pow(c, -p);
  }
  return acc / static_cast<double>(env.size());
}

}  // namespace rwre
