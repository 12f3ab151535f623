#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rwre/lattice.hpp"

namespace rwre {

/// Environment law on T_n. Sites are i.i.d. for the random kinds.
struct LawSpec {
  enum class Kind { Constant, IidDirichlet, ControlledTail };

  Kind kind = Kind::Constant;
  int d = 1;
  int n = 1;
  std::uint64_t seed = 0;
  /// Constant law only.
  std::optional<SimplexPoint> point;
  /// IidDirichlet only; empty means all ones (uniform on the simplex).
  std::vector<double> concentration;
  /// ControlledTail only: E[c^-p] is finite exactly when p < kappa.
  double kappa = 0.0;

  static LawSpec constant(int n, const SimplexPoint& p, std::uint64_t seed = 0);
  static LawSpec dirichlet(int d, int n, std::uint64_t seed, std::vector<double> concentration = {});
  static LawSpec controlled_tail(int d, int n, double kappa, std::uint64_t seed);

  void validate() const;
};

const char* to_string(LawSpec::Kind kind);
LawSpec::Kind parse_law_kind(const std::string& text);

/// Pure function of the spec: site x uses the stream (seed, Site, index(x)).
///
/// ControlledTail(kappa) draws s in (0,1) with density kappa*s^(kappa-1) and
/// puts s/(2d) on every non-hold move, 1-s on hold, so c = s/(2d).
TorusEnvironment sample_environment(const LawSpec& spec);

/// (1/(2n)^d) sum_x c(E, x)^-p. Throws DegenerateSite if some c is 0.
double empirical_c_moment(const TorusEnvironment& env, const EnvironmentTransform& t, double p);

}  // namespace rwre
