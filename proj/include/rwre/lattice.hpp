#pragma once

// Lattice points, moves, simplex points, periodic environments and the
// sitewise/shift/permutation actions on them.
//
// Moves are indexed 0 = hold, 1..d = +e_i, d+1..2d = -e_i. That ordering is
// also the inverse-CDF order used by every sampler in the project.

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rwre/error.hpp"

namespace rwre {

inline constexpr int kMaxDim = 4;
inline constexpr int kMaxMoves = 2 * kMaxDim + 1;

using RealVector = std::vector<double>;

/// Integer point of Z^d, d <= kMaxDim. Fixed storage so walks never allocate.
class Point {
 public:
  Point() = default;
  explicit Point(int dim);
  Point(std::initializer_list<long long> coords);

  int dim() const noexcept { return dim_; }
  long long operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }
  long long& operator[](int i) { return c_[static_cast<std::size_t>(i)]; }

  long long l1() const noexcept;

  Point operator+(const Point& o) const;
  Point operator-(const Point& o) const;
  Point operator-() const;
  Point& operator+=(const Point& o);
  bool operator==(const Point& o) const;

  std::string str() const;

 private:
  int dim_ = 0;
  std::array<long long, kMaxDim> c_{};
};

inline int num_moves(int d) { return 2 * d + 1; }

/// Index of -v for move index k (hold is fixed).
inline int opposite_move(int d, int k) {
  if (k == 0) return 0;
  return k <= d ? k + d : k - d;
}

/// Displacement of move k in Z^d.
Point move_vector(int d, int k);

/// Move index of a unit displacement (or hold); -1 if v is not in V_d.
int move_index(const Point& v);

/// Probability vector over the 2d+1 moves.
class SimplexPoint {
 public:
  static constexpr double kTolerance = 1e-12;

  SimplexPoint() = default;

  /// Validating constructor: rejects negative weights and sums off by more
  /// than kTolerance. Never renormalizes.
  static SimplexPoint make(std::span<const double> weights);
  static SimplexPoint make(std::initializer_list<double> weights);

  /// Skips validation; for outputs of closed operations on valid points.
  static SimplexPoint unchecked(int dim, std::span<const double> weights);

  int dim() const noexcept { return dim_; }
  int size() const noexcept { return 2 * dim_ + 1; }
  double operator[](int k) const { return p_[static_cast<std::size_t>(k)]; }
  std::span<const double> probs() const { return {p_.data(), static_cast<std::size_t>(size())}; }

  double hold() const { return p_[0]; }
  /// axis is 0-based.
  double plus(int axis) const { return p_[static_cast<std::size_t>(axis + 1)]; }
  double minus(int axis) const { return p_[static_cast<std::size_t>(axis + 1 + dim_)]; }

  bool operator==(const SimplexPoint& o) const;

 private:
  int dim_ = 0;
  std::array<double, kMaxMoves> p_{};
};

/// Sitewise environment function: identity, embedding (opposite moves
/// averaged), reflection (opposite moves swapped), or a left-to-right chain.
class EnvironmentTransform {
 public:
  enum class Kind { Identity, Embedding, Reflection };

  EnvironmentTransform() = default;
  static EnvironmentTransform identity() { return {}; }
  static EnvironmentTransform embedding() { return EnvironmentTransform({Kind::Embedding}); }
  static EnvironmentTransform reflection() { return EnvironmentTransform({Kind::Reflection}); }
  static EnvironmentTransform composition(std::vector<EnvironmentTransform> parts);

  /// "identity", "embedding", "reflection", or a '+'-separated chain.
  static EnvironmentTransform parse(std::string_view text);

  /// this, then next.
  EnvironmentTransform then(const EnvironmentTransform& next) const;

  SimplexPoint apply(const SimplexPoint& p) const;

  bool is_identity() const noexcept { return steps_.empty(); }
  const std::vector<Kind>& steps() const noexcept { return steps_; }
  std::string name() const;

 private:
  explicit EnvironmentTransform(std::vector<Kind> steps);
  std::vector<Kind> steps_;
};

/// Signed coordinate permutation of Z^d: e_i -> sign[i] * e_{axis[i]}.
/// Maps V_d onto itself and fixes hold.
class DirectionPermutation {
 public:
  DirectionPermutation() = default;
  static DirectionPermutation identity(int d);
  static DirectionPermutation swap(int d, int i, int j);
  static DirectionPermutation make(std::span<const int> axis, std::span<const int> sign);

  /// All 2^d * d! signed permutations.
  static std::vector<DirectionPermutation> all(int d);

  int dim() const noexcept { return dim_; }
  Point apply(const Point& x) const;
  int map_move(int k) const;
  DirectionPermutation inverse() const;
  /// (this ∘ inner)(x) = this(inner(x)).
  DirectionPermutation compose(const DirectionPermutation& inner) const;
  bool is_identity() const;
  std::string str() const;

 private:
  int dim_ = 0;
  std::array<int, kMaxDim> axis_{};
  std::array<int, kMaxDim> sign_{};
};

/// Environment on T_n = {-n+1..n}^d, extended periodically to Z^d.
/// Probabilities are shared between copies; the object is immutable.
class TorusEnvironment {
 public:
  TorusEnvironment() = default;
  /// probs is row-major, (2d+1) entries per site; each site is validated.
  TorusEnvironment(int d, int n, std::vector<double> probs);

  static TorusEnvironment constant(int n, const SimplexPoint& p);
  static TorusEnvironment from_sites(int d, int n, std::span<const SimplexPoint> sites);

  int dim() const noexcept { return d_; }
  int half_period() const noexcept { return n_; }
  long long period() const noexcept { return 2LL * n_; }
  std::size_t size() const noexcept { return count_; }
  int moves() const noexcept { return 2 * d_ + 1; }

  /// Representative of [x] in T_n.
  Point reduce(const Point& x) const;
  /// Row-major index over (x_1+n-1, ..., x_d+n-1) of [x].
  std::size_t index_of(const Point& x) const;
  /// Representative in T_n of the linear index.
  Point point_of(std::size_t index) const;

  SimplexPoint site(std::size_t index) const;
  SimplexPoint at(const Point& x) const { return site(index_of(x)); }
  std::span<const double> site_probs(std::size_t index) const;
  std::span<const double> raw() const { return *probs_; }

  /// Index of the torus neighbour of site `index` under move k.
  std::size_t neighbour(std::size_t index, int k) const;

 private:
  int d_ = 0;
  int n_ = 0;
  std::size_t count_ = 0;
  std::shared_ptr<const std::vector<double>> probs_;
};

/// Lazy view y -> E(base(A y + b)) with A a signed permutation. Closed under
/// shifts, permutation actions and sitewise transforms; never copies sites.
class EnvironmentView {
 public:
  EnvironmentView() = default;
  explicit EnvironmentView(TorusEnvironment base,
                           EnvironmentTransform transform = EnvironmentTransform::identity());

  int dim() const noexcept { return base_.dim(); }
  int half_period() const noexcept { return base_.half_period(); }
  const TorusEnvironment& base() const noexcept { return base_; }
  const EnvironmentTransform& transform() const noexcept { return transform_; }

  SimplexPoint at(const Point& y) const;

  /// view'(y) = view(x + y)
  EnvironmentView shifted(const Point& x) const;
  /// view'(y) = view(T y)
  EnvironmentView permuted(const DirectionPermutation& T) const;
  /// view'(y) = t(view(y))
  EnvironmentView transformed(const EnvironmentTransform& t) const;

  /// Evaluates the view at every torus site into a fresh environment.
  TorusEnvironment materialize() const;

 private:
  TorusEnvironment base_;
  DirectionPermutation map_;
  Point offset_;
  EnvironmentTransform transform_;
};

EnvironmentView shift_view(const TorusEnvironment& env, const Point& x);
EnvironmentView permutation_action(const DirectionPermutation& T, const TorusEnvironment& env);

/// Sitewise E applied to every site.
TorusEnvironment apply_transform(const EnvironmentTransform& t, const TorusEnvironment& env);
inline SimplexPoint apply_transform(const EnvironmentTransform& t, const SimplexPoint& p) {
  return t.apply(p);
}

bool is_balanced(const SimplexPoint& p, double tol = SimplexPoint::kTolerance);
bool is_balanced(const TorusEnvironment& env, const EnvironmentTransform& t);

/// Geometric mean of the 2d non-hold probabilities; 0 for degenerate sites.
double ellipticity_constant(const SimplexPoint& p);
double ellipticity_constant(const TorusEnvironment& env, const EnvironmentTransform& t,
                            const Point& x);

/// Mean one-step displacement; component i is p(+e_i) - p(-e_i).
RealVector drift(const SimplexPoint& p);
RealVector drift(const TorusEnvironment& env, const EnvironmentTransform& t, const Point& x);

/// l_p norm with respect to normalized counting measure; p may be +inf.
double lp_norm(std::span<const double> values, double p);

}  // namespace rwre
