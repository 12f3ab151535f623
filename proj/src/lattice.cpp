#include "rwre/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace rwre {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::NotNormalized: return "NotNormalized";
    case ErrorCode::InvalidExponent: return "InvalidExponent";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::DegenerateSite: return "DegenerateSite";
    case ErrorCode::NotIrreducible: return "NotIrreducible";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NotElliptic: return "NotElliptic";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::DensityMismatch: return "DensityMismatch";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::UnknownExperiment: return "UnknownExperiment";
  }
  return "Unknown";
}

// ---------------------------------------------------------------- Point

Point::Point(int dim) : dim_(dim) {
  if (dim < 1 || dim > kMaxDim) {
    throw Error(ErrorCode::InvalidSpec, "dimension must be in 1.." + std::to_string(kMaxDim));
  }
}

Point::Point(std::initializer_list<long long> coords) : Point(static_cast<int>(coords.size())) {
  std::copy(coords.begin(), coords.end(), c_.begin());
}

long long Point::l1() const noexcept {
  long long s = 0;
  for (int i = 0; i < dim_; ++i) s += c_[i] < 0 ? -c_[i] : c_[i];
  return s;
}

Point Point::operator+(const Point& o) const {
  Point r = *this;
  r += o;
  return r;
}

Point Point::operator-(const Point& o) const { return *this + (-o); }

Point Point::operator-() const {
  Point r = *this;
  for (int i = 0; i < dim_; ++i) r.c_[i] = -r.c_[i];
  return r;
}

Point& Point::operator+=(const Point& o) {
  for (int i = 0; i < dim_; ++i) c_[i] += o.c_[i];
  return *this;
}

bool Point::operator==(const Point& o) const {
  if (dim_ != o.dim_) return false;
  for (int i = 0; i < dim_; ++i) {
    if (c_[i] != o.c_[i]) return false;
  }
  return true;
}

std::string Point::str() const {
  std::ostringstream os;
  os << '(';
  for (int i = 0; i < dim_; ++i) os << (i ? "," : "") << c_[i];
  os << ')';
  return os.str();
}

Point move_vector(int d, int k) {
  Point v(d);
  if (k >= 1 && k <= d) v[k - 1] = 1;
  if (k > d) v[k - d - 1] = -1;
  return v;
}

int move_index(const Point& v) {
  const int d = v.dim();
  int found = 0;
  for (int i = 0; i < d; ++i) {
    if (v[i] == 0) continue;
    if (found != 0 || (v[i] != 1 && v[i] != -1)) return -1;
    found = v[i] == 1 ? i + 1 : i + 1 + d;
  }
  return found;
}

// ---------------------------------------------------------------- SimplexPoint

SimplexPoint SimplexPoint::make(std::span<const double> weights) {
  const auto len = weights.size();
  if (len < 3 || len % 2 == 0 || (len - 1) / 2 > static_cast<std::size_t>(kMaxDim)) {
    throw Error(ErrorCode::InvalidSpec, "simplex point needs 2d+1 weights, got " + std::to_string(len));
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < len; ++k) {
    if (!(weights[k] >= 0.0)) {
      throw Error(ErrorCode::NegativeWeight, "weight " + std::to_string(k) + " is negative");
    }
    sum += weights[k];
  }
  if (std::abs(sum - 1.0) > kTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << "weights sum to " << sum;
    throw Error(ErrorCode::NotNormalized, os.str());
  }
  return unchecked(static_cast<int>((len - 1) / 2), weights);
}

SimplexPoint SimplexPoint::make(std::initializer_list<double> weights) {
  return make(std::span<const double>(weights.begin(), weights.size()));
}

SimplexPoint SimplexPoint::unchecked(int dim, std::span<const double> weights) {
  SimplexPoint p;
  p.dim_ = dim;
  std::copy(weights.begin(), weights.begin() + (2 * dim + 1), p.p_.begin());
  return p;
}

bool SimplexPoint::operator==(const SimplexPoint& o) const {
  if (dim_ != o.dim_) return false;
  return std::equal(p_.begin(), p_.begin() + size(), o.p_.begin());
}

// ---------------------------------------------------------------- transforms

EnvironmentTransform::EnvironmentTransform(std::vector<Kind> steps) : steps_(std::move(steps)) {
  std::erase(steps_, Kind::Identity);
}

EnvironmentTransform EnvironmentTransform::composition(std::vector<EnvironmentTransform> parts) {
  EnvironmentTransform out;
  for (const auto& p : parts) out = out.then(p);
  return out;
}

EnvironmentTransform EnvironmentTransform::parse(std::string_view text) {
  std::vector<Kind> steps;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('+', start);
    if (end == std::string_view::npos) end = text.size();
    auto token = text.substr(start, end - start);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    if (token == "identity") {
      steps.push_back(Kind::Identity);
    } else if (token == "embedding") {
      steps.push_back(Kind::Embedding);
    } else if (token == "reflection") {
      steps.push_back(Kind::Reflection);
    } else {
      throw Error(ErrorCode::InvalidSpec, "unknown transform '" + std::string(token) + "'");
    }
    start = end + 1;
  }
  return EnvironmentTransform(std::move(steps));
}

EnvironmentTransform EnvironmentTransform::then(const EnvironmentTransform& next) const {
  auto steps = steps_;
  steps.insert(steps.end(), next.steps_.begin(), next.steps_.end());
  return EnvironmentTransform(std::move(steps));
}

SimplexPoint EnvironmentTransform::apply(const SimplexPoint& p) const {
  const int d = p.dim();
  std::array<double, kMaxMoves> cur{};
  std::copy(p.probs().begin(), p.probs().end(), cur.begin());
  for (Kind k : steps_) {
    for (int i = 1; i <= d; ++i) {
      double& a = cur[static_cast<std::size_t>(i)];
      double& b = cur[static_cast<std::size_t>(i + d)];
      if (k == Kind::Embedding) {
        const double m = (a + b) / 2.0;
        a = m;
        b = m;
      } else if (k == Kind::Reflection) {
        std::swap(a, b);
      }
    }
  }
  return SimplexPoint::unchecked(d, cur);
}

std::string EnvironmentTransform::name() const {
  if (steps_.empty()) return "identity";
  std::string out;
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    if (i) out += '+';
    out += steps_[i] == Kind::Embedding ? "embedding" : "reflection";
  }
  return out;
}

// ---------------------------------------------------------------- permutations

DirectionPermutation DirectionPermutation::identity(int d) {
  std::array<int, kMaxDim> axis{};
  std::array<int, kMaxDim> sign{};
  for (int i = 0; i < d; ++i) {
    axis[i] = i;
    sign[i] = 1;
  }
  return make(std::span<const int>(axis.data(), d), std::span<const int>(sign.data(), d));
}

DirectionPermutation DirectionPermutation::swap(int d, int i, int j) {
  auto t = identity(d);
  std::swap(t.axis_[i], t.axis_[j]);
  return t;
}

DirectionPermutation DirectionPermutation::make(std::span<const int> axis, std::span<const int> sign) {
  const int d = static_cast<int>(axis.size());
  if (d < 1 || d > kMaxDim || sign.size() != axis.size()) {
    throw Error(ErrorCode::InvalidSpec, "permutation size mismatch");
  }
  std::array<bool, kMaxDim> seen{};
  DirectionPermutation t;
  t.dim_ = d;
  for (int i = 0; i < d; ++i) {
    if (axis[i] < 0 || axis[i] >= d || seen[axis[i]] || (sign[i] != 1 && sign[i] != -1)) {
      throw Error(ErrorCode::InvalidSpec, "not a signed permutation");
    }
    seen[axis[i]] = true;
    t.axis_[i] = axis[i];
    t.sign_[i] = sign[i];
  }
  return t;
}

std::vector<DirectionPermutation> DirectionPermutation::all(int d) {
  std::vector<int> axis(static_cast<std::size_t>(d));
  std::iota(axis.begin(), axis.end(), 0);
  std::vector<DirectionPermutation> out;
  do {
    for (int mask = 0; mask < (1 << d); ++mask) {
      std::vector<int> sign(static_cast<std::size_t>(d));
      for (int i = 0; i < d; ++i) sign[i] = (mask >> i) & 1 ? -1 : 1;
      out.push_back(make(axis, sign));
    }
  } while (std::next_permutation(axis.begin(), axis.end()));
  return out;
}

Point DirectionPermutation::apply(const Point& x) const {
  Point y(dim_);
  for (int i = 0; i < dim_; ++i) y[axis_[i]] = sign_[i] * x[i];
  return y;
}

int DirectionPermutation::map_move(int k) const {
  if (k == 0) return 0;
  return move_index(apply(move_vector(dim_, k)));
}

DirectionPermutation DirectionPermutation::inverse() const {
  DirectionPermutation t;
  t.dim_ = dim_;
  for (int i = 0; i < dim_; ++i) {
    t.axis_[axis_[i]] = i;
    t.sign_[axis_[i]] = sign_[i];
  }
  return t;
}

DirectionPermutation DirectionPermutation::compose(const DirectionPermutation& inner) const {
  DirectionPermutation t;
  t.dim_ = dim_;
  for (int i = 0; i < dim_; ++i) {
    t.axis_[i] = axis_[inner.axis_[i]];
    t.sign_[i] = sign_[inner.axis_[i]] * inner.sign_[i];
  }
  return t;
}

bool DirectionPermutation::is_identity() const {
  for (int i = 0; i < dim_; ++i) {
    if (axis_[i] != i || sign_[i] != 1) return false;
  }
  return true;
}

std::string DirectionPermutation::str() const {
  std::ostringstream os;
  os << '[';
  for (int i = 0; i < dim_; ++i) {
    os << (i ? " " : "") << "e" << (i + 1) << "->" << (sign_[i] < 0 ? "-" : "+") << "e" << (axis_[i] + 1);
  }
  os << ']';
  return os.str();
}

// ---------------------------------------------------------------- torus

TorusEnvironment::TorusEnvironment(int d, int n, std::vector<double> probs) : d_(d), n_(n) {
  if (d < 1 || d > kMaxDim) throw Error(ErrorCode::InvalidSpec, "d out of range");
  if (n < 1) throw Error(ErrorCode::InvalidSpec, "n must be >= 1");
  count_ = 1;
  for (int i = 0; i < d; ++i) count_ *= static_cast<std::size_t>(2 * n);
  const auto m = static_cast<std::size_t>(2 * d + 1);
  if (probs.size() != count_ * m) {
    throw Error(ErrorCode::InvalidSpec, "expected " + std::to_string(count_ * m) + " probabilities, got " +
                                            std::to_string(probs.size()));
  }
  for (std::size_t s = 0; s < count_; ++s) {
    SimplexPoint::make(std::span<const double>(probs.data() + s * m, m));
  }
  probs_ = std::make_shared<const std::vector<double>>(std::move(probs));
}

TorusEnvironment TorusEnvironment::constant(int n, const SimplexPoint& p) {
  const int d = p.dim();
  std::size_t count = 1;
  for (int i = 0; i < d; ++i) count *= static_cast<std::size_t>(2 * n);
  std::vector<double> probs;
  probs.reserve(count * static_cast<std::size_t>(p.size()));
  for (std::size_t s = 0; s < count; ++s) probs.insert(probs.end(), p.probs().begin(), p.probs().end());
  return TorusEnvironment(d, n, std::move(probs));
}

TorusEnvironment TorusEnvironment::from_sites(int d, int n, std::span<const SimplexPoint> sites) {
  std::vector<double> probs;
  probs.reserve(sites.size() * static_cast<std::size_t>(2 * d + 1));
  for (const auto& p : sites) {
    if (p.dim() != d) throw Error(ErrorCode::InvalidSpec, "site dimension mismatch");
    probs.insert(probs.end(), p.probs().begin(), p.probs().end());
  }
  return TorusEnvironment(d, n, std::move(probs));
}

Point TorusEnvironment::reduce(const Point& x) const {
  const long long period = 2LL * n_;
  Point r(d_);
  for (int i = 0; i < d_; ++i) {
    long long m = (x[i] + n_ - 1) % period;
    if (m < 0) m += period;
    r[i] = m - n_ + 1;
  }
  return r;
}

std::size_t TorusEnvironment::index_of(const Point& x) const {
  const long long period = 2LL * n_;
  std::size_t idx = 0;
  for (int i = 0; i < d_; ++i) {
    long long m = (x[i] + n_ - 1) % period;
    if (m < 0) m += period;
    idx = idx * static_cast<std::size_t>(period) + static_cast<std::size_t>(m);
  }
  return idx;
}

Point TorusEnvironment::point_of(std::size_t index) const {
  const auto period = static_cast<std::size_t>(2 * n_);
  Point x(d_);
  for (int i = d_ - 1; i >= 0; --i) {
    x[i] = static_cast<long long>(index % period) - n_ + 1;
    index /= period;
  }
  return x;
}

SimplexPoint TorusEnvironment::site(std::size_t index) const {
  return SimplexPoint::unchecked(d_, site_probs(index));
}

std::span<const double> TorusEnvironment::site_probs(std::size_t index) const {
  const auto m = static_cast<std::size_t>(2 * d_ + 1);
  return {probs_->data() + index * m, m};
}

std::size_t TorusEnvironment::neighbour(std::size_t index, int k) const {
  return index_of(point_of(index) + move_vector(d_, k));
}

// ---------------------------------------------------------------- views

EnvironmentView::EnvironmentView(TorusEnvironment base, EnvironmentTransform transform)
    : base_(std::move(base)),
      map_(DirectionPermutation::identity(base_.dim())),
      offset_(base_.dim()),
      transform_(std::move(transform)) {}

SimplexPoint EnvironmentView::at(const Point& y) const {
  return transform_.apply(base_.at(map_.apply(y) + offset_));
}

EnvironmentView EnvironmentView::shifted(const Point& x) const {
  EnvironmentView v = *this;
  v.offset_ = base_.reduce(map_.apply(x) + offset_);
  return v;
}

EnvironmentView EnvironmentView::permuted(const DirectionPermutation& T) const {
  EnvironmentView v = *this;
  v.map_ = map_.compose(T);
  return v;
}

EnvironmentView EnvironmentView::transformed(const EnvironmentTransform& t) const {
  EnvironmentView v = *this;
  v.transform_ = transform_.then(t);
  return v;
}

TorusEnvironment EnvironmentView::materialize() const {
  const auto m = static_cast<std::size_t>(base_.moves());
  std::vector<double> probs(base_.size() * m);
  for (std::size_t s = 0; s < base_.size(); ++s) {
    const auto p = at(base_.point_of(s));
    std::copy(p.probs().begin(), p.probs().end(), probs.begin() + static_cast<std::ptrdiff_t>(s * m));
  }
  return TorusEnvironment(base_.dim(), base_.half_period(), std::move(probs));
}

EnvironmentView shift_view(const TorusEnvironment& env, const Point& x) {
  return EnvironmentView(env).shifted(x);
}

EnvironmentView permutation_action(const DirectionPermutation& T, const TorusEnvironment& env) {
  return EnvironmentView(env).permuted(T);
}

TorusEnvironment apply_transform(const EnvironmentTransform& t, const TorusEnvironment& env) {
  if (t.is_identity()) return env;
  return EnvironmentView(env, t).materialize();
}

// ---------------------------------------------------------------- functionals

bool is_balanced(const SimplexPoint& p, double tol) {
  for (int i = 0; i < p.dim(); ++i) {
    if (std::abs(p.plus(i) - p.minus(i)) > tol) return false;
  }
  return true;
}

bool is_balanced(const TorusEnvironment& env, const EnvironmentTransform& t) {
  for (std::size_t s = 0; s < env.size(); ++s) {
    if (!is_balanced(t.apply(env.site(s)))) return false;
  }
  return true;
}

double ellipticity_constant(const SimplexPoint& p) {
  // Sum of logs keeps tiny probabilities from underflowing the product.
  double log_sum = 0.0;
  for (int k = 1; k < p.size(); ++k) {
    if (p[k] <= 0.0) return 0.0;
    log_sum += std::log(p[k]);
  }
  return std::exp(log_sum / (2.0 * p.dim()));
}

double ellipticity_constant(const TorusEnvironment& env, const EnvironmentTransform& t, const Point& x) {
  return ellipticity_constant(t.apply(env.at(x)));
}

RealVector drift(const SimplexPoint& p) {
  RealVector v(static_cast<std::size_t>(p.dim()));
  for (int i = 0; i < p.dim(); ++i) v[i] = p.plus(i) - p.minus(i);
  return v;
}

RealVector drift(const TorusEnvironment& env, const EnvironmentTransform& t, const Point& x) {
  return drift(t.apply(env.at(x)));
}

double lp_norm(std::span<const double> values, double p) {
  if (!(p >= 1.0)) throw Error(ErrorCode::InvalidExponent, "p must be >= 1");
  if (values.empty()) return 0.0;
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
  // Scale by the max to keep large p from overflowing.
  double scale = 0.0;
  for (double v : values) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0.0;
  double acc = 0.0;
  for (double v : values) acc += std::pow(std::abs(v) / scale, p);
  return scale * std::pow(acc / static_cast<double>(values.size()), 1.0 / p);
}

}  // namespace rwre
