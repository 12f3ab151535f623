#include "rwre/walk.hpp"

#include <ostream>

namespace rwre {

WalkTable::WalkTable(const EnvironmentView& view)
    : d_(view.dim()), m_(2 * view.dim() + 1), geometry_(view.base()) {
  const std::size_t count = geometry_.size();
  const auto m = static_cast<std::size_t>(m_);
  cdf_.resize(count * m);
  next_.resize(count * m);
  last_positive_.resize(count);
  for (int k = 0; k < m_; ++k) moves_.push_back(move_vector(d_, k));
  for (std::size_t s = 0; s < count; ++s) {
    const Point x = geometry_.point_of(s);
    const SimplexPoint p = view.at(x);
    double acc = 0.0;
    int last = 0;
    for (int k = 0; k < m_; ++k) {
      acc += p[k];
      cdf_[s * m + static_cast<std::size_t>(k)] = acc;
      if (p[k] > 0.0) last = k;
      next_[s * m + static_cast<std::size_t>(k)] = geometry_.index_of(x + moves_[static_cast<std::size_t>(k)]);
    }
    last_positive_[s] = last;
  }
}

int WalkTable::sample_move(std::size_t site, double u) const {
  const double* row = cdf_.data() + site * static_cast<std::size_t>(m_);
  for (int k = 0; k < m_; ++k) {
    if (u < row[k]) return k;
  }
  // u landed in the rounding gap above the final partial sum.
  return last_positive_[site];
}

double WalkTable::prob(std::size_t site, int k) const {
  const double* row = cdf_.data() + site * static_cast<std::size_t>(m_);
  return k == 0 ? row[0] : row[k] - row[k - 1];
}

Walker::Walker(const WalkTable& table, const Point& start, CounterRng rng)
    : table_(&table), pos_(start), site_(table.geometry().index_of(start)), rng_(rng) {}

int Walker::step() {
  const int k = table_->sample_move(site_, rng_.uniform());
  pos_ += table_->move(k);
  site_ = table_->next(site_, k);
  return k;
}

std::uint64_t path_seed(std::uint64_t master, std::uint64_t index) {
  return CounterRng::stream(master, StreamTag::Trial, index).key();
}

Trajectory simulate(const EnvironmentView& env, const Point& start, std::size_t steps, std::uint64_t seed) {
  const WalkTable table(env);
  Walker walker(table, start, CounterRng::stream(seed, StreamTag::Walk));
  Trajectory traj;
  traj.start = start;
  traj.positions.reserve(steps + 1);
  traj.positions.push_back(start);
  for (std::size_t i = 0; i < steps; ++i) {
    walker.step();
    traj.positions.push_back(walker.position());
  }
  return traj;
}

Trajectory simulate(const TorusEnvironment& env, const EnvironmentTransform& t, const Point& start,
                    std::size_t steps, std::uint64_t seed) {
  return simulate(EnvironmentView(env, t), start, steps, seed);
}

namespace {

template <class NextGamma>
Trajectory run_coupled(const TorusEnvironment& env, const Point& start, std::size_t steps,
                       std::uint64_t seed_walk, NextGamma next_gamma) {
  const WalkTable original{EnvironmentView(env)};
  const WalkTable reflected{EnvironmentView(env, EnvironmentTransform::reflection())};
  auto rng = CounterRng::stream(seed_walk, StreamTag::Walk);
  Trajectory traj;
  traj.start = start;
  traj.positions.reserve(steps + 1);
  traj.gammas.reserve(steps);
  traj.positions.push_back(start);
  Point pos = start;
  std::size_t site = env.index_of(start);
  for (std::size_t i = 0; i < steps; ++i) {
    const std::uint8_t gamma = next_gamma(i);
    const WalkTable& table = gamma ? original : reflected;
    const int k = table.sample_move(site, rng.uniform());
    pos += table.move(k);
    site = table.next(site, k);
    traj.gammas.push_back(gamma);
    traj.positions.push_back(pos);
  }
  return traj;
}

}  // namespace

Trajectory simulate_coupled(const TorusEnvironment& env, const Point& start, std::size_t steps,
                            std::uint64_t seed_walk, std::uint64_t seed_gamma) {
  auto gamma_rng = CounterRng::stream(seed_gamma, StreamTag::Gamma);
  return run_coupled(env, start, steps, seed_walk,
                     [&](std::size_t) -> std::uint8_t { return gamma_rng.bernoulli_half() ? 1 : 0; });
}

Trajectory simulate_coupled(const TorusEnvironment& env, const Point& start, std::size_t steps,
                            std::uint64_t seed_walk, std::span<const std::uint8_t> gammas) {
  if (gammas.size() < steps) throw Error(ErrorCode::InvalidSpec, "gamma sequence shorter than steps");
  return run_coupled(env, start, steps, seed_walk,
                     [&](std::size_t i) -> std::uint8_t { return gammas[i] ? 1 : 0; });
}

std::optional<std::size_t> hitting_time(const Trajectory& traj, long long radius) {
  if (radius < 1) throw Error(ErrorCode::InvalidSpec, "radius must be >= 1");
  for (std::size_t m = 0; m < traj.positions.size(); ++m) {
    if (traj.positions[m].l1() >= radius) return m;
  }
  return std::nullopt;
}

std::vector<RealVector> martingale_component(const Trajectory& traj, const EnvironmentView& env) {
  std::vector<RealVector> out;
  if (traj.positions.empty()) return out;
  const int d = traj.start.dim();
  out.reserve(traj.positions.size());
  RealVector compensator(static_cast<std::size_t>(d), 0.0);
  for (std::size_t k = 0; k < traj.positions.size(); ++k) {
    RealVector u(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      u[i] = static_cast<double>(traj.positions[k][i] - traj.start[i]) - compensator[i];
    }
    out.push_back(std::move(u));
    const auto v = drift(env.at(traj.positions[k]));
    for (int i = 0; i < d; ++i) compensator[i] += v[i];
  }
  return out;
}

std::vector<RealVector> martingale_component(const Trajectory& traj, const TorusEnvironment& env,
                                             const EnvironmentTransform& t) {
  return martingale_component(traj, EnvironmentView(env, t));
}

LocalProcessPath local_process(const Trajectory& traj, const TorusEnvironment& env) {
  LocalProcessPath path;
  path.points.reserve(traj.positions.size());
  for (const auto& x : traj.positions) path.points.push_back(env.at(x));
  return path;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, std::size_t stride) {
  const int d = traj.start.dim();
  out << "step";
  for (int i = 1; i <= d; ++i) out << ",x_" << i;
  out << ",gamma\n";
  if (stride == 0) stride = 1;
  for (std::size_t k = 0; k < traj.positions.size(); k += stride) {
    out << k;
    for (int i = 0; i < d; ++i) out << ',' << traj.positions[k][i];
    out << ',';
    // gamma_k is the bit used for the step k-1 -> k.
    if (!traj.gammas.empty() && k > 0) out << static_cast<int>(traj.gammas[k - 1]);
    out << '\n';
  }
}

}  // namespace rwre
