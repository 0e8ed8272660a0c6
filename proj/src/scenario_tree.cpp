#include "mvgame/scenario_tree.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "mvgame/errors.hpp"

namespace mvgame {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double unit_open(std::uint64_t bits) {
  // 53 random bits mapped into (0, 1).
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

const char* noise_mode_name(NoiseMode mode) {
  return mode == NoiseMode::kExactRademacher ? "exact_rademacher" : "monte_carlo";
}

double counter_normal(std::uint64_t seed, std::uint64_t step, std::uint64_t path,
                      std::uint64_t channel, std::uint64_t dim) {
  std::uint64_t key = splitmix64(seed);
  key = splitmix64(key ^ step);
  key = splitmix64(key ^ path);
  key = splitmix64(key ^ channel);
  key = splitmix64(key ^ dim);
  const double u1 = unit_open(key);
  const double u2 = unit_open(splitmix64(key));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

ScenarioTree::ScenarioTree(const TreeOptions& options) : opt_(options) {
  if (opt_.steps < 1) throw InvalidInput("scenario tree: need at least one step");
  if (!(opt_.horizon > opt_.start_time)) {
    throw InvalidInput("scenario tree: start time must precede the horizon");
  }
  if (opt_.channels < 1 || opt_.noise_dim < 1) {
    throw InvalidInput("scenario tree: channels and noise dimension must be positive");
  }
  dt_ = (opt_.horizon - opt_.start_time) / opt_.steps;
  sqrt_dt_ = std::sqrt(dt_);
  if (opt_.mode == NoiseMode::kExactRademacher) {
    const long long bits_per_step = static_cast<long long>(opt_.channels) * opt_.noise_dim;
    const long long total_bits = bits_per_step * opt_.steps;
    const double cap_bits = std::log2(static_cast<double>(opt_.leaf_cap));
    if (bits_per_step >= 63 || static_cast<double>(total_bits) > cap_bits + 1e-12) {
      throw CapacityError("scenario tree: exact mode needs 2^" + std::to_string(total_bits) +
                          " leaves, above the cap of " + std::to_string(opt_.leaf_cap));
    }
    patterns_ = std::uint64_t{1} << bits_per_step;
  } else {
    if (opt_.paths < 1) throw InvalidInput("scenario tree: Monte Carlo mode needs paths >= 1");
    const std::size_t per_path = static_cast<std::size_t>(opt_.channels) * opt_.noise_dim;
    mc_increments_.resize(static_cast<std::size_t>(opt_.steps) * opt_.paths * per_path);
    for (int k = 0; k < opt_.steps; ++k) {
      for (int path = 0; path < opt_.paths; ++path) {
        for (int c = 0; c < opt_.channels; ++c) {
          for (int j = 0; j < opt_.noise_dim; ++j) {
            const std::size_t idx =
                ((static_cast<std::size_t>(k) * opt_.paths + path) * opt_.channels + c) *
                    opt_.noise_dim + j;
            mc_increments_[idx] = sqrt_dt_ * counter_normal(opt_.seed, k, path, c, j);
          }
        }
      }
    }
  }
}

double ScenarioTree::time(int level) const {
  if (level < 0 || level > opt_.steps) throw InvalidInput("scenario tree: level out of range");
  if (level == opt_.steps) return opt_.horizon;
  return opt_.start_time + level * dt_;
}

int ScenarioTree::level_of(double t) const {
  const double tol = 1e-12 * std::max(1.0, std::abs(opt_.horizon));
  for (int k = 0; k <= opt_.steps; ++k) {
    if (std::abs(time(k) - t) <= tol) return k;
  }
  std::string grid;
  for (int k = 0; k <= opt_.steps; ++k) {
    grid += (k ? ", " : "") + std::to_string(time(k));
  }
  throw ValidationError("time " + std::to_string(t) + " is not on the grid {" + grid + "}");
}

std::uint64_t ScenarioTree::num_nodes(int level) const {
  if (level < 0 || level > opt_.steps) throw InvalidInput("scenario tree: level out of range");
  if (opt_.mode == NoiseMode::kMonteCarlo) return level == 0 ? 1 : opt_.paths;
  std::uint64_t n = 1;
  for (int k = 0; k < level; ++k) n *= patterns_;
  return n;
}

std::uint64_t ScenarioTree::branching_factor(int level) const {
  if (opt_.mode == NoiseMode::kMonteCarlo) return level == 0 ? opt_.paths : 1;
  return patterns_;
}

NodeRange ScenarioTree::children(int level, std::uint64_t node) const {
  if (level < 0 || level >= opt_.steps) throw InvalidInput("scenario tree: leaf has no children");
  if (opt_.mode == NoiseMode::kMonteCarlo) {
    if (level == 0) return {0, static_cast<std::uint64_t>(opt_.paths)};
    return {node, 1};
  }
  return {node * patterns_, patterns_};
}

double ScenarioTree::child_probability(int child_level, std::uint64_t /*child*/) const {
  if (opt_.mode == NoiseMode::kMonteCarlo) {
    return child_level == 1 ? 1.0 / opt_.paths : 1.0;
  }
  return 1.0 / static_cast<double>(patterns_);
}

double ScenarioTree::node_probability(int level, std::uint64_t /*node*/) const {
  if (opt_.mode == NoiseMode::kMonteCarlo) return level == 0 ? 1.0 : 1.0 / opt_.paths;
  return std::pow(static_cast<double>(patterns_), -level);
}

double ScenarioTree::increment(int child_level, std::uint64_t child, int channel, int dim) const {
  if (opt_.mode == NoiseMode::kMonteCarlo) {
    const std::size_t idx =
        ((static_cast<std::size_t>(child_level - 1) * opt_.paths + child) * opt_.channels +
         channel) * opt_.noise_dim + dim;
    return mc_increments_[idx];
  }
  const std::uint64_t pattern = child % patterns_;
  const int bit = channel * opt_.noise_dim + dim;
  return ((pattern >> bit) & 1U) ? sqrt_dt_ : -sqrt_dt_;
}

std::vector<Branch> ScenarioTree::branching(int level, std::uint64_t node) const {
  const NodeRange r = children(level, node);
  std::vector<Branch> out;
  out.reserve(r.count);
  for (std::uint64_t c = r.first; c < r.first + r.count; ++c) {
    Branch b;
    b.probability = child_probability(level + 1, c);
    for (int ch = 0; ch < opt_.channels; ++ch) {
      for (int j = 0; j < opt_.noise_dim; ++j) b.increments.push_back(increment(level + 1, c, ch, j));
    }
    out.push_back(std::move(b));
  }
  return out;
}

ScenarioTree build_scenario_tree(int steps, double start_time, double horizon, NoiseMode mode,
                                 int channels, int noise_dim, std::uint64_t seed, int paths,
                                 std::uint64_t leaf_cap) {
  TreeOptions o;
  o.steps = steps;
  o.start_time = start_time;
  o.horizon = horizon;
  o.mode = mode;
  o.channels = channels;
  o.noise_dim = noise_dim;
  o.seed = seed;
  o.paths = paths;
  o.leaf_cap = leaf_cap;
  return ScenarioTree(o);
}

}  // namespace mvgame
