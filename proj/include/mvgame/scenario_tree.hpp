#pragma once

#include <cstdint>
#include <vector>

namespace mvgame {

enum class NoiseMode { kExactRademacher, kMonteCarlo };

const char* noise_mode_name(NoiseMode mode);

struct TreeOptions {
  int steps = 1;
  double start_time = 0.0;
  double horizon = 1.0;
  NoiseMode mode = NoiseMode::kExactRademacher;
  // Independent noise channels; each atom of a random vector is attached to one.
  int channels = 1;
  int noise_dim = 1;
  std::uint64_t seed = 0;
  // Sampled paths in Monte Carlo mode.
  int paths = 1000;
  // Exact mode refuses trees with more leaves than this.
  std::uint64_t leaf_cap = std::uint64_t{1} << 20;
};

struct NodeRange {
  std::uint64_t first = 0;
  std::uint64_t count = 0;
};

struct Branch {
  std::vector<double> increments;  // [channel * noise_dim + dim]
  double probability = 0.0;
};

// Discrete noise on a uniform time grid t_0 < ... < t_K. Level k holds the
// noise histories up to t_k; the edge into a level-(k+1) node carries the
// Brownian increment over [t_k, t_{k+1}] for every channel.
//
// Exact mode enumerates every sign pattern of +-sqrt(dt) per channel and
// dimension, so expectations are finite sums with exact mean 0 and variance
// dt. Monte Carlo mode samples `paths` Gaussian paths that split at the root;
// draws are a pure function of (seed, step, path, channel, dim).
class ScenarioTree {
 public:
  explicit ScenarioTree(const TreeOptions& options);

  const TreeOptions& options() const { return opt_; }
  NoiseMode mode() const { return opt_.mode; }
  int steps() const { return opt_.steps; }
  int channels() const { return opt_.channels; }
  int noise_dim() const { return opt_.noise_dim; }
  double dt() const { return dt_; }
  double time(int level) const;
  // Grid level of time t; throws ValidationError when t is off the grid.
  int level_of(double t) const;

  std::uint64_t num_nodes(int level) const;
  // Children are contiguous and their count is the same for every node of a level.
  std::uint64_t branching_factor(int level) const;
  NodeRange children(int level, std::uint64_t node) const;
  double child_probability(int child_level, std::uint64_t child) const;
  double node_probability(int level, std::uint64_t node) const;
  double increment(int child_level, std::uint64_t child, int channel, int dim) const;
  std::vector<Branch> branching(int level, std::uint64_t node) const;

  std::uint64_t num_leaves() const { return num_nodes(opt_.steps); }

 private:
  TreeOptions opt_;
  double dt_;
  double sqrt_dt_;
  std::uint64_t patterns_ = 0;
  std::vector<double> mc_increments_;  // [(step * paths + path) * channels * dim + ...]
};

ScenarioTree build_scenario_tree(int steps, double start_time, double horizon, NoiseMode mode,
                                 int channels, int noise_dim, std::uint64_t seed,
                                 int paths = 1000,
                                 std::uint64_t leaf_cap = std::uint64_t{1} << 20);

// Counter-based standard normal draw keyed by (seed, step, path, channel, dim).
double counter_normal(std::uint64_t seed, std::uint64_t step, std::uint64_t path,
                      std::uint64_t channel, std::uint64_t dim);

}  // namespace mvgame
