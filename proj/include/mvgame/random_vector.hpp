#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mvgame/measure.hpp"
#include "mvgame/problem.hpp"

namespace mvgame {

// A random variable on (noise history) x (initial-randomness atom), stored
// as weighted atoms. Each atom sits on a node of one scenario-tree level and
// reads the increments of one noise channel. Atom weight is node probability
// times the weight of the initial atom it descends from.
struct RandomVector {
  int level = 0;
  std::size_t dim = 1;
  std::vector<double> positions;  // atom-major
  std::vector<double> weights;
  std::vector<std::uint64_t> nodes;
  std::vector<int> channels;

  std::size_t size() const { return weights.size(); }
  std::span<const double> point(std::size_t i) const {
    return {positions.data() + i * dim, dim};
  }

  // Law of the random variable: all atoms with their weights.
  EmpiricalMeasure law() const;
  LawMoments moments() const;
  // Throws InvalidInput on inconsistent sizes or weights not summing to 1.
  void validate() const;
  // New atom j is old atom perm[j].
  RandomVector permuted(std::span<const std::size_t> perm) const;
  // E|X|^q.
  double absolute_moment(double q) const;

  // Initial condition at the tree root. `channels[i]` is the noise channel
  // of atom i (default: atom i uses channel i). Each atom is split into
  // `randomization_atoms` equal sub-atoms that share its position and noise.
  static RandomVector at_root(const EmpiricalMeasure& mu, std::vector<int> channels = {},
                              int randomization_atoms = 1);
};

}  // namespace mvgame
