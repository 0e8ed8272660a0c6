#include "mvgame/random_vector.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "mvgame/errors.hpp"
#include "mvgame/summation.hpp"

namespace mvgame {

EmpiricalMeasure RandomVector::law() const { return EmpiricalMeasure(dim, positions, weights); }

LawMoments RandomVector::moments() const {
  LawMoments m;
  m.mean.assign(dim, 0.0);
  thread_local std::vector<double> terms;
  terms.resize(size());
  for (std::size_t j = 0; j < dim; ++j) {
    for (std::size_t i = 0; i < size(); ++i) terms[i] = weights[i] * positions[i * dim + j];
    m.mean[j] = order_free_sum(terms);
  }
  return m;
}

void RandomVector::validate() const {
  const std::size_t n = weights.size();
  if (n == 0) throw InvalidInput("RandomVector: no atoms");
  if (dim == 0 || positions.size() != n * dim || nodes.size() != n || channels.size() != n) {
    throw InvalidInput("RandomVector: inconsistent buffer sizes");
  }
  // EmpiricalMeasure performs the weight and finiteness checks.
  (void)law();
}

RandomVector RandomVector::permuted(std::span<const std::size_t> perm) const {
  if (perm.size() != size()) throw InvalidInput("RandomVector::permuted: size mismatch");
  RandomVector out;
  out.level = level;
  out.dim = dim;
  out.positions.resize(positions.size());
  out.weights.resize(size());
  out.nodes.resize(size());
  out.channels.resize(size());
  for (std::size_t j = 0; j < perm.size(); ++j) {
    const std::size_t i = perm[j];
    if (i >= size()) throw InvalidInput("RandomVector::permuted: index out of range");
    for (std::size_t k = 0; k < dim; ++k) out.positions[j * dim + k] = positions[i * dim + k];
    out.weights[j] = weights[i];
    out.nodes[j] = nodes[i];
    out.channels[j] = channels[i];
  }
  return out;
}

double RandomVector::absolute_moment(double q) const {
  std::vector<double> terms(size());
  for (std::size_t i = 0; i < size(); ++i) {
    double r2 = 0.0;
    for (double x : point(i)) r2 += x * x;
    terms[i] = weights[i] * std::pow(std::sqrt(r2), q);
  }
  return order_free_sum(terms);
}

RandomVector RandomVector::at_root(const EmpiricalMeasure& mu, std::vector<int> channels,
                                   int randomization_atoms) {
  if (randomization_atoms < 1) throw InvalidInput("RandomVector: randomization atoms must be >= 1");
  if (channels.empty()) {
    channels.resize(mu.size());
    std::iota(channels.begin(), channels.end(), 0);
  }
  if (channels.size() != mu.size()) {
    throw InvalidInput("RandomVector: " + std::to_string(channels.size()) + " channels for " +
                       std::to_string(mu.size()) + " atoms");
  }
  const auto r = static_cast<std::size_t>(randomization_atoms);
  RandomVector out;
  out.level = 0;
  out.dim = mu.dim();
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (channels[i] < 0) throw InvalidInput("RandomVector: negative channel index");
    for (std::size_t s = 0; s < r; ++s) {
      auto p = mu.point(i);
      out.positions.insert(out.positions.end(), p.begin(), p.end());
      out.weights.push_back(mu.weight(i) / static_cast<double>(r));
      out.nodes.push_back(0);
      out.channels.push_back(channels[i]);
    }
  }
  return out;
}

}  // namespace mvgame
