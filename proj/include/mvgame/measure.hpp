#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mvgame {

// A finitely supported probability measure on R^n, stored as a weighted
// point cloud. Points are kept atom-major in one flat buffer.
class EmpiricalMeasure {
 public:
  // Throws InvalidInput unless weights are nonnegative, sum to 1 within 1e-12
  // and there is one weight per point.
  EmpiricalMeasure(std::size_t dim, std::vector<double> points,
                   std::vector<double> weights);

  static EmpiricalMeasure uniform(std::size_t dim, std::vector<double> points);
  static EmpiricalMeasure dirac(std::vector<double> point);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return weights_.size(); }
  std::span<const double> point(std::size_t i) const {
    return {points_.data() + i * dim_, dim_};
  }
  double weight(std::size_t i) const { return weights_[i]; }
  const std::vector<double>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }

  std::vector<double> mean() const;
  bool has_uniform_weights(double tol = 1e-12) const;

  // Copy with atom i moved to `x`; used by finite differences on the
  // empirical projection.
  EmpiricalMeasure with_point(std::size_t i, std::span<const double> x) const;
  // Copy with atoms reordered: new atom j is old atom perm[j].
  EmpiricalMeasure permuted(std::span<const std::size_t> perm) const;

 private:
  std::size_t dim_;
  std::vector<double> points_;
  std::vector<double> weights_;
};

// Law of the action pair on a finite A x B grid, row-major in (a, b).
class JointActionLaw {
 public:
  JointActionLaw(std::size_t num_a, std::size_t num_b, std::vector<double> probs);

  static JointActionLaw dirac(std::size_t num_a, std::size_t num_b, std::size_t a,
                              std::size_t b);

  std::size_t num_a() const { return num_a_; }
  std::size_t num_b() const { return num_b_; }
  double prob(std::size_t a, std::size_t b) const { return probs_[a * num_b_ + b]; }
  const std::vector<double>& probs() const { return probs_; }
  std::vector<double> marginal_a() const;
  std::vector<double> marginal_b() const;

 private:
  std::size_t num_a_;
  std::size_t num_b_;
  std::vector<double> probs_;
};

// Wasserstein distance of order q >= 1. Dimension one uses the monotone
// rearrangement; higher dimensions solve the transport LP exactly.
double wasserstein_q(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double q);

// The two solution routes, exposed so they can be checked against each other.
double wasserstein_q_lp(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double q);
double wasserstein_q_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double q);

// (sum_i w_i |x_i|^q)^(1/q).
double moment_norm_q(const EmpiricalMeasure& mu, double q);

// Empirical law of (a_i, b_i) under the atom weights.
JointActionLaw joint_control_law(std::span<const int> a_assignment,
                                 std::span<const int> b_assignment,
                                 std::span<const double> atom_weights,
                                 std::size_t num_a, std::size_t num_b);

}  // namespace mvgame
