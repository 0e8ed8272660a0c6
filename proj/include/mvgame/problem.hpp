#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mvgame/measure.hpp"

namespace mvgame {

enum class Family { kLinearMf, kLqMf, kBilinearGame, kCustomTable };

const char* family_name(Family f);
Family family_from_name(const std::string& name);
// Parameter names accepted by a family, in storage order.
const std::vector<std::string>& family_parameter_names(Family f);

struct Action {
  std::string label;
  double value = 0.0;
};

// The only statistic of the state law that the built-in coefficient
// families read. Computing it once per time step keeps coefficient
// evaluation O(1) per atom.
struct LawMoments {
  std::vector<double> mean;

  static LawMoments of(const EmpiricalMeasure& mu) { return {mu.mean()}; }
};

// Tabulated one-dimensional coefficients for adversarial problems. Values
// are piecewise linear in x between grid nodes and constant outside.
struct CustomTable {
  std::vector<double> grid;
  // Indexed [(a * |B| + b) * grid.size() + g].
  std::vector<double> drift;
  std::vector<double> diffusion;
  std::vector<double> running;
  // Indexed [g].
  std::vector<double> terminal;
};

// Coefficients (gamma, sigma, f, g) of the controlled mean-field state
// equation and payoff, chosen from a registry of parameterised families so
// problems serialise as plain data.
class ProblemSpec {
 public:
  ProblemSpec(Family family, std::size_t state_dim, std::map<std::string, double> params,
              std::vector<Action> actions_a, std::vector<Action> actions_b, double horizon,
              double q = 2.0, CustomTable table = {});

  Family family() const { return family_; }
  std::size_t state_dim() const { return n_; }
  std::size_t noise_dim() const { return d_; }
  double horizon() const { return horizon_; }
  double q() const { return q_; }
  const std::vector<Action>& actions_a() const { return actions_a_; }
  const std::vector<Action>& actions_b() const { return actions_b_; }
  std::size_t num_a() const { return actions_a_.size(); }
  std::size_t num_b() const { return actions_b_.size(); }
  double param(const std::string& name) const;
  const std::map<std::string, double>& params() const { return named_; }
  const CustomTable& table() const { return table_; }

  bool depends_on_state_law() const { return state_law_; }
  bool depends_on_control_law() const { return control_law_; }
  // Lipschitz constant in (x, W_q) of gamma and sigma, also bounding
  // |gamma(0, delta_0)| + |sigma(0, delta_0)|.
  double lipschitz() const { return lipschitz_; }
  // h with |f| + |g| <= h(||mu||_q) (1 + |x|^q).
  double growth_envelope(double moment_norm) const;

  // gamma into out[n].
  void drift(std::span<const double> x, const LawMoments& mu, int a, int b,
             const JointActionLaw& nu, std::span<double> out) const;
  // sigma into out[n * d], row-major.
  void diffusion(std::span<const double> x, const LawMoments& mu, int a, int b,
                 const JointActionLaw& nu, std::span<double> out) const;
  double running(std::span<const double> x, const LawMoments& mu, int a, int b,
                 const JointActionLaw& nu) const;
  double terminal(std::span<const double> x, const LawMoments& mu) const;

 private:
  double p(std::size_t i) const { return values_[i]; }
  double mean_action_a(const JointActionLaw& nu) const;
  double mean_action_b(const JointActionLaw& nu) const;
  double table_lookup(const std::vector<double>& values, std::size_t offset, double x) const;
  void derive_structure();

  Family family_;
  std::size_t n_;
  std::size_t d_;
  std::map<std::string, double> named_;
  std::vector<double> values_;
  std::vector<Action> actions_a_;
  std::vector<Action> actions_b_;
  double horizon_;
  double q_;
  CustomTable table_;
  bool state_law_ = false;
  bool control_law_ = false;
  double lipschitz_ = 0.0;
  double amax_ = 0.0;
  double bmax_ = 0.0;
};

}  // namespace mvgame
