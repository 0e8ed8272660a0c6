#pragma once

#include <span>
#include <vector>

#include "mvgame/controls.hpp"
#include "mvgame/measure.hpp"
#include "mvgame/problem.hpp"
#include "mvgame/random_vector.hpp"
#include "mvgame/scenario_tree.hpp"

namespace mvgame {

// Coefficients seen by each atom during one Euler step.
struct StepRecord {
  std::vector<double> drift;      // [atom * n + i]
  std::vector<double> diffusion;  // [atom * n * d + i * d + j]
  LawMoments moments;
};

// One Euler-Maruyama step from level k to k+1:
//   x' = x + gamma(x, mu_k, a, b, nu_k) dt + sigma(x, mu_k, a, b, nu_k) dW,
// with mu_k the law of all atoms of `x` and nu_k the joint law of the step's
// assignments. Each atom is branched over the children of its node, in atom
// order then child order.
RandomVector euler_step(const RandomVector& x, std::span<const int> a_assignment,
                        std::span<const int> b_assignment, const ProblemSpec& spec,
                        const ScenarioTree& tree, StepRecord* record = nullptr);

// Allocation-free core of euler_step for callers that already hold the
// step's law and joint action law. `out` is overwritten.
void euler_step_into(const RandomVector& x, std::span<const int> a_assignment,
                     std::span<const int> b_assignment, const ProblemSpec& spec,
                     const ScenarioTree& tree, const LawMoments& moments,
                     const JointActionLaw& nu, RandomVector& out, StepRecord* record = nullptr);

// sum_i w_i f(x_i, mu, a_i, b_i, nu).
double expected_running(const RandomVector& x, std::span<const int> a_assignment,
                        std::span<const int> b_assignment, const ProblemSpec& spec,
                        const LawMoments& moments, const JointActionLaw& nu);
// sum_i w_i g(x_i, mu).
double expected_terminal(const RandomVector& x, const ProblemSpec& spec);

JointActionLaw step_action_law(const RandomVector& x, std::span<const int> a_assignment,
                               std::span<const int> b_assignment, const ProblemSpec& spec);

struct Trajectory {
  std::vector<RandomVector> states;  // levels start..K
  std::vector<StepRecord> records;   // one per step

  std::vector<EmpiricalMeasure> measure_flow() const;
};

Trajectory simulate_flow(const RandomVector& xi, const OpenLoopControl& alpha,
                         const OpenLoopControl& beta, const ProblemSpec& spec,
                         const ScenarioTree& tree);

}  // namespace mvgame
