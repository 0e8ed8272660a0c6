#pragma once

#include <cstdint>
#include <vector>

#include "mvgame/controls.hpp"
#include "mvgame/problem.hpp"
#include "mvgame/random_vector.hpp"
#include "mvgame/scenario_tree.hpp"

namespace mvgame {

enum class ValueSide { kLower, kUpper };

const char* value_side_name(ValueSide side);

// Assignments chosen at one level along the optimal path.
struct StepChoice {
  int level = 0;
  std::vector<int> a;
  std::vector<int> b;
};

struct GameValueReport {
  ValueSide side = ValueSide::kLower;
  double value = 0.0;
  // Optimal assignments per step; ties go to the first enumerated candidate.
  std::vector<StepChoice> principal_path;
  // Sub-game nodes expanded (one per (state, a, b) triple) and terminal
  // expectations evaluated while computing `value`.
  std::uint64_t step_evaluations = 0;
  std::uint64_t terminal_evaluations = 0;
  NoiseMode mode = NoiseMode::kExactRademacher;
};

// Lower and upper values computed together, with the ordering checked.
struct GameValues {
  GameValueReport lower;
  GameValueReport upper;
  double gap() const { return upper.value - lower.value; }
};

// J(t, xi, alpha, beta): left-endpoint sum of dt E[f] plus E[g] at the horizon.
double evaluate_payoff(double t, const RandomVector& xi, const OpenLoopControl& alpha,
                       const OpenLoopControl& beta, const ProblemSpec& spec,
                       const ScenarioTree& tree);

// Number of sub-game nodes the backward recursion from xi expands; throws
// CapacityError above cap.
std::uint64_t recursion_size(const RandomVector& xi, const ProblemSpec& spec,
                             const ScenarioTree& tree,
                             std::uint64_t cap = kDefaultEnumerationCap);

// v(t, xi): backward recursion over the whole cross-leaf configuration,
// sup over player I's step assignment of inf over player II's. Exact mode only.
GameValueReport lower_value(double t, const RandomVector& xi, const ProblemSpec& spec,
                            const ScenarioTree& tree,
                            std::uint64_t cap = kDefaultEnumerationCap,
                            bool with_path = true);
// u(t, xi): the mirror recursion, inf over b of sup over a per step.
GameValueReport upper_value(double t, const RandomVector& xi, const ProblemSpec& spec,
                            const ScenarioTree& tree,
                            std::uint64_t cap = kDefaultEnumerationCap,
                            bool with_path = true);

// Both values; throws ValidationError if v > u + 1e-9.
GameValues game_values(double t, const RandomVector& xi, const ProblemSpec& spec,
                       const ScenarioTree& tree, std::uint64_t cap = kDefaultEnumerationCap);

// Throws ValidationError unless lower <= upper + 1e-9. Every call is counted
// so test suites can report how many instances the ordering was checked on.
void check_value_order(double lower, double upper);
std::uint64_t value_order_checks();

inline constexpr std::uint64_t kDefaultStrategyCap = 1'000'000;

// Literal evaluation of the value over non-anticipative strategies: every
// response map of the strategy player (player II for the lower value) is
// enumerated, and the value is the inf over maps of the sup over the
// opponent's open-loop controls (or the mirror). Only for tiny instances.
double strategy_enumeration_value(double t, const RandomVector& xi, const ProblemSpec& spec,
                                  const ScenarioTree& tree, ValueSide side,
                                  std::uint64_t cap = kDefaultStrategyCap);

struct DppReport {
  double lower_value = 0.0;
  double lower_split = 0.0;  // inf-sup over steps before s plus v(s, X_s)
  double upper_value = 0.0;
  double upper_split = 0.0;
  double lower_residual() const;
  double upper_residual() const;
  double residual() const;
};

// Both sides of the dynamic programming principle at the split time s.
DppReport dpp_check(double t, double s, const RandomVector& xi, const ProblemSpec& spec,
                    const ScenarioTree& tree, std::uint64_t cap = kDefaultEnumerationCap);
double dpp_residual(double t, double s, const RandomVector& xi, const ProblemSpec& spec,
                    const ScenarioTree& tree, std::uint64_t cap = kDefaultEnumerationCap);

}  // namespace mvgame
