#pragma once

#include <map>
#include <string>
#include <vector>

#include "mvgame/problem.hpp"
#include "mvgame/random_vector.hpp"
#include "mvgame/scenario_tree.hpp"

namespace mvgame::test {

inline std::vector<Action> actions(std::vector<double> values, const char* prefix = "a") {
  std::vector<Action> out;
  for (std::size_t i = 0; i < values.size(); ++i) out.push_back({prefix + std::to_string(i), values[i]});
  return out;
}

inline ProblemSpec make_spec(Family family, std::map<std::string, double> params,
                             std::vector<double> a, std::vector<double> b, double horizon = 1.0,
                             std::size_t dim = 1) {
  return ProblemSpec(family, dim, std::move(params), actions(std::move(a), "a"),
                     actions(std::move(b), "b"), horizon);
}

inline ScenarioTree exact_tree(int steps, int channels = 1, double start = 0.0, double horizon = 1.0) {
  return build_scenario_tree(steps, start, horizon, NoiseMode::kExactRademacher, channels, 1, 0);
}

}  // namespace mvgame::test
