#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "mvgame/measure.hpp"
#include "mvgame/problem.hpp"
#include "mvgame/random_vector.hpp"
#include "mvgame/scenario_tree.hpp"

namespace mvgame {

// Player I picks from A and maximises; player II picks from B and minimises.
enum class Player { kFirst, kSecond };

inline constexpr std::uint64_t kDefaultEnumerationCap = 10'000'000;

// Discrete-time open-loop control: one action index per atom for every
// decision step. Atoms at a level are identified by (noise history, initial
// atom), so a control defined this way is adapted by construction.
struct OpenLoopControl {
  Player side = Player::kFirst;
  int start_level = 0;
  std::vector<std::vector<int>> actions;  // actions[level - start_level][atom]

  int end_level() const { return start_level + static_cast<int>(actions.size()); }
  const std::vector<int>& at(int level) const;
  // The same control restricted to levels >= from_level.
  OpenLoopControl tail(int from_level) const;

  static OpenLoopControl constant(Player side, int start_level,
                                  std::span<const std::size_t> atoms_per_step, int action);
};

// Number of atoms at each decision level from xi.level to the last step,
// for a random vector living on `tree`.
std::vector<std::size_t> atoms_per_step(const RandomVector& xi, const ScenarioTree& tree);

// base^exp, or CapacityError naming the exact count when it exceeds cap.
std::uint64_t checked_power(std::uint64_t base, std::uint64_t exp, std::uint64_t cap,
                            const char* what);

// Lexicographic step assignments: atom 0 is the most significant digit.
void decode_assignment(std::uint64_t index, std::size_t num_actions, std::span<int> out);
std::uint64_t encode_assignment(std::span<const int> actions, std::size_t num_actions);

// Every total assignment of actions to the (level, atom) slots of a window
// of levels, in lexicographic order (earliest level, atom 0 most
// significant). Random access by index, so disjoint index ranges can be
// consumed independently.
class OpenLoopSpace {
 public:
  OpenLoopSpace(Player side, int start_level, std::vector<std::size_t> atoms_per_step,
                std::size_t num_actions, std::uint64_t cap = kDefaultEnumerationCap);

  std::uint64_t size() const { return size_; }
  std::size_t num_actions() const { return num_actions_; }
  const std::vector<std::size_t>& atoms_per_step() const { return atoms_; }
  // Number of distinct assignments at one step.
  std::uint64_t step_size(std::size_t step) const { return step_sizes_[step]; }
  OpenLoopControl at(std::uint64_t index) const;
  // Index of the control whose per-step assignment indices are `steps`.
  std::uint64_t index_of(std::span<const std::uint64_t> steps) const;

  class iterator {
   public:
    using value_type = OpenLoopControl;
    using difference_type = std::ptrdiff_t;
    iterator(const OpenLoopSpace* space, std::uint64_t i) : space_(space), i_(i) {}
    OpenLoopControl operator*() const { return space_->at(i_); }
    iterator& operator++() {
      ++i_;
      return *this;
    }
    bool operator==(const iterator& o) const { return i_ == o.i_; }

   private:
    const OpenLoopSpace* space_;
    std::uint64_t i_;
  };
  iterator begin() const { return {this, 0}; }
  iterator end() const { return {this, size_}; }

 private:
  Player side_;
  int start_level_;
  std::vector<std::size_t> atoms_;
  std::size_t num_actions_;
  std::vector<std::uint64_t> step_sizes_;
  std::uint64_t size_;
};

// Controls of `side` over levels [xi.level, end_level) (end_level < 0 means
// the horizon). Throws CapacityError when the count exceeds cap.
OpenLoopSpace enumerate_open_loop_controls(const ScenarioTree& tree, const RandomVector& xi,
                                           std::size_t num_actions, Player side,
                                           int end_level = -1,
                                           std::uint64_t cap = kDefaultEnumerationCap);

struct FeedbackPolicy {
  Player side = Player::kFirst;
  std::function<int(int level, std::span<const double> x, const EmpiricalMeasure& mu)> rule;
};

using Opponent = std::variant<std::monostate, OpenLoopControl, FeedbackPolicy>;

// Rolls the state forward reading actions from the policy at the realised
// (level, atom) states, and returns those actions as an open-loop control.
// With no opponent, the opponent's action set must be a singleton.
OpenLoopControl feedback_to_open_loop(const FeedbackPolicy& policy, const RandomVector& xi,
                                      const Opponent& opponent, const ProblemSpec& spec,
                                      const ScenarioTree& tree);

// Non-anticipative response: the assignment at a level may read the
// opponent's assignments up to and including that level, nothing later.
class ResponseStrategy {
 public:
  using Rule = std::function<std::vector<int>(
      int level, std::span<const std::vector<int>> opponent_prefix)>;

  ResponseStrategy(Player side, Rule rule) : side_(side), rule_(std::move(rule)) {}

  Player side() const { return side_; }
  OpenLoopControl respond(const OpenLoopControl& opponent) const;

 private:
  Player side_;
  Rule rule_;
};

// One step of a response map: own assignment index for every assignment
// index of the opponent at that step.
struct StepResponseTable {
  std::size_t atoms = 0;
  std::vector<std::uint64_t> response;
};

// Builds a strategy from per-step response tables. Each table must be total
// over the opponent's step assignments.
ResponseStrategy lift_response_map(Player side, int start_level,
                                   std::vector<StepResponseTable> steps, std::size_t own_actions,
                                   std::size_t opponent_actions);

}  // namespace mvgame
