#include "mvgame/controls.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mvgame/dynamics.hpp"
#include "mvgame/errors.hpp"

namespace mvgame {
namespace {

// Decimal digits of base^exp, for error messages about huge counts.
std::string power_decimal(std::uint64_t base, std::uint64_t exp) {
  if (exp > 200000 || base >= 100000000000000000ULL) return std::to_string(base) + "^" + std::to_string(exp);
  std::vector<int> digits{1};  // little-endian
  for (std::uint64_t e = 0; e < exp; ++e) {
    std::uint64_t carry = 0;
    for (int& dgt : digits) {
      const std::uint64_t v = static_cast<std::uint64_t>(dgt) * base + carry;
      dgt = static_cast<int>(v % 10);
      carry = v / 10;
    }
    while (carry > 0) {
      digits.push_back(static_cast<int>(carry % 10));
      carry /= 10;
    }
  }
  std::string s;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) s.push_back(static_cast<char>('0' + *it));
  return s;
}

const char* side_name(Player p) { return p == Player::kFirst ? "player I" : "player II"; }

}  // namespace

const std::vector<int>& OpenLoopControl::at(int level) const {
  if (level < start_level || level >= end_level()) {
    throw InvalidInput("open-loop control undefined at level " + std::to_string(level));
  }
  return actions[static_cast<std::size_t>(level - start_level)];
}

OpenLoopControl OpenLoopControl::tail(int from_level) const {
  if (from_level < start_level || from_level > end_level()) {
    throw InvalidInput("open-loop control: tail level out of range");
  }
  OpenLoopControl out;
  out.side = side;
  out.start_level = from_level;
  out.actions.assign(actions.begin() + (from_level - start_level), actions.end());
  return out;
}

OpenLoopControl OpenLoopControl::constant(Player side, int start_level,
                                          std::span<const std::size_t> atoms_per_step,
                                          int action) {
  OpenLoopControl out;
  out.side = side;
  out.start_level = start_level;
  for (std::size_t n : atoms_per_step) out.actions.emplace_back(n, action);
  return out;
}

std::vector<std::size_t> atoms_per_step(const RandomVector& xi, const ScenarioTree& tree) {
  if (xi.level < 0 || xi.level > tree.steps()) {
    throw InvalidInput("random vector level outside the tree");
  }
  std::vector<std::size_t> out;
  std::size_t atoms = xi.size();
  for (int k = xi.level; k < tree.steps(); ++k) {
    out.push_back(atoms);
    atoms *= static_cast<std::size_t>(tree.branching_factor(k));
  }
  return out;
}

std::uint64_t checked_power(std::uint64_t base, std::uint64_t exp, std::uint64_t cap,
                            const char* what) {
  std::uint64_t result = 1;
  for (std::uint64_t e = 0; e < exp; ++e) {
    if (base != 0 && result > cap / base) {
      throw CapacityError(std::string(what) + ": " + power_decimal(base, exp) +
                          " candidates exceed the cap of " + std::to_string(cap));
    }
    result *= base;
  }
  if (result > cap) {
    throw CapacityError(std::string(what) + ": " + std::to_string(result) +
                        " candidates exceed the cap of " + std::to_string(cap));
  }
  return result;
}

void decode_assignment(std::uint64_t index, std::size_t num_actions, std::span<int> out) {
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = static_cast<int>(index % num_actions);
    index /= num_actions;
  }
}

std::uint64_t encode_assignment(std::span<const int> actions, std::size_t num_actions) {
  std::uint64_t index = 0;
  for (int a : actions) {
    if (a < 0 || static_cast<std::size_t>(a) >= num_actions) {
      throw InvalidInput("action index " + std::to_string(a) + " out of range");
    }
    index = index * num_actions + static_cast<std::uint64_t>(a);
  }
  return index;
}

OpenLoopSpace::OpenLoopSpace(Player side, int start_level, std::vector<std::size_t> atoms,
                             std::size_t num_actions, std::uint64_t cap)
    : side_(side), start_level_(start_level), atoms_(std::move(atoms)), num_actions_(num_actions) {
  if (num_actions_ == 0) throw InvalidInput("open-loop enumeration: empty action set");
  std::uint64_t slots = 0;
  for (std::size_t n : atoms_) slots += n;
  size_ = checked_power(num_actions_, slots, cap, "open-loop enumeration");
  for (std::size_t n : atoms_) step_sizes_.push_back(checked_power(num_actions_, n, cap, "step"));
}

OpenLoopControl OpenLoopSpace::at(std::uint64_t index) const {
  if (index >= size_) throw InvalidInput("open-loop enumeration: index out of range");
  OpenLoopControl out;
  out.side = side_;
  out.start_level = start_level_;
  out.actions.resize(atoms_.size());
  for (std::size_t s = atoms_.size(); s-- > 0;) {
    out.actions[s].resize(atoms_[s]);
    decode_assignment(index % step_sizes_[s], num_actions_, out.actions[s]);
    index /= step_sizes_[s];
  }
  return out;
}

std::uint64_t OpenLoopSpace::index_of(std::span<const std::uint64_t> steps) const {
  if (steps.size() != atoms_.size()) throw InvalidInput("open-loop enumeration: step count mismatch");
  std::uint64_t index = 0;
  for (std::size_t s = 0; s < steps.size(); ++s) {
    if (steps[s] >= step_sizes_[s]) throw InvalidInput("open-loop enumeration: step index out of range");
    index = index * step_sizes_[s] + steps[s];
  }
  return index;
}

OpenLoopSpace enumerate_open_loop_controls(const ScenarioTree& tree, const RandomVector& xi,
                                           std::size_t num_actions, Player side, int end_level,
                                           std::uint64_t cap) {
  if (end_level < 0) end_level = tree.steps();
  if (end_level < xi.level || end_level > tree.steps()) {
    throw InvalidInput("open-loop enumeration: end level out of range");
  }
  auto atoms = atoms_per_step(xi, tree);
  atoms.resize(static_cast<std::size_t>(end_level - xi.level));
  return OpenLoopSpace(side, xi.level, std::move(atoms), num_actions, cap);
}

OpenLoopControl feedback_to_open_loop(const FeedbackPolicy& policy, const RandomVector& xi,
                                      const Opponent& opponent, const ProblemSpec& spec,
                                      const ScenarioTree& tree) {
  if (!policy.rule) throw InvalidInput("feedback policy has no rule");
  const bool first = policy.side == Player::kFirst;
  const std::size_t own_count = first ? spec.num_a() : spec.num_b();
  const std::size_t opp_count = first ? spec.num_b() : spec.num_a();
  if (const auto* c = std::get_if<OpenLoopControl>(&opponent)) {
    if (c->side == policy.side) throw InvalidInput("opponent control is on the policy's side");
  } else if (const auto* f = std::get_if<FeedbackPolicy>(&opponent)) {
    if (f->side == policy.side) throw InvalidInput("opponent policy is on the policy's side");
    if (!f->rule) throw InvalidInput("opponent feedback policy has no rule");
  } else if (opp_count != 1) {
    throw InvalidInput("feedback rollout without an opponent needs a singleton opponent action set");
  }

  auto read_policy = [](const FeedbackPolicy& p, int k, const RandomVector& x,
                        const EmpiricalMeasure& mu, std::size_t count) {
    std::vector<int> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const int a = p.rule(k, x.point(i), mu);
      if (a < 0 || static_cast<std::size_t>(a) >= count) {
        throw InvalidInput("feedback policy returned action " + std::to_string(a) +
                           " outside the action set");
      }
      out[i] = a;
    }
    return out;
  };

  OpenLoopControl out;
  out.side = policy.side;
  out.start_level = xi.level;
  RandomVector x = xi;
  for (int k = xi.level; k < tree.steps(); ++k) {
    for (double v : x.positions) {
      if (!std::isfinite(v)) {
        throw NumericError("feedback rollout: non-finite state at level " + std::to_string(k));
      }
    }
    const EmpiricalMeasure mu = x.law();
    std::vector<int> own = read_policy(policy, k, x, mu, own_count);
    std::vector<int> opp;
    if (const auto* c = std::get_if<OpenLoopControl>(&opponent)) {
      opp = c->at(k);
      if (opp.size() != x.size()) throw InvalidInput("opponent control shape does not match the tree");
    } else if (const auto* f = std::get_if<FeedbackPolicy>(&opponent)) {
      opp = read_policy(*f, k, x, mu, opp_count);
    } else {
      opp.assign(x.size(), 0);
    }
    x = first ? euler_step(x, own, opp, spec, tree) : euler_step(x, opp, own, spec, tree);
    out.actions.push_back(std::move(own));
  }
  for (double v : x.positions) {
    if (!std::isfinite(v)) throw NumericError("feedback rollout: non-finite terminal state");
  }
  return out;
}

OpenLoopControl ResponseStrategy::respond(const OpenLoopControl& opponent) const {
  if (opponent.side == side_) {
    throw InvalidInput(std::string("response strategy of ") + side_name(side_) +
                       " given a control of the same player");
  }
  OpenLoopControl out;
  out.side = side_;
  out.start_level = opponent.start_level;
  for (std::size_t s = 0; s < opponent.actions.size(); ++s) {
    std::span<const std::vector<int>> prefix(opponent.actions.data(), s + 1);
    std::vector<int> own = rule_(opponent.start_level + static_cast<int>(s), prefix);
    if (own.size() != opponent.actions[s].size()) {
      throw InvalidInput("response rule returned the wrong number of atoms");
    }
    out.actions.push_back(std::move(own));
  }
  return out;
}

ResponseStrategy lift_response_map(Player side, int start_level,
                                   std::vector<StepResponseTable> steps, std::size_t own_actions,
                                   std::size_t opponent_actions) {
  constexpr std::uint64_t kNoCap = ~std::uint64_t{0};
  for (std::size_t s = 0; s < steps.size(); ++s) {
    const auto& t = steps[s];
    const std::uint64_t need = checked_power(opponent_actions, t.atoms, kNoCap, "response table");
    const std::uint64_t own = checked_power(own_actions, t.atoms, kNoCap, "response table");
    if (t.response.size() != need) {
      throw InvalidInput("response map at step " + std::to_string(s) + " covers " +
                         std::to_string(t.response.size()) + " of " + std::to_string(need) +
                         " opponent assignments");
    }
    if (std::any_of(t.response.begin(), t.response.end(), [&](std::uint64_t r) { return r >= own; })) {
      throw InvalidInput("response map at step " + std::to_string(s) + " names an unknown assignment");
    }
  }
  auto rule = [steps = std::move(steps), start_level, own_actions, opponent_actions](
                  int level, std::span<const std::vector<int>> prefix) {
    const auto s = static_cast<std::size_t>(level - start_level);
    if (level < start_level || s >= steps.size()) {
      throw InvalidInput("response map undefined at level " + std::to_string(level));
    }
    const auto& opp = prefix.back();
    if (opp.size() != steps[s].atoms) throw InvalidInput("response map: atom count mismatch");
    std::vector<int> own(opp.size());
    decode_assignment(steps[s].response[encode_assignment(opp, opponent_actions)], own_actions, own);
    return own;
  };
  return ResponseStrategy(side, std::move(rule));
}

}  // namespace mvgame
