#include "mvgame/game.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <string>

#include "mvgame/dynamics.hpp"
#include "mvgame/errors.hpp"
#include "mvgame/parallel.hpp"

namespace mvgame {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::atomic<std::uint64_t> g_order_checks{0};

void require_start(double t, const RandomVector& xi, const ScenarioTree& tree, const char* what) {
  xi.validate();
  const int k = tree.level_of(t);
  if (k != xi.level) {
    throw InvalidInput(std::string(what) + ": random vector lives at level " +
                       std::to_string(xi.level) + " but t is grid level " + std::to_string(k));
  }
}

void require_exact(const ScenarioTree& tree, const char* what) {
  if (tree.mode() != NoiseMode::kExactRademacher) {
    throw InvalidInput(std::string(what) + " needs an exact_rademacher tree");
  }
}

std::uint64_t power(std::uint64_t base, std::size_t exp) {
  std::uint64_t r = 1;
  for (std::size_t e = 0; e < exp; ++e) r *= base;
  return r;
}

// Backward recursion on the cross-leaf configuration. The outer player of a
// step is player I for the lower value and player II for the upper value.
class Recursion {
 public:
  Recursion(const ProblemSpec& spec, const ScenarioTree& tree, ValueSide side, int root_level,
            int split_level, std::uint64_t cap)
      : spec_(spec),
        tree_(tree),
        side_(side),
        root_level_(root_level),
        split_level_(split_level),
        cap_(cap),
        dummy_nu_(JointActionLaw::dirac(spec.num_a(), spec.num_b(), 0, 0)),
        uses_nu_(spec.depends_on_control_law()) {
    const auto depth = static_cast<std::size_t>(tree.steps() - root_level + 1);
    next_.resize(depth);
    a_.resize(depth);
    b_.resize(depth);
  }

  std::uint64_t steps() const { return steps_; }
  std::uint64_t terminals() const { return terminals_; }

  // Value of the sub-game after fixing the outer assignment `outer` at x;
  // reports the first optimal inner assignment index.
  double inner(const RandomVector& x, const LawMoments& m, std::uint64_t outer,
               std::uint64_t* best_inner, double prune_at) {
    const auto depth = static_cast<std::size_t>(x.level - root_level_);
    auto& a = a_[depth];
    auto& b = b_[depth];
    a.resize(x.size());
    b.resize(x.size());
    const bool lower = side_ == ValueSide::kLower;
    const std::size_t n_outer = lower ? spec_.num_a() : spec_.num_b();
    const std::size_t n_inner = lower ? spec_.num_b() : spec_.num_a();
    decode_assignment(outer, n_outer, lower ? std::span<int>(a) : std::span<int>(b));
    const std::uint64_t count = power(n_inner, x.size());
    double best = lower ? kInf : -kInf;
    for (std::uint64_t i = 0; i < count; ++i) {
      decode_assignment(i, n_inner, lower ? std::span<int>(b) : std::span<int>(a));
      const double v = stage(x, a, b, m, depth);
      if (lower ? v < best : v > best) {
        best = v;
        if (best_inner) *best_inner = i;
        // The outer player keeps only strict improvements, so this outer
        // candidate is already out of the running.
        if (lower ? best <= prune_at : best >= prune_at) break;
      }
    }
    return best;
  }

  double solve(const RandomVector& x) {
    if (x.level == tree_.steps()) {
      ++terminals_;
      return expected_terminal(x, spec_);
    }
    if (x.level == split_level_) {
      const double t = tree_.time(x.level);
      const auto r = side_ == ValueSide::kLower
                         ? lower_value(t, x, spec_, tree_, cap_, false)
                         : upper_value(t, x, spec_, tree_, cap_, false);
      steps_ += r.step_evaluations;
      terminals_ += r.terminal_evaluations;
      return r.value;
    }
    const LawMoments m = x.moments();
    const bool lower = side_ == ValueSide::kLower;
    const std::uint64_t count = power(lower ? spec_.num_a() : spec_.num_b(), x.size());
    double best = lower ? -kInf : kInf;
    for (std::uint64_t o = 0; o < count; ++o) {
      const double v = inner(x, m, o, nullptr, best);
      if (lower ? v > best : v < best) best = v;
    }
    return best;
  }

 private:
  double stage(const RandomVector& x, std::span<const int> a, std::span<const int> b,
               const LawMoments& m, std::size_t depth) {
    ++steps_;
    const JointActionLaw nu = uses_nu_ ? step_action_law(x, a, b, spec_) : dummy_nu_;
    const double run = tree_.dt() * expected_running(x, a, b, spec_, m, nu);
    RandomVector& next = next_[depth];
    euler_step_into(x, a, b, spec_, tree_, m, nu, next);
    return run + solve(next);
  }

  const ProblemSpec& spec_;
  const ScenarioTree& tree_;
  ValueSide side_;
  int root_level_;
  int split_level_;
  std::uint64_t cap_;
  JointActionLaw dummy_nu_;
  bool uses_nu_;
  std::vector<RandomVector> next_;
  std::vector<std::vector<int>> a_;
  std::vector<std::vector<int>> b_;
  std::uint64_t steps_ = 0;
  std::uint64_t terminals_ = 0;
};

struct RootResult {
  double value = 0.0;
  std::uint64_t outer = 0;
  std::uint64_t inner = 0;
  std::uint64_t steps = 0;
  std::uint64_t terminals = 0;
};

// Root of the recursion: outer candidates are independent, so they are
// evaluated in parallel without cross-candidate pruning and folded in
// enumeration order. Results and counts do not depend on the thread count.
RootResult solve_root(const RandomVector& x, const ProblemSpec& spec, const ScenarioTree& tree,
                      ValueSide side, int split_level, std::uint64_t cap) {
  RootResult res;
  if (x.level == tree.steps()) {
    res.value = expected_terminal(x, spec);
    res.terminals = 1;
    return res;
  }
  const bool lower = side == ValueSide::kLower;
  const std::uint64_t count = power(lower ? spec.num_a() : spec.num_b(), x.size());
  struct Slot {
    double value;
    std::uint64_t inner;
    std::uint64_t steps;
    std::uint64_t terminals;
  };
  std::vector<Slot> slots(count);
  const LawMoments m = x.moments();
  parallel_for(count, [&](std::size_t o) {
    Recursion rec(spec, tree, side, x.level, split_level, cap);
    std::uint64_t best_inner = 0;
    const double v = rec.inner(x, m, o, &best_inner, lower ? -kInf : kInf);
    slots[o] = {v, best_inner, rec.steps(), rec.terminals()};
  });
  res.value = lower ? -kInf : kInf;
  for (std::uint64_t o = 0; o < count; ++o) {
    const Slot& s = slots[o];
    res.steps += s.steps;
    res.terminals += s.terminals;
    if (lower ? s.value > res.value : s.value < res.value) {
      res.value = s.value;
      res.outer = o;
      res.inner = s.inner;
    }
  }
  return res;
}

GameValueReport value_impl(double t, const RandomVector& xi, const ProblemSpec& spec,
                           const ScenarioTree& tree, std::uint64_t cap, bool with_path,
                           ValueSide side) {
  const char* what = side == ValueSide::kLower ? "lower_value" : "upper_value";
  require_exact(tree, what);
  require_start(t, xi, tree, what);
  recursion_size(xi, spec, tree, cap);
  GameValueReport rep;
  rep.side = side;
  rep.mode = tree.mode();
  RootResult root = solve_root(xi, spec, tree, side, -1, cap);
  rep.value = root.value;
  rep.step_evaluations = root.steps;
  rep.terminal_evaluations = root.terminals;
  if (!with_path) return rep;
  RandomVector x = xi;
  const bool lower = side == ValueSide::kLower;
  while (x.level < tree.steps()) {
    StepChoice c;
    c.level = x.level;
    c.a.resize(x.size());
    c.b.resize(x.size());
    decode_assignment(lower ? root.outer : root.inner, spec.num_a(), c.a);
    decode_assignment(lower ? root.inner : root.outer, spec.num_b(), c.b);
    x = euler_step(x, c.a, c.b, spec, tree);
    rep.principal_path.push_back(std::move(c));
    if (x.level < tree.steps()) root = solve_root(x, spec, tree, side, -1, cap);
  }
  return rep;
}

}  // namespace

const char* value_side_name(ValueSide side) {
  return side == ValueSide::kLower ? "lower" : "upper";
}

double evaluate_payoff(double t, const RandomVector& xi, const OpenLoopControl& alpha,
                       const OpenLoopControl& beta, const ProblemSpec& spec,
                       const ScenarioTree& tree) {
  require_start(t, xi, tree, "evaluate_payoff");
  const Trajectory traj = simulate_flow(xi, alpha, beta, spec, tree);
  double j = 0.0;
  for (std::size_t s = 0; s < traj.records.size(); ++s) {
    const RandomVector& x = traj.states[s];
    const int k = x.level;
    const JointActionLaw nu = step_action_law(x, alpha.at(k), beta.at(k), spec);
    j += tree.dt() * expected_running(x, alpha.at(k), beta.at(k), spec, traj.records[s].moments, nu);
  }
  return j + expected_terminal(traj.states.back(), spec);
}

std::uint64_t recursion_size(const RandomVector& xi, const ProblemSpec& spec,
                             const ScenarioTree& tree, std::uint64_t cap) {
  const std::uint64_t pair = spec.num_a() * spec.num_b();
  std::uint64_t reach = 1;
  std::uint64_t total = 0;
  for (std::size_t atoms : atoms_per_step(xi, tree)) {
    const std::uint64_t per = checked_power(pair, atoms, cap, "game recursion");
    if (reach > cap / per) {
      throw CapacityError("game recursion: more than " + std::to_string(cap) +
                          " sub-game nodes (cap)");
    }
    reach *= per;
    total += reach;
    if (total > cap) {
      throw CapacityError("game recursion: " + std::to_string(total) +
                          " sub-game nodes exceed the cap of " + std::to_string(cap));
    }
  }
  return total;
}

GameValueReport lower_value(double t, const RandomVector& xi, const ProblemSpec& spec,
                            const ScenarioTree& tree, std::uint64_t cap, bool with_path) {
  return value_impl(t, xi, spec, tree, cap, with_path, ValueSide::kLower);
}

GameValueReport upper_value(double t, const RandomVector& xi, const ProblemSpec& spec,
                            const ScenarioTree& tree, std::uint64_t cap, bool with_path) {
  return value_impl(t, xi, spec, tree, cap, with_path, ValueSide::kUpper);
}

void check_value_order(double lower, double upper) {
  g_order_checks.fetch_add(1, std::memory_order_relaxed);
  if (!(lower <= upper + 1e-9)) {
    throw ValidationError("lower value " + std::to_string(lower) + " exceeds upper value " +
                          std::to_string(upper));
  }
}

std::uint64_t value_order_checks() { return g_order_checks.load(); }

GameValues game_values(double t, const RandomVector& xi, const ProblemSpec& spec,
                       const ScenarioTree& tree, std::uint64_t cap) {
  GameValues out{lower_value(t, xi, spec, tree, cap), upper_value(t, xi, spec, tree, cap)};
  check_value_order(out.lower.value, out.upper.value);
  return out;
}

double strategy_enumeration_value(double t, const RandomVector& xi, const ProblemSpec& spec,
                                  const ScenarioTree& tree, ValueSide side, std::uint64_t cap) {
  require_start(t, xi, tree, "strategy_enumeration_value");
  const OpenLoopSpace alphas = enumerate_open_loop_controls(tree, xi, spec.num_a(), Player::kFirst,
                                                            -1, cap);
  const OpenLoopSpace betas = enumerate_open_loop_controls(tree, xi, spec.num_b(), Player::kSecond,
                                                           -1, cap);
  if (alphas.size() > cap / betas.size()) {
    throw CapacityError("strategy enumeration: payoff table of " +
                        std::to_string(alphas.size()) + " x " + std::to_string(betas.size()) +
                        " exceeds the cap of " + std::to_string(cap));
  }
  const std::size_t steps = alphas.atoms_per_step().size();
  if (steps == 0) return expected_terminal(xi, spec);

  // J[alpha][beta] for every pair of open-loop controls.
  std::vector<double> table(alphas.size() * betas.size());
  parallel_for(alphas.size(), [&](std::size_t i) {
    const OpenLoopControl alpha = alphas.at(i);
    for (std::uint64_t j = 0; j < betas.size(); ++j) {
      table[i * betas.size() + j] = evaluate_payoff(t, xi, alpha, betas.at(j), spec, tree);
    }
  });

  // The strategy player answers each step having seen the opponent's
  // assignments up to and including that step. A response map is one own
  // step assignment per opponent prefix, for every step.
  const bool lower = side == ValueSide::kLower;
  const OpenLoopSpace& opp = lower ? alphas : betas;
  const OpenLoopSpace& own = lower ? betas : alphas;
  std::vector<std::uint64_t> prefixes(steps);   // opponent prefixes ending at step s
  std::vector<std::uint64_t> suffix(steps);     // opponent controls per prefix at step s
  std::vector<std::size_t> offset(steps);
  std::uint64_t p = 1;
  std::size_t digits = 0;
  std::uint64_t maps = 1;
  for (std::size_t s = 0; s < steps; ++s) {
    p *= opp.step_size(s);
    prefixes[s] = p;
    suffix[s] = opp.size() / p;
    offset[s] = digits;
    digits += p;
    const std::uint64_t per = checked_power(own.step_size(s), p, cap, "strategy enumeration");
    if (maps > cap / per) {
      throw CapacityError("strategy enumeration: response-map count exceeds the cap of " +
                          std::to_string(cap));
    }
    maps *= per;
  }

  std::vector<std::uint64_t> map(digits, 0);
  double outer = lower ? kInf : -kInf;
  for (std::uint64_t m = 0; m < maps; ++m) {
    double inner = lower ? -kInf : kInf;
    for (std::uint64_t o = 0; o < opp.size(); ++o) {
      std::uint64_t response = 0;
      for (std::size_t s = 0; s < steps; ++s) {
        response = response * own.step_size(s) + map[offset[s] + o / suffix[s]];
      }
      const double v = lower ? table[o * betas.size() + response]
                             : table[response * betas.size() + o];
      inner = lower ? std::max(inner, v) : std::min(inner, v);
    }
    outer = lower ? std::min(outer, inner) : std::max(outer, inner);
    // Advance the response map like an odometer.
    for (std::size_t s = steps; s-- > 0;) {
      bool carried = false;
      for (std::size_t dgt = offset[s] + prefixes[s]; dgt-- > offset[s];) {
        if (++map[dgt] < own.step_size(s)) {
          carried = true;
          break;
        }
        map[dgt] = 0;
      }
      if (carried) break;
    }
  }
  return outer;
}

double DppReport::lower_residual() const { return std::abs(lower_value - lower_split); }
double DppReport::upper_residual() const { return std::abs(upper_value - upper_split); }
double DppReport::residual() const { return std::max(lower_residual(), upper_residual()); }

DppReport dpp_check(double t, double s, const RandomVector& xi, const ProblemSpec& spec,
                    const ScenarioTree& tree, std::uint64_t cap) {
  require_exact(tree, "dpp_check");
  require_start(t, xi, tree, "dpp_check");
  const int ks = tree.level_of(s);
  if (ks < xi.level) throw InvalidInput("dpp_check: split time precedes the start time");
  recursion_size(xi, spec, tree, cap);
  DppReport rep;
  rep.lower_value = lower_value(t, xi, spec, tree, cap, false).value;
  rep.upper_value = upper_value(t, xi, spec, tree, cap, false).value;
  if (ks == xi.level) {
    // The split side is the value itself, recomputed from scratch.
    rep.lower_split = lower_value(t, xi, spec, tree, cap, false).value;
    rep.upper_split = upper_value(t, xi, spec, tree, cap, false).value;
  } else {
    rep.lower_split = solve_root(xi, spec, tree, ValueSide::kLower, ks, cap).value;
    rep.upper_split = solve_root(xi, spec, tree, ValueSide::kUpper, ks, cap).value;
  }
  check_value_order(rep.lower_value, rep.upper_value);
  return rep;
}

double dpp_residual(double t, double s, const RandomVector& xi, const ProblemSpec& spec,
                    const ScenarioTree& tree, std::uint64_t cap) {
  return dpp_check(t, s, xi, spec, tree, cap).residual();
}

}  // namespace mvgame
