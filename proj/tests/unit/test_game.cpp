#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "mvgame/controls.hpp"
#include "mvgame/errors.hpp"
#include "mvgame/game.hpp"
#include "support.hpp"

using namespace mvgame;
using test::exact_tree;
using test::make_spec;

namespace {

ProblemSpec bilinear_unit() {
  return make_spec(Family::kBilinearGame, {{"run_abx", 1.0}}, {-1.0, 1.0}, {-1.0, 1.0});
}

}  // namespace

TEST_SUITE("game") {
  TEST_CASE("payoff examples") {
    const auto tree = exact_tree(2);
    const auto xi = RandomVector::at_root(EmpiricalMeasure::uniform(1, {0.5, 2.0}), {0, 0});
    const auto steps = atoms_per_step(xi, tree);
    const auto a0 = OpenLoopControl::constant(Player::kFirst, 0, steps, 0);
    const auto b0 = OpenLoopControl::constant(Player::kSecond, 0, steps, 0);

    const auto terminal_x = make_spec(Family::kLinearMf, {{"term_x", 1.0}}, {0.0}, {0.0});
    CHECK(evaluate_payoff(0.0, xi, a0, b0, terminal_x, tree) == doctest::Approx(1.25).epsilon(1e-15));

    const auto unit_run = make_spec(Family::kLinearMf, {{"run_const", 1.0}}, {0.0}, {0.0});
    CHECK(evaluate_payoff(0.0, xi, a0, b0, unit_run, tree) == doctest::Approx(1.0).epsilon(1e-15));
    const auto late = exact_tree(2, 1, 0.25);
    CHECK(evaluate_payoff(0.25, xi, a0, b0, unit_run, late) == doctest::Approx(0.75).epsilon(1e-15));

    const auto one = exact_tree(1);
    const auto x1 = RandomVector::at_root(EmpiricalMeasure::dirac({1.0}));
    OpenLoopControl alpha{Player::kFirst, 0, {{1}}};
    OpenLoopControl beta{Player::kSecond, 0, {{0}}};
    CHECK(evaluate_payoff(0.0, x1, alpha, beta, bilinear_unit(), one) == -1.0);
  }

  TEST_CASE("bilinear lower and upper values") {
    const auto tree = exact_tree(1);
    const auto xi = RandomVector::at_root(EmpiricalMeasure::dirac({1.0}));
    const auto spec = bilinear_unit();
    const auto values = game_values(0.0, xi, spec, tree);
    CHECK(values.lower.value == -1.0);
    CHECK(values.upper.value == 1.0);
    CHECK(values.gap() == 2.0);
    CHECK(strategy_enumeration_value(0.0, xi, spec, tree, ValueSide::kLower) == -1.0);
    CHECK(strategy_enumeration_value(0.0, xi, spec, tree, ValueSide::kUpper) == 1.0);
    REQUIRE(values.lower.principal_path.size() == 1);
    CHECK(values.lower.principal_path[0].a == std::vector<int>{0});
  }

  TEST_CASE("constant running payoff") {
    const auto tree = exact_tree(2, 1, 0.5);
    const auto xi = RandomVector::at_root(EmpiricalMeasure::uniform(1, {0.0, 1.0}), {0, 0});
    const auto spec = make_spec(Family::kLinearMf, {{"run_const", 3.0}, {"sigma_const", 1.0}},
                                {-1.0, 1.0}, {-1.0, 1.0});
    CHECK(lower_value(0.5, xi, spec, tree).value == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(upper_value(0.5, xi, spec, tree).value == doctest::Approx(1.5).epsilon(1e-15));
    const auto one = exact_tree(1, 1, 0.5);
    const auto x1 = RandomVector::at_root(EmpiricalMeasure::dirac({0.2}));
    CHECK(strategy_enumeration_value(0.5, x1, spec, one, ValueSide::kLower) ==
          doctest::Approx(1.5).epsilon(1e-15));
  }

  TEST_CASE("singleton B gives the one-player supremum") {
    const auto spec = make_spec(Family::kLinearMf,
                                {{"drift_a", 1.0}, {"sigma_const", 0.7}, {"term_xx", -1.0},
                                 {"run_a", -0.2}, {"term_x", 0.4}},
                                {-1.0, 1.0}, {0.0});
    const auto tree = exact_tree(2);
    const auto xi = RandomVector::at_root(EmpiricalMeasure::dirac({0.3}));
    const auto space = enumerate_open_loop_controls(tree, xi, 2, Player::kFirst);
    const auto beta = OpenLoopControl::constant(Player::kSecond, 0, atoms_per_step(xi, tree), 0);
    double best = -1e300;
    for (const auto& alpha : space) best = std::max(best, evaluate_payoff(0.0, xi, alpha, beta, spec, tree));
    CHECK(lower_value(0.0, xi, spec, tree).value == doctest::Approx(best).epsilon(1e-14));
    CHECK(upper_value(0.0, xi, spec, tree).value == doctest::Approx(best).epsilon(1e-14));
  }

  TEST_CASE("singleton A gives the one-player infimum") {
    const auto spec = make_spec(Family::kLinearMf,
                                {{"drift_b", 1.0}, {"sigma_const", 0.7}, {"term_xx", 1.0}},
                                {0.0}, {-1.0, 1.0});
    const auto tree = exact_tree(2);
    const auto xi = RandomVector::at_root(EmpiricalMeasure::dirac({0.3}));
    const auto space = enumerate_open_loop_controls(tree, xi, 2, Player::kSecond);
    const auto alpha = OpenLoopControl::constant(Player::kFirst, 0, atoms_per_step(xi, tree), 0);
    double best = 1e300;
    for (const auto& beta : space) best = std::min(best, evaluate_payoff(0.0, xi, alpha, beta, spec, tree));
    CHECK(upper_value(0.0, xi, spec, tree).value == doctest::Approx(best).epsilon(1e-14));
  }

  TEST_CASE("separable payoffs close the gap") {
    const auto spec = make_spec(Family::kLinearMf,
                                {{"drift_a", 0.5}, {"drift_b", 0.3}, {"sigma_const", 1.0},
                                 {"run_a", 1.0}, {"run_b", -2.0}, {"term_x", 1.0}},
                                {-1.0, 1.0}, {-1.0, 1.0});
    const auto tree = exact_tree(2, 2);
    const auto xi = RandomVector::at_root(EmpiricalMeasure::uniform(1, {0.0, 1.0}));
    const auto values = game_values(0.0, xi, spec, tree);
    CHECK(std::abs(values.gap()) <= 1e-12);
  }

  TEST_CASE("strategy oracle agrees with the recursion") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 4; ++trial) {
      const auto spec = make_spec(Family::kBilinearGame,
                                  {{"drift_ab", u(rng)}, {"sigma", trial % 2 ? 1.0 : 0.0},
                                   {"run_abx", u(rng)}, {"run_a", u(rng)}, {"term_x_mean", u(rng)}},
                                  {-1.0, 1.0}, {-1.0, 1.0});
      const auto tree = exact_tree(1);
      const auto xi = RandomVector::at_root(EmpiricalMeasure::dirac({u(rng)}));
      for (ValueSide side : {ValueSide::kLower, ValueSide::kUpper}) {
        const double rec = side == ValueSide::kLower ? lower_value(0.0, xi, spec, tree).value
                                                     : upper_value(0.0, xi, spec, tree).value;
        CHECK(std::abs(rec - strategy_enumeration_value(0.0, xi, spec, tree, side)) <= 1e-12);
      }
    }
  }

  TEST_CASE("strategy oracle cap") {
    const auto tree = exact_tree(2, 2);
    const auto xi = RandomVector::at_root(EmpiricalMeasure::uniform(1, {0.0, 1.0}));
    CHECK_THROWS_AS(strategy_enumeration_value(0.0, xi, bilinear_unit(), tree, ValueSide::kLower, 100),
                    CapacityError);
  }

  TEST_CASE("dynamic programming splits") {
    const auto spec = make_spec(Family::kBilinearGame,
                                {{"drift_ab", 0.5}, {"drift_x", -0.2}, {"drift_mean", 0.1},
                                 {"run_abx", 1.0}, {"run_a", 0.2}, {"term_x_mean", -0.5}},
                                {-1.0, 1.0}, {-1.0, 1.0});
    const auto tree = exact_tree(2);
    const auto xi = RandomVector::at_root(EmpiricalMeasure::uniform(1, {1.0, -0.5}), {0, 0});
    CHECK(dpp_residual(0.0, 0.0, xi, spec, tree) == 0.0);
    CHECK(dpp_residual(0.0, 1.0, xi, spec, tree) == 0.0);
    CHECK(dpp_residual(0.0, 0.5, xi, spec, tree) <= 1e-10);
    CHECK_THROWS_AS(dpp_residual(0.0, 0.3, xi, spec, tree), ValidationError);
  }

  TEST_CASE("values depend only on the law") {
    const auto spec = make_spec(Family::kBilinearGame,
                                {{"drift_ab", 0.4}, {"drift_mean", 0.3}, {"sigma", 1.0},
                                 {"run_abx", 1.0}, {"term_x_mean", -0.5}},
                                {-1.0, 1.0}, {-1.0, 1.0});
    const auto tree = exact_tree(1, 3);
    const auto mu = EmpiricalMeasure::uniform(1, {0.4, -1.0, 2.0});
    const auto base = game_values(0.0, RandomVector::at_root(mu), spec, tree);
    std::vector<std::size_t> perm = {0, 1, 2};
    while (std::next_permutation(perm.begin(), perm.end())) {
      const auto v = game_values(0.0, RandomVector::at_root(mu.permuted(perm)), spec, tree);
      CHECK(v.lower.value == base.lower.value);
      CHECK(v.upper.value == base.upper.value);
    }
  }

  TEST_CASE("lower never exceeds upper") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::uint64_t before = value_order_checks();
    for (int trial = 0; trial < 10; ++trial) {
      const auto spec = make_spec(Family::kBilinearGame,
                                  {{"drift_ab", u(rng)}, {"drift_x", u(rng)}, {"sigma", 0.5},
                                   {"run_abx", u(rng)}, {"run_ab", u(rng)}, {"run_b", u(rng)},
                                   {"term_x_mean", u(rng)}},
                                  {-1.0, 0.5, 1.0}, {-1.0, 1.0});
      const auto tree = exact_tree(2);
      const auto xi = RandomVector::at_root(EmpiricalMeasure::dirac({u(rng)}));
      const auto v = game_values(0.0, xi, spec, tree);
      CHECK(v.lower.value <= v.upper.value + 1e-9);
    }
    CHECK(value_order_checks() >= before + 10);
    CHECK_THROWS_AS(check_value_order(1.0, 0.0), ValidationError);
  }

  TEST_CASE("monte carlo trees are refused") {
    const auto tree = build_scenario_tree(1, 0.0, 1.0, NoiseMode::kMonteCarlo, 1, 1, 0, 10);
    const auto xi = RandomVector::at_root(EmpiricalMeasure::dirac({1.0}));
    CHECK_THROWS_AS(lower_value(0.0, xi, bilinear_unit(), tree), InvalidInput);
  }
}
