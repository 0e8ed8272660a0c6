#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "mvgame/controls.hpp"
#include "mvgame/dynamics.hpp"
#include "mvgame/errors.hpp"
#include "mvgame/measure.hpp"
#include "support.hpp"

using namespace mvgame;
using test::exact_tree;
using test::make_spec;

TEST_SUITE("dynamics") {
  TEST_CASE("exact tree with one step") {
    const auto tree = exact_tree(1, 1, 0.0, 0.25);
    REQUIRE(tree.num_leaves() == 2);
    double s = 0.0;
    for (std::uint64_t c = 0; c < 2; ++c) {
      CHECK(tree.node_probability(1, c) == 0.5);
      CHECK(std::abs(tree.increment(1, c, 0, 0)) == 0.5);
      s += tree.increment(1, c, 0, 0);
    }
    CHECK(s == 0.0);
  }

  TEST_CASE("exact tree with two channels and two steps") {
    const auto tree = exact_tree(2, 2);
    REQUIRE(tree.num_leaves() == 16);
    for (std::uint64_t leaf = 0; leaf < 16; ++leaf) CHECK(tree.node_probability(2, leaf) == 1.0 / 16.0);
    CHECK(tree.branching_factor(0) == 4);
  }

  TEST_CASE("exact tree over the leaf cap") {
    CHECK_THROWS_AS(build_scenario_tree(11, 0.0, 1.0, NoiseMode::kExactRademacher, 2, 1, 0),
                    CapacityError);
  }

  TEST_CASE("monte carlo increments are centred") {
    const int paths = 1000;
    const auto tree = build_scenario_tree(1, 0.0, 1.0, NoiseMode::kMonteCarlo, 1, 1, 42, paths);
    REQUIRE(tree.num_nodes(1) == static_cast<std::uint64_t>(paths));
    double s = 0.0;
    for (int p = 0; p < paths; ++p) s += tree.increment(1, static_cast<std::uint64_t>(p), 0, 0);
    CHECK(std::abs(s / paths) <= 3.0 * std::sqrt(tree.dt() / paths));
    const auto again = build_scenario_tree(1, 0.0, 1.0, NoiseMode::kMonteCarlo, 1, 1, 42, paths);
    CHECK(again.increment(1, 17, 0, 0) == tree.increment(1, 17, 0, 0));
  }

  TEST_CASE("euler step with zero coefficients keeps positions") {
    const auto spec = make_spec(Family::kLinearMf, {}, {0.0}, {0.0});
    const auto tree = exact_tree(2);
    const auto xi = RandomVector::at_root(EmpiricalMeasure::uniform(1, {-1.0, 2.0}), {0, 0});
    const std::vector<int> zeros(2, 0);
    const auto next = euler_step(xi, zeros, zeros, spec, tree);
    REQUIRE(next.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(next.positions[i] == xi.positions[i / 2]);
  }

  TEST_CASE("euler step with mean drift") {
    const auto spec = make_spec(Family::kLinearMf, {{"drift_mean", 1.0}}, {0.0}, {0.0});
    const auto tree = exact_tree(2);
    CHECK(tree.dt() == 0.5);
    const auto xi = RandomVector::at_root(EmpiricalMeasure::uniform(1, {1.0, 1.0, 1.0}), {0, 0, 0});
    const std::vector<int> zeros(3, 0);
    const auto next = euler_step(xi, zeros, zeros, spec, tree);
    for (double x : next.positions) CHECK(x == 1.5);
  }

  TEST_CASE("bilinear euler step by hand") {
    const auto spec = make_spec(Family::kBilinearGame,
                                {{"drift_const", 0.3}, {"drift_ab", 0.5}, {"sigma", 1.0}},
                                {-1.0, 1.0}, {-1.0, 1.0}, 0.5);
    const auto tree = exact_tree(1, 1, 0.0, 0.5);
    const auto xi = RandomVector::at_root(EmpiricalMeasure::dirac({0.2}));
    const std::vector<int> a = {1};
    const std::vector<int> b = {0};
    const auto next = euler_step(xi, a, b, spec, tree);
    const double dt = 0.5;
    const double gamma = 0.3 - 0.5;
    REQUIRE(next.size() == 2);
    std::vector<double> got = next.positions;
    std::sort(got.begin(), got.end());
    CHECK(got[0] == doctest::Approx(0.2 - std::sqrt(dt) + gamma * dt).epsilon(1e-15));
    CHECK(got[1] == doctest::Approx(0.2 + std::sqrt(dt) + gamma * dt).epsilon(1e-15));
    CHECK(next.weights[0] == 0.5);
  }

  TEST_CASE("zero coefficients give a constant trajectory") {
    const auto spec = make_spec(Family::kLinearMf, {}, {0.0}, {0.0});
    const auto tree = exact_tree(3);
    const auto xi = RandomVector::at_root(EmpiricalMeasure::uniform(1, {0.5, -0.5}), {0, 0});
    const auto steps = atoms_per_step(xi, tree);
    const auto alpha = OpenLoopControl::constant(Player::kFirst, 0, steps, 0);
    const auto beta = OpenLoopControl::constant(Player::kSecond, 0, steps, 0);
    const auto flow = simulate_flow(xi, alpha, beta, spec, tree).measure_flow();
    REQUIRE(flow.size() == 4);
    for (const auto& mu : flow) CHECK(mu.mean()[0] == 0.0);
  }

  TEST_CASE("restart reproduces the flow bitwise") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 8; ++trial) {
      const auto spec = make_spec(Family::kLinearMf,
                                  {{"drift_x", u(rng)}, {"drift_mean", u(rng)}, {"drift_a", 1.0},
                                   {"sigma_const", 0.5}, {"sigma_x", 0.3 * u(rng)}},
                                  {-1.0, 1.0}, {0.0});
      const int n = 1 + trial % 3;
      std::vector<double> pts(static_cast<std::size_t>(n));
      for (auto& p : pts) p = u(rng);
      const auto tree = exact_tree(3, n);
      const auto xi = RandomVector::at_root(EmpiricalMeasure::uniform(1, pts));
      const auto steps = atoms_per_step(xi, tree);
      OpenLoopControl alpha{Player::kFirst, 0, {}};
      for (std::size_t s : steps) {
        std::vector<int> row(s);
        for (auto& r : row) r = u(rng) > 0 ? 1 : 0;
        alpha.actions.push_back(row);
      }
      const auto beta = OpenLoopControl::constant(Player::kSecond, 0, steps, 0);
      const auto full = simulate_flow(xi, alpha, beta, spec, tree);
      for (int j = 1; j < 3; ++j) {
        const auto rest = simulate_flow(full.states[static_cast<std::size_t>(j)], alpha.tail(j),
                                        beta.tail(j), spec, tree);
        CHECK(rest.states.back().positions == full.states.back().positions);
        CHECK(rest.states.back().weights == full.states.back().weights);
      }
    }
  }

  TEST_CASE("non-finite coefficients raise a numeric error") {
    const auto spec = make_spec(Family::kLinearMf, {{"drift_x", 1e300}}, {0.0}, {0.0});
    const auto tree = exact_tree(1);
    const auto xi = RandomVector::at_root(EmpiricalMeasure::dirac({1e300}));
    const std::vector<int> zero = {0};
    CHECK_THROWS_AS(euler_step(xi, zero, zero, spec, tree), NumericError);
  }

  TEST_CASE("control shape mismatch") {
    const auto spec = make_spec(Family::kLinearMf, {}, {0.0}, {0.0});
    const auto tree = exact_tree(2);
    const auto xi = RandomVector::at_root(EmpiricalMeasure::dirac({0.0}));
    const std::vector<std::size_t> wrong = {1};
    const auto alpha = OpenLoopControl::constant(Player::kFirst, 0, wrong, 0);
    CHECK_THROWS_AS(simulate_flow(xi, alpha, alpha, spec, tree), InvalidInput);
  }

  TEST_CASE("drift respects the Lipschitz constant") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    const auto spec = make_spec(Family::kLinearMf,
                                {{"drift_x", 0.7}, {"drift_mean", -0.4}, {"sigma_x", 0.2}},
                                {0.0}, {0.0});
    const auto nu = JointActionLaw::dirac(1, 1, 0, 0);
    for (int trial = 0; trial < 50; ++trial) {
      const auto mu = EmpiricalMeasure::uniform(1, {u(rng), u(rng)});
      const auto mv = EmpiricalMeasure::uniform(1, {u(rng), u(rng)});
      const std::vector<double> x = {u(rng)};
      const std::vector<double> y = {u(rng)};
      double gx = 0.0;
      double gy = 0.0;
      spec.drift(x, LawMoments::of(mu), 0, 0, nu, {&gx, 1});
      spec.drift(y, LawMoments::of(mv), 0, 0, nu, {&gy, 1});
      const double bound = spec.lipschitz() * (std::abs(x[0] - y[0]) + wasserstein_q(mu, mv, 2.0));
      CHECK(std::abs(gx - gy) <= bound + 1e-12);
    }
  }
}
