#include <cmath>
#include <random>

#include "doctest.h"
#include "mvgame/benchmarks.hpp"
#include "mvgame/errors.hpp"
#include "mvgame/game.hpp"
#include "support.hpp"

using namespace mvgame;
using test::exact_tree;
using test::make_spec;

namespace {

// Solution of y' = -(y - y1)(y - y2) / rho with y(T) = yT, from the invariant
// (y - y1) / (y - y2) = R(T) exp((y1 - y2)(T - t) / rho).
double scalar_riccati(double y1, double y2, double rho, double yT, double T, double t) {
  const double R = (yT - y1) / (yT - y2) * std::exp((y1 - y2) * (T - t) / rho);
  return (y1 - R * y2) / (1.0 - R);
}

// Roots of y^2 + 2 theta rho y - rho kappa.
std::pair<double, double> roots(double theta, double rho, double kappa) {
  const double disc = std::sqrt(theta * theta * rho * rho + rho * kappa);
  return {-theta * rho + disc, -theta * rho - disc};
}

LqParameters sample_params() {
  LqParameters p;
  p.theta = -0.3;
  p.theta_bar = 0.2;
  p.sigma = 0.5;
  p.kappa_v = 1.0;
  p.kappa_m = 0.5;
  p.rho = 0.8;
  p.lambda_v = 0.4;
  p.lambda_m = 0.2;
  p.horizon = 1.0;
  return p;
}

}  // namespace

TEST_SUITE("benchmarks") {
  TEST_CASE("zero cost gives zero value") {
    LqParameters p;
    p.theta = 0.4;
    p.sigma = 1.0;
    const auto mu = EmpiricalMeasure::uniform(1, {-1.0, 2.0});
    CHECK(lq_riccati_value(p, 0.0, mu) == 0.0);
    CHECK(lq_riccati_value(p, 0.6, mu) == 0.0);
  }

  TEST_CASE("terminal identity") {
    const auto p = sample_params();
    const auto mu = EmpiricalMeasure::uniform(1, {-1.0, 0.5, 2.0});
    const double m = mu.mean()[0];
    double var = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) var += (mu.point(i)[0] - m) * (mu.point(i)[0] - m) / 3.0;
    CHECK(lq_riccati_value(p, 1.0, mu) == doctest::Approx(-p.lambda_v * var - p.lambda_m * m * m).epsilon(1e-15));
    const auto cand = riccati_candidate(p);
    CHECK(cand.terminal_mismatch(mu) <= 1e-15);
  }

  TEST_CASE("Riccati paths match the scalar closed form") {
    const auto p = sample_params();
    const auto [p1, p2] = roots(p.theta, p.rho, p.kappa_v);
    const auto [q1, q2] = roots(p.theta + p.theta_bar, p.rho, p.kappa_m);
    for (double t : {0.0, 0.25, 0.5, 0.9}) {
      const auto y = riccati_state(p, t);
      CHECK(y.P == doctest::Approx(scalar_riccati(p1, p2, p.rho, -p.lambda_v, 1.0, t)).epsilon(1e-9));
      CHECK(y.Q == doctest::Approx(scalar_riccati(q1, q2, p.rho, -p.lambda_m, 1.0, t)).epsilon(1e-9));
      const int n = 2000;
      double integral = 0.0;
      const double h = (1.0 - t) / n;
      for (int k = 0; k <= n; ++k) {
        const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
        integral += w * scalar_riccati(p1, p2, p.rho, -p.lambda_v, 1.0, t + k * h);
      }
      integral *= h / 3.0;
      CHECK(y.r == doctest::Approx(p.sigma * p.sigma * integral).epsilon(1e-9));
    }
    CHECK(solve_riccati(p, 0.0).max_ode_residual() <= 1e-8);
  }

  TEST_CASE("blow-up is reported with its time") {
    LqParameters p;
    p.lambda_v = -5.0;
    p.horizon = 1.0;
    try {
      riccati_state(p, 0.0);
      FAIL("expected a horizon error");
    } catch (const HorizonError& e) {
      CHECK(e.blowup_time() == doctest::Approx(0.8).epsilon(1e-3));
    }
    CHECK_NOTHROW(riccati_state(p, 0.85));
  }

  TEST_CASE("Riccati candidate solves the master equation") {
    const auto p = sample_params();
    const auto spec = lq_problem(p, 4.0, 8001);
    const auto cand = riccati_candidate(p);
    const auto mu = EmpiricalMeasure::uniform(1, {-0.8, 0.1, 0.6, 1.4});
    REQUIRE(lq_max_optimal_action(p, 0.3, mu) < 4.0);
    for (double t : {0.0, 0.3, 0.7}) {
      CHECK(std::abs(viscosity_residual(cand, t, mu, spec, ValueSide::kLower)) <= 1e-6);
    }
  }

  TEST_CASE("classical MDP examples") {
    const auto tree = exact_tree(2);
    const std::vector<double> x = {0.7};
    const auto identity = make_spec(Family::kLinearMf, {{"term_x", 1.0}}, {0.0}, {0.0});
    CHECK(classical_mdp_value(identity, 0.0, x, tree) == 0.7);
    const auto pick = make_spec(Family::kLinearMf, {{"run_a", 1.0}}, {0.0, 1.0}, {0.0});
    CHECK(classical_mdp_value(pick, 0.0, x, tree) == doctest::Approx(1.0).epsilon(1e-15));
    const auto late = exact_tree(2, 1, 0.5);
    CHECK(classical_mdp_value(pick, 0.5, x, late) == doctest::Approx(0.5).epsilon(1e-15));
    const auto drifted = make_spec(Family::kLinearMf, {{"drift_a", 1.0}, {"term_x", 1.0}}, {-1.0, 1.0}, {0.0});
    CHECK(classical_mdp_value(drifted, 0.0, x, tree) == doctest::Approx(1.7).epsilon(1e-15));
    const auto table = classical_mdp_table(drifted, 0.0, x, tree);
    CHECK(table.max_dpp_residual(drifted, tree) <= 1e-12);
    CHECK(table.entries.front().best_action == 1);
  }

  TEST_CASE("classical MDP contracts") {
    const auto tree = exact_tree(1);
    const std::vector<double> x = {0.0};
    const auto mean_field = make_spec(Family::kLinearMf, {{"drift_mean", 1.0}}, {0.0}, {0.0});
    CHECK_THROWS_AS(classical_mdp_value(mean_field, 0.0, x, tree), ContractViolation);
    const auto two_b = make_spec(Family::kLinearMf, {}, {0.0}, {0.0, 1.0});
    CHECK_THROWS_AS(classical_mdp_value(two_b, 0.0, x, tree), ContractViolation);
    const auto deep = exact_tree(12);
    const auto spec = make_spec(Family::kLinearMf, {}, {0.0, 1.0}, {0.0});
    CHECK_THROWS_AS(classical_mdp_value(spec, 0.0, x, deep, 0, 1000), CapacityError);
  }

  TEST_CASE("MDP average equals the game value without mean-field terms") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 4; ++trial) {
      const auto spec = make_spec(Family::kLinearMf,
                                  {{"drift_a", 1.0}, {"drift_x", u(rng)}, {"sigma_const", 0.5 + 0.5 * u(rng)},
                                   {"run_x", u(rng)}, {"run_a", u(rng)}, {"term_xx", -1.0}},
                                  {-1.0, 0.0, 1.0}, {0.0});
      const auto tree = exact_tree(2);
      const auto mu = EmpiricalMeasure::uniform(1, {u(rng), u(rng)});
      const auto xi = RandomVector::at_root(mu, {0, 0});
      double avg = 0.0;
      for (std::size_t i = 0; i < mu.size(); ++i) avg += 0.5 * classical_mdp_value(spec, 0.0, mu.point(i), tree);
      CHECK(std::abs(lower_value(0.0, xi, spec, tree).value - avg) <= 1e-12);
    }
  }

  TEST_CASE("classical average candidate identity") {
    const auto spec = make_spec(Family::kLinearMf,
                                {{"drift_a", 1.0}, {"drift_x", -0.3}, {"sigma_const", 0.8}, {"run_x", 0.5},
                                 {"run_a", -0.2}, {"term_xx", -1.0}},
                                {-1.0, 0.0, 1.0}, {0.0});
    ClassicalFunction v;
    v.value = [](double t, std::span<const double> x) { return 0.3 + x[0] - 0.5 * x[0] * x[0] + 0.2 * t; };
    v.time_derivative = [](double, std::span<const double>) { return 0.2; };
    v.gradient = [](double, std::span<const double> x) { return std::vector<double>{1.0 - x[0]}; };
    v.hessian = [](double, std::span<const double>) { return std::vector<double>{-1.0}; };
    const auto cand = classical_average_candidate(v, spec);
    const auto mu = EmpiricalMeasure::uniform(1, {-0.5, 0.25, 1.5});
    for (double t : {0.0, 0.4}) {
      double avg = 0.0;
      for (std::size_t i = 0; i < mu.size(); ++i) avg += classical_hjbi_residual(v, spec, t, mu.point(i)) / 3.0;
      CHECK(std::abs(viscosity_residual(cand, t, mu, spec, ValueSide::kLower) - avg) <= 1e-9);
    }
  }

  TEST_CASE("LQ value against a coarse game") {
    // Agreement is only O(dt + action spacing); the measured gap is reported.
    auto p = sample_params();
    p.theta_bar = 0.0;
    const auto mu = EmpiricalMeasure::dirac({0.5});
    const double exact = lq_riccati_value(p, 0.0, mu);
    const double spacing = 0.25;
    for (int steps : {1, 2}) {
      const auto spec = lq_problem(p, 1.0, 9);
      const auto tree = exact_tree(steps);
      const double game = lower_value(0.0, RandomVector::at_root(mu, {0}), spec, tree).value;
      const double gap = std::abs(game - exact);
      MESSAGE("K=" << steps << " game=" << game << " riccati=" << exact << " gap=" << gap);
      CHECK(gap <= tree.dt() + spacing);
    }
  }
}
