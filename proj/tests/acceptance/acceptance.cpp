// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Every criterion also returns the numbers it computed so the whole
// suite can be replayed under a different worker count and compared bitwise.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mvgame/benchmarks.hpp"
#include "mvgame/controls.hpp"
#include "mvgame/dynamics.hpp"
#include "mvgame/errors.hpp"
#include "mvgame/game.hpp"
#include "mvgame/hamiltonian.hpp"
#include "mvgame/parallel.hpp"
#include "mvgame/wcalculus.hpp"

using namespace mvgame;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  std::vector<double> numbers;
  double seconds = 0.0;
};

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int pick(Rng& rng, int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

std::vector<Action> actions(const std::vector<double>& v, const char* prefix) {
  std::vector<Action> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back({prefix + std::to_string(i), v[i]});
  return out;
}

ProblemSpec spec_of(Family f, std::map<std::string, double> params, const std::vector<double>& a,
                    const std::vector<double>& b, double horizon = 1.0) {
  return ProblemSpec(f, 1, std::move(params), actions(a, "a"), actions(b, "b"), horizon);
}

ScenarioTree exact(int steps, int channels, double horizon = 1.0) {
  return build_scenario_tree(steps, 0.0, horizon, NoiseMode::kExactRademacher, channels, 1, 0);
}

std::vector<double> random_points(Rng& rng, int n, double lo = -1.5, double hi = 1.5) {
  std::vector<double> p(static_cast<std::size_t>(n));
  for (auto& x : p) x = uniform(rng, lo, hi);
  return p;
}

// Per-atom channels, or every atom on channel 0.
RandomVector root_of(const EmpiricalMeasure& mu, bool shared) {
  return RandomVector::at_root(mu, shared ? std::vector<int>(mu.size(), 0) : std::vector<int>{});
}

ProblemSpec random_bilinear(Rng& rng, double sigma) {
  return spec_of(Family::kBilinearGame,
                 {{"drift_const", uniform(rng, -0.3, 0.3)},
                  {"drift_ab", uniform(rng, -1, 1)},
                  {"drift_x", uniform(rng, -0.5, 0.5)},
                  {"drift_mean", uniform(rng, -0.5, 0.5)},
                  {"sigma", sigma},
                  {"run_abx", uniform(rng, -1, 1)},
                  {"run_ab", uniform(rng, -0.5, 0.5)},
                  {"run_a", uniform(rng, -0.5, 0.5)},
                  {"run_b", uniform(rng, -0.5, 0.5)},
                  {"term_x", uniform(rng, -1, 1)},
                  {"term_mean", uniform(rng, -0.5, 0.5)},
                  {"term_x_mean", uniform(rng, -1, 1)}},
                 {-1.0, 1.0}, {-1.0, 1.0});
}

OpenLoopControl random_control(Rng& rng, Player side, const std::vector<std::size_t>& sizes, int n) {
  OpenLoopControl c{side, 0, {}};
  for (std::size_t s : sizes) {
    std::vector<int> row(s);
    for (auto& r : row) r = pick(rng, n);
    c.actions.push_back(std::move(row));
  }
  return c;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// 1. Restarted simulations reproduce the original atoms bitwise.
Outcome flow_property() {
  Outcome o;
  Rng rng(101);
  int instances = 0;
  int restarts = 0;
  int mismatches = 0;
  for (int trial = 0; trial < 24; ++trial) {
    const int n = 1 + trial % 3;
    const int K = 1 + (trial / 3) % 3;
    const bool shared = trial % 2 == 1;
    const bool bilinear = trial % 4 >= 2;
    const ProblemSpec spec =
        bilinear ? random_bilinear(rng, trial % 3 == 0 ? 0.0 : 1.0)
                 : spec_of(Family::kLinearMf,
                           {{"drift_x", uniform(rng, -1, 1)}, {"drift_mean", uniform(rng, -1, 1)},
                            {"drift_a", 1.0}, {"drift_b", -0.5}, {"drift_nu_a", uniform(rng, -1, 1)},
                            {"sigma_const", 0.4}, {"sigma_x", uniform(rng, -0.3, 0.3)},
                            {"sigma_mean", uniform(rng, -0.3, 0.3)}},
                           {-1.0, 0.0, 1.0}, {-1.0, 1.0});
    const ScenarioTree tree = exact(K, shared ? 1 : n);
    const RandomVector xi = root_of(EmpiricalMeasure::uniform(1, random_points(rng, n)), shared);
    const auto sizes = atoms_per_step(xi, tree);
    const auto alpha = random_control(rng, Player::kFirst, sizes, static_cast<int>(spec.num_a()));
    const auto beta = random_control(rng, Player::kSecond, sizes, static_cast<int>(spec.num_b()));
    const Trajectory full = simulate_flow(xi, alpha, beta, spec, tree);
    ++instances;
    for (int j = 1; j <= K; ++j) {
      const Trajectory rest = simulate_flow(full.states[static_cast<std::size_t>(j)], alpha.tail(j),
                                            beta.tail(j), spec, tree);
      for (int k = j; k <= K; ++k) {
        const RandomVector& a = full.states[static_cast<std::size_t>(k)];
        const RandomVector& b = rest.states[static_cast<std::size_t>(k - j)];
        const bool same = a.positions.size() == b.positions.size() &&
                          std::memcmp(a.positions.data(), b.positions.data(),
                                      a.positions.size() * sizeof(double)) == 0 &&
                          a.weights == b.weights && a.nodes == b.nodes;
        if (!same) ++mismatches;
      }
      ++restarts;
    }
    for (double x : full.states.back().positions) o.numbers.push_back(x);
  }
  o.pass = instances >= 20 && mismatches == 0;
  o.detail = std::to_string(instances) + " instances, " + std::to_string(restarts) + " restarts, " +
             std::to_string(mismatches) + " mismatching levels";
  return o;
}

// 2. DPP at every grid split for both values.
Outcome dpp_property() {
  Outcome o;
  Rng rng(202);
  struct Shape {
    int atoms;
    bool shared;
    double sigma;
  };
  const std::vector<Shape> shapes = {{1, true, 0.0}, {1, true, 1.0}, {1, true, 0.0}, {1, true, 1.0},
                                     {2, true, 0.0}, {2, true, 1.0}, {2, true, 0.0}, {2, true, 1.0},
                                     {2, false, 0.0}, {2, false, 1.0}};
  double worst = 0.0;
  int checks = 0;
  for (const Shape& s : shapes) {
    const ProblemSpec spec = random_bilinear(rng, s.sigma);
    const ScenarioTree tree = exact(2, s.shared ? 1 : s.atoms);
    const RandomVector xi = root_of(EmpiricalMeasure::uniform(1, random_points(rng, s.atoms)), s.shared);
    for (int level = 0; level <= 2; ++level) {
      const DppReport r = dpp_check(0.0, tree.time(level), xi, spec, tree);
      worst = std::max({worst, r.lower_residual(), r.upper_residual()});
      o.numbers.insert(o.numbers.end(), {r.lower_value, r.lower_split, r.upper_value, r.upper_split});
      ++checks;
    }
  }
  o.pass = shapes.size() >= 10 && worst <= 1e-10;
  o.detail = std::to_string(shapes.size()) + " instances, " + std::to_string(checks) +
             " splits, max residual " + fmt(worst);
  return o;
}

// 3. The recursion against literal strategy enumeration.
Outcome strategy_oracle() {
  Outcome o;
  Rng rng(303);
  int ran = 0;
  int skipped = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 8; ++trial) {
    const int n = trial < 5 ? 1 : 2;
    const int K = trial % 5 == 4 ? 2 : 1;
    const ProblemSpec spec = random_bilinear(rng, trial % 2 ? 1.0 : 0.0);
    const ScenarioTree tree = exact(K, 1);
    const RandomVector xi = root_of(EmpiricalMeasure::uniform(1, random_points(rng, n)), true);
    try {
      for (ValueSide side : {ValueSide::kLower, ValueSide::kUpper}) {
        const double oracle = strategy_enumeration_value(0.0, xi, spec, tree, side);
        const double rec = side == ValueSide::kLower ? lower_value(0.0, xi, spec, tree).value
                                                     : upper_value(0.0, xi, spec, tree).value;
        worst = std::max(worst, std::abs(oracle - rec));
        o.numbers.insert(o.numbers.end(), {oracle, rec});
      }
      ++ran;
    } catch (const CapacityError&) {
      ++skipped;
    }
  }
  o.pass = ran >= 5 && worst <= 1e-12;
  o.detail = std::to_string(ran) + " instances (" + std::to_string(skipped) + " over the strategy cap), max |diff| " +
             fmt(worst);
  return o;
}

// 4. Relabelling atoms changes neither value nor the measure Hamiltonian.
Outcome law_invariance() {
  Outcome o;
  Rng rng(404);
  int instances = 0;
  int differences = 0;
  std::vector<std::size_t> identity = {0, 1, 2};
  for (int trial = 0; trial < 10; ++trial) {
    const bool shared = trial % 2 == 0;
    const int K = shared ? 2 : 1;
    const ProblemSpec spec = random_bilinear(rng, trial % 3 ? 1.0 : 0.0);
    const ScenarioTree tree = exact(K, shared ? 1 : 3);
    const EmpiricalMeasure mu(1, random_points(rng, 3), {0.5, 0.25, 0.25});
    const GameValues base = game_values(0.0, root_of(mu, shared), spec, tree);
    o.numbers.insert(o.numbers.end(), {base.lower.value, base.upper.value});
    auto perm = identity;
    while (std::next_permutation(perm.begin(), perm.end())) {
      const GameValues v = game_values(0.0, root_of(mu.permuted(perm), shared), spec, tree);
      if (v.lower.value != base.lower.value || v.upper.value != base.upper.value) ++differences;
    }
    ++instances;
  }
  int hinstances = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const ProblemSpec spec = spec_of(
        Family::kLinearMf,
        {{"drift_nu_a", uniform(rng, -1, 1)}, {"drift_nu_b", uniform(rng, -1, 1)}, {"drift_mean", uniform(rng, -1, 1)},
         {"drift_a", 1.0}, {"sigma_const", uniform(rng, 0, 1)}, {"run_a_nu_a", uniform(rng, -1, 1)},
         {"run_ab", uniform(rng, -1, 1)}, {"run_b_nu_b", uniform(rng, -1, 1)}},
        {-1.0, 0.0, 1.0}, {-1.0, 1.0});
    const EmpiricalMeasure mu = EmpiricalMeasure::uniform(1, random_points(rng, 3));
    const PMFields f{mu, random_points(rng, 3), random_points(rng, 3)};
    for (ValueSide side : {ValueSide::kLower, ValueSide::kUpper}) {
      for (int R : {1, 2}) {
        const double base = measure_hamiltonian(mu, f, spec, side, R);
        o.numbers.push_back(base);
        auto perm = identity;
        while (std::next_permutation(perm.begin(), perm.end())) {
          if (measure_hamiltonian(mu.permuted(perm), f.permuted(perm), spec, side, R) != base) ++differences;
        }
      }
    }
    ++hinstances;
  }
  o.pass = instances >= 10 && hinstances >= 10 && differences == 0;
  o.detail = std::to_string(instances) + " game and " + std::to_string(hinstances) +
             " Hamiltonian instances, all permutations, " + std::to_string(differences) + " differences";
  return o;
}

// 5. Without mean-field terms the value is the average of v^B.
Outcome classical_identity() {
  Outcome o;
  Rng rng(505);
  double worst = 0.0;
  int instances = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 1 + trial % 2;
    const int K = 1 + (trial / 2) % 2;
    const bool shared = trial % 4 < 2;
    const ProblemSpec spec = spec_of(
        Family::kLinearMf,
        {{"drift_x", uniform(rng, -0.5, 0.5)}, {"drift_a", 1.0}, {"sigma_const", trial % 3 ? 0.8 : 0.0},
         {"sigma_x", uniform(rng, -0.2, 0.2)}, {"run_x", uniform(rng, -1, 1)}, {"run_a", uniform(rng, -0.5, 0.5)},
         {"run_const", uniform(rng, -1, 1)}, {"term_x", uniform(rng, -1, 1)}, {"term_xx", -1.0}},
        {-1.0, 0.5, 1.0}, {0.0});
    const ScenarioTree tree = exact(K, shared ? 1 : n);
    std::vector<double> weights = {1.0};
    if (n == 2) weights = {0.3, 0.7};
    const EmpiricalMeasure mu(1, random_points(rng, n), weights);
    const RandomVector xi = root_of(mu, shared);
    const double v = lower_value(0.0, xi, spec, tree).value;
    double avg = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      avg += mu.weight(i) * classical_mdp_value(spec, 0.0, mu.point(i), tree, shared ? 0 : static_cast<int>(i));
    }
    worst = std::max(worst, std::abs(v - avg));
    o.numbers.insert(o.numbers.end(), {v, avg});
    ++instances;
  }
  o.pass = instances >= 10 && worst <= 1e-12;
  o.detail = std::to_string(instances) + " instances, max |v - avg v^B| " + fmt(worst);
  return o;
}

// 6. Enumerated measure Hamiltonian against the pointwise reduction.
Outcome hamiltonian_reduction() {
  Outcome o;
  Rng rng(606);
  double worst = 0.0;
  int instances = 0;
  for (int trial = 0; trial < 24; ++trial) {
    const int support = 1 + trial % 5;
    const int na = 1 + trial % 3;
    const int nb = 1 + (trial / 3) % 3;
    std::vector<double> a(static_cast<std::size_t>(na));
    std::vector<double> b(static_cast<std::size_t>(nb));
    for (auto& x : a) x = uniform(rng, -1, 1);
    for (auto& x : b) x = uniform(rng, -1, 1);
    const ProblemSpec spec =
        trial % 2 ? random_bilinear(rng, uniform(rng, 0, 1))
                  : spec_of(Family::kLinearMf,
                            {{"drift_a", uniform(rng, -1, 1)}, {"drift_b", uniform(rng, -1, 1)},
                             {"drift_x", uniform(rng, -1, 1)}, {"drift_mean", uniform(rng, -1, 1)},
                             {"sigma_const", uniform(rng, -1, 1)}, {"sigma_x", uniform(rng, -1, 1)},
                             {"run_ab", uniform(rng, -1, 1)}, {"run_a", uniform(rng, -1, 1)},
                             {"run_b", uniform(rng, -1, 1)}, {"run_mean", uniform(rng, -1, 1)}},
                            a, b);
    std::vector<double> w(static_cast<std::size_t>(support));
    double s = 0.0;
    for (auto& x : w) s += (x = uniform(rng, 0.1, 1.0));
    for (auto& x : w) x /= s;
    w.back() = 1.0 - std::accumulate(w.begin(), w.end() - 1, 0.0);
    const EmpiricalMeasure mu(1, random_points(rng, support), w);
    const PMFields f{mu, random_points(rng, support), random_points(rng, support)};
    for (ValueSide side : {ValueSide::kLower, ValueSide::kUpper}) {
      const double full = measure_hamiltonian(mu, f, spec, side);
      const double reduced = pointwise_reduced_hamiltonian(mu, f, spec, side);
      worst = std::max(worst, std::abs(full - reduced));
      o.numbers.insert(o.numbers.end(), {full, reduced});
    }
    ++instances;
  }
  o.pass = instances >= 20 && worst <= 1e-12;
  o.detail = std::to_string(instances) + " instances, max |enumerated - pointwise| " + fmt(worst);
  return o;
}

// 7. Finite-difference Lions gradients on the moment zoo.
Outcome lions_derivatives() {
  Outcome o;
  Rng rng(707);
  std::vector<double> steps;
  for (int k = 0; k <= 6; ++k) steps.push_back(1e-2 / std::pow(2.0, k));
  steps.push_back(1e-4);
  double worst_error = 0.0;
  double lo = 1e300;
  double hi = -1e300;
  int functionals = 0;
  int ordered = 0;
  for (std::size_t dim : {std::size_t{1}, std::size_t{2}}) {
    const int n = dim == 1 ? 16 : 8;
    const EmpiricalMeasure mu = EmpiricalMeasure::uniform(dim, random_points(rng, n * static_cast<int>(dim)));
    for (const TestFunctional& theta : moment_functional_zoo(dim)) {
      const auto an = analytic_gradient(theta, mu);
      const double err = relative_field_error(lions_gradient(theta, mu, 1e-4), an);
      worst_error = std::max(worst_error, err);
      o.numbers.push_back(err);
      ++functionals;
      std::vector<double> errs;
      for (double h : steps) errs.push_back(relative_field_error(lions_gradient(theta, mu, h), an));
      if (errs.front() < 1e-10) continue;
      ++ordered;
      // Ratios per halving of h, scaled to a halving where the last step is not one.
      for (std::size_t k = 0; k + 1 < errs.size(); ++k) {
        const double ratio = errs[k] / errs[k + 1] * std::pow(steps[k + 1] / steps[k] * 2.0, 2.0);
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
        o.numbers.push_back(ratio);
      }
    }
  }
  o.pass = functionals >= 6 && worst_error <= 1e-5 && ordered >= 6 && lo >= 3.0 && hi <= 5.0;
  o.detail = std::to_string(functionals) + " functional/dimension pairs, max relative error " + fmt(worst_error) +
             ", " + std::to_string(ordered) + " with order ratios in [" + fmt(lo) + ", " + fmt(hi) + "]";
  return o;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double ito_max(const std::string& name, const ProblemSpec& spec, const EmpiricalMeasure& mu, int K) {
  const ScenarioTree tree = exact(K, 1);
  const RandomVector xi = root_of(mu, true);
  const auto sizes = atoms_per_step(xi, tree);
  const Trajectory flow = simulate_flow(xi, OpenLoopControl::constant(Player::kFirst, 0, sizes, 0),
                                        OpenLoopControl::constant(Player::kSecond, 0, sizes, 0), spec, tree);
  return max_abs(ito_flow_residual(functional_by_name(name, 1), flow, tree));
}

// 8. Ito formula along discrete flows.
Outcome ito_flows() {
  Outcome o;
  const EmpiricalMeasure mu = EmpiricalMeasure::uniform(1, {-0.8, 0.1, 0.9});
  const ProblemSpec flow_a = spec_of(Family::kLinearMf,
                                     {{"drift_x", -0.5}, {"drift_mean", 0.3}, {"sigma_const", 0.6}}, {0.0}, {0.0});
  const ProblemSpec flow_b = spec_of(Family::kLinearMf,
                                     {{"drift_const", 0.4}, {"drift_x", 0.2}, {"sigma_const", 0.3}, {"sigma_x", 0.2}},
                                     {0.0}, {0.0});
  const std::vector<std::pair<std::string, const ProblemSpec*>> pairs = {
      {"second", &flow_a}, {"variance", &flow_a}, {"log_second", &flow_a}, {"cubic", &flow_b}, {"mean_sq", &flow_b}};
  double lo = 1e300;
  double hi = -1e300;
  for (const auto& [name, spec] : pairs) {
    std::vector<double> r;
    for (int K : {4, 8, 16}) r.push_back(ito_max(name, *spec, mu, K));
    o.numbers.insert(o.numbers.end(), r.begin(), r.end());
    for (std::size_t k = 0; k + 1 < r.size(); ++k) {
      lo = std::min(lo, r[k] / r[k + 1]);
      hi = std::max(hi, r[k] / r[k + 1]);
    }
  }
  const ProblemSpec still = spec_of(Family::kLinearMf, {}, {0.0}, {0.0});
  const ProblemSpec drift = spec_of(Family::kLinearMf, {{"drift_const", 0.7}, {"sigma_const", 1.3}}, {0.0}, {0.0});
  const ProblemSpec noise = spec_of(Family::kLinearMf, {{"sigma_const", 1.0}}, {0.0}, {0.0});
  double exact_worst = 0.0;
  for (int K : {4, 8, 16}) {
    for (const char* name : {"variance", "cubic", "quartic"}) exact_worst = std::max(exact_worst, ito_max(name, still, mu, K));
    exact_worst = std::max(exact_worst, ito_max("mean", drift, mu, K));
    exact_worst = std::max(exact_worst, ito_max("mean", flow_b, mu, K));
    exact_worst = std::max(exact_worst, ito_max("second", noise, mu, K));
  }
  o.numbers.push_back(exact_worst);
  o.pass = pairs.size() >= 3 && lo >= 1.5 && hi <= 3.0 && exact_worst <= 1e-12;
  o.detail = std::to_string(pairs.size()) + " pairs, halving ratios in [" + fmt(lo) + ", " + fmt(hi) +
             "], exact cases max " + fmt(exact_worst);
  return o;
}

// 9. Viscosity residuals of smooth candidates.
Outcome viscosity() {
  Outcome o;
  Rng rng(909);
  LqParameters p;
  p.theta = -0.3;
  p.theta_bar = 0.2;
  p.sigma = 0.5;
  p.kappa_v = 1.0;
  p.kappa_m = 0.5;
  p.rho = 0.8;
  p.lambda_v = 0.4;
  p.lambda_m = 0.2;
  const double radius = 4.0;
  const ProblemSpec spec = lq_problem(p, radius, 8001);
  const ValueCandidate cand = riccati_candidate(p);
  double worst = 0.0;
  int samples = 0;
  int clipped = 0;
  for (int j = 0; j < 24; ++j) {
    const double t = 0.95 * j / 24.0;
    const EmpiricalMeasure mu = EmpiricalMeasure::uniform(1, random_points(rng, 2 + j % 4));
    if (lq_max_optimal_action(p, t, mu) >= radius) {
      ++clipped;
      continue;
    }
    const double r = viscosity_residual(cand, t, mu, spec, ValueSide::kLower);
    worst = std::max(worst, std::abs(r));
    o.numbers.push_back(r);
    ++samples;
  }
  double identity_worst = 0.0;
  int identity_samples = 0;
  for (int trial = 0; trial < 6; ++trial) {
    const double c1 = uniform(rng, -1, 1);
    const double c2 = uniform(rng, -1, 1);
    const double c3 = uniform(rng, -1, 0);
    const ProblemSpec cspec = spec_of(Family::kLinearMf,
                                      {{"drift_a", 1.0}, {"drift_x", uniform(rng, -0.5, 0.5)},
                                       {"sigma_const", uniform(rng, 0.2, 1.0)}, {"run_x", uniform(rng, -1, 1)},
                                       {"run_a", uniform(rng, -0.5, 0.5)}, {"term_xx", -1.0}},
                                      {-1.0, 0.0, 1.0}, {0.0});
    ClassicalFunction v;
    v.value = [=](double t, std::span<const double> x) { return c1 * x[0] + c3 * x[0] * x[0] + c2 * (1.0 - t); };
    v.time_derivative = [=](double, std::span<const double>) { return -c2; };
    v.gradient = [=](double, std::span<const double> x) { return std::vector<double>{c1 + 2.0 * c3 * x[0]}; };
    v.hessian = [=](double, std::span<const double>) { return std::vector<double>{2.0 * c3}; };
    const ValueCandidate avg = classical_average_candidate(v, cspec);
    for (double t : {0.0, 0.5}) {
      const EmpiricalMeasure mu = EmpiricalMeasure::uniform(1, random_points(rng, 3));
      double expected = 0.0;
      for (std::size_t i = 0; i < mu.size(); ++i) expected += classical_hjbi_residual(v, cspec, t, mu.point(i)) / 3.0;
      const double got = viscosity_residual(avg, t, mu, cspec, ValueSide::kLower);
      identity_worst = std::max(identity_worst, std::abs(got - expected));
      o.numbers.insert(o.numbers.end(), {got, expected});
      ++identity_samples;
    }
  }
  o.pass = samples >= 20 && worst <= 1e-6 && identity_worst <= 1e-9;
  o.detail = std::to_string(samples) + " LQ samples (" + std::to_string(clipped) + " clipped), max |residual| " +
             fmt(worst) + "; " + std::to_string(identity_samples) + " average-candidate samples, max |diff| " +
             fmt(identity_worst);
  return o;
}

// 10. Isaacs gap on separable and bilinear instances, and v <= u throughout.
Outcome isaacs_gap_check() {
  Outcome o;
  Rng rng(1010);
  double separable_worst = 0.0;
  int separable = 0;
  for (int trial = 0; trial < 6; ++trial) {
    const ProblemSpec spec = spec_of(Family::kLinearMf,
                                     {{"drift_a", uniform(rng, -1, 1)}, {"drift_b", uniform(rng, -1, 1)},
                                      {"sigma_const", uniform(rng, 0, 1)}, {"run_a", uniform(rng, -1, 1)},
                                      {"run_b", uniform(rng, -1, 1)}, {"term_x", uniform(rng, -1, 1)}},
                                     {-1.0, 1.0}, {-1.0, 1.0});
    const EmpiricalMeasure mu = EmpiricalMeasure::uniform(1, random_points(rng, 2));
    const PMFields f{mu, random_points(rng, 2), random_points(rng, 2)};
    const double hgap = isaacs_gap(mu, f, spec);
    const GameValues v = game_values(0.0, root_of(mu, trial % 2 == 0), spec, exact(2, trial % 2 == 0 ? 1 : 2));
    separable_worst = std::max({separable_worst, std::abs(hgap), std::abs(v.gap())});
    o.numbers.insert(o.numbers.end(), {hgap, v.lower.value, v.upper.value});
    ++separable;
  }
  double bilinear_worst = 0.0;
  int bilinear = 0;
  const std::vector<double> acts = {-1.0, 1.0};
  for (double dt : {1.0, 0.5, 0.25}) {
    for (double x : {1.0, -2.0, 0.5}) {
      const ProblemSpec spec = spec_of(Family::kBilinearGame, {{"run_abx", 1.0}}, acts, acts, dt);
      const GameValues v = game_values(0.0, RandomVector::at_root(EmpiricalMeasure::dirac({x})), spec, exact(1, 1, dt));
      double supinf = -1e300;
      double infsup = 1e300;
      for (double a : acts) supinf = std::max(supinf, std::min(a * acts[0] * x, a * acts[1] * x));
      for (double b : acts) infsup = std::min(infsup, std::max(acts[0] * b * x, acts[1] * b * x));
      bilinear_worst = std::max({bilinear_worst, std::abs(v.lower.value + dt * std::abs(x)),
                                 std::abs(v.upper.value - dt * std::abs(x)),
                                 std::abs(v.gap() - dt * (infsup - supinf))});
      o.numbers.insert(o.numbers.end(), {v.lower.value, v.upper.value});
      ++bilinear;
    }
  }
  const std::uint64_t checks = value_order_checks();
  o.pass = separable_worst <= 1e-12 && bilinear_worst <= 1e-15 && checks > 0;
  o.detail = std::to_string(separable) + " separable instances, max gap " + fmt(separable_worst) + "; " +
             std::to_string(bilinear) + " bilinear instances, max deviation " + fmt(bilinear_worst) + "; v <= u on " +
             std::to_string(checks) + " computed pairs";
  return o;
}

struct Criterion {
  const char* id;
  const char* name;
  Outcome (*run)();
  double time_limit;  // seconds, 0 for none
};

Outcome guarded(const Criterion& c) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = c.run();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("error: ") + e.what();
  }
  o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (c.time_limit > 0.0 && o.seconds >= c.time_limit) {
    o.pass = false;
    o.detail += " (over the " + fmt(c.time_limit) + " s budget)";
  }
  return o;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"AC1", "flow property", flow_property, 10.0},
      {"AC2", "dynamic programming", dpp_property, 60.0},
      {"AC3", "strategy oracle", strategy_oracle, 0.0},
      {"AC4", "law invariance", law_invariance, 0.0},
      {"AC5", "classical identity", classical_identity, 0.0},
      {"AC6", "Hamiltonian reduction", hamiltonian_reduction, 0.0},
      {"AC7", "Lions derivatives", lions_derivatives, 0.0},
      {"AC8", "Ito along flows", ito_flows, 0.0},
      {"AC9", "viscosity residual", viscosity, 0.0},
      {"AC10", "Isaacs gap", isaacs_gap_check, 0.0},
  };

  bool all = true;
  std::vector<std::vector<double>> first;
  set_thread_count(4);
  for (const Criterion& c : criteria) {
    const Outcome o = guarded(c);
    all = all && o.pass;
    first.push_back(o.numbers);
    std::printf("%s %s %s: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), o.seconds);
    std::fflush(stdout);
  }

  // Replay on one worker and compare every number bitwise.
  set_thread_count(1);
  std::size_t compared = 0;
  std::size_t differing = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Criterion replay = criteria[i];
    replay.time_limit = 0.0;
    const Outcome o = guarded(replay);
    if (o.numbers.size() != first[i].size()) {
      differing += std::max(o.numbers.size(), first[i].size());
      continue;
    }
    for (std::size_t k = 0; k < o.numbers.size(); ++k) {
      ++compared;
      if (std::memcmp(&o.numbers[k], &first[i][k], sizeof(double)) != 0) ++differing;
    }
  }
  const bool det = differing == 0 && compared > 0;
  all = all && det;
  std::printf("%s AC11 determinism: %zu numbers from 4 workers vs 1 worker, %zu differ\n", det ? "PASS" : "FAIL",
              compared, differing);
  return all ? 0 : 1;
}
