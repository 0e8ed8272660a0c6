#include "mvgame/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"

#include "mvgame/benchmarks.hpp"
#include "mvgame/dynamics.hpp"
#include "mvgame/errors.hpp"
#include "mvgame/game.hpp"
#include "mvgame/hamiltonian.hpp"
#include "mvgame/summation.hpp"
#include "mvgame/wcalculus.hpp"

namespace mvgame {
namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string idx(const std::string& key, std::size_t i) { return key + "[" + std::to_string(i) + "]"; }

// Deterministic relabelling number p of n atoms.
std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed, int p) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  if (p == 0) {
    std::reverse(perm.begin(), perm.end());
    return perm;
  }
  std::mt19937_64 rng(seed * 1000003u + static_cast<std::uint64_t>(p));
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

OpenLoopControl make_control(const ControlSpec& c, Player side, const RandomVector& xi,
                             const ScenarioTree& tree) {
  const auto atoms = atoms_per_step(xi, tree);
  if (std::holds_alternative<int>(c)) {
    return OpenLoopControl::constant(side, xi.level, atoms, std::get<int>(c));
  }
  return OpenLoopControl{side, xi.level, std::get<std::vector<std::vector<int>>>(c)};
}

TreeOptions with_steps(TreeOptions t, int steps) {
  t.steps = steps;
  return t;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

std::size_t count_bitwise_mismatch(const RandomVector& a, const RandomVector& b) {
  if (a.positions.size() != b.positions.size() || a.weights.size() != b.weights.size()) {
    return std::max(a.positions.size(), b.positions.size());
  }
  std::size_t bad = 0;
  for (std::size_t i = 0; i < a.positions.size(); ++i) {
    if (std::memcmp(&a.positions[i], &b.positions[i], sizeof(double)) != 0) ++bad;
  }
  for (std::size_t i = 0; i < a.weights.size(); ++i) {
    if (std::memcmp(&a.weights[i], &b.weights[i], sizeof(double)) != 0) ++bad;
  }
  if (a.nodes != b.nodes || a.channels != b.channels) ++bad;
  return bad;
}

std::vector<std::string> functional_names(const std::vector<std::string>& given, std::size_t dim) {
  if (!given.empty()) return given;
  std::vector<std::string> names;
  for (const auto& f : moment_functional_zoo(dim)) names.push_back(f.name);
  return names;
}

// Affine-plus-quadratic v(t, x) = c0 + c1 sum x + c2 (T - t) + c3 |x|^2.
ClassicalFunction affine_function(std::vector<double> c, double horizon, std::size_t n) {
  if (c.empty()) c = {0.0, 1.0, 0.0, 0.0};
  if (c.size() != 4) throw InvalidInput("classical_affine needs 4 coefficients (c0, c1, c2, c3)");
  ClassicalFunction v;
  v.value = [c, horizon](double t, std::span<const double> x) {
    double s = c[0] + c[2] * (horizon - t);
    for (double xi : x) s += c[1] * xi + c[3] * xi * xi;
    return s;
  };
  v.time_derivative = [c](double, std::span<const double>) { return -c[2]; };
  v.gradient = [c](double, std::span<const double> x) {
    std::vector<double> g(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) g[j] = c[1] + 2.0 * c[3] * x[j];
    return g;
  };
  v.hessian = [c, n](double, std::span<const double>) {
    std::vector<double> h(n * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) h[j * n + j] = 2.0 * c[3];
    return h;
  };
  return v;
}

// True when theta is affine along the flow: no second-order field and a
// gradient that is one constant on every atom of every level.
bool linear_along(const TestFunctional& theta, const std::vector<EmpiricalMeasure>& flow) {
  if (!theta.gradient || !theta.hessian) return false;
  std::optional<std::vector<double>> first;
  for (const auto& mu : flow) {
    const auto h = theta.hessian(mu);
    if (max_abs(h) != 0.0) return false;
    const auto g = theta.gradient(mu);
    const std::size_t n = mu.dim();
    for (std::size_t i = 0; i < mu.size(); ++i) {
      std::vector<double> gi(g.begin() + static_cast<std::ptrdiff_t>(i * n),
                             g.begin() + static_cast<std::ptrdiff_t>((i + 1) * n));
      if (!first) first = gi;
      if (gi != *first) return false;
    }
  }
  return true;
}

bool zero_dynamics(const Trajectory& flow) {
  for (const auto& r : flow.records) {
    if (max_abs(r.drift) != 0.0 || max_abs(r.diffusion) != 0.0) return false;
  }
  return true;
}

// H(a, b) - H(a, 0) - H(0, b) + H(0, 0) vanishes on every atom.
bool separable_hamiltonian(const EmpiricalMeasure& mu, const PMFields& f, const ProblemSpec& spec) {
  const LawMoments m = LawMoments::of(mu);
  const JointActionLaw nu = JointActionLaw::dirac(spec.num_a(), spec.num_b(), 0, 0);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    auto h = [&](std::size_t a, std::size_t b) {
      return hamiltonian_value(spec, mu.point(i), m, static_cast<int>(a), static_cast<int>(b), nu,
                               f.p_at(i), f.M_at(i));
    };
    const double h00 = h(0, 0);
    for (std::size_t a = 0; a < spec.num_a(); ++a) {
      for (std::size_t b = 0; b < spec.num_b(); ++b) {
        const double cross = h(a, b) - h(a, 0) - h(0, b) + h00;
        if (std::abs(cross) > 1e-12 * std::max(1.0, std::abs(h00))) return false;
      }
    }
  }
  return true;
}

// Sample measure j for residual checks: the initial law stretched and
// shifted by counter-based normal draws.
EmpiricalMeasure sample_measure(const EmpiricalMeasure& mu, std::uint64_t seed, int j) {
  if (j == 0) return mu;
  std::vector<double> pts = mu.points();
  const double scale = 1.0 + 0.25 * counter_normal(seed, 7, static_cast<std::uint64_t>(j), 0, 0);
  for (std::size_t k = 0; k < pts.size(); ++k) {
    pts[k] = scale * pts[k] + 0.25 * counter_normal(seed, 7, static_cast<std::uint64_t>(j), 1, k);
  }
  return EmpiricalMeasure(mu.dim(), std::move(pts), mu.weights());
}

struct Context {
  const ExperimentConfig& c;
  Report& r;
  const ProblemSpec& spec;
  double t0;
  std::uint64_t cap;

  RandomVector root() const {
    return RandomVector::at_root(c.law(), c.channel_map(), c.randomization_atoms);
  }
};

void run_simulate(Context& x) {
  const ScenarioTree tree(x.c.tree);
  const RandomVector xi = x.root();
  const OpenLoopControl alpha = make_control(x.c.params.alpha, Player::kFirst, xi, tree);
  const OpenLoopControl beta = make_control(x.c.params.beta, Player::kSecond, xi, tree);
  const Trajectory flow = simulate_flow(xi, alpha, beta, x.spec, tree);
  for (std::size_t k = 0; k < flow.states.size(); ++k) {
    const LawMoments m = flow.states[k].moments();
    for (std::size_t j = 0; j < m.mean.size(); ++j) {
      x.r.value("mean[" + std::to_string(k) + "][" + std::to_string(j) + "]", m.mean[j]);
    }
    x.r.value(idx("second_moment", k), flow.states[k].absolute_moment(2.0));
  }
  x.r.value("payoff", evaluate_payoff(x.t0, xi, alpha, beta, x.spec, tree));

  const int restart = x.c.params.restart_level.value_or(tree.steps() / 2);
  const RandomVector& mid = flow.states[static_cast<std::size_t>(restart)];
  const Trajectory again = simulate_flow(mid, alpha.tail(restart), beta.tail(restart), x.spec, tree);
  std::size_t bad = 0;
  for (std::size_t k = 0; k < again.states.size(); ++k) {
    bad += count_bitwise_mismatch(again.states[k], flow.states[static_cast<std::size_t>(restart) + k]);
  }
  x.r.value("restart_level", restart);
  x.r.check("flow_restart_mismatches", static_cast<double>(bad), x.c.tolerance("flow"));
}

void run_value(Context& x) {
  const ScenarioTree tree(x.c.tree);
  const RandomVector xi = x.root();
  const GameValues gv = game_values(x.t0, xi, x.spec, tree, x.cap);
  x.r.value("lower_value", gv.lower.value);
  x.r.value("upper_value", gv.upper.value);
  x.r.value("gap", gv.gap());
  x.r.value("lower_step_evaluations", static_cast<double>(gv.lower.step_evaluations));
  x.r.value("upper_step_evaluations", static_cast<double>(gv.upper.step_evaluations));
  x.r.check("value_order", std::max(0.0, gv.lower.value - gv.upper.value), x.c.tolerance("value_order"));
  if (x.c.params.strategy_oracle) {
    try {
      const double lo = strategy_enumeration_value(x.t0, xi, x.spec, tree, ValueSide::kLower, x.c.caps.strategy);
      const double up = strategy_enumeration_value(x.t0, xi, x.spec, tree, ValueSide::kUpper, x.c.caps.strategy);
      x.r.oracle("strategy_lower_value", lo);
      x.r.oracle("strategy_upper_value", up);
      x.r.check("strategy_oracle_lower", std::abs(lo - gv.lower.value), x.c.tolerance("strategy_oracle"));
      x.r.check("strategy_oracle_upper", std::abs(up - gv.upper.value), x.c.tolerance("strategy_oracle"));
    } catch (const CapacityError& e) {
      x.r.notes.push_back(std::string("strategy oracle skipped: ") + e.what());
    }
  }
  double worst = 0.0;
  for (int p = 0; p < x.c.params.permutations; ++p) {
    const auto perm = permutation(xi.size(), x.c.tree.seed, p);
    const RandomVector moved = xi.permuted(perm);
    const double lo = lower_value(x.t0, moved, x.spec, tree, x.cap, false).value;
    const double up = upper_value(x.t0, moved, x.spec, tree, x.cap, false).value;
    check_value_order(lo, up);
    worst = std::max({worst, std::abs(lo - gv.lower.value), std::abs(up - gv.upper.value)});
  }
  if (x.c.params.permutations > 0) x.r.check("law_invariance", worst, x.c.tolerance("law_invariance"));
}

void run_dpp(Context& x) {
  const ScenarioTree tree(x.c.tree);
  const RandomVector xi = x.root();
  for (std::size_t i = 0; i < x.c.params.split_times.size(); ++i) {
    const double s = x.c.params.split_times[i];
    const DppReport d = dpp_check(x.t0, s, xi, x.spec, tree, x.cap);
    x.r.value(idx("split_time", i), s);
    x.r.value(idx("lower_value", i), d.lower_value);
    x.r.value(idx("lower_split", i), d.lower_split);
    x.r.value(idx("upper_value", i), d.upper_value);
    x.r.value(idx("upper_split", i), d.upper_split);
    x.r.check(idx("dpp_lower_residual", i), d.lower_residual(), x.c.tolerance("dpp"));
    x.r.check(idx("dpp_upper_residual", i), d.upper_residual(), x.c.tolerance("dpp"));
    x.r.check(idx("value_order", i), std::max(0.0, d.lower_value - d.upper_value), x.c.tolerance("value_order"));
  }
}

void run_hamiltonian(Context& x) {
  const EmpiricalMeasure& mu = x.c.law();
  const TestFunctional theta = functional_by_name(x.c.params.functional, mu.dim());
  const PMFields f = fields_from_functional(theta, mu);
  const int R = x.c.randomization_atoms;
  const double lo = measure_hamiltonian(mu, f, x.spec, ValueSide::kLower, R, x.cap);
  const double up = measure_hamiltonian(mu, f, x.spec, ValueSide::kUpper, R, x.cap);
  x.r.value("lower_hamiltonian", lo);
  x.r.value("upper_hamiltonian", up);
  x.r.value("isaacs_gap", up - lo);
  x.r.check("hamiltonian_order", std::max(0.0, lo - up), x.c.tolerance("value_order"));
  if (!x.spec.depends_on_control_law()) {
    const double plo = pointwise_reduced_hamiltonian(mu, f, x.spec, ValueSide::kLower);
    const double pup = pointwise_reduced_hamiltonian(mu, f, x.spec, ValueSide::kUpper);
    x.r.oracle("pointwise_lower_hamiltonian", plo);
    x.r.oracle("pointwise_upper_hamiltonian", pup);
    x.r.check("reduction_lower", std::abs(plo - lo), x.c.tolerance("reduction"));
    x.r.check("reduction_upper", std::abs(pup - up), x.c.tolerance("reduction"));
  } else {
    x.r.notes.push_back("pointwise reduction not applicable: coefficients read the law of the controls");
  }
  double worst = 0.0;
  for (int p = 0; p < x.c.params.permutations; ++p) {
    const auto perm = permutation(mu.size(), x.c.tree.seed, p);
    const PMFields g = f.permuted(perm);
    worst = std::max({worst,
                      std::abs(measure_hamiltonian(g.base, g, x.spec, ValueSide::kLower, R, x.cap) - lo),
                      std::abs(measure_hamiltonian(g.base, g, x.spec, ValueSide::kUpper, R, x.cap) - up)});
  }
  if (x.c.params.permutations > 0) x.r.check("law_invariance", worst, x.c.tolerance("law_invariance"));
}

void run_lions(Context& x) {
  const EmpiricalMeasure& mu = x.c.law();
  std::vector<double> steps = x.c.params.order_steps;
  if (steps.empty()) {
    for (int k = 0; k <= 6; ++k) steps.push_back(1e-2 / std::pow(2.0, k));
  }
  for (const auto& name : functional_names(x.c.params.functionals, mu.dim())) {
    const TestFunctional theta = functional_by_name(name, mu.dim());
    const auto an = analytic_gradient(theta, mu);
    const double err = relative_field_error(lions_gradient(theta, mu, x.c.params.fd_step), an);
    x.r.check("gradient_error." + name, err, x.c.tolerance("lions_relative"));
    x.r.value("hessian_error." + name,
              relative_field_error(lions_second_derivative(theta, mu, x.c.params.fd_step),
                                   analytic_hessian(theta, mu)));
    std::vector<double> errs;
    for (std::size_t k = 0; k < steps.size(); ++k) {
      errs.push_back(relative_field_error(lions_gradient(theta, mu, steps[k]), an));
      x.r.value(idx("order_error." + name, k), errs.back());
    }
    // Functionals whose lift has no third derivative are differenced exactly
    // up to rounding; their error sequence carries no order information.
    if (errs.front() < 1e-10) {
      x.r.notes.push_back("order check skipped for " + name + ": finite differences exact to rounding");
      continue;
    }
    for (std::size_t k = 0; k + 1 < errs.size(); ++k) {
      const double ratio = errs[k] / errs[k + 1] * std::pow(steps[k + 1] / steps[k] * 2.0, 2.0);
      x.r.check_range(idx("order_ratio." + name, k), ratio, x.c.tolerance("lions_order_low"),
                      x.c.tolerance("lions_order_high"));
    }
  }
}

void run_ito(Context& x) {
  if (!std::holds_alternative<int>(x.c.params.alpha) || !std::holds_alternative<int>(x.c.params.beta)) {
    throw InvalidInput("ito_check needs constant controls (a single action index per player)");
  }
  std::vector<int> counts = x.c.params.step_counts;
  std::sort(counts.begin(), counts.end());
  const bool exact = x.c.tree.mode == NoiseMode::kExactRademacher;
  for (const auto& name : functional_names(x.c.params.functionals, x.spec.state_dim())) {
    const TestFunctional theta = functional_by_name(name, x.spec.state_dim());
    std::vector<double> res;
    bool exact_case = true;
    for (int K : counts) {
      const ScenarioTree tree(with_steps(x.c.tree, K));
      const RandomVector xi = x.root();
      const Trajectory flow =
          simulate_flow(xi, make_control(x.c.params.alpha, Player::kFirst, xi, tree),
                        make_control(x.c.params.beta, Player::kSecond, xi, tree), x.spec, tree);
      res.push_back(max_abs(ito_flow_residual(theta, flow, tree)));
      x.r.value("residual." + name + "[K=" + std::to_string(K) + "]", res.back());
      exact_case = exact_case && (zero_dynamics(flow) || linear_along(theta, flow.measure_flow()));
    }
    if (!exact) continue;
    if (exact_case) {
      x.r.check("exact_residual." + name, *std::max_element(res.begin(), res.end()), x.c.tolerance("ito_exact"));
      continue;
    }
    for (std::size_t k = 0; k + 1 < counts.size(); ++k) {
      if (counts[k + 1] != 2 * counts[k]) continue;
      x.r.check_range("residual_ratio." + name + "[K=" + std::to_string(counts[k]) + "]", res[k] / res[k + 1],
                      x.c.tolerance("ito_ratio_low"), x.c.tolerance("ito_ratio_high"));
    }
  }
  if (!exact) x.r.notes.push_back("Monte Carlo tree: residual ratios reported without assertions");
}

void run_viscosity(Context& x) {
  const TaskParams& p = x.c.params;
  const EmpiricalMeasure& mu0 = x.c.law();
  std::vector<double> times = p.sample_times;
  if (times.empty()) {
    const double T = x.spec.horizon();
    for (int j = 0; j < p.samples; ++j) times.push_back(x.t0 + (T - x.t0) * j / p.samples);
  }
  const int R = x.c.randomization_atoms;
  if (p.candidate == "lq_riccati") {
    const LqParameters lq = LqParameters::from_spec(x.spec);
    const ValueCandidate cand = riccati_candidate(lq);
    double worst = 0.0;
    std::size_t boundary = 0;
    double amax = 0.0;
    for (const auto& a : x.spec.actions_a()) amax = std::max(amax, std::abs(a.value));
    for (std::size_t j = 0; j < times.size(); ++j) {
      const EmpiricalMeasure mu = sample_measure(mu0, x.c.tree.seed, static_cast<int>(j));
      const ViscosityEvaluation ev = evaluate_viscosity(cand, times[j], mu, x.spec, ValueSide::kLower, R, x.cap);
      x.r.value(idx("sample_time", j), times[j]);
      x.r.value(idx("residual", j), ev.residual);
      worst = std::max(worst, std::abs(ev.residual));
      if (lq_max_optimal_action(lq, times[j], mu) > amax) ++boundary;
    }
    x.r.check("viscosity_residual", worst, x.c.tolerance("viscosity"));
    x.r.check("terminal_mismatch", cand.terminal_mismatch(mu0), x.c.tolerance("riccati_ode"));
    const RiccatiSolution sol = solve_riccati(lq, x.t0);
    x.r.check("riccati_ode_residual", sol.max_ode_residual(), x.c.tolerance("riccati_ode"));
    x.r.value("boundary_active_samples", static_cast<double>(boundary));
    if (boundary > 0) {
      x.r.notes.push_back(std::to_string(boundary) +
                          " samples have an unconstrained optimum outside the action grid");
    }
    const double theta0 = lq_riccati_value(lq, x.t0, mu0);
    x.r.oracle("riccati_value", theta0);
    if (x.c.tree.mode == NoiseMode::kExactRademacher) {
      try {
        const ScenarioTree tree(x.c.tree);
        const double v = lower_value(x.t0, x.root(), x.spec, tree, x.cap, false).value;
        x.r.oracle("game_lower_value", v);
        x.r.oracle("riccati_minus_game", theta0 - v);
      } catch (const CapacityError& e) {
        x.r.notes.push_back(std::string("game comparison skipped: ") + e.what());
      }
    }
    return;
  }
  if (p.candidate == "classical_affine") {
    const ClassicalFunction v = affine_function(p.coefficients, x.spec.horizon(), x.spec.state_dim());
    const ValueCandidate cand = classical_average_candidate(v, x.spec);
    double worst = 0.0;
    for (std::size_t j = 0; j < times.size(); ++j) {
      const EmpiricalMeasure mu = sample_measure(mu0, x.c.tree.seed, static_cast<int>(j));
      const ViscosityEvaluation ev = evaluate_viscosity(cand, times[j], mu, x.spec, ValueSide::kLower, R, x.cap);
      std::vector<double> terms(mu.size());
      for (std::size_t i = 0; i < mu.size(); ++i) {
        terms[i] = mu.weight(i) * classical_hjbi_residual(v, x.spec, times[j], mu.point(i), ValueSide::kLower);
      }
      const double avg = order_free_sum(terms);
      x.r.value(idx("sample_time", j), times[j]);
      x.r.value(idx("residual", j), ev.residual);
      x.r.oracle(idx("classical_residual_average", j), avg);
      worst = std::max(worst, std::abs(ev.residual - avg));
    }
    x.r.check("average_identity", worst, x.c.tolerance("average_identity"));
    return;
  }
  throw InvalidInput("unknown viscosity candidate '" + p.candidate + "' (lq_riccati or classical_affine)");
}

void run_classical(Context& x) {
  const ScenarioTree tree(x.c.tree);
  const RandomVector xi = x.root();
  const EmpiricalMeasure& mu = x.c.law();
  const std::vector<int> channels = x.c.channel_map();
  std::vector<double> terms(mu.size());
  double dpp = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const MdpValueTable table = classical_mdp_table(x.spec, x.t0, mu.point(i), tree, channels[i], x.cap);
    x.r.oracle(idx("v_classical", i), table.value());
    terms[i] = mu.weight(i) * table.value();
    dpp = std::max(dpp, table.max_dpp_residual(x.spec, tree));
  }
  const double avg = order_free_sum(terms);
  const GameValueReport v = lower_value(x.t0, xi, x.spec, tree, x.cap, false);
  x.r.value("lower_value", v.value);
  x.r.oracle("average_classical_value", avg);
  x.r.check("classical_identity", std::abs(v.value - avg), x.c.tolerance("classical_identity"));
  x.r.check("mdp_dpp_residual", dpp, x.c.tolerance("mdp_dpp"));
}

void run_isaacs(Context& x) {
  const EmpiricalMeasure& mu = x.c.law();
  const TestFunctional theta = functional_by_name(x.c.params.functional, mu.dim());
  const PMFields f = fields_from_functional(theta, mu);
  const bool separable = !x.spec.depends_on_control_law() && separable_hamiltonian(mu, f, x.spec);
  x.r.value("separable", separable ? 1.0 : 0.0);
  for (int R : x.c.params.randomization) {
    const std::string tag = "[R=" + std::to_string(R) + "]";
    const double lo = measure_hamiltonian(mu, f, x.spec, ValueSide::kLower, R, x.cap);
    const double up = measure_hamiltonian(mu, f, x.spec, ValueSide::kUpper, R, x.cap);
    x.r.value("lower_hamiltonian" + tag, lo);
    x.r.value("upper_hamiltonian" + tag, up);
    x.r.value("hamiltonian_gap" + tag, up - lo);
    x.r.check("hamiltonian_order" + tag, std::max(0.0, lo - up), x.c.tolerance("value_order"));
    if (separable) x.r.check("separable_gap" + tag, std::abs(up - lo), x.c.tolerance("isaacs_separable"));
  }
  if (x.c.params.game_gap) {
    const ScenarioTree tree(x.c.tree);
    const GameValues gv = game_values(x.t0, x.root(), x.spec, tree, x.cap);
    x.r.value("lower_value", gv.lower.value);
    x.r.value("upper_value", gv.upper.value);
    x.r.value("value_gap", gv.gap());
    x.r.check("value_order", std::max(0.0, gv.lower.value - gv.upper.value), x.c.tolerance("value_order"));
  }
}

}  // namespace

bool Report::check(const std::string& key, double v, double upper) {
  const bool ok = std::isfinite(v) && v <= upper;
  assertions.push_back({key, v, std::nullopt, upper, ok});
  return ok;
}

bool Report::check_range(const std::string& key, double v, double lower, double upper) {
  const bool ok = std::isfinite(v) && v >= lower && v <= upper;
  assertions.push_back({key, v, lower, upper, ok});
  return ok;
}

bool Report::passed() const {
  return std::all_of(assertions.begin(), assertions.end(), [](const auto& a) { return a.pass; });
}

std::string Report::to_json() const {
  Json j;
  j["task"] = task;
  j["inputs"] = inputs.empty() ? Json::object() : Json::parse(inputs);
  auto entries = [](const std::vector<ReportEntry>& v) {
    Json o = Json::object();
    for (const auto& e : v) o[e.key] = e.value;
    return o;
  };
  j["values"] = entries(values);
  j["oracles"] = entries(oracles);
  Json a = Json::array();
  for (const auto& x : assertions) {
    Json row{{"key", x.key}, {"value", x.value}};
    row["tolerance"] = x.lower ? Json::array({*x.lower, x.upper}) : Json(x.upper);
    row["pass"] = x.pass;
    a.push_back(row);
  }
  j["assertions"] = a;
  j["notes"] = notes;
  j["pass"] = passed();
  j["timing"] = {{"elapsed_seconds", elapsed_seconds}};
  j["version"] = version;
  return j.dump(2) + "\n";
}

std::string Report::to_csv() const {
  std::ostringstream os;
  os << "task,key,value,tolerance,pass\n";
  for (const auto& e : values) os << task << "," << csv_field(e.key) << "," << fmt(e.value) << ",,\n";
  for (const auto& e : oracles) os << task << "," << csv_field("oracle." + e.key) << "," << fmt(e.value) << ",,\n";
  for (const auto& a : assertions) {
    const std::string tol = a.lower ? "[" + fmt(*a.lower) + ";" + fmt(a.upper) + "]" : fmt(a.upper);
    os << task << "," << csv_field(a.key) << "," << fmt(a.value) << "," << tol << ","
       << (a.pass ? "true" : "false") << "\n";
  }
  return os.str();
}

Report run_experiment(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  Report report;
  report.task = task_name(config.task);
  report.inputs = config.normalized;
  Context ctx{config, report, config.spec(), config.tree.start_time, config.caps.enumeration};
  switch (config.task) {
    case Task::kSimulate: run_simulate(ctx); break;
    case Task::kValue: run_value(ctx); break;
    case Task::kDppCheck: run_dpp(ctx); break;
    case Task::kHamiltonian: run_hamiltonian(ctx); break;
    case Task::kLionsCheck: run_lions(ctx); break;
    case Task::kItoCheck: run_ito(ctx); break;
    case Task::kViscosityCheck: run_viscosity(ctx); break;
    case Task::kClassicalIdentity: run_classical(ctx); break;
    case Task::kIsaacsGap: run_isaacs(ctx); break;
  }
  report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void write_report(const Report& report, const std::string& dir, ReportFormat format) {
  std::vector<std::pair<fs::path, std::string>> files;
  if (format != ReportFormat::kCsv) files.emplace_back(fs::path(dir) / "report.json", report.to_json());
  if (format != ReportFormat::kJson) files.emplace_back(fs::path(dir) / "report.csv", report.to_csv());
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InvalidInput("cannot create output directory '" + dir + "': " + ec.message());
  std::vector<fs::path> staged;
  try {
    for (const auto& [path, text] : files) {
      fs::path tmp = path;
      tmp += ".tmp";
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << text;
      out.close();
      if (!out) throw InvalidInput("cannot write '" + tmp.string() + "'");
      staged.push_back(tmp);
    }
  } catch (...) {
    for (const auto& p : staged) fs::remove(p, ec);
    throw;
  }
  for (std::size_t i = 0; i < files.size(); ++i) fs::rename(staged[i], files[i].first);
}

}  // namespace mvgame
