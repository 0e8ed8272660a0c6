#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mvgame/game.hpp"
#include "mvgame/measure.hpp"
#include "mvgame/problem.hpp"
#include "mvgame/scenario_tree.hpp"
#include "mvgame/wcalculus.hpp"

namespace mvgame {

// Parameters of the lq_mf family:
//   gamma = theta x + theta_bar m + a,  sigma = s,
//   f = -kappa_v (x - m)^2 - kappa_m m^2 - rho a^2,
//   g = -lambda_v (x - m)^2 - lambda_m m^2.
struct LqParameters {
  double theta = 0.0;
  double theta_bar = 0.0;
  double sigma = 0.0;
  double kappa_v = 0.0;
  double kappa_m = 0.0;
  double rho = 1.0;
  double lambda_v = 0.0;
  double lambda_m = 0.0;
  double horizon = 1.0;

  static LqParameters from_spec(const ProblemSpec& spec);
  void validate() const;
};

// Player I's action set is `points` equally spaced values on [-radius, radius];
// player II has the single action 0.
ProblemSpec lq_problem(const LqParameters& params, double action_radius, std::size_t points);

// With theta(t, mu) = P(t) Var(mu) + Q(t) m(mu)^2 + r(t):
//   P' = -2 theta P + kappa_v - P^2 / rho,             P(T) = -lambda_v,
//   Q' = -2 (theta + theta_bar) Q + kappa_m - Q^2 / rho, Q(T) = -lambda_m,
//   r' = -sigma^2 P,                                  r(T) = 0.
struct RiccatiState {
  double P = 0.0;
  double Q = 0.0;
  double r = 0.0;
};

RiccatiState riccati_rhs(const LqParameters& params, const RiccatiState& y);

// Integrates backward from the horizon to t with an adaptive
// Dormand-Prince 5(4) scheme. Throws HorizonError if a path blows up first.
RiccatiState riccati_state(const LqParameters& params, double t);

struct RiccatiSolution {
  LqParameters params;
  std::vector<double> times;  // increasing, last is the horizon
  std::vector<double> P;
  std::vector<double> Q;
  std::vector<double> r;

  // max over interior grid points of |path' - rhs| with the derivative from
  // a five-point stencil.
  double max_ode_residual() const;
};

RiccatiSolution solve_riccati(const LqParameters& params, double t0, std::size_t intervals = 1000);

double lq_riccati_value(const LqParameters& params, double t, const EmpiricalMeasure& mu);

// The quadratic ansatz with its exact derivatives: d_mu theta(x) =
// 2P (x - m) + 2Q m, d_x d_mu theta = 2P, d_t theta from the Riccati system.
ValueCandidate riccati_candidate(const LqParameters& params);

// Largest |a*| = |d_mu theta(x)| / (2 rho) over the support of mu; an
// action grid of radius below this clips the optimum.
double lq_max_optimal_action(const LqParameters& params, double t, const EmpiricalMeasure& mu);

// A smooth function v(t, x) on [0, T] x R^n with its derivatives.
struct ClassicalFunction {
  std::function<double(double, std::span<const double>)> value;
  std::function<double(double, std::span<const double>)> time_derivative;
  std::function<std::vector<double>(double, std::span<const double>)> gradient;
  std::function<std::vector<double>(double, std::span<const double>)> hessian;
};

// theta(t, mu) = int v(t, x) mu(dx), with d_mu theta = D_x v and
// d_x d_mu theta = D_x^2 v. The terminal map integrates the problem's g.
ValueCandidate classical_average_candidate(const ClassicalFunction& v, const ProblemSpec& spec);

// -d_t v - sup_a inf_b [gamma . D v + 1/2 tr(sigma sigma^T D^2 v) + f] at (t, x)
// (inf-sup for the upper side), from the problem's coefficients. Requires
// coefficients that ignore both laws.
double classical_hjbi_residual(const ClassicalFunction& v, const ProblemSpec& spec, double t,
                               std::span<const double> x, ValueSide side = ValueSide::kLower);

// One state of the single-particle backward induction.
struct MdpEntry {
  int level = 0;
  std::uint64_t node = 0;
  std::vector<double> x;
  double value = 0.0;
  int best_action = -1;
  std::vector<double> action_values;               // dt f + E[V_{k+1}] per action
  std::vector<std::vector<std::size_t>> children;  // entry indices per action
};

struct MdpValueTable {
  std::vector<MdpEntry> entries;  // entries[0] is the root

  double value() const { return entries.front().value; }
  // max |V - max_a (dt f + sum_c p_c V_c)| over non-terminal entries, and
  // max |V - g| over terminal ones.
  double max_dpp_residual(const ProblemSpec& spec, const ScenarioTree& tree) const;
};

// v^B(t, x) of the control problem without mean-field terms, by backward
// induction over (action, child) on the tree, reading the noise of one
// channel. Requires coefficients that ignore both laws and a singleton B.
MdpValueTable classical_mdp_table(const ProblemSpec& spec, double t, std::span<const double> x,
                                  const ScenarioTree& tree, int channel = 0,
                                  std::uint64_t cap = kDefaultEnumerationCap);
double classical_mdp_value(const ProblemSpec& spec, double t, std::span<const double> x,
                           const ScenarioTree& tree, int channel = 0,
                           std::uint64_t cap = kDefaultEnumerationCap);

}  // namespace mvgame
