#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mvgame/dynamics.hpp"
#include "mvgame/game.hpp"
#include "mvgame/hamiltonian.hpp"
#include "mvgame/measure.hpp"
#include "mvgame/problem.hpp"
#include "mvgame/scenario_tree.hpp"

namespace mvgame {

enum class FunctionalFamily { kMomentPolynomial, kInteractionEnergy, kCustom };

// A function of a probability measure, optionally with its Lions
// derivative d_mu theta(mu)(x) and d_x d_mu theta(mu)(x), both evaluated on
// the whole support at once: gradient [i * n + j], hessian
// [i * n * n + j * n + l]. Evaluators must be pure and invariant under
// relabelling atoms.
struct TestFunctional {
  using Field = std::function<std::vector<double>(const EmpiricalMeasure&)>;

  std::string name;
  FunctionalFamily family = FunctionalFamily::kCustom;
  std::function<double(const EmpiricalMeasure&)> value;
  Field gradient;
  Field hessian;
};

// Smooth moment functionals with analytic derivatives, in any dimension
// (coordinate 0 is used where a scalar is needed):
//   mean        int x_0
//   mean_sq     (int x_0)^2
//   second      int |x|^2
//   variance    int |x|^2 - |int x|^2
//   cubic       int x_0^3
//   quartic     int x_0^4
//   mean_quartic (int x_0)^4
//   mixed       (int x_0) (int x_0^2)
//   log_second  log(1 + int |x|^2)
//   interaction int int |x - y|^2 mu(dx) mu(dy)
std::vector<TestFunctional> moment_functional_zoo(std::size_t dim);
TestFunctional functional_by_name(const std::string& name, std::size_t dim);

// Default relative finite-difference step.
inline constexpr double kDefaultFdStep = 1e-4;

// N times the central difference of theta over atom i, coordinate j, with
// step h * max(1, |x_ij|). Requires uniform weights. Result is [i * n + j].
std::vector<double> lions_gradient(const TestFunctional& theta, const EmpiricalMeasure& mu,
                                   double h = kDefaultFdStep);

// In-atom second differences, N d^2 theta / dx_i dx_i. Result is
// [i * n * n + j * n + l].
std::vector<double> lions_second_derivative(const TestFunctional& theta,
                                            const EmpiricalMeasure& mu,
                                            double h = kDefaultFdStep);

// ||fd - analytic||_inf / max(1, ||analytic||_inf).
double relative_field_error(std::span<const double> fd, std::span<const double> analytic);

// Analytic fields of theta on the support of mu, stacked like lions_gradient.
std::vector<double> analytic_gradient(const TestFunctional& theta, const EmpiricalMeasure& mu);
std::vector<double> analytic_hessian(const TestFunctional& theta, const EmpiricalMeasure& mu);

// Per step k:
//   [theta(mu_{k+1}) - theta(mu_k)] / dt
//     - E[gamma_k . d_mu theta(mu_k)(X_k) + 1/2 tr(sigma_k sigma_k^T d_x d_mu theta(mu_k)(X_k))].
// Finite differences stand in for missing analytic derivatives.
std::vector<double> ito_flow_residual(const TestFunctional& theta, const Trajectory& flow,
                                      const ScenarioTree& tree);

// Second variation of the lift along Y = Z eps on the product of the atoms
// with Rademacher signs eps in {-1, 1}^d:
//   [theta(xi + hY) - 2 theta(xi) + theta(xi - hY)] / h^2,
// and its trace form sum_i w_i tr(d_x d_mu theta(mu)(x_i) Z_i Z_i^T).
// Z is [i * n * d + j * d + c]. Exact for every h when the lift is quadratic.
double lifted_second_variation(const TestFunctional& theta, const EmpiricalMeasure& mu,
                               std::span<const double> Z, std::size_t noise_dim, double h);
double lifted_trace_form(const TestFunctional& theta, const EmpiricalMeasure& mu,
                         std::span<const double> Z, std::size_t noise_dim);

// Fields p = d_mu theta, M = d_x d_mu theta on the support of mu.
PMFields fields_from_functional(const TestFunctional& theta, const EmpiricalMeasure& mu);

// A smooth function of (t, mu) offered as a solution of a Bellman-Isaacs
// equation, with its derivatives and the terminal map mu -> int g(x, mu) mu(dx).
struct ValueCandidate {
  using Scalar = std::function<double(double, const EmpiricalMeasure&)>;
  // Fields on the support of mu, stacked like TestFunctional's.
  using Field = std::function<std::vector<double>(double, const EmpiricalMeasure&)>;

  std::string name;
  double horizon = 1.0;
  Scalar value;
  Scalar time_derivative;
  Field gradient;
  Field hessian;
  std::function<double(const EmpiricalMeasure&)> terminal;

  PMFields fields(double t, const EmpiricalMeasure& mu) const;
  // |theta(T, mu) - terminal(mu)|.
  double terminal_mismatch(const EmpiricalMeasure& mu) const;
};

enum class HamiltonianRoute { kEnumeration, kPointwise };

struct ViscosityEvaluation {
  double residual = 0.0;
  double time_derivative = 0.0;
  double hamiltonian = 0.0;
  HamiltonianRoute route = HamiltonianRoute::kEnumeration;
};

// -d_t theta(t, mu) - H_side(mu, d_mu theta, d_x d_mu theta). The measure
// Hamiltonian is enumerated when that fits in cap; otherwise, for
// coefficients that ignore the law of the controls, the pointwise reduction
// (which equals it) is used.
ViscosityEvaluation evaluate_viscosity(const ValueCandidate& candidate, double t,
                                       const EmpiricalMeasure& mu, const ProblemSpec& spec,
                                       ValueSide side, int randomization_atoms = 1,
                                       std::uint64_t cap = kDefaultEnumerationCap);
double viscosity_residual(const ValueCandidate& candidate, double t, const EmpiricalMeasure& mu,
                          const ProblemSpec& spec, ValueSide side, int randomization_atoms = 1,
                          std::uint64_t cap = kDefaultEnumerationCap);

}  // namespace mvgame
