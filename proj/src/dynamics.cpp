#include "mvgame/dynamics.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "mvgame/errors.hpp"
#include "mvgame/summation.hpp"

namespace mvgame {
namespace {

std::string describe(std::span<const double> x, const LawMoments& mu, int a, int b) {
  std::ostringstream os;
  os.precision(17);
  os << "x=(";
  for (std::size_t j = 0; j < x.size(); ++j) os << (j ? "," : "") << x[j];
  os << ") mean(mu)=(";
  for (std::size_t j = 0; j < mu.mean.size(); ++j) os << (j ? "," : "") << mu.mean[j];
  os << ") a=" << a << " b=" << b;
  return os.str();
}

void check_assignments(const RandomVector& x, std::span<const int> a, std::span<const int> b,
                       const ProblemSpec& spec) {
  if (a.size() != x.size() || b.size() != x.size()) {
    throw InvalidInput("assignment length does not match the " + std::to_string(x.size()) +
                       " atoms at level " + std::to_string(x.level));
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < 0 || static_cast<std::size_t>(a[i]) >= spec.num_a() || b[i] < 0 ||
        static_cast<std::size_t>(b[i]) >= spec.num_b()) {
      throw InvalidInput("action index out of range at atom " + std::to_string(i));
    }
  }
}

}  // namespace

JointActionLaw step_action_law(const RandomVector& x, std::span<const int> a_assignment,
                               std::span<const int> b_assignment, const ProblemSpec& spec) {
  return joint_control_law(a_assignment, b_assignment, x.weights, spec.num_a(), spec.num_b());
}

void euler_step_into(const RandomVector& x, std::span<const int> a_assignment,
                     std::span<const int> b_assignment, const ProblemSpec& spec,
                     const ScenarioTree& tree, const LawMoments& moments,
                     const JointActionLaw& nu, RandomVector& out, StepRecord* record) {
  const int k = x.level;
  if (k < 0 || k >= tree.steps()) throw InvalidInput("euler_step: level has no successor");
  if (x.dim != spec.state_dim()) throw InvalidInput("euler_step: state dimension mismatch");
  if (static_cast<std::size_t>(tree.noise_dim()) != spec.noise_dim()) {
    throw InvalidInput("euler_step: tree noise dimension differs from the problem");
  }
  check_assignments(x, a_assignment, b_assignment, spec);
  const std::size_t n = x.dim;
  const std::size_t d = spec.noise_dim();
  const double dt = tree.dt();
  const std::uint64_t fan = tree.branching_factor(k);

  thread_local std::vector<double> gamma;
  thread_local std::vector<double> sigma;
  thread_local std::vector<double> dw;
  gamma.resize(n);
  sigma.resize(n * d);
  dw.resize(d);

  const std::size_t total = x.size() * fan;
  out.level = k + 1;
  out.dim = n;
  out.positions.resize(total * n);
  out.weights.resize(total);
  out.nodes.resize(total);
  out.channels.resize(total);
  if (record) {
    record->drift.resize(x.size() * n);
    record->diffusion.resize(x.size() * n * d);
    record->moments = moments;
  }

  std::size_t o = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto xi = x.point(i);
    const int a = a_assignment[i];
    const int b = b_assignment[i];
    const int ch = x.channels[i];
    if (ch < 0 || ch >= tree.channels()) {
      throw InvalidInput("euler_step: atom uses channel " + std::to_string(ch) + " but the tree has " +
                         std::to_string(tree.channels()));
    }
    spec.drift(xi, moments, a, b, nu, gamma);
    spec.diffusion(xi, moments, a, b, nu, sigma);
    for (double v : gamma) {
      if (!std::isfinite(v)) throw NumericError("non-finite drift at " + describe(xi, moments, a, b));
    }
    for (double v : sigma) {
      if (!std::isfinite(v)) throw NumericError("non-finite diffusion at " + describe(xi, moments, a, b));
    }
    if (record) {
      std::copy(gamma.begin(), gamma.end(), record->drift.begin() + static_cast<std::ptrdiff_t>(i * n));
      std::copy(sigma.begin(), sigma.end(),
                record->diffusion.begin() + static_cast<std::ptrdiff_t>(i * n * d));
    }
    const NodeRange r = tree.children(k, x.nodes[i]);
    for (std::uint64_t c = r.first; c < r.first + r.count; ++c, ++o) {
      for (std::size_t j = 0; j < d; ++j) dw[j] = tree.increment(k + 1, c, ch, static_cast<int>(j));
      double* dst = out.positions.data() + o * n;
      for (std::size_t r0 = 0; r0 < n; ++r0) {
        double v = xi[r0] + gamma[r0] * dt;
        for (std::size_t j = 0; j < d; ++j) v += sigma[r0 * d + j] * dw[j];
        if (!std::isfinite(v)) throw NumericError("non-finite state after step from " + describe(xi, moments, a, b));
        dst[r0] = v;
      }
      out.weights[o] = x.weights[i] * tree.child_probability(k + 1, c);
      out.nodes[o] = c;
      out.channels[o] = ch;
    }
  }
}

RandomVector euler_step(const RandomVector& x, std::span<const int> a_assignment,
                        std::span<const int> b_assignment, const ProblemSpec& spec,
                        const ScenarioTree& tree, StepRecord* record) {
  check_assignments(x, a_assignment, b_assignment, spec);
  const LawMoments moments = x.moments();
  const JointActionLaw nu = step_action_law(x, a_assignment, b_assignment, spec);
  RandomVector out;
  euler_step_into(x, a_assignment, b_assignment, spec, tree, moments, nu, out, record);
  return out;
}

double expected_running(const RandomVector& x, std::span<const int> a_assignment,
                        std::span<const int> b_assignment, const ProblemSpec& spec,
                        const LawMoments& moments, const JointActionLaw& nu) {
  check_assignments(x, a_assignment, b_assignment, spec);
  thread_local std::vector<double> terms;
  terms.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = spec.running(x.point(i), moments, a_assignment[i], b_assignment[i], nu);
    if (!std::isfinite(f)) {
      throw NumericError("non-finite running payoff at " +
                         describe(x.point(i), moments, a_assignment[i], b_assignment[i]));
    }
    terms[i] = x.weights[i] * f;
  }
  return order_free_sum(terms);
}

double expected_terminal(const RandomVector& x, const ProblemSpec& spec) {
  const LawMoments moments = x.moments();
  thread_local std::vector<double> terms;
  terms.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double g = spec.terminal(x.point(i), moments);
    if (!std::isfinite(g)) throw NumericError("non-finite terminal payoff at " + describe(x.point(i), moments, -1, -1));
    terms[i] = x.weights[i] * g;
  }
  return order_free_sum(terms);
}

std::vector<EmpiricalMeasure> Trajectory::measure_flow() const {
  std::vector<EmpiricalMeasure> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(s.law());
  return out;
}

Trajectory simulate_flow(const RandomVector& xi, const OpenLoopControl& alpha,
                         const OpenLoopControl& beta, const ProblemSpec& spec,
                         const ScenarioTree& tree) {
  xi.validate();
  if (alpha.side != Player::kFirst || beta.side != Player::kSecond) {
    throw InvalidInput("simulate_flow: alpha must belong to player I and beta to player II");
  }
  for (const auto* c : {&alpha, &beta}) {
    if (c->start_level != xi.level || c->end_level() != tree.steps()) {
      throw InvalidInput("simulate_flow: control covers levels [" + std::to_string(c->start_level) +
                         ", " + std::to_string(c->end_level()) + ") but the flow needs [" +
                         std::to_string(xi.level) + ", " + std::to_string(tree.steps()) + ")");
    }
  }
  Trajectory traj;
  traj.states.push_back(xi);
  for (int k = xi.level; k < tree.steps(); ++k) {
    const RandomVector& x = traj.states.back();
    const auto& a = alpha.at(k);
    const auto& b = beta.at(k);
    if (a.size() != x.size() || b.size() != x.size()) {
      throw InvalidInput("simulate_flow: control shape does not match the tree at level " +
                         std::to_string(k));
    }
    StepRecord rec;
    RandomVector next = euler_step(x, a, b, spec, tree, &rec);
    traj.records.push_back(std::move(rec));
    traj.states.push_back(std::move(next));
  }
  return traj;
}

}  // namespace mvgame
