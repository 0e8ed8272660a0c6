#include "mvgame/benchmarks.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>

#include <boost/numeric/odeint.hpp>

#include "mvgame/errors.hpp"
#include "mvgame/summation.hpp"

namespace mvgame {
namespace {

namespace ode = boost::numeric::odeint;
using OdeState = std::array<double, 3>;

constexpr double kOdeTolerance = 1e-12;
constexpr double kBlowUp = 1e12;

struct BlowUp {
  double t;
};

struct RiccatiSystem {
  const LqParameters* params;
  void operator()(const OdeState& y, OdeState& dy, double t) const {
    if (!std::isfinite(y[0]) || !std::isfinite(y[1]) || std::abs(y[0]) > kBlowUp ||
        std::abs(y[1]) > kBlowUp) {
      throw BlowUp{t};
    }
    const RiccatiState d = riccati_rhs(*params, {y[0], y[1], y[2]});
    dy = {d.P, d.Q, d.r};
  }
};

// Backward integration from the horizon through `times` (decreasing).
template <class Observer>
void integrate_backward(const LqParameters& params, const std::vector<double>& times,
                        Observer&& observer) {
  OdeState y{-params.lambda_v, -params.lambda_m, 0.0};
  const double span = params.horizon - times.back();
  const double dt0 = -std::max(1e-6, 1e-3 * span);
  try {
    ode::integrate_times(
        ode::make_dense_output(kOdeTolerance, kOdeTolerance, ode::runge_kutta_dopri5<OdeState>()),
        RiccatiSystem{&params}, y, times.begin(), times.end(), dt0,
        [&](const OdeState& s, double t) {
          if (!std::isfinite(s[0]) || !std::isfinite(s[1]) || !std::isfinite(s[2])) throw BlowUp{t};
          observer(s, t);
        });
  } catch (const BlowUp& b) {
    throw HorizonError("Riccati solution blows up at t = " + std::to_string(b.t) +
                           " before reaching t = " + std::to_string(times.back()),
                       b.t);
  } catch (const ode::odeint_error& e) {
    throw HorizonError(std::string("Riccati integration failed: ") + e.what(), times.back());
  }
}

double variance_of(const EmpiricalMeasure& mu, double m) {
  std::vector<double> terms(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double dev = mu.point(i)[0] - m;
    terms[i] = mu.weight(i) * dev * dev;
  }
  return order_free_sum(terms);
}

void require_lq_measure(const EmpiricalMeasure& mu) {
  if (mu.dim() != 1) throw InvalidInput("the LQ benchmark is one-dimensional");
}

void require_no_mean_field(const ProblemSpec& spec, const char* what) {
  if (spec.depends_on_state_law() || spec.depends_on_control_law()) {
    throw ContractViolation(std::string(what) +
                            ": the coefficients depend on the law of the state or the controls");
  }
}

// Hamiltonian of the control problem at one point, from the raw coefficients.
double point_hamiltonian(const ProblemSpec& spec, std::span<const double> x, int a, int b,
                         std::span<const double> p, std::span<const double> M) {
  const std::size_t n = spec.state_dim();
  const std::size_t d = spec.noise_dim();
  const LawMoments moments{std::vector<double>(x.begin(), x.end())};
  const JointActionLaw nu = JointActionLaw::dirac(spec.num_a(), spec.num_b(),
                                                  static_cast<std::size_t>(a),
                                                  static_cast<std::size_t>(b));
  std::vector<double> gamma(n);
  std::vector<double> sigma(n * d);
  spec.drift(x, moments, a, b, nu, gamma);
  spec.diffusion(x, moments, a, b, nu, sigma);
  double h = spec.running(x, moments, a, b, nu);
  for (std::size_t j = 0; j < n; ++j) {
    h += gamma[j] * p[j];
    for (std::size_t l = 0; l < n; ++l) {
      double ss = 0.0;
      for (std::size_t c = 0; c < d; ++c) ss += sigma[j * d + c] * sigma[l * d + c];
      h += 0.5 * ss * M[l * n + j];
    }
  }
  return h;
}

}  // namespace

LqParameters LqParameters::from_spec(const ProblemSpec& spec) {
  if (spec.family() != Family::kLqMf) throw InvalidInput("LqParameters: problem is not lq_mf");
  LqParameters p;
  p.theta = spec.param("theta");
  p.theta_bar = spec.param("theta_bar");
  p.sigma = spec.param("sigma");
  p.kappa_v = spec.param("kappa_v");
  p.kappa_m = spec.param("kappa_m");
  p.rho = spec.param("rho");
  p.lambda_v = spec.param("lambda_v");
  p.lambda_m = spec.param("lambda_m");
  p.horizon = spec.horizon();
  p.validate();
  return p;
}

void LqParameters::validate() const {
  for (double v : {theta, theta_bar, sigma, kappa_v, kappa_m, rho, lambda_v, lambda_m, horizon}) {
    if (!std::isfinite(v)) throw InvalidInput("LqParameters: non-finite parameter");
  }
  if (!(rho > 0.0)) throw InvalidInput("LqParameters: rho must be positive");
  if (!(horizon > 0.0)) throw InvalidInput("LqParameters: horizon must be positive");
}

ProblemSpec lq_problem(const LqParameters& params, double action_radius, std::size_t points) {
  params.validate();
  if (points < 1 || !(action_radius >= 0.0)) throw InvalidInput("lq_problem: bad action grid");
  std::vector<Action> a(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double v = points == 1 ? 0.0
                                 : -action_radius + 2.0 * action_radius * static_cast<double>(i) /
                                                        static_cast<double>(points - 1);
    a[i] = {"a" + std::to_string(i), v};
  }
  return ProblemSpec(Family::kLqMf, 1,
                     {{"theta", params.theta},
                      {"theta_bar", params.theta_bar},
                      {"sigma", params.sigma},
                      {"kappa_v", params.kappa_v},
                      {"kappa_m", params.kappa_m},
                      {"rho", params.rho},
                      {"lambda_v", params.lambda_v},
                      {"lambda_m", params.lambda_m}},
                     std::move(a), {{"b0", 0.0}}, params.horizon);
}

RiccatiState riccati_rhs(const LqParameters& p, const RiccatiState& y) {
  return {-2.0 * p.theta * y.P + p.kappa_v - y.P * y.P / p.rho,
          -2.0 * (p.theta + p.theta_bar) * y.Q + p.kappa_m - y.Q * y.Q / p.rho,
          -p.sigma * p.sigma * y.P};
}

RiccatiState riccati_state(const LqParameters& params, double t) {
  params.validate();
  if (!(t <= params.horizon)) throw InvalidInput("riccati_state: t is after the horizon");
  if (t == params.horizon) return {-params.lambda_v, -params.lambda_m, 0.0};
  RiccatiState out;
  integrate_backward(params, {params.horizon, t}, [&](const OdeState& s, double) {
    out = {s[0], s[1], s[2]};
  });
  return out;
}

RiccatiSolution solve_riccati(const LqParameters& params, double t0, std::size_t intervals) {
  params.validate();
  if (!(t0 < params.horizon)) throw InvalidInput("solve_riccati: t0 must precede the horizon");
  if (intervals < 4) throw InvalidInput("solve_riccati: need at least 4 intervals");
  std::vector<double> times(intervals + 1);
  const double span = params.horizon - t0;
  for (std::size_t k = 0; k <= intervals; ++k) {
    times[k] = params.horizon - span * static_cast<double>(k) / static_cast<double>(intervals);
  }
  times.back() = t0;
  RiccatiSolution sol;
  sol.params = params;
  sol.times.resize(intervals + 1);
  sol.P.resize(intervals + 1);
  sol.Q.resize(intervals + 1);
  sol.r.resize(intervals + 1);
  std::size_t k = 0;
  integrate_backward(params, times, [&](const OdeState& s, double t) {
    const std::size_t idx = intervals - k++;
    sol.times[idx] = t;
    sol.P[idx] = s[0];
    sol.Q[idx] = s[1];
    sol.r[idx] = s[2];
  });
  return sol;
}

double RiccatiSolution::max_ode_residual() const {
  const std::size_t n = times.size();
  if (n < 5) throw InvalidInput("max_ode_residual: path too short");
  const double h = times[1] - times[0];
  double worst = 0.0;
  auto d5 = [&](const std::vector<double>& y, std::size_t k) {
    return (-y[k + 2] + 8.0 * y[k + 1] - 8.0 * y[k - 1] + y[k - 2]) / (12.0 * h);
  };
  for (std::size_t k = 2; k + 2 < n; ++k) {
    const RiccatiState rhs = riccati_rhs(params, {P[k], Q[k], r[k]});
    worst = std::max({worst, std::abs(d5(P, k) - rhs.P), std::abs(d5(Q, k) - rhs.Q),
                      std::abs(d5(r, k) - rhs.r)});
  }
  return worst;
}

double lq_riccati_value(const LqParameters& params, double t, const EmpiricalMeasure& mu) {
  require_lq_measure(mu);
  const RiccatiState s = riccati_state(params, t);
  const double m = mu.mean()[0];
  return s.P * variance_of(mu, m) + s.Q * m * m + s.r;
}

ValueCandidate riccati_candidate(const LqParameters& params) {
  params.validate();
  ValueCandidate c;
  c.name = "lq_riccati";
  c.horizon = params.horizon;
  c.value = [params](double t, const EmpiricalMeasure& mu) {
    return lq_riccati_value(params, t, mu);
  };
  c.time_derivative = [params](double t, const EmpiricalMeasure& mu) {
    require_lq_measure(mu);
    const RiccatiState s = riccati_state(params, t);
    const RiccatiState d = riccati_rhs(params, s);
    const double m = mu.mean()[0];
    return d.P * variance_of(mu, m) + d.Q * m * m + d.r;
  };
  c.gradient = [params](double t, const EmpiricalMeasure& mu) {
    require_lq_measure(mu);
    const RiccatiState s = riccati_state(params, t);
    const double m = mu.mean()[0];
    std::vector<double> g(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
      g[i] = 2.0 * s.P * (mu.point(i)[0] - m) + 2.0 * s.Q * m;
    }
    return g;
  };
  c.hessian = [params](double t, const EmpiricalMeasure& mu) {
    require_lq_measure(mu);
    const RiccatiState s = riccati_state(params, t);
    return std::vector<double>(mu.size(), 2.0 * s.P);
  };
  c.terminal = [params](const EmpiricalMeasure& mu) {
    require_lq_measure(mu);
    const double m = mu.mean()[0];
    return -params.lambda_v * variance_of(mu, m) - params.lambda_m * m * m;
  };
  return c;
}

double lq_max_optimal_action(const LqParameters& params, double t, const EmpiricalMeasure& mu) {
  require_lq_measure(mu);
  const RiccatiState s = riccati_state(params, t);
  const double m = mu.mean()[0];
  double worst = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double p = 2.0 * s.P * (mu.point(i)[0] - m) + 2.0 * s.Q * m;
    worst = std::max(worst, std::abs(p) / (2.0 * params.rho));
  }
  return worst;
}

ValueCandidate classical_average_candidate(const ClassicalFunction& v, const ProblemSpec& spec) {
  if (!v.value || !v.time_derivative || !v.gradient || !v.hessian) {
    throw InvalidInput("classical_average_candidate: incomplete function");
  }
  const std::size_t n = spec.state_dim();
  ValueCandidate c;
  c.name = "classical_average";
  c.horizon = spec.horizon();
  auto average = [n](const std::function<double(double, std::span<const double>)>& f, double t,
                     const EmpiricalMeasure& mu) {
    if (mu.dim() != n) throw InvalidInput("classical_average_candidate: dimension mismatch");
    std::vector<double> terms(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) terms[i] = mu.weight(i) * f(t, mu.point(i));
    return order_free_sum(terms);
  };
  auto stack = [n](const std::function<std::vector<double>(double, std::span<const double>)>& f,
                   std::size_t width, double t, const EmpiricalMeasure& mu) {
    if (mu.dim() != n) throw InvalidInput("classical_average_candidate: dimension mismatch");
    std::vector<double> out;
    out.reserve(mu.size() * width);
    for (std::size_t i = 0; i < mu.size(); ++i) {
      const std::vector<double> g = f(t, mu.point(i));
      if (g.size() != width) throw InvalidInput("classical_average_candidate: bad derivative size");
      out.insert(out.end(), g.begin(), g.end());
    }
    return out;
  };
  c.value = [v, average](double t, const EmpiricalMeasure& mu) { return average(v.value, t, mu); };
  c.time_derivative = [v, average](double t, const EmpiricalMeasure& mu) {
    return average(v.time_derivative, t, mu);
  };
  c.gradient = [v, stack, n](double t, const EmpiricalMeasure& mu) {
    return stack(v.gradient, n, t, mu);
  };
  c.hessian = [v, stack, n](double t, const EmpiricalMeasure& mu) {
    return stack(v.hessian, n * n, t, mu);
  };
  c.terminal = [spec](const EmpiricalMeasure& mu) {
    const LawMoments m = LawMoments::of(mu);
    std::vector<double> terms(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
      terms[i] = mu.weight(i) * spec.terminal(mu.point(i), m);
    }
    return order_free_sum(terms);
  };
  return c;
}

double classical_hjbi_residual(const ClassicalFunction& v, const ProblemSpec& spec, double t,
                               std::span<const double> x, ValueSide side) {
  require_no_mean_field(spec, "classical_hjbi_residual");
  const std::size_t n = spec.state_dim();
  if (x.size() != n) throw InvalidInput("classical_hjbi_residual: dimension mismatch");
  const std::vector<double> p = v.gradient(t, x);
  const std::vector<double> M = v.hessian(t, x);
  if (p.size() != n || M.size() != n * n) {
    throw InvalidInput("classical_hjbi_residual: bad derivative size");
  }
  const bool lower = side == ValueSide::kLower;
  const int n_outer = static_cast<int>(lower ? spec.num_a() : spec.num_b());
  const int n_inner = static_cast<int>(lower ? spec.num_b() : spec.num_a());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double outer = lower ? -kInf : kInf;
  for (int o = 0; o < n_outer; ++o) {
    double inner = lower ? kInf : -kInf;
    for (int i = 0; i < n_inner; ++i) {
      const double h = lower ? point_hamiltonian(spec, x, o, i, p, M)
                             : point_hamiltonian(spec, x, i, o, p, M);
      inner = lower ? std::min(inner, h) : std::max(inner, h);
    }
    outer = lower ? std::max(outer, inner) : std::min(outer, inner);
  }
  return -v.time_derivative(t, x) - outer;
}

namespace {

struct MdpBuilder {
  const ProblemSpec& spec;
  const ScenarioTree& tree;
  int channel;
  MdpValueTable& table;

  std::size_t visit(int level, std::uint64_t node, std::vector<double> x) {
    const std::size_t idx = table.entries.size();
    table.entries.push_back({level, node, x, 0.0, -1, {}, {}});
    const LawMoments moments{x};
    if (level == tree.steps()) {
      table.entries[idx].value = spec.terminal(x, moments);
      return idx;
    }
    const std::size_t n = spec.state_dim();
    const std::size_t d = spec.noise_dim();
    const double dt = tree.dt();
    const NodeRange kids = tree.children(level, node);
    std::vector<double> action_values(spec.num_a());
    std::vector<std::vector<std::size_t>> children(spec.num_a());
    std::vector<double> gamma(n);
    std::vector<double> sigma(n * d);
    std::vector<double> terms(kids.count);
    for (std::size_t a = 0; a < spec.num_a(); ++a) {
      const int ai = static_cast<int>(a);
      const JointActionLaw nu = JointActionLaw::dirac(spec.num_a(), 1, a, 0);
      spec.drift(x, moments, ai, 0, nu, gamma);
      spec.diffusion(x, moments, ai, 0, nu, sigma);
      for (std::uint64_t c = 0; c < kids.count; ++c) {
        const std::uint64_t child = kids.first + c;
        std::vector<double> y(n);
        for (std::size_t j = 0; j < n; ++j) {
          double s = x[j] + gamma[j] * dt;
          for (std::size_t l = 0; l < d; ++l) {
            s += sigma[j * d + l] * tree.increment(level + 1, child, channel, static_cast<int>(l));
          }
          y[j] = s;
        }
        const std::size_t k = visit(level + 1, child, std::move(y));
        children[a].push_back(k);
        terms[c] = tree.child_probability(level + 1, child) * table.entries[k].value;
      }
      action_values[a] = dt * spec.running(x, moments, ai, 0, nu) + order_free_sum(terms);
    }
    MdpEntry& e = table.entries[idx];
    e.action_values = std::move(action_values);
    e.children = std::move(children);
    e.best_action = 0;
    for (std::size_t a = 1; a < e.action_values.size(); ++a) {
      if (e.action_values[a] > e.action_values[static_cast<std::size_t>(e.best_action)]) {
        e.best_action = static_cast<int>(a);
      }
    }
    e.value = e.action_values[static_cast<std::size_t>(e.best_action)];
    if (!std::isfinite(e.value)) throw NumericError("classical_mdp_value: non-finite value");
    return idx;
  }
};

}  // namespace

MdpValueTable classical_mdp_table(const ProblemSpec& spec, double t, std::span<const double> x,
                                  const ScenarioTree& tree, int channel, std::uint64_t cap) {
  require_no_mean_field(spec, "classical_mdp_value");
  if (spec.num_b() != 1) throw ContractViolation("classical_mdp_value: B must be a singleton");
  if (x.size() != spec.state_dim()) throw InvalidInput("classical_mdp_value: dimension mismatch");
  if (channel < 0 || channel >= tree.channels()) {
    throw InvalidInput("classical_mdp_value: channel out of range");
  }
  if (static_cast<std::size_t>(tree.noise_dim()) != spec.noise_dim()) {
    throw InvalidInput("classical_mdp_value: tree noise dimension does not match the problem");
  }
  const int start = tree.level_of(t);
  // States visited: one per (action, child) history.
  std::uint64_t states = 1;
  for (int k = start; k < tree.steps(); ++k) {
    const std::uint64_t fan = spec.num_a() * tree.branching_factor(k);
    if (states > cap / fan) {
      throw CapacityError("classical_mdp_value: more than " + std::to_string(cap) +
                          " states in the backward induction");
    }
    states *= fan;
  }
  MdpValueTable table;
  MdpBuilder b{spec, tree, channel, table};
  if (tree.num_nodes(start) != 1) {
    throw InvalidInput("classical_mdp_value: start level must hold a single node");
  }
  b.visit(start, 0, std::vector<double>(x.begin(), x.end()));
  return table;
}

double classical_mdp_value(const ProblemSpec& spec, double t, std::span<const double> x,
                           const ScenarioTree& tree, int channel, std::uint64_t cap) {
  return classical_mdp_table(spec, t, x, tree, channel, cap).value();
}

double MdpValueTable::max_dpp_residual(const ProblemSpec& spec, const ScenarioTree& tree) const {
  double worst = 0.0;
  for (const MdpEntry& e : entries) {
    const LawMoments moments{e.x};
    if (e.level == tree.steps()) {
      worst = std::max(worst, std::abs(e.value - spec.terminal(e.x, moments)));
      continue;
    }
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < e.children.size(); ++a) {
      const JointActionLaw nu = JointActionLaw::dirac(spec.num_a(), 1, a, 0);
      std::vector<double> terms;
      for (std::size_t k : e.children[a]) {
        terms.push_back(tree.child_probability(e.level + 1, entries[k].node) * entries[k].value);
      }
      best = std::max(best, tree.dt() * spec.running(e.x, moments, static_cast<int>(a), 0, nu) +
                                order_free_sum(terms));
    }
    worst = std::max(worst, std::abs(e.value - best));
  }
  return worst;
}

}  // namespace mvgame
