#include "mvgame/wcalculus.hpp"

#include <cmath>
#include <string>

#include "mvgame/errors.hpp"
#include "mvgame/summation.hpp"

namespace mvgame {
namespace {

// E_mu[phi(x)] with an order-free sum.
template <class Phi>
double expect(const EmpiricalMeasure& mu, Phi phi) {
  std::vector<double> terms(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) terms[i] = mu.weight(i) * phi(mu.point(i));
  return order_free_sum(terms);
}

double first(std::span<const double> x) { return x[0]; }
double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

// Builds a field by calling f(x_i, out_i) for every support point.
template <class F>
std::vector<double> field(const EmpiricalMeasure& mu, std::size_t width, F f) {
  std::vector<double> out(mu.size() * width, 0.0);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    f(mu.point(i), std::span<double>(out.data() + i * width, width));
  }
  return out;
}

TestFunctional make(std::string name, FunctionalFamily fam, std::size_t n,
                    std::function<double(const EmpiricalMeasure&)> value,
                    std::function<void(const EmpiricalMeasure&, std::span<const double>, std::span<double>)> grad,
                    std::function<void(const EmpiricalMeasure&, std::span<const double>, std::span<double>)> hess) {
  TestFunctional t;
  t.name = std::move(name);
  t.family = fam;
  t.value = std::move(value);
  t.gradient = [n, grad](const EmpiricalMeasure& mu) {
    return field(mu, n, [&](std::span<const double> x, std::span<double> o) { grad(mu, x, o); });
  };
  t.hessian = [n, hess](const EmpiricalMeasure& mu) {
    return field(mu, n * n, [&](std::span<const double> x, std::span<double> o) { hess(mu, x, o); });
  };
  return t;
}

// For fields that read moments of mu: the batch callbacks compute them once
// per call instead of once per atom.
TestFunctional make_batch(std::string name, FunctionalFamily fam,
                          std::function<double(const EmpiricalMeasure&)> value,
                          TestFunctional::Field grad, TestFunctional::Field hess) {
  TestFunctional t;
  t.name = std::move(name);
  t.family = fam;
  t.value = std::move(value);
  t.gradient = std::move(grad);
  t.hessian = std::move(hess);
  return t;
}

void require_uniform(const EmpiricalMeasure& mu, double h, const char* what) {
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidInput(std::string(what) + ": step h must be positive");
  if (!mu.has_uniform_weights(1e-12)) {
    throw ContractViolation(std::string(what) + ": the empirical projection needs uniform weights");
  }
}

}  // namespace

std::vector<TestFunctional> moment_functional_zoo(std::size_t n) {
  using FF = FunctionalFamily;
  const auto poly = FF::kMomentPolynomial;
  std::vector<TestFunctional> zoo;
  auto zero_hess = [](const EmpiricalMeasure&, std::span<const double>, std::span<double>) {};

  zoo.push_back(make(
      "mean", poly, n, [](const EmpiricalMeasure& mu) { return expect(mu, first); },
      [](const EmpiricalMeasure&, std::span<const double>, std::span<double> o) { o[0] = 1.0; },
      zero_hess));

  zoo.push_back(make_batch(
      "mean_sq", poly,
      [](const EmpiricalMeasure& mu) {
        const double m = expect(mu, first);
        return m * m;
      },
      [n](const EmpiricalMeasure& mu) {
        const double m = expect(mu, first);
        return field(mu, n, [&](std::span<const double>, std::span<double> o) { o[0] = 2.0 * m; });
      },
      [n](const EmpiricalMeasure& mu) { return std::vector<double>(mu.size() * n * n, 0.0); }));

  auto identity_times = [n](double c) {
    return [n, c](std::span<double> o) {
      for (std::size_t j = 0; j < n; ++j) o[j * n + j] = c;
    };
  };

  zoo.push_back(make(
      "second", poly, n, [](const EmpiricalMeasure& mu) { return expect(mu, norm2); },
      [n](const EmpiricalMeasure&, std::span<const double> x, std::span<double> o) {
        for (std::size_t j = 0; j < n; ++j) o[j] = 2.0 * x[j];
      },
      [id = identity_times(2.0)](const EmpiricalMeasure&, std::span<const double>,
                                 std::span<double> o) { id(o); }));

  zoo.push_back(make_batch(
      "variance", poly,
      [](const EmpiricalMeasure& mu) {
        const auto m = mu.mean();
        return expect(mu, norm2) - norm2(m);
      },
      [n](const EmpiricalMeasure& mu) {
        const auto m = mu.mean();
        return field(mu, n, [&](std::span<const double> x, std::span<double> o) {
          for (std::size_t j = 0; j < n; ++j) o[j] = 2.0 * (x[j] - m[j]);
        });
      },
      [n, id = identity_times(2.0)](const EmpiricalMeasure& mu) {
        return field(mu, n * n, [&](std::span<const double>, std::span<double> o) { id(o); });
      }));

  zoo.push_back(make(
      "cubic", poly, n,
      [](const EmpiricalMeasure& mu) {
        return expect(mu, [](std::span<const double> x) { return x[0] * x[0] * x[0]; });
      },
      [](const EmpiricalMeasure&, std::span<const double> x, std::span<double> o) {
        o[0] = 3.0 * x[0] * x[0];
      },
      [](const EmpiricalMeasure&, std::span<const double> x, std::span<double> o) {
        o[0] = 6.0 * x[0];
      }));

  zoo.push_back(make(
      "quartic", poly, n,
      [](const EmpiricalMeasure& mu) {
        return expect(mu, [](std::span<const double> x) { return std::pow(x[0], 4); });
      },
      [](const EmpiricalMeasure&, std::span<const double> x, std::span<double> o) {
        o[0] = 4.0 * x[0] * x[0] * x[0];
      },
      [](const EmpiricalMeasure&, std::span<const double> x, std::span<double> o) {
        o[0] = 12.0 * x[0] * x[0];
      }));

  zoo.push_back(make_batch(
      "mean_quartic", poly,
      [](const EmpiricalMeasure& mu) { return std::pow(expect(mu, first), 4); },
      [n](const EmpiricalMeasure& mu) {
        const double m = expect(mu, first);
        return field(mu, n, [&](std::span<const double>, std::span<double> o) { o[0] = 4.0 * m * m * m; });
      },
      [n](const EmpiricalMeasure& mu) { return std::vector<double>(mu.size() * n * n, 0.0); }));

  auto sq0 = [](std::span<const double> x) { return x[0] * x[0]; };
  zoo.push_back(make_batch(
      "mixed", poly,
      [sq0](const EmpiricalMeasure& mu) { return expect(mu, first) * expect(mu, sq0); },
      [n, sq0](const EmpiricalMeasure& mu) {
        const double m = expect(mu, first);
        const double s = expect(mu, sq0);
        return field(mu, n, [&](std::span<const double> x, std::span<double> o) { o[0] = s + 2.0 * m * x[0]; });
      },
      [n](const EmpiricalMeasure& mu) {
        const double m = expect(mu, first);
        return field(mu, n * n, [&](std::span<const double>, std::span<double> o) { o[0] = 2.0 * m; });
      }));

  zoo.push_back(make_batch(
      "log_second", poly,
      [](const EmpiricalMeasure& mu) { return std::log1p(expect(mu, norm2)); },
      [n](const EmpiricalMeasure& mu) {
        const double c = 2.0 / (1.0 + expect(mu, norm2));
        return field(mu, n, [&](std::span<const double> x, std::span<double> o) {
          for (std::size_t j = 0; j < n; ++j) o[j] = c * x[j];
        });
      },
      [n](const EmpiricalMeasure& mu) {
        const double c = 2.0 / (1.0 + expect(mu, norm2));
        return field(mu, n * n, [&](std::span<const double>, std::span<double> o) {
          for (std::size_t j = 0; j < n; ++j) o[j * n + j] = c;
        });
      }));

  zoo.push_back(make_batch(
      "interaction", FF::kInteractionEnergy,
      [](const EmpiricalMeasure& mu) {
        std::vector<double> terms;
        terms.reserve(mu.size() * mu.size());
        for (std::size_t i = 0; i < mu.size(); ++i) {
          for (std::size_t k = 0; k < mu.size(); ++k) {
            double d2 = 0.0;
            for (std::size_t j = 0; j < mu.dim(); ++j) {
              const double d = mu.point(i)[j] - mu.point(k)[j];
              d2 += d * d;
            }
            terms.push_back(mu.weight(i) * mu.weight(k) * d2);
          }
        }
        return order_free_sum(terms);
      },
      [n](const EmpiricalMeasure& mu) {
        const auto m = mu.mean();
        return field(mu, n, [&](std::span<const double> x, std::span<double> o) {
          for (std::size_t j = 0; j < n; ++j) o[j] = 4.0 * (x[j] - m[j]);
        });
      },
      [n, id = identity_times(4.0)](const EmpiricalMeasure& mu) {
        return field(mu, n * n, [&](std::span<const double>, std::span<double> o) { id(o); });
      }));
  return zoo;
}

TestFunctional functional_by_name(const std::string& name, std::size_t dim) {
  for (auto& f : moment_functional_zoo(dim)) {
    if (f.name == name) return f;
  }
  throw InvalidInput("unknown test functional '" + name + "'");
}

std::vector<double> lions_gradient(const TestFunctional& theta, const EmpiricalMeasure& mu,
                                   double h) {
  require_uniform(mu, h, "lions_gradient");
  if (!theta.value) throw InvalidInput("lions_gradient: functional has no evaluator");
  const std::size_t n = mu.dim();
  const double scale = static_cast<double>(mu.size());
  std::vector<double> out(mu.size() * n);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto p = mu.point(i);
      const double s = h * std::max(1.0, std::abs(p[j]));
      x.assign(p.begin(), p.end());
      x[j] = p[j] + s;
      const double up_x = x[j];
      const double up = theta.value(mu.with_point(i, x));
      x[j] = p[j] - s;
      const double dn_x = x[j];
      const double dn = theta.value(mu.with_point(i, x));
      out[i * n + j] = scale * (up - dn) / (up_x - dn_x);
    }
  }
  return out;
}

std::vector<double> lions_second_derivative(const TestFunctional& theta,
                                            const EmpiricalMeasure& mu, double h) {
  require_uniform(mu, h, "lions_second_derivative");
  if (!theta.value) throw InvalidInput("lions_second_derivative: functional has no evaluator");
  const std::size_t n = mu.dim();
  const double scale = static_cast<double>(mu.size());
  const double f0 = theta.value(mu);
  std::vector<double> out(mu.size() * n * n);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const auto p = mu.point(i);
    auto eval = [&](std::size_t j, double dj, std::size_t l, double dl) {
      x.assign(p.begin(), p.end());
      x[j] += dj;
      x[l] += dl;
      return theta.value(mu.with_point(i, x));
    };
    for (std::size_t j = 0; j < n; ++j) {
      const double sj = h * std::max(1.0, std::abs(p[j]));
      const double hp = (p[j] + sj) - p[j];
      const double hm = p[j] - (p[j] - sj);
      const double fp = eval(j, sj, j, 0.0);
      const double fm = eval(j, -sj, j, 0.0);
      out[i * n * n + j * n + j] = scale * 2.0 * ((fp - f0) / hp - (f0 - fm) / hm) / (hp + hm);
      for (std::size_t l = j + 1; l < n; ++l) {
        const double sl = h * std::max(1.0, std::abs(p[l]));
        const double v = (eval(j, sj, l, sl) - eval(j, sj, l, -sl) - eval(j, -sj, l, sl) +
                          eval(j, -sj, l, -sl)) /
                         (4.0 * sj * sl);
        out[i * n * n + j * n + l] = scale * v;
        out[i * n * n + l * n + j] = scale * v;
      }
    }
  }
  return out;
}

double relative_field_error(std::span<const double> fd, std::span<const double> analytic) {
  if (fd.size() != analytic.size()) throw InvalidInput("relative_field_error: size mismatch");
  double err = 0.0;
  double ref = 0.0;
  for (std::size_t i = 0; i < fd.size(); ++i) {
    err = std::max(err, std::abs(fd[i] - analytic[i]));
    ref = std::max(ref, std::abs(analytic[i]));
  }
  return err / std::max(1.0, ref);
}

std::vector<double> analytic_gradient(const TestFunctional& theta, const EmpiricalMeasure& mu) {
  if (!theta.gradient) throw InvalidInput("functional '" + theta.name + "' has no analytic gradient");
  auto g = theta.gradient(mu);
  if (g.size() != mu.size() * mu.dim()) throw InvalidInput("analytic gradient has the wrong size");
  return g;
}

std::vector<double> analytic_hessian(const TestFunctional& theta, const EmpiricalMeasure& mu) {
  if (!theta.hessian) throw InvalidInput("functional '" + theta.name + "' has no analytic hessian");
  auto h = theta.hessian(mu);
  if (h.size() != mu.size() * mu.dim() * mu.dim()) {
    throw InvalidInput("analytic hessian has the wrong size");
  }
  return h;
}

std::vector<double> ito_flow_residual(const TestFunctional& theta, const Trajectory& flow,
                                      const ScenarioTree& tree) {
  if (!theta.value) throw InvalidInput("ito_flow_residual: functional has no evaluator");
  if (flow.states.size() < 2 || flow.records.size() + 1 != flow.states.size()) {
    throw InvalidInput("ito_flow_residual: trajectory lacks drift/diffusion records");
  }
  const double dt = tree.dt();
  std::vector<double> out;
  out.reserve(flow.records.size());
  EmpiricalMeasure mu = flow.states[0].law();
  double value = theta.value(mu);
  for (std::size_t k = 0; k < flow.records.size(); ++k) {
    const RandomVector& x = flow.states[k];
    const StepRecord& rec = flow.records[k];
    const std::size_t n = x.dim;
    if (rec.drift.size() != x.size() * n || rec.diffusion.size() % (x.size() * n) != 0 ||
        rec.diffusion.empty()) {
      throw InvalidInput("ito_flow_residual: records do not match the states");
    }
    const std::size_t d = rec.diffusion.size() / (x.size() * n);
    const auto grad = theta.gradient ? analytic_gradient(theta, mu) : lions_gradient(theta, mu);
    const auto hess = theta.hessian ? analytic_hessian(theta, mu) : lions_second_derivative(theta, mu, 1e-3);
    std::vector<double> terms(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      double g = 0.0;
      for (std::size_t j = 0; j < n; ++j) g += rec.drift[i * n + j] * grad[i * n + j];
      double tr = 0.0;
      const double* s = rec.diffusion.data() + i * n * d;
      const double* H = hess.data() + i * n * n;
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t l = 0; l < n; ++l) {
          double ss = 0.0;
          for (std::size_t c = 0; c < d; ++c) ss += s[j * d + c] * s[l * d + c];
          tr += ss * H[l * n + j];
        }
      }
      terms[i] = x.weights[i] * (g + 0.5 * tr);
    }
    const double generator = order_free_sum(terms);
    EmpiricalMeasure next = flow.states[k + 1].law();
    const double next_value = theta.value(next);
    out.push_back((next_value - value) / dt - generator);
    mu = std::move(next);
    value = next_value;
  }
  return out;
}

namespace {

EmpiricalMeasure shifted_product(const EmpiricalMeasure& mu, std::span<const double> Z,
                                 std::size_t d, double h) {
  const std::size_t n = mu.dim();
  if (d == 0 || d > 20) throw InvalidInput("lifted second variation: noise dimension must be in [1, 20]");
  if (Z.size() != mu.size() * n * d) throw InvalidInput("lifted second variation: Z has the wrong size");
  const std::size_t patterns = std::size_t{1} << d;
  std::vector<double> pts;
  std::vector<double> w;
  pts.reserve(mu.size() * patterns * n);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const auto x = mu.point(i);
    for (std::size_t e = 0; e < patterns; ++e) {
      for (std::size_t j = 0; j < n; ++j) {
        double y = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          y += Z[i * n * d + j * d + c] * (((e >> c) & 1U) ? 1.0 : -1.0);
        }
        pts.push_back(x[j] + h * y);
      }
      w.push_back(mu.weight(i) / static_cast<double>(patterns));
    }
  }
  return EmpiricalMeasure(n, std::move(pts), std::move(w));
}

}  // namespace

double lifted_second_variation(const TestFunctional& theta, const EmpiricalMeasure& mu,
                               std::span<const double> Z, std::size_t noise_dim, double h) {
  if (!(h > 0.0)) throw InvalidInput("lifted_second_variation: h must be positive");
  const double up = theta.value(shifted_product(mu, Z, noise_dim, h));
  const double mid = theta.value(shifted_product(mu, Z, noise_dim, 0.0));
  const double dn = theta.value(shifted_product(mu, Z, noise_dim, -h));
  return (up - 2.0 * mid + dn) / (h * h);
}

double lifted_trace_form(const TestFunctional& theta, const EmpiricalMeasure& mu,
                         std::span<const double> Z, std::size_t d) {
  const std::size_t n = mu.dim();
  if (Z.size() != mu.size() * n * d) throw InvalidInput("lifted_trace_form: Z has the wrong size");
  const auto hess = analytic_hessian(theta, mu);
  std::vector<double> terms(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double* z = Z.data() + i * n * d;
    double tr = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t l = 0; l < n; ++l) {
        double zz = 0.0;
        for (std::size_t c = 0; c < d; ++c) zz += z[l * d + c] * z[j * d + c];
        tr += hess[i * n * n + j * n + l] * zz;
      }
    }
    terms[i] = mu.weight(i) * tr;
  }
  return order_free_sum(terms);
}

PMFields fields_from_functional(const TestFunctional& theta, const EmpiricalMeasure& mu) {
  PMFields f{mu, theta.gradient ? analytic_gradient(theta, mu) : lions_gradient(theta, mu),
             theta.hessian ? analytic_hessian(theta, mu) : lions_second_derivative(theta, mu, 1e-3)};
  // Symmetrise finite-difference noise.
  const std::size_t n = mu.dim();
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t l = j + 1; l < n; ++l) {
        const double avg = 0.5 * (f.M[i * n * n + j * n + l] + f.M[i * n * n + l * n + j]);
        f.M[i * n * n + j * n + l] = avg;
        f.M[i * n * n + l * n + j] = avg;
      }
    }
  }
  return f;
}

PMFields ValueCandidate::fields(double t, const EmpiricalMeasure& mu) const {
  if (!gradient || !hessian) throw InvalidInput("value candidate '" + name + "' lacks derivative fields");
  PMFields f{mu, gradient(t, mu), hessian(t, mu)};
  f.validate();
  return f;
}

double ValueCandidate::terminal_mismatch(const EmpiricalMeasure& mu) const {
  if (!value || !terminal) throw InvalidInput("value candidate '" + name + "' lacks a terminal map");
  return std::abs(value(horizon, mu) - terminal(mu));
}

ViscosityEvaluation evaluate_viscosity(const ValueCandidate& candidate, double t,
                                       const EmpiricalMeasure& mu, const ProblemSpec& spec,
                                       ValueSide side, int randomization_atoms,
                                       std::uint64_t cap) {
  if (!(t < candidate.horizon)) {
    throw InvalidInput("viscosity_residual: t must precede the horizon");
  }
  if (!candidate.time_derivative) {
    throw InvalidInput("value candidate '" + candidate.name + "' lacks a time derivative");
  }
  const PMFields f = candidate.fields(t, mu);
  ViscosityEvaluation ev;
  ev.time_derivative = candidate.time_derivative(t, mu);
  bool enumerable = true;
  try {
    hamiltonian_enumeration_size(mu.size(), spec, randomization_atoms, cap);
  } catch (const CapacityError&) {
    if (spec.depends_on_control_law()) throw;
    enumerable = false;
  }
  if (enumerable) {
    ev.route = HamiltonianRoute::kEnumeration;
    ev.hamiltonian = measure_hamiltonian(mu, f, spec, side, randomization_atoms, cap);
  } else {
    ev.route = HamiltonianRoute::kPointwise;
    ev.hamiltonian = pointwise_reduced_hamiltonian(mu, f, spec, side);
  }
  ev.residual = -ev.time_derivative - ev.hamiltonian;
  return ev;
}

double viscosity_residual(const ValueCandidate& candidate, double t, const EmpiricalMeasure& mu,
                          const ProblemSpec& spec, ValueSide side, int randomization_atoms,
                          std::uint64_t cap) {
  return evaluate_viscosity(candidate, t, mu, spec, side, randomization_atoms, cap).residual;
}

}  // namespace mvgame
