#include "mvgame/hamiltonian.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "mvgame/errors.hpp"
#include "mvgame/parallel.hpp"
#include "mvgame/summation.hpp"

namespace mvgame {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_symmetric(std::span<const double> M, std::size_t n, const char* what) {
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t l = 0; l < n; ++l) {
      if (!std::isfinite(M[j * n + l])) throw InvalidInput(std::string(what) + ": non-finite M");
      if (std::abs(M[j * n + l] - M[l * n + j]) > 1e-12) {
        throw InvalidInput(std::string(what) + ": M is not symmetric");
      }
    }
  }
}

void check_same_measure(const EmpiricalMeasure& mu, const PMFields& f) {
  if (mu.dim() != f.base.dim() || mu.size() != f.base.size() ||
      mu.points() != f.base.points() || mu.weights() != f.base.weights()) {
    throw InvalidInput("p/M fields are defined on a different measure");
  }
}

}  // namespace

double hamiltonian_value(const ProblemSpec& spec, std::span<const double> x, const LawMoments& mu,
                         int a, int b, const JointActionLaw& nu, std::span<const double> p,
                         std::span<const double> M) {
  const std::size_t n = spec.state_dim();
  const std::size_t d = spec.noise_dim();
  thread_local std::vector<double> gamma;
  thread_local std::vector<double> sigma;
  gamma.resize(n);
  sigma.resize(n * d);
  spec.drift(x, mu, a, b, nu, gamma);
  spec.diffusion(x, mu, a, b, nu, sigma);
  double h = spec.running(x, mu, a, b, nu);
  for (std::size_t j = 0; j < n; ++j) h += gamma[j] * p[j];
  // 1/2 tr(sigma sigma^T M) = 1/2 sum_{j,l} (sigma sigma^T)_{jl} M_{lj}
  double tr = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t l = 0; l < n; ++l) {
      double ss = 0.0;
      for (std::size_t c = 0; c < d; ++c) ss += sigma[j * d + c] * sigma[l * d + c];
      tr += ss * M[l * n + j];
    }
  }
  h += 0.5 * tr;
  if (!std::isfinite(h)) throw NumericError("non-finite Hamiltonian value");
  return h;
}

double eval_pointwise_H(const HamiltonianPoint& pt, const ProblemSpec& spec) {
  const std::size_t n = spec.state_dim();
  if (pt.x.size() != n || pt.p.size() != n || pt.M.size() != n * n || pt.mu.dim() != n) {
    throw InvalidInput("eval_pointwise_H: dimensions do not match the problem");
  }
  if (pt.a < 0 || static_cast<std::size_t>(pt.a) >= spec.num_a() || pt.b < 0 ||
      static_cast<std::size_t>(pt.b) >= spec.num_b() || pt.nu.num_a() != spec.num_a() ||
      pt.nu.num_b() != spec.num_b()) {
    throw InvalidInput("eval_pointwise_H: actions do not match the problem");
  }
  check_symmetric(pt.M, n, "eval_pointwise_H");
  return hamiltonian_value(spec, pt.x, LawMoments::of(pt.mu), pt.a, pt.b, pt.nu, pt.p, pt.M);
}

void PMFields::validate() const {
  const std::size_t n = dim();
  if (p.size() != base.size() * n || M.size() != base.size() * n * n) {
    throw InvalidInput("PMFields: field sizes do not match the base measure");
  }
  for (double v : p) {
    if (!std::isfinite(v)) throw InvalidInput("PMFields: non-finite p");
  }
  for (std::size_t i = 0; i < base.size(); ++i) check_symmetric(M_at(i), n, "PMFields");
}

PMFields PMFields::permuted(std::span<const std::size_t> perm) const {
  const std::size_t n = dim();
  PMFields out{base.permuted(perm), std::vector<double>(p.size()), std::vector<double>(M.size())};
  for (std::size_t j = 0; j < perm.size(); ++j) {
    const std::size_t i = perm[j];
    std::copy_n(p.begin() + static_cast<std::ptrdiff_t>(i * n), n,
                out.p.begin() + static_cast<std::ptrdiff_t>(j * n));
    std::copy_n(M.begin() + static_cast<std::ptrdiff_t>(i * n * n), n * n,
                out.M.begin() + static_cast<std::ptrdiff_t>(j * n * n));
  }
  return out;
}

std::uint64_t hamiltonian_enumeration_size(std::size_t support, const ProblemSpec& spec,
                                           int randomization_atoms, std::uint64_t cap) {
  if (randomization_atoms < 1) throw InvalidInput("randomization atoms must be >= 1");
  const std::uint64_t atoms = support * static_cast<std::uint64_t>(randomization_atoms);
  return checked_power(spec.num_a() * spec.num_b(), atoms, cap, "measure Hamiltonian");
}

double measure_hamiltonian(const EmpiricalMeasure& mu, const PMFields& fields,
                           const ProblemSpec& spec, ValueSide side, int randomization_atoms,
                           std::uint64_t cap) {
  if (mu.dim() != spec.state_dim()) throw InvalidInput("measure_hamiltonian: dimension mismatch");
  check_same_measure(mu, fields);
  fields.validate();
  hamiltonian_enumeration_size(mu.size(), spec, randomization_atoms, cap);
  const std::size_t r = static_cast<std::size_t>(randomization_atoms);
  const std::size_t atoms = mu.size() * r;
  const std::size_t na = spec.num_a();
  const std::size_t nb = spec.num_b();
  const LawMoments m = LawMoments::of(mu);
  std::vector<double> w(atoms);
  for (std::size_t j = 0; j < atoms; ++j) w[j] = mu.weight(j / r) / static_cast<double>(r);

  const bool uses_nu = spec.depends_on_control_law();
  // Without control-law dependence every term is a table lookup.
  std::vector<double> table;
  if (!uses_nu) {
    const JointActionLaw dummy = JointActionLaw::dirac(na, nb, 0, 0);
    table.resize(atoms * na * nb);
    for (std::size_t j = 0; j < atoms; ++j) {
      const std::size_t i = j / r;
      for (std::size_t a = 0; a < na; ++a) {
        for (std::size_t b = 0; b < nb; ++b) {
          table[(j * na + a) * nb + b] =
              w[j] * hamiltonian_value(spec, mu.point(i), m, static_cast<int>(a),
                                       static_cast<int>(b), dummy, fields.p_at(i), fields.M_at(i));
        }
      }
    }
  }

  const bool lower = side == ValueSide::kLower;
  const std::size_t n_outer = lower ? na : nb;
  const std::size_t n_inner = lower ? nb : na;
  std::uint64_t outer_count = 1;
  std::uint64_t inner_count = 1;
  for (std::size_t j = 0; j < atoms; ++j) {
    outer_count *= n_outer;
    inner_count *= n_inner;
  }
  std::vector<double> results(outer_count);
  parallel_for(outer_count, [&](std::size_t o) {
    std::vector<int> a(atoms);
    std::vector<int> b(atoms);
    std::vector<double> terms(atoms);
    decode_assignment(o, n_outer, lower ? std::span<int>(a) : std::span<int>(b));
    double best = lower ? kInf : -kInf;
    for (std::uint64_t in = 0; in < inner_count; ++in) {
      decode_assignment(in, n_inner, lower ? std::span<int>(b) : std::span<int>(a));
      if (uses_nu) {
        const JointActionLaw nu = joint_control_law(a, b, w, na, nb);
        for (std::size_t j = 0; j < atoms; ++j) {
          const std::size_t i = j / r;
          terms[j] = w[j] * hamiltonian_value(spec, mu.point(i), m, a[j], b[j], nu,
                                              fields.p_at(i), fields.M_at(i));
        }
      } else {
        for (std::size_t j = 0; j < atoms; ++j) {
          terms[j] = table[(j * na + static_cast<std::size_t>(a[j])) * nb + static_cast<std::size_t>(b[j])];
        }
      }
      const double v = order_free_sum(terms);
      best = lower ? std::min(best, v) : std::max(best, v);
    }
    results[o] = best;
  });
  double value = lower ? -kInf : kInf;
  for (double v : results) value = lower ? std::max(value, v) : std::min(value, v);
  return value;
}

double pointwise_reduced_hamiltonian(const EmpiricalMeasure& mu, const PMFields& fields,
                                     const ProblemSpec& spec, ValueSide side) {
  if (spec.depends_on_control_law()) {
    throw ContractViolation(
        "pointwise_reduced_hamiltonian: the coefficients depend on the law of the controls");
  }
  if (mu.dim() != spec.state_dim()) throw InvalidInput("pointwise_reduced_hamiltonian: dimension mismatch");
  check_same_measure(mu, fields);
  fields.validate();
  const std::size_t na = spec.num_a();
  const std::size_t nb = spec.num_b();
  const LawMoments m = LawMoments::of(mu);
  const JointActionLaw dummy = JointActionLaw::dirac(na, nb, 0, 0);
  const bool lower = side == ValueSide::kLower;
  std::vector<double> terms(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    auto h = [&](std::size_t a, std::size_t b) {
      return mu.weight(i) * hamiltonian_value(spec, mu.point(i), m, static_cast<int>(a),
                                              static_cast<int>(b), dummy, fields.p_at(i),
                                              fields.M_at(i));
    };
    double outer = lower ? -kInf : kInf;
    for (std::size_t o = 0; o < (lower ? na : nb); ++o) {
      double inner = lower ? kInf : -kInf;
      for (std::size_t in = 0; in < (lower ? nb : na); ++in) {
        const double v = lower ? h(o, in) : h(in, o);
        inner = lower ? std::min(inner, v) : std::max(inner, v);
      }
      outer = lower ? std::max(outer, inner) : std::min(outer, inner);
    }
    terms[i] = outer;
  }
  return order_free_sum(terms);
}

double isaacs_gap(const EmpiricalMeasure& mu, const PMFields& fields, const ProblemSpec& spec,
                  int randomization_atoms, std::uint64_t cap) {
  const double lo = measure_hamiltonian(mu, fields, spec, ValueSide::kLower, randomization_atoms, cap);
  const double up = measure_hamiltonian(mu, fields, spec, ValueSide::kUpper, randomization_atoms, cap);
  return up - lo;
}

}  // namespace mvgame
