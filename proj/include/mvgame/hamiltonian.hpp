#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mvgame/controls.hpp"
#include "mvgame/game.hpp"
#include "mvgame/measure.hpp"
#include "mvgame/problem.hpp"

namespace mvgame {

struct HamiltonianPoint {
  std::vector<double> x;
  EmpiricalMeasure mu;
  int a = 0;
  int b = 0;
  JointActionLaw nu;
  std::vector<double> p;
  std::vector<double> M;  // n x n, row-major, symmetric
};

// H = gamma . p + 1/2 tr(sigma sigma^T M) + f.
double eval_pointwise_H(const HamiltonianPoint& pt, const ProblemSpec& spec);

// Same formula for callers that already hold the law's moments.
double hamiltonian_value(const ProblemSpec& spec, std::span<const double> x, const LawMoments& mu,
                         int a, int b, const JointActionLaw& nu, std::span<const double> p,
                         std::span<const double> M);

// p and M fields on the support points of a base measure.
struct PMFields {
  EmpiricalMeasure base;
  std::vector<double> p;  // [i * n + j]
  std::vector<double> M;  // [i * n * n + j * n + l]

  std::size_t dim() const { return base.dim(); }
  std::span<const double> p_at(std::size_t i) const { return {p.data() + i * dim(), dim()}; }
  std::span<const double> M_at(std::size_t i) const {
    return {M.data() + i * dim() * dim(), dim() * dim()};
  }
  // Throws InvalidInput on shape mismatch, non-finite entries or an
  // asymmetric M (tolerance 1e-12).
  void validate() const;
  // Fields relabelled together with the base measure.
  PMFields permuted(std::span<const std::size_t> perm) const;
};

// Number of (outer, inner) assignment pairs measure_hamiltonian enumerates.
std::uint64_t hamiltonian_enumeration_size(std::size_t support, const ProblemSpec& spec,
                                           int randomization_atoms,
                                           std::uint64_t cap = kDefaultEnumerationCap);

// Lower (sup over per-atom A assignments of inf over per-atom B
// assignments) or upper (the mirror) Hamiltonian on the measure
//   sum_i w_i H(x_i, mu, a_i, b_i, nu_ab, p(x_i), M(x_i)),
// with nu_ab the joint law the assignment induces. Each support point is
// split into R equal sub-atoms.
double measure_hamiltonian(const EmpiricalMeasure& mu, const PMFields& fields,
                           const ProblemSpec& spec, ValueSide side, int randomization_atoms = 1,
                           std::uint64_t cap = kDefaultEnumerationCap);

// sum_i w_i sup_a inf_b H (or inf_b sup_a). ContractViolation when the
// coefficients read the law of the controls.
double pointwise_reduced_hamiltonian(const EmpiricalMeasure& mu, const PMFields& fields,
                                     const ProblemSpec& spec, ValueSide side);

// Upper minus lower measure Hamiltonian.
double isaacs_gap(const EmpiricalMeasure& mu, const PMFields& fields, const ProblemSpec& spec,
                  int randomization_atoms = 1, std::uint64_t cap = kDefaultEnumerationCap);

}  // namespace mvgame
