#include "mvgame/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mvgame/errors.hpp"
#include "mvgame/summation.hpp"

namespace mvgame {
namespace {

constexpr double kMassTolerance = 1e-12;
constexpr double kPivotTolerance = 1e-12;
// Largest coupling LP (variables) we are willing to solve densely.
constexpr std::size_t kMaxTransportVariables = 40000;

double compensated_sum(std::span<const double> values) {
  double sum = 0.0;
  double carry = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      carry += (sum - t) + v;
    } else {
      carry += (v - t) + sum;
    }
    sum = t;
  }
  return sum + carry;
}

void check_probabilities(std::span<const double> w, const char* what) {
  if (w.empty()) throw InvalidInput(std::string(what) + ": no atoms");
  for (double x : w) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw InvalidInput(std::string(what) + ": weights must be finite and nonnegative");
    }
  }
  const double total = compensated_sum(w);
  if (std::abs(total - 1.0) > kMassTolerance) {
    throw InvalidInput(std::string(what) + ": weights sum to " + std::to_string(total));
  }
}

double distance(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = x[k] - y[k];
    s += d * d;
  }
  return std::sqrt(s);
}

struct Atom {
  std::vector<double> x;
  double w;
};

// Sorted copy of the atoms; two measures that differ only by relabelling of
// atoms have identical canonical forms.
std::vector<Atom> canonical_atoms(const EmpiricalMeasure& mu) {
  std::vector<Atom> atoms;
  atoms.reserve(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    auto p = mu.point(i);
    atoms.push_back({std::vector<double>(p.begin(), p.end()), mu.weight(i)});
  }
  std::stable_sort(atoms.begin(), atoms.end(), [](const Atom& l, const Atom& r) {
    if (l.x != r.x) return l.x < r.x;
    return l.w < r.w;
  });
  return atoms;
}

int compare_canonical(const std::vector<Atom>& l, const std::vector<Atom>& r) {
  if (l.size() != r.size()) return l.size() < r.size() ? -1 : 1;
  for (std::size_t i = 0; i < l.size(); ++i) {
    if (l[i].x != r[i].x) return l[i].x < r[i].x ? -1 : 1;
    if (l[i].w != r[i].w) return l[i].w < r[i].w ? -1 : 1;
  }
  return 0;
}

void validate_pair(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double q) {
  if (mu.dim() != nu.dim()) {
    throw InvalidInput("wasserstein_q: dimension mismatch (" + std::to_string(mu.dim()) +
                       " vs " + std::to_string(nu.dim()) + ")");
  }
  if (!(q >= 1.0)) throw InvalidInput("wasserstein_q: order q must be >= 1");
}

double transport_cost_1d(const std::vector<Atom>& a, const std::vector<Atom>& b, double q) {
  std::size_t i = 0;
  std::size_t j = 0;
  double ra = a[0].w;
  double rb = b[0].w;
  double cost = 0.0;
  while (i < a.size() && j < b.size()) {
    const double mass = std::min(ra, rb);
    if (mass > 0.0) cost += mass * std::pow(std::abs(a[i].x[0] - b[j].x[0]), q);
    ra -= mass;
    rb -= mass;
    if (ra <= 0.0) {
      if (++i < a.size()) ra = a[i].w;
    }
    if (rb <= 0.0) {
      if (++j < b.size()) rb = b[j].w;
    }
  }
  return cost;
}

// Two-phase dense tableau simplex for  min c'x  s.t.  Ax = rhs, x >= 0,
// rhs >= 0. Bland's rule on both pivots, so degenerate transport bases
// cannot cycle.
class DenseSimplex {
 public:
  DenseSimplex(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), width_(cols + rows + 1),
        tab_((rows + 1) * (cols + rows + 1), 0.0), basis_(rows) {}

  double& a(std::size_t r, std::size_t c) { return tab_[(r + 1) * width_ + c]; }
  double& rhs(std::size_t r) { return tab_[(r + 1) * width_ + width_ - 1]; }

  double minimize(std::span<const double> cost) {
    for (std::size_t r = 0; r < rows_; ++r) {
      a(r, cols_ + r) = 1.0;
      basis_[r] = cols_ + r;
    }
    // Phase one: minimise the sum of artificials.
    std::fill(obj(), obj() + width_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r) {
      for (std::size_t c = 0; c < cols_; ++c) obj()[c] -= a(r, c);
      obj()[width_ - 1] -= rhs(r);
    }
    run(cols_ + rows_);
    if (-obj()[width_ - 1] > 1e-9) throw NumericError("transport LP infeasible");
    // Drive zero-level artificials out of the basis where possible.
    for (std::size_t r = 0; r < rows_; ++r) {
      if (basis_[r] < cols_) continue;
      for (std::size_t c = 0; c < cols_; ++c) {
        if (std::abs(a(r, c)) > kPivotTolerance) {
          pivot(r, c);
          break;
        }
      }
    }
    // Phase two on the structural columns.
    std::fill(obj(), obj() + width_, 0.0);
    for (std::size_t c = 0; c < cols_; ++c) obj()[c] = cost[c];
    for (std::size_t r = 0; r < rows_; ++r) {
      const std::size_t b = basis_[r];
      if (b >= cols_) continue;
      const double cb = cost[b];
      if (cb == 0.0) continue;
      double* row = &tab_[(r + 1) * width_];
      for (std::size_t c = 0; c < width_; ++c) obj()[c] -= cb * row[c];
    }
    run(cols_);
    return -obj()[width_ - 1];
  }

 private:
  double* obj() { return tab_.data(); }

  void run(std::size_t allowed_cols) {
    for (;;) {
      std::size_t enter = allowed_cols;
      for (std::size_t c = 0; c < allowed_cols; ++c) {
        if (obj()[c] < -kPivotTolerance) {
          enter = c;
          break;
        }
      }
      if (enter == allowed_cols) return;
      std::size_t leave = rows_;
      double best_ratio = 0.0;
      for (std::size_t r = 0; r < rows_; ++r) {
        const double coef = a(r, enter);
        if (coef <= kPivotTolerance) continue;
        const double ratio = rhs(r) / coef;
        if (leave == rows_ || ratio < best_ratio - kPivotTolerance ||
            (std::abs(ratio - best_ratio) <= kPivotTolerance && basis_[r] < basis_[leave])) {
          leave = r;
          best_ratio = ratio;
        }
      }
      if (leave == rows_) throw NumericError("transport LP unbounded");
      pivot(leave, enter);
    }
  }

  void pivot(std::size_t r, std::size_t c) {
    double* prow = &tab_[(r + 1) * width_];
    const double inv = 1.0 / prow[c];
    for (std::size_t k = 0; k < width_; ++k) prow[k] *= inv;
    prow[c] = 1.0;
    for (std::size_t rr = 0; rr <= rows_; ++rr) {
      if (rr == r + 1) continue;
      double* row = &tab_[rr * width_];
      const double f = row[c];
      if (f == 0.0) continue;
      for (std::size_t k = 0; k < width_; ++k) row[k] -= f * prow[k];
      row[c] = 0.0;
    }
    basis_[r] = c;
  }

  std::size_t rows_;
  std::size_t cols_;
  std::size_t width_;
  std::vector<double> tab_;
  std::vector<std::size_t> basis_;
};

double transport_cost_lp(const std::vector<Atom>& a, const std::vector<Atom>& b, double q) {
  const std::size_t n1 = a.size();
  const std::size_t n2 = b.size();
  if (n1 == 1 || n2 == 1) {
    // Only one coupling exists.
    double cost = 0.0;
    for (std::size_t i = 0; i < n1; ++i) {
      for (std::size_t j = 0; j < n2; ++j) {
        cost += a[i].w * b[j].w * std::pow(distance(a[i].x, b[j].x), q);
      }
    }
    return cost;
  }
  if (n1 * n2 > kMaxTransportVariables) {
    throw CapacityError("wasserstein_q: coupling LP with " + std::to_string(n1 * n2) +
                        " variables exceeds the dense solver limit");
  }
  const std::size_t rows = n1 + n2 - 1;
  DenseSimplex lp(rows, n1 * n2);
  std::vector<double> cost(n1 * n2);
  for (std::size_t i = 0; i < n1; ++i) {
    for (std::size_t j = 0; j < n2; ++j) {
      const std::size_t v = i * n2 + j;
      cost[v] = std::pow(distance(a[i].x, b[j].x), q);
      lp.a(i, v) = 1.0;
      if (j + 1 < n2) lp.a(n1 + j, v) = 1.0;
    }
  }
  for (std::size_t i = 0; i < n1; ++i) lp.rhs(i) = a[i].w;
  for (std::size_t j = 0; j + 1 < n2; ++j) lp.rhs(n1 + j) = b[j].w;
  return std::max(0.0, lp.minimize(cost));
}

template <typename Solver>
double canonical_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double q,
                          Solver solve) {
  validate_pair(mu, nu, q);
  auto a = canonical_atoms(mu);
  auto b = canonical_atoms(nu);
  const int order = compare_canonical(a, b);
  if (order == 0) return 0.0;
  const double cost = order < 0 ? solve(a, b, q) : solve(b, a, q);
  return std::pow(std::max(0.0, cost), 1.0 / q);
}

}  // namespace

EmpiricalMeasure::EmpiricalMeasure(std::size_t dim, std::vector<double> points,
                                   std::vector<double> weights)
    : dim_(dim), points_(std::move(points)), weights_(std::move(weights)) {
  if (dim_ == 0) throw InvalidInput("EmpiricalMeasure: dimension must be positive");
  if (points_.size() != weights_.size() * dim_) {
    throw InvalidInput("EmpiricalMeasure: " + std::to_string(points_.size() / dim_) +
                       " points but " + std::to_string(weights_.size()) + " weights");
  }
  for (double x : points_) {
    if (!std::isfinite(x)) throw InvalidInput("EmpiricalMeasure: non-finite support point");
  }
  check_probabilities(weights_, "EmpiricalMeasure");
}

EmpiricalMeasure EmpiricalMeasure::uniform(std::size_t dim, std::vector<double> points) {
  if (dim == 0 || points.size() % dim != 0 || points.empty()) {
    throw InvalidInput("EmpiricalMeasure::uniform: bad point buffer");
  }
  const std::size_t n = points.size() / dim;
  return EmpiricalMeasure(dim, std::move(points), std::vector<double>(n, 1.0 / n));
}

EmpiricalMeasure EmpiricalMeasure::dirac(std::vector<double> point) {
  const std::size_t dim = point.size();
  return EmpiricalMeasure(dim, std::move(point), {1.0});
}

std::vector<double> EmpiricalMeasure::mean() const {
  std::vector<double> m(dim_, 0.0);
  std::vector<double> terms(size());
  for (std::size_t k = 0; k < dim_; ++k) {
    for (std::size_t i = 0; i < size(); ++i) terms[i] = weights_[i] * points_[i * dim_ + k];
    m[k] = order_free_sum(terms);
  }
  return m;
}

bool EmpiricalMeasure::has_uniform_weights(double tol) const {
  const double u = 1.0 / static_cast<double>(size());
  return std::all_of(weights_.begin(), weights_.end(),
                     [&](double w) { return std::abs(w - u) <= tol; });
}

EmpiricalMeasure EmpiricalMeasure::with_point(std::size_t i, std::span<const double> x) const {
  EmpiricalMeasure copy = *this;
  std::copy(x.begin(), x.end(), copy.points_.begin() + static_cast<std::ptrdiff_t>(i * dim_));
  return copy;
}

EmpiricalMeasure EmpiricalMeasure::permuted(std::span<const std::size_t> perm) const {
  if (perm.size() != size()) throw InvalidInput("permuted: permutation size mismatch");
  std::vector<double> pts(points_.size());
  std::vector<double> w(weights_.size());
  for (std::size_t j = 0; j < perm.size(); ++j) {
    const std::size_t i = perm[j];
    if (i >= size()) throw InvalidInput("permuted: index out of range");
    std::copy_n(points_.begin() + static_cast<std::ptrdiff_t>(i * dim_), dim_,
                pts.begin() + static_cast<std::ptrdiff_t>(j * dim_));
    w[j] = weights_[i];
  }
  return EmpiricalMeasure(dim_, std::move(pts), std::move(w));
}

JointActionLaw::JointActionLaw(std::size_t num_a, std::size_t num_b, std::vector<double> probs)
    : num_a_(num_a), num_b_(num_b), probs_(std::move(probs)) {
  if (num_a_ == 0 || num_b_ == 0 || probs_.size() != num_a_ * num_b_) {
    throw InvalidInput("JointActionLaw: matrix shape mismatch");
  }
  check_probabilities(probs_, "JointActionLaw");
}

JointActionLaw JointActionLaw::dirac(std::size_t num_a, std::size_t num_b, std::size_t a,
                                     std::size_t b) {
  std::vector<double> p(num_a * num_b, 0.0);
  p.at(a * num_b + b) = 1.0;
  return JointActionLaw(num_a, num_b, std::move(p));
}

std::vector<double> JointActionLaw::marginal_a() const {
  std::vector<double> m(num_a_, 0.0);
  for (std::size_t a = 0; a < num_a_; ++a) {
    for (std::size_t b = 0; b < num_b_; ++b) m[a] += prob(a, b);
  }
  return m;
}

std::vector<double> JointActionLaw::marginal_b() const {
  std::vector<double> m(num_b_, 0.0);
  for (std::size_t a = 0; a < num_a_; ++a) {
    for (std::size_t b = 0; b < num_b_; ++b) m[b] += prob(a, b);
  }
  return m;
}

double wasserstein_q(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double q) {
  validate_pair(mu, nu, q);
  return mu.dim() == 1 ? wasserstein_q_1d(mu, nu, q) : wasserstein_q_lp(mu, nu, q);
}

double wasserstein_q_lp(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double q) {
  return canonical_distance(mu, nu, q, transport_cost_lp);
}

double wasserstein_q_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double q) {
  if (mu.dim() != 1 || nu.dim() != 1) {
    throw InvalidInput("wasserstein_q_1d: measures must live on the real line");
  }
  return canonical_distance(mu, nu, q, transport_cost_1d);
}

double moment_norm_q(const EmpiricalMeasure& mu, double q) {
  if (!(q >= 1.0)) throw InvalidInput("moment_norm_q: order q must be >= 1");
  std::vector<double> terms(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    double r2 = 0.0;
    for (double x : mu.point(i)) r2 += x * x;
    terms[i] = mu.weight(i) * std::pow(std::sqrt(r2), q);
  }
  return std::pow(order_free_sum(terms), 1.0 / q);
}

JointActionLaw joint_control_law(std::span<const int> a_assignment,
                                 std::span<const int> b_assignment,
                                 std::span<const double> atom_weights, std::size_t num_a,
                                 std::size_t num_b) {
  if (a_assignment.size() != b_assignment.size() ||
      a_assignment.size() != atom_weights.size()) {
    throw InvalidInput("joint_control_law: assignment and weight lengths differ");
  }
  const std::size_t n = atom_weights.size();
  std::vector<std::size_t> cell(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int a = a_assignment[i];
    const int b = b_assignment[i];
    if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= num_a ||
        static_cast<std::size_t>(b) >= num_b) {
      throw InvalidInput("joint_control_law: action index out of range");
    }
    cell[i] = static_cast<std::size_t>(a) * num_b + static_cast<std::size_t>(b);
  }
  // Per-cell order-free sums keep the law independent of atom labelling.
  std::vector<double> p(num_a * num_b, 0.0);
  std::vector<double> terms;
  for (std::size_t c = 0; c < p.size(); ++c) {
    terms.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (cell[i] == c) terms.push_back(atom_weights[i]);
    }
    if (!terms.empty()) p[c] = order_free_sum(terms);
  }
  return JointActionLaw(num_a, num_b, std::move(p));
}

}  // namespace mvgame
