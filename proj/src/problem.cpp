#include "mvgame/problem.hpp"

#include <algorithm>
#include <cmath>

#include "mvgame/errors.hpp"

namespace mvgame {
namespace {

// Storage indices; must follow the order of the name tables below.
namespace lin {
enum : std::size_t {
  kDriftConst, kDriftX, kDriftMean, kDriftA, kDriftB, kDriftNuA, kDriftNuB,
  kSigmaConst, kSigmaX, kSigmaMean,
  kRunConst, kRunX, kRunMean, kRunA, kRunB, kRunAb, kRunANuA, kRunBNuB,
  kTermConst, kTermX, kTermMean, kTermXMean, kTermXx
};
}  // namespace lin

namespace bil {
enum : std::size_t {
  kDriftConst, kDriftAb, kDriftX, kDriftMean, kSigma,
  kRunAbx, kRunAb, kRunA, kRunB, kRunNu,
  kTermX, kTermMean, kTermXMean
};
}  // namespace bil

namespace lq {
enum : std::size_t { kTheta, kThetaBar, kSigma, kKappaV, kKappaM, kRho, kLambdaV, kLambdaM };
}  // namespace lq

namespace tab {
enum : std::size_t { kDriftMean, kDriftNu, kRunNu, kTermXMean };
}  // namespace tab

const std::vector<std::string> kLinearNames = {
    "drift_const", "drift_x",   "drift_mean", "drift_a",    "drift_b",    "drift_nu_a",
    "drift_nu_b",  "sigma_const", "sigma_x",  "sigma_mean", "run_const",  "run_x",
    "run_mean",    "run_a",     "run_b",      "run_ab",     "run_a_nu_a", "run_b_nu_b",
    "term_const",  "term_x",    "term_mean",  "term_x_mean", "term_xx"};
const std::vector<std::string> kBilinearNames = {
    "drift_const", "drift_ab", "drift_x", "drift_mean", "sigma",     "run_abx", "run_ab",
    "run_a",       "run_b",    "run_nu",  "term_x",     "term_mean", "term_x_mean"};
const std::vector<std::string> kLqNames = {"theta",   "theta_bar", "sigma",    "kappa_v",
                                           "kappa_m", "rho",       "lambda_v", "lambda_m"};
const std::vector<std::string> kTableNames = {"drift_mean", "drift_nu", "run_nu",
                                              "term_x_mean"};

double max_abs(const std::vector<Action>& actions) {
  double m = 0.0;
  for (const auto& a : actions) m = std::max(m, std::abs(a.value));
  return m;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

const char* family_name(Family f) {
  switch (f) {
    case Family::kLinearMf: return "linear_mf";
    case Family::kLqMf: return "lq_mf";
    case Family::kBilinearGame: return "bilinear_game";
    case Family::kCustomTable: return "custom_table";
  }
  return "unknown";
}

Family family_from_name(const std::string& name) {
  for (Family f : {Family::kLinearMf, Family::kLqMf, Family::kBilinearGame,
                   Family::kCustomTable}) {
    if (name == family_name(f)) return f;
  }
  throw InvalidInput("unknown problem family '" + name + "'");
}

const std::vector<std::string>& family_parameter_names(Family f) {
  switch (f) {
    case Family::kLinearMf: return kLinearNames;
    case Family::kLqMf: return kLqNames;
    case Family::kBilinearGame: return kBilinearNames;
    case Family::kCustomTable: return kTableNames;
  }
  return kLinearNames;
}

ProblemSpec::ProblemSpec(Family family, std::size_t state_dim,
                         std::map<std::string, double> params, std::vector<Action> actions_a,
                         std::vector<Action> actions_b, double horizon, double q,
                         CustomTable table)
    : family_(family),
      n_(state_dim),
      d_(state_dim),
      named_(std::move(params)),
      actions_a_(std::move(actions_a)),
      actions_b_(std::move(actions_b)),
      horizon_(horizon),
      q_(q),
      table_(std::move(table)) {
  if (n_ == 0) throw InvalidInput("ProblemSpec: state dimension must be positive");
  if (family_ != Family::kLinearMf && n_ != 1) {
    throw InvalidInput(std::string("ProblemSpec: family ") + family_name(family_) +
                       " is one-dimensional");
  }
  if (actions_a_.empty() || actions_b_.empty()) {
    throw InvalidInput("ProblemSpec: action sets must be nonempty");
  }
  for (const auto* set : {&actions_a_, &actions_b_}) {
    for (const auto& a : *set) {
      if (!std::isfinite(a.value)) throw InvalidInput("ProblemSpec: non-finite action value");
    }
  }
  if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) {
    throw InvalidInput("ProblemSpec: horizon must be positive");
  }
  if (!(q_ >= 1.0)) throw InvalidInput("ProblemSpec: moment exponent q must be >= 1");
  const auto& names = family_parameter_names(family_);
  values_.assign(names.size(), 0.0);
  for (const auto& [key, value] : named_) {
    auto it = std::find(names.begin(), names.end(), key);
    if (it == names.end()) {
      throw InvalidInput("ProblemSpec: unknown parameter '" + key + "' for family " +
                         family_name(family_));
    }
    if (!std::isfinite(value)) throw InvalidInput("ProblemSpec: parameter '" + key + "' is not finite");
    values_[static_cast<std::size_t>(it - names.begin())] = value;
  }
  for (std::size_t i = 0; i < names.size(); ++i) named_[names[i]] = values_[i];
  amax_ = max_abs(actions_a_);
  bmax_ = max_abs(actions_b_);
  derive_structure();
}

double ProblemSpec::param(const std::string& name) const {
  auto it = named_.find(name);
  if (it == named_.end()) throw InvalidInput("ProblemSpec: no parameter '" + name + "'");
  return it->second;
}

void ProblemSpec::derive_structure() {
  const double rn = std::sqrt(static_cast<double>(n_));
  auto nz = [&](std::size_t i) { return p(i) != 0.0; };
  switch (family_) {
    case Family::kLinearMf: {
      using namespace lin;
      state_law_ = nz(kDriftMean) || nz(kSigmaMean) || nz(kRunMean) || nz(kTermMean) ||
                   nz(kTermXMean);
      control_law_ = nz(kDriftNuA) || nz(kDriftNuB) || nz(kRunANuA) || nz(kRunBNuB);
      const double slope =
          std::abs(p(kDriftX)) + std::abs(p(kDriftMean)) + std::abs(p(kSigmaX)) +
          std::abs(p(kSigmaMean));
      const double at_zero =
          rn * (std::abs(p(kDriftConst)) + (std::abs(p(kDriftA)) + std::abs(p(kDriftNuA))) * amax_ +
                (std::abs(p(kDriftB)) + std::abs(p(kDriftNuB))) * bmax_) +
          rn * std::abs(p(kSigmaConst));
      lipschitz_ = std::max(slope, at_zero);
      if (p(kTermXx) != 0.0 && q_ < 2.0) {
        throw InvalidInput("ProblemSpec: quadratic terminal payoff needs q >= 2");
      }
      break;
    }
    case Family::kBilinearGame: {
      using namespace bil;
      state_law_ = nz(kDriftMean) || nz(kTermMean) || nz(kTermXMean);
      control_law_ = nz(kRunNu);
      lipschitz_ = std::max(std::abs(p(kDriftX)) + std::abs(p(kDriftMean)),
                            std::abs(p(kDriftConst)) + std::abs(p(kDriftAb)) * amax_ * bmax_ +
                                std::abs(p(kSigma)));
      break;
    }
    case Family::kLqMf: {
      using namespace lq;
      if (!(p(kRho) > 0.0)) throw InvalidInput("ProblemSpec: lq_mf needs rho > 0");
      if (q_ < 2.0) throw InvalidInput("ProblemSpec: lq_mf needs q >= 2");
      state_law_ = nz(kThetaBar) || nz(kKappaV) || nz(kKappaM) || nz(kLambdaV) || nz(kLambdaM);
      control_law_ = false;
      lipschitz_ = std::max(std::abs(p(kTheta)) + std::abs(p(kThetaBar)),
                            amax_ + std::abs(p(kSigma)));
      break;
    }
    case Family::kCustomTable: {
      using namespace tab;
      const std::size_t g = table_.grid.size();
      const std::size_t cells = num_a() * num_b() * g;
      if (g == 0 || table_.drift.size() != cells || table_.diffusion.size() != cells ||
          table_.running.size() != cells || table_.terminal.size() != g) {
        throw InvalidInput("ProblemSpec: custom_table shapes do not match grid and action sets");
      }
      for (std::size_t i = 1; i < g; ++i) {
        if (!(table_.grid[i] > table_.grid[i - 1])) {
          throw InvalidInput("ProblemSpec: custom_table grid must be strictly increasing");
        }
      }
      for (const auto* v : {&table_.drift, &table_.diffusion, &table_.running, &table_.terminal}) {
        for (double x : *v) {
          if (!std::isfinite(x)) throw InvalidInput("ProblemSpec: custom_table has non-finite entry");
        }
      }
      state_law_ = nz(kDriftMean) || nz(kTermXMean);
      control_law_ = nz(kDriftNu) || nz(kRunNu);
      auto max_slope = [&](const std::vector<double>& v) {
        double s = 0.0;
        for (std::size_t c = 0; c < num_a() * num_b(); ++c) {
          for (std::size_t i = 1; i < g; ++i) {
            s = std::max(s, std::abs(v[c * g + i] - v[c * g + i - 1]) /
                                (table_.grid[i] - table_.grid[i - 1]));
          }
        }
        return s;
      };
      const double slope = max_slope(table_.drift) + max_slope(table_.diffusion) +
                           std::abs(p(kDriftMean));
      const double at_zero =
          max_abs(table_.drift) + std::abs(p(kDriftNu)) + max_abs(table_.diffusion);
      lipschitz_ = std::max(slope, at_zero);
      break;
    }
  }
}

double ProblemSpec::growth_envelope(double r) const {
  const double rn = std::sqrt(static_cast<double>(n_));
  const double A = amax_;
  const double B = bmax_;
  auto ap = [&](std::size_t i) { return std::abs(p(i)); };
  switch (family_) {
    case Family::kLinearMf: {
      using namespace lin;
      const double c0 = ap(kRunConst) + ap(kRunA) * A + ap(kRunB) * B + ap(kRunAb) * A * B +
                        ap(kRunANuA) * A * A + ap(kRunBNuB) * B * B + ap(kTermConst);
      const double c1 = rn * (ap(kRunX) + ap(kTermX));
      const double cm = rn * (ap(kRunMean) + ap(kTermMean));
      return c0 + c1 + ap(kTermXx) + (cm + ap(kTermXMean)) * r;
    }
    case Family::kBilinearGame: {
      using namespace bil;
      return (ap(kRunAbx) + ap(kRunAb) + ap(kRunNu)) * A * B + ap(kRunA) * A + ap(kRunB) * B +
             ap(kTermX) + (ap(kTermMean) + ap(kTermXMean)) * r;
    }
    case Family::kLqMf: {
      using namespace lq;
      return 2.0 * ap(kKappaV) + 2.0 * ap(kLambdaV) +
             (2.0 * ap(kKappaV) + ap(kKappaM) + 2.0 * ap(kLambdaV) + ap(kLambdaM)) * r * r +
             ap(kRho) * A * A;
    }
    case Family::kCustomTable: {
      using namespace tab;
      return max_abs(table_.running) + ap(kRunNu) + max_abs(table_.terminal) +
             ap(kTermXMean) * r;
    }
  }
  return 0.0;
}

double ProblemSpec::mean_action_a(const JointActionLaw& nu) const {
  double s = 0.0;
  for (std::size_t a = 0; a < nu.num_a(); ++a) {
    for (std::size_t b = 0; b < nu.num_b(); ++b) s += nu.prob(a, b) * actions_a_[a].value;
  }
  return s;
}

double ProblemSpec::mean_action_b(const JointActionLaw& nu) const {
  double s = 0.0;
  for (std::size_t a = 0; a < nu.num_a(); ++a) {
    for (std::size_t b = 0; b < nu.num_b(); ++b) s += nu.prob(a, b) * actions_b_[b].value;
  }
  return s;
}

double ProblemSpec::table_lookup(const std::vector<double>& values, std::size_t offset,
                                 double x) const {
  const auto& grid = table_.grid;
  const std::size_t g = grid.size();
  if (g == 1 || x <= grid.front()) return values[offset];
  if (x >= grid.back()) return values[offset + g - 1];
  const auto it = std::upper_bound(grid.begin(), grid.end(), x);
  const std::size_t hi = static_cast<std::size_t>(it - grid.begin());
  const std::size_t lo = hi - 1;
  const double s = (x - grid[lo]) / (grid[hi] - grid[lo]);
  return (1.0 - s) * values[offset + lo] + s * values[offset + hi];
}

void ProblemSpec::drift(std::span<const double> x, const LawMoments& mu, int a, int b,
                        const JointActionLaw& nu, std::span<double> out) const {
  const double av = actions_a_[static_cast<std::size_t>(a)].value;
  const double bv = actions_b_[static_cast<std::size_t>(b)].value;
  switch (family_) {
    case Family::kLinearMf: {
      using namespace lin;
      double common = p(kDriftConst) + p(kDriftA) * av + p(kDriftB) * bv;
      if (p(kDriftNuA) != 0.0) common += p(kDriftNuA) * mean_action_a(nu);
      if (p(kDriftNuB) != 0.0) common += p(kDriftNuB) * mean_action_b(nu);
      for (std::size_t j = 0; j < n_; ++j) {
        out[j] = common + p(kDriftX) * x[j] + p(kDriftMean) * mu.mean[j];
      }
      return;
    }
    case Family::kBilinearGame: {
      using namespace bil;
      out[0] = p(kDriftConst) + p(kDriftAb) * av * bv + p(kDriftX) * x[0] +
               p(kDriftMean) * mu.mean[0];
      return;
    }
    case Family::kLqMf: {
      using namespace lq;
      out[0] = p(kTheta) * x[0] + p(kThetaBar) * mu.mean[0] + av;
      return;
    }
    case Family::kCustomTable: {
      using namespace tab;
      const std::size_t cell = static_cast<std::size_t>(a) * num_b() + static_cast<std::size_t>(b);
      out[0] = table_lookup(table_.drift, cell * table_.grid.size(), x[0]) +
               p(kDriftMean) * mu.mean[0] +
               p(kDriftNu) * nu.prob(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
      return;
    }
  }
}

void ProblemSpec::diffusion(std::span<const double> x, const LawMoments& mu, int a, int b,
                            const JointActionLaw& /*nu*/, std::span<double> out) const {
  switch (family_) {
    case Family::kLinearMf: {
      using namespace lin;
      std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(n_ * d_), 0.0);
      for (std::size_t j = 0; j < n_; ++j) {
        out[j * d_ + j] = p(kSigmaConst) + p(kSigmaX) * x[j] + p(kSigmaMean) * mu.mean[j];
      }
      return;
    }
    case Family::kBilinearGame:
      out[0] = p(bil::kSigma);
      return;
    case Family::kLqMf:
      out[0] = p(lq::kSigma);
      return;
    case Family::kCustomTable: {
      const std::size_t cell = static_cast<std::size_t>(a) * num_b() + static_cast<std::size_t>(b);
      out[0] = table_lookup(table_.diffusion, cell * table_.grid.size(), x[0]);
      return;
    }
  }
}

double ProblemSpec::running(std::span<const double> x, const LawMoments& mu, int a, int b,
                            const JointActionLaw& nu) const {
  const double av = actions_a_[static_cast<std::size_t>(a)].value;
  const double bv = actions_b_[static_cast<std::size_t>(b)].value;
  switch (family_) {
    case Family::kLinearMf: {
      using namespace lin;
      double sx = 0.0;
      double sm = 0.0;
      for (std::size_t j = 0; j < n_; ++j) {
        sx += x[j];
        sm += mu.mean[j];
      }
      double f = p(kRunConst) + p(kRunX) * sx + p(kRunMean) * sm + p(kRunA) * av + p(kRunB) * bv +
                 p(kRunAb) * av * bv;
      if (p(kRunANuA) != 0.0) f += p(kRunANuA) * av * mean_action_a(nu);
      if (p(kRunBNuB) != 0.0) f += p(kRunBNuB) * bv * mean_action_b(nu);
      return f;
    }
    case Family::kBilinearGame: {
      using namespace bil;
      double f = p(kRunAbx) * av * bv * x[0] + p(kRunAb) * av * bv + p(kRunA) * av +
                 p(kRunB) * bv;
      if (p(kRunNu) != 0.0) {
        double eab = 0.0;
        for (std::size_t i = 0; i < nu.num_a(); ++i) {
          for (std::size_t k = 0; k < nu.num_b(); ++k) {
            eab += nu.prob(i, k) * actions_a_[i].value * actions_b_[k].value;
          }
        }
        f += p(kRunNu) * eab;
      }
      return f;
    }
    case Family::kLqMf: {
      using namespace lq;
      const double m = mu.mean[0];
      const double dev = x[0] - m;
      return -p(kKappaV) * dev * dev - p(kKappaM) * m * m - p(kRho) * av * av;
    }
    case Family::kCustomTable: {
      using namespace tab;
      const std::size_t cell = static_cast<std::size_t>(a) * num_b() + static_cast<std::size_t>(b);
      return table_lookup(table_.running, cell * table_.grid.size(), x[0]) +
             p(kRunNu) * nu.prob(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
    }
  }
  return 0.0;
}

double ProblemSpec::terminal(std::span<const double> x, const LawMoments& mu) const {
  switch (family_) {
    case Family::kLinearMf: {
      using namespace lin;
      double g = p(kTermConst);
      for (std::size_t j = 0; j < n_; ++j) {
        g += p(kTermX) * x[j] + p(kTermMean) * mu.mean[j] + p(kTermXMean) * x[j] * mu.mean[j] +
             p(kTermXx) * x[j] * x[j];
      }
      return g;
    }
    case Family::kBilinearGame: {
      using namespace bil;
      return p(kTermX) * x[0] + p(kTermMean) * mu.mean[0] + p(kTermXMean) * x[0] * mu.mean[0];
    }
    case Family::kLqMf: {
      using namespace lq;
      const double m = mu.mean[0];
      const double dev = x[0] - m;
      return -p(kLambdaV) * dev * dev - p(kLambdaM) * m * m;
    }
    case Family::kCustomTable:
      return table_lookup(table_.terminal, 0, x[0]) + p(tab::kTermXMean) * x[0] * mu.mean[0];
  }
  return 0.0;
}

}  // namespace mvgame
