#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mvgame/measure.hpp"
#include "mvgame/problem.hpp"
#include "mvgame/scenario_tree.hpp"

namespace mvgame {

inline constexpr int kSchemaVersion = 1;

enum class Task {
  kSimulate,
  kValue,
  kDppCheck,
  kHamiltonian,
  kLionsCheck,
  kItoCheck,
  kViscosityCheck,
  kClassicalIdentity,
  kIsaacsGap,
};

const char* task_name(Task task);
Task task_from_name(const std::string& name);

enum class ChannelPolicy { kPerAtom, kShared };

enum class ReportFormat { kJson, kCsv, kBoth };

ReportFormat report_format_from_name(const std::string& name);

// A control given either as one action index for every slot or as explicit
// per-step assignments, actions[step][atom].
using ControlSpec = std::variant<int, std::vector<std::vector<int>>>;

struct TaskParams {
  ControlSpec alpha = 0;
  ControlSpec beta = 0;
  std::optional<int> restart_level;               // simulate
  bool strategy_oracle = true;                    // value
  int permutations = 3;                           // value, hamiltonian
  std::vector<double> split_times;                // dpp_check
  std::string functional = "variance";            // hamiltonian, isaacs_gap
  std::vector<std::string> functionals;           // lions_check, ito_check
  double fd_step = 1e-4;                          // lions_check
  std::vector<double> order_steps;                // lions_check
  std::vector<int> step_counts = {4, 8, 16};      // ito_check
  std::string candidate = "lq_riccati";           // viscosity_check
  std::vector<double> coefficients;               // viscosity_check, classical_affine
  std::vector<double> sample_times;               // viscosity_check
  int samples = 20;                               // viscosity_check
  std::vector<int> randomization = {1, 2};        // isaacs_gap
  bool game_gap = true;                           // isaacs_gap
};

struct Caps {
  std::uint64_t enumeration = 10'000'000;
  std::uint64_t strategy = 1'000'000;
  std::uint64_t leaves = std::uint64_t{1} << 20;
};

struct OutputOptions {
  std::string dir = "out";
  ReportFormat format = ReportFormat::kBoth;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  Task task = Task::kSimulate;
  std::optional<ProblemSpec> problem;
  TreeOptions tree;
  ChannelPolicy channels = ChannelPolicy::kPerAtom;
  int randomization_atoms = 1;
  std::optional<EmpiricalMeasure> initial;
  TaskParams params;
  std::map<std::string, double> tolerances;
  Caps caps;
  OutputOptions output;
  // The parsed document with defaults filled, echoed into reports.
  std::string normalized;

  const ProblemSpec& spec() const { return *problem; }
  const EmpiricalMeasure& law() const { return *initial; }
  double tolerance(const std::string& key) const;
  std::vector<int> channel_map() const;
};

// Default tolerances per assertion key.
const std::map<std::string, double>& default_tolerances();

// Parses and validates a JSON document. Schema problems raise ParseError
// with the line and field; inconsistent values raise ValidationError; an
// exact tree above caps.leaves raises CapacityError before any compute.
ExperimentConfig parse_problem_config(const std::string& text);
ExperimentConfig load_problem_config(const std::string& path);

}  // namespace mvgame
