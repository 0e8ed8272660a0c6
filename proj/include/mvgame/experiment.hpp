#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mvgame/config.hpp"

namespace mvgame {

inline constexpr const char* kVersion = "0.1.0";

struct ReportEntry {
  std::string key;
  double value = 0.0;
};

// Passes iff lower <= value <= upper (lower absent: value <= upper).
struct ReportAssertion {
  std::string key;
  double value = 0.0;
  std::optional<double> lower;
  double upper = 0.0;
  bool pass = false;
};

struct Report {
  std::string task;
  std::string inputs;  // normalized config, JSON
  std::vector<ReportEntry> values;
  std::vector<ReportEntry> oracles;
  std::vector<ReportAssertion> assertions;
  std::vector<std::string> notes;
  double elapsed_seconds = 0.0;
  std::string version = kVersion;

  void value(const std::string& key, double v) { values.push_back({key, v}); }
  void oracle(const std::string& key, double v) { oracles.push_back({key, v}); }
  // Records |value| <= tolerance style checks; returns the verdict.
  bool check(const std::string& key, double v, double upper);
  bool check_range(const std::string& key, double v, double lower, double upper);

  bool passed() const;
  std::string to_json() const;
  // Header `task,key,value,tolerance,pass`, one row per value, oracle and assertion.
  std::string to_csv() const;
};

// Dispatches on config.task. Library errors propagate.
Report run_experiment(const ExperimentConfig& config);

// Writes report.json and/or report.csv into dir. Files are staged under
// temporary names and renamed only after every write succeeded.
void write_report(const Report& report, const std::string& dir, ReportFormat format);

// Process exit statuses.
enum ExitStatus { kExitPass = 0, kExitAssertion = 1, kExitInput = 2, kExitCapacity = 3 };

}  // namespace mvgame
