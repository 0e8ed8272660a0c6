#include <cmath>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"

#include "mvgame/config.hpp"
#include "mvgame/errors.hpp"
#include "mvgame/experiment.hpp"
#include "mvgame/parallel.hpp"

namespace {

int run(const std::string& path, std::optional<std::string> output, std::optional<std::string> format,
        std::optional<int> cap_exponent) {
  using namespace mvgame;
  try {
    ExperimentConfig config = load_problem_config(path);
    if (cap_exponent) {
      if (*cap_exponent < 0 || *cap_exponent > 19) throw InvalidInput("--cap-exponent must lie in [0, 19]");
      std::uint64_t cap = 1;
      for (int i = 0; i < *cap_exponent; ++i) cap *= 10;
      config.caps.enumeration = cap;
    }
    const std::string dir = output.value_or(config.output.dir);
    const ReportFormat fmt = format ? report_format_from_name(*format) : config.output.format;
    const Report report = run_experiment(config);
    write_report(report, dir, fmt);
    std::size_t failed = 0;
    for (const auto& a : report.assertions) {
      if (!a.pass) {
        ++failed;
        std::cerr << "FAIL " << a.key << " = " << a.value << "\n";
      }
    }
    std::cout << report.task << ": " << report.assertions.size() - failed << "/" << report.assertions.size()
              << " assertions passed; report in " << dir << "\n";
    return failed == 0 ? kExitPass : kExitAssertion;
  } catch (const CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << "\n";
    return kExitCapacity;
  } catch (const ParseError& e) {
    std::cerr << "parse error (line " << e.line() << ", field " << e.field() << "): " << e.what() << "\n";
    return kExitInput;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-state verification suites for mean-field stochastic differential games"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = hardware concurrency)")->check(CLI::NonNegativeNumber);

  auto* run_cmd = app.add_subcommand("run", "Run the experiment described by a config file");
  std::string config_path;
  std::optional<std::string> output;
  std::optional<std::string> format;
  std::optional<int> cap_exponent;
  run_cmd->add_option("config", config_path, "Path to the JSON config")->required();
  run_cmd->add_option("--threads", threads, "Worker threads (0 = hardware concurrency)")
      ->check(CLI::NonNegativeNumber);
  run_cmd->add_option("--output", output, "Directory for report.json / report.csv");
  run_cmd->add_option("--format", format, "json, csv or both")->check(CLI::IsMember({"json", "csv", "both"}));
  run_cmd->add_option("--cap-exponent", cap_exponent, "Enumeration cap 10^E");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : mvgame::kExitInput;
  }
  mvgame::set_thread_count(threads == 0 ? static_cast<int>(std::thread::hardware_concurrency()) : threads);
  return run(config_path, output, format, cap_exponent);
}
