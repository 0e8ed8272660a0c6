#include "mvgame/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "mvgame/errors.hpp"

namespace mvgame {
namespace {

using Json = nlohmann::ordered_json;

constexpr const char* kTaskNames[] = {"simulate",        "value",     "dpp_check",
                                      "hamiltonian",     "lions_check", "ito_check",
                                      "viscosity_check", "classical_identity", "isaacs_gap"};

// Line of the first occurrence of "key" in the document, or 0.
int line_of_key(const std::string& text, const std::string& field) {
  const std::string key = field.substr(field.find_last_of('.') + 1);
  const std::size_t bracket = key.find('[');
  const std::string bare = key.substr(0, bracket);
  const std::size_t pos = text.find("\"" + bare + "\"");
  if (pos == std::string::npos) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

class Reader {
 public:
  explicit Reader(const std::string& text) : text_(text) {}

  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    throw ParseError(field + ": " + what + " (line " + std::to_string(line_of_key(text_, field)) + ")",
                     line_of_key(text_, field), field);
  }

  void only_keys(const Json& obj, const std::string& path, std::initializer_list<const char*> keys) const {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& [k, v] : obj.items()) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) {
        fail(join(path, k), "unknown key");
      }
    }
  }

  const Json& required(const Json& obj, const std::string& path, const char* key) const {
    if (!obj.contains(key)) fail(join(path, key), "missing required field");
    return obj.at(key);
  }

  double number(const Json& v, const std::string& field) const {
    if (!v.is_number()) fail(field, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(field, "expected a finite number");
    return x;
  }

  long long integer(const Json& v, const std::string& field) const {
    if (!v.is_number_integer()) fail(field, "expected an integer");
    return v.get<long long>();
  }

  std::string string(const Json& v, const std::string& field) const {
    if (!v.is_string()) fail(field, "expected a string");
    return v.get<std::string>();
  }

  bool boolean(const Json& v, const std::string& field) const {
    if (!v.is_boolean()) fail(field, "expected true or false");
    return v.get<bool>();
  }

  std::vector<double> numbers(const Json& v, const std::string& field) const {
    if (!v.is_array()) fail(field, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], index(field, i)));
    return out;
  }

  std::vector<int> ints(const Json& v, const std::string& field) const {
    if (!v.is_array()) fail(field, "expected an array of integers");
    std::vector<int> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(static_cast<int>(integer(v[i], index(field, i))));
    return out;
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }
  static std::string index(const std::string& field, std::size_t i) {
    return field + "[" + std::to_string(i) + "]";
  }

 private:
  const std::string& text_;
};

std::vector<Action> parse_actions(const Reader& r, const Json& v, const std::string& field) {
  if (v.is_object()) {
    // {"grid": [low, high, points]}: equally spaced values.
    r.only_keys(v, field, {"grid"});
    const auto g = r.numbers(r.required(v, field, "grid"), field + ".grid");
    if (g.size() != 3 || !(g[0] <= g[1]) || g[2] < 1 || g[2] != std::floor(g[2]) || g[2] > 1e6) {
      r.fail(field + ".grid", "expected [low, high, points] with low <= high and 1 <= points <= 1e6");
    }
    const auto points = static_cast<std::size_t>(g[2]);
    std::vector<Action> out(points);
    for (std::size_t i = 0; i < points; ++i) {
      const double v = points == 1 ? g[0] : g[0] + (g[1] - g[0]) * static_cast<double>(i) / static_cast<double>(points - 1);
      out[i] = {"a" + std::to_string(i), v};
    }
    return out;
  }
  if (!v.is_array() || v.empty()) r.fail(field, "expected a nonempty array of actions");
  std::vector<Action> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string f = Reader::index(field, i);
    if (v[i].is_number()) {
      out.push_back({"a" + std::to_string(i), r.number(v[i], f)});
    } else {
      r.only_keys(v[i], f, {"label", "value"});
      out.push_back({r.string(r.required(v[i], f, "label"), f + ".label"),
                     r.number(r.required(v[i], f, "value"), f + ".value")});
    }
  }
  return out;
}

ProblemSpec parse_problem(const Reader& r, const Json& p) {
  r.only_keys(p, "problem", {"family", "state_dim", "params", "actions_a", "actions_b", "horizon", "q", "table"});
  Family family;
  const std::string fname = r.string(r.required(p, "problem", "family"), "problem.family");
  try {
    family = family_from_name(fname);
  } catch (const InvalidInput&) {
    r.fail("problem.family", "unknown family '" + fname + "'");
  }
  const long long n = p.contains("state_dim") ? r.integer(p["state_dim"], "problem.state_dim") : 1;
  if (n < 1) r.fail("problem.state_dim", "must be positive");
  std::map<std::string, double> params;
  if (p.contains("params")) {
    const auto& names = family_parameter_names(family);
    if (!p["params"].is_object()) r.fail("problem.params", "expected an object");
    for (const auto& [k, v] : p["params"].items()) {
      if (std::find(names.begin(), names.end(), k) == names.end()) {
        r.fail("problem.params." + k, "unknown parameter for family " + fname);
      }
      params[k] = r.number(v, "problem.params." + k);
    }
  }
  CustomTable table;
  if (p.contains("table")) {
    const Json& t = p["table"];
    r.only_keys(t, "problem.table", {"grid", "drift", "diffusion", "running", "terminal"});
    table.grid = r.numbers(r.required(t, "problem.table", "grid"), "problem.table.grid");
    table.drift = r.numbers(r.required(t, "problem.table", "drift"), "problem.table.drift");
    table.diffusion = r.numbers(r.required(t, "problem.table", "diffusion"), "problem.table.diffusion");
    table.running = r.numbers(r.required(t, "problem.table", "running"), "problem.table.running");
    table.terminal = r.numbers(r.required(t, "problem.table", "terminal"), "problem.table.terminal");
  } else if (family == Family::kCustomTable) {
    r.fail("problem.table", "missing required field");
  }
  auto a = parse_actions(r, r.required(p, "problem", "actions_a"), "problem.actions_a");
  auto b = parse_actions(r, r.required(p, "problem", "actions_b"), "problem.actions_b");
  const double horizon = r.number(r.required(p, "problem", "horizon"), "problem.horizon");
  const double q = p.contains("q") ? r.number(p["q"], "problem.q") : 2.0;
  try {
    return ProblemSpec(family, static_cast<std::size_t>(n), std::move(params), std::move(a), std::move(b),
                       horizon, q, std::move(table));
  } catch (const InvalidInput& e) {
    throw ValidationError(e.what());
  }
}

ControlSpec parse_control(const Reader& r, const Json& v, const std::string& field) {
  if (v.is_number_integer()) return static_cast<int>(v.get<long long>());
  if (!v.is_array()) r.fail(field, "expected an action index or per-step assignments");
  std::vector<std::vector<int>> steps;
  for (std::size_t i = 0; i < v.size(); ++i) steps.push_back(r.ints(v[i], Reader::index(field, i)));
  return steps;
}

Json control_json(const ControlSpec& c) {
  if (std::holds_alternative<int>(c)) return std::get<int>(c);
  return std::get<std::vector<std::vector<int>>>(c);
}

std::string grid_description(const TreeOptions& t) {
  std::ostringstream os;
  os.precision(17);
  os << "grid t_k = " << t.start_time << " + k * " << (t.horizon - t.start_time) / t.steps
     << ", k = 0.." << t.steps;
  return os.str();
}

void check_on_grid(double s, const TreeOptions& t, const std::string& field) {
  const double dt = (t.horizon - t.start_time) / t.steps;
  const double k = (s - t.start_time) / dt;
  const double kr = std::round(k);
  if (kr < 0 || kr > t.steps || std::abs(k - kr) > 1e-9) {
    std::ostringstream os;
    os.precision(17);
    os << field << " = " << s << " is not on the " << grid_description(t);
    throw ValidationError(os.str());
  }
}

void check_control_indices(const ControlSpec& c, std::size_t actions, const char* field) {
  auto bad = [&](int a) { return a < 0 || static_cast<std::size_t>(a) >= actions; };
  if (std::holds_alternative<int>(c)) {
    if (bad(std::get<int>(c))) throw ValidationError(std::string(field) + ": action index out of range");
    return;
  }
  for (const auto& step : std::get<std::vector<std::vector<int>>>(c)) {
    for (int a : step) {
      if (bad(a)) throw ValidationError(std::string(field) + ": action index out of range");
    }
  }
}

std::string format_name(ReportFormat f) {
  switch (f) {
    case ReportFormat::kJson: return "json";
    case ReportFormat::kCsv: return "csv";
    case ReportFormat::kBoth: return "both";
  }
  return "both";
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["schema_version"] = c.schema_version;
  j["task"] = task_name(c.task);
  const ProblemSpec& s = c.spec();
  Json p;
  p["family"] = family_name(s.family());
  p["state_dim"] = s.state_dim();
  p["params"] = Json::object();
  for (const auto& [k, v] : s.params()) p["params"][k] = v;
  for (const auto* side : {"actions_a", "actions_b"}) {
    const auto& acts = std::string(side) == "actions_a" ? s.actions_a() : s.actions_b();
    Json arr = Json::array();
    for (const auto& a : acts) arr.push_back({{"label", a.label}, {"value", a.value}});
    p[side] = arr;
  }
  p["horizon"] = s.horizon();
  p["q"] = s.q();
  if (s.family() == Family::kCustomTable) {
    p["table"] = {{"grid", s.table().grid},
                  {"drift", s.table().drift},
                  {"diffusion", s.table().diffusion},
                  {"running", s.table().running},
                  {"terminal", s.table().terminal}};
  }
  j["problem"] = p;
  j["tree"] = {{"steps", c.tree.steps},
               {"start_time", c.tree.start_time},
               {"mode", noise_mode_name(c.tree.mode)},
               {"channels", c.channels == ChannelPolicy::kPerAtom ? "per_atom" : "shared"},
               {"noise_dim", c.tree.noise_dim},
               {"seed", c.tree.seed},
               {"paths", c.tree.paths},
               {"randomization_atoms", c.randomization_atoms}};
  const EmpiricalMeasure& mu = c.law();
  Json pts = Json::array();
  for (std::size_t i = 0; i < mu.size(); ++i) {
    pts.push_back(std::vector<double>(mu.point(i).begin(), mu.point(i).end()));
  }
  j["initial"] = {{"points", pts}, {"weights", mu.weights()}};
  const TaskParams& t = c.params;
  Json tp;
  switch (c.task) {
    case Task::kSimulate:
      tp["alpha"] = control_json(t.alpha);
      tp["beta"] = control_json(t.beta);
      tp["restart_level"] = t.restart_level ? Json(*t.restart_level) : Json(nullptr);
      break;
    case Task::kValue:
      tp["strategy_oracle"] = t.strategy_oracle;
      tp["permutations"] = t.permutations;
      break;
    case Task::kDppCheck: tp["split_times"] = t.split_times; break;
    case Task::kHamiltonian:
      tp["functional"] = t.functional;
      tp["permutations"] = t.permutations;
      break;
    case Task::kLionsCheck:
      tp["functionals"] = t.functionals;
      tp["fd_step"] = t.fd_step;
      tp["order_steps"] = t.order_steps;
      break;
    case Task::kItoCheck:
      tp["functionals"] = t.functionals;
      tp["step_counts"] = t.step_counts;
      tp["alpha"] = control_json(t.alpha);
      tp["beta"] = control_json(t.beta);
      break;
    case Task::kViscosityCheck:
      tp["candidate"] = t.candidate;
      tp["coefficients"] = t.coefficients;
      tp["sample_times"] = t.sample_times;
      tp["samples"] = t.samples;
      break;
    case Task::kClassicalIdentity: tp = Json::object(); break;
    case Task::kIsaacsGap:
      tp["functional"] = t.functional;
      tp["randomization"] = t.randomization;
      tp["game_gap"] = t.game_gap;
      break;
  }
  j["task_params"] = tp;
  j["tolerances"] = Json::object();
  for (const auto& [k, v] : c.tolerances) j["tolerances"][k] = v;
  j["caps"] = {{"enumeration", c.caps.enumeration}, {"strategy", c.caps.strategy}, {"leaves", c.caps.leaves}};
  j["output"] = {{"dir", c.output.dir}, {"format", format_name(c.output.format)}};
  return j;
}

}  // namespace

const char* task_name(Task task) { return kTaskNames[static_cast<int>(task)]; }

Task task_from_name(const std::string& name) {
  for (int i = 0; i < 9; ++i) {
    if (name == kTaskNames[i]) return static_cast<Task>(i);
  }
  throw InvalidInput("unknown task '" + name + "'");
}

ReportFormat report_format_from_name(const std::string& name) {
  if (name == "json") return ReportFormat::kJson;
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "both") return ReportFormat::kBoth;
  throw InvalidInput("unknown report format '" + name + "' (json, csv or both)");
}

const std::map<std::string, double>& default_tolerances() {
  static const std::map<std::string, double> kDefaults = {
      {"flow", 0.0},
      {"value_order", 1e-9},
      {"strategy_oracle", 1e-12},
      {"law_invariance", 0.0},
      {"dpp", 1e-10},
      {"reduction", 1e-12},
      {"lions_relative", 1e-5},
      {"lions_order_low", 3.0},
      {"lions_order_high", 5.0},
      {"ito_exact", 1e-12},
      {"ito_ratio_low", 1.5},
      {"ito_ratio_high", 3.0},
      {"viscosity", 1e-6},
      {"average_identity", 1e-9},
      {"classical_identity", 1e-12},
      {"mdp_dpp", 1e-12},
      {"riccati_ode", 1e-8},
      {"isaacs_separable", 1e-12},
  };
  return kDefaults;
}

double ExperimentConfig::tolerance(const std::string& key) const {
  auto it = tolerances.find(key);
  if (it != tolerances.end()) return it->second;
  return default_tolerances().at(key);
}

std::vector<int> ExperimentConfig::channel_map() const {
  std::vector<int> map(law().size());
  for (std::size_t i = 0; i < map.size(); ++i) {
    map[i] = channels == ChannelPolicy::kPerAtom ? static_cast<int>(i) : 0;
  }
  return map;
}

ExperimentConfig parse_problem_config(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
    const int line =
        1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
    throw ParseError("malformed document at line " + std::to_string(line) + ": " + e.what(), line, "");
  }
  const Reader r(text);
  r.only_keys(doc, "", {"schema_version", "task", "problem", "tree", "initial", "task_params", "tolerances",
                        "caps", "output"});

  ExperimentConfig c;
  c.schema_version = static_cast<int>(r.integer(r.required(doc, "", "schema_version"), "schema_version"));
  if (c.schema_version < 1 || c.schema_version > kSchemaVersion) {
    r.fail("schema_version", "unsupported version " + std::to_string(c.schema_version) +
                                 " (this build reads up to " + std::to_string(kSchemaVersion) + ")");
  }
  const std::string tname = r.string(r.required(doc, "", "task"), "task");
  try {
    c.task = task_from_name(tname);
  } catch (const InvalidInput&) {
    r.fail("task", "unknown task '" + tname + "'");
  }
  c.problem.emplace(parse_problem(r, r.required(doc, "", "problem")));
  const ProblemSpec& spec = *c.problem;

  // initial law
  {
    const Json& in = r.required(doc, "", "initial");
    r.only_keys(in, "initial", {"points", "weights"});
    const Json& pts = r.required(in, "initial", "points");
    if (!pts.is_array() || pts.empty()) r.fail("initial.points", "expected a nonempty array");
    const std::size_t n = spec.state_dim();
    std::vector<double> flat;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const std::string f = Reader::index("initial.points", i);
      if (pts[i].is_number() && n == 1) {
        flat.push_back(r.number(pts[i], f));
      } else {
        const auto p = r.numbers(pts[i], f);
        if (p.size() != n) r.fail(f, "expected " + std::to_string(n) + " coordinates");
        flat.insert(flat.end(), p.begin(), p.end());
      }
    }
    std::vector<double> w;
    if (in.contains("weights")) {
      w = r.numbers(in["weights"], "initial.weights");
    } else {
      w.assign(pts.size(), 1.0 / static_cast<double>(pts.size()));
    }
    try {
      c.initial.emplace(n, std::move(flat), std::move(w));
    } catch (const InvalidInput& e) {
      throw ValidationError(std::string("initial: ") + e.what());
    }
  }

  // tree
  const Json tree = doc.contains("tree") ? doc["tree"] : Json::object();
  r.only_keys(tree, "tree", {"steps", "start_time", "mode", "channels", "noise_dim", "seed", "paths",
                             "randomization_atoms"});
  c.tree.steps = tree.contains("steps") ? static_cast<int>(r.integer(tree["steps"], "tree.steps")) : 1;
  c.tree.start_time = tree.contains("start_time") ? r.number(tree["start_time"], "tree.start_time") : 0.0;
  c.tree.horizon = spec.horizon();
  if (tree.contains("mode")) {
    const std::string m = r.string(tree["mode"], "tree.mode");
    if (m == "exact_rademacher") {
      c.tree.mode = NoiseMode::kExactRademacher;
    } else if (m == "monte_carlo") {
      c.tree.mode = NoiseMode::kMonteCarlo;
    } else {
      r.fail("tree.mode", "expected exact_rademacher or monte_carlo");
    }
  }
  if (tree.contains("channels")) {
    const std::string ch = r.string(tree["channels"], "tree.channels");
    if (ch == "per_atom") {
      c.channels = ChannelPolicy::kPerAtom;
    } else if (ch == "shared") {
      c.channels = ChannelPolicy::kShared;
    } else {
      r.fail("tree.channels", "expected per_atom or shared");
    }
  }
  c.tree.noise_dim = tree.contains("noise_dim") ? static_cast<int>(r.integer(tree["noise_dim"], "tree.noise_dim"))
                                                : static_cast<int>(spec.noise_dim());
  if (tree.contains("seed")) {
    const long long seed = r.integer(tree["seed"], "tree.seed");
    if (seed < 0) r.fail("tree.seed", "must be nonnegative");
    c.tree.seed = static_cast<std::uint64_t>(seed);
  }
  c.tree.paths = tree.contains("paths") ? static_cast<int>(r.integer(tree["paths"], "tree.paths")) : 1000;
  c.randomization_atoms =
      tree.contains("randomization_atoms") ? static_cast<int>(r.integer(tree["randomization_atoms"], "tree.randomization_atoms")) : 1;
  c.tree.channels = c.channels == ChannelPolicy::kPerAtom ? static_cast<int>(c.law().size()) : 1;

  if (c.tree.steps < 1) throw ValidationError("tree.steps must be at least 1");
  if (!(c.tree.start_time < c.tree.horizon)) throw ValidationError("tree.start_time must precede the horizon");
  if (c.tree.noise_dim != static_cast<int>(spec.noise_dim())) {
    throw ValidationError("tree.noise_dim must equal the problem's noise dimension " +
                          std::to_string(spec.noise_dim()));
  }
  if (c.tree.paths < 1) throw ValidationError("tree.paths must be positive");
  if (c.randomization_atoms < 1) throw ValidationError("tree.randomization_atoms must be positive");

  // caps
  if (doc.contains("caps")) {
    const Json& caps = doc["caps"];
    r.only_keys(caps, "caps", {"enumeration", "strategy", "leaves"});
    auto cap = [&](const char* key, std::uint64_t& out) {
      if (!caps.contains(key)) return;
      const std::string f = std::string("caps.") + key;
      const double v = r.number(caps[key], f);
      if (!(v >= 1.0) || v > 1.8e19) r.fail(f, "must be in [1, 1.8e19]");
      out = static_cast<std::uint64_t>(v);
    };
    cap("enumeration", c.caps.enumeration);
    cap("strategy", c.caps.strategy);
    cap("leaves", c.caps.leaves);
  }
  c.tree.leaf_cap = c.caps.leaves;

  // task parameters
  const Json tp = doc.contains("task_params") ? doc["task_params"] : Json::object();
  TaskParams& t = c.params;
  switch (c.task) {
    case Task::kSimulate:
      r.only_keys(tp, "task_params", {"alpha", "beta", "restart_level"});
      break;
    case Task::kValue:
      r.only_keys(tp, "task_params", {"strategy_oracle", "permutations"});
      break;
    case Task::kDppCheck:
      r.only_keys(tp, "task_params", {"split_times"});
      break;
    case Task::kHamiltonian:
      r.only_keys(tp, "task_params", {"functional", "permutations"});
      break;
    case Task::kLionsCheck:
      r.only_keys(tp, "task_params", {"functionals", "fd_step", "order_steps"});
      break;
    case Task::kItoCheck:
      r.only_keys(tp, "task_params", {"functionals", "step_counts", "alpha", "beta"});
      break;
    case Task::kViscosityCheck:
      r.only_keys(tp, "task_params", {"candidate", "coefficients", "sample_times", "samples"});
      break;
    case Task::kClassicalIdentity:
      r.only_keys(tp, "task_params", {});
      break;
    case Task::kIsaacsGap:
      r.only_keys(tp, "task_params", {"functional", "randomization", "game_gap"});
      break;
  }
  if (tp.contains("alpha")) t.alpha = parse_control(r, tp["alpha"], "task_params.alpha");
  if (tp.contains("beta")) t.beta = parse_control(r, tp["beta"], "task_params.beta");
  if (tp.contains("restart_level") && !tp["restart_level"].is_null()) {
    t.restart_level = static_cast<int>(r.integer(tp["restart_level"], "task_params.restart_level"));
  }
  if (tp.contains("strategy_oracle")) t.strategy_oracle = r.boolean(tp["strategy_oracle"], "task_params.strategy_oracle");
  if (tp.contains("permutations")) {
    t.permutations = static_cast<int>(r.integer(tp["permutations"], "task_params.permutations"));
  }
  if (tp.contains("split_times")) {
    const Json& s = tp["split_times"];
    t.split_times = s.is_number() ? std::vector<double>{r.number(s, "task_params.split_times")}
                                  : r.numbers(s, "task_params.split_times");
  }
  if (tp.contains("functional")) t.functional = r.string(tp["functional"], "task_params.functional");
  if (tp.contains("functionals")) {
    const Json& f = tp["functionals"];
    if (!f.is_array()) r.fail("task_params.functionals", "expected an array of names");
    for (std::size_t i = 0; i < f.size(); ++i) {
      t.functionals.push_back(r.string(f[i], Reader::index("task_params.functionals", i)));
    }
  }
  if (tp.contains("fd_step")) t.fd_step = r.number(tp["fd_step"], "task_params.fd_step");
  if (tp.contains("order_steps")) t.order_steps = r.numbers(tp["order_steps"], "task_params.order_steps");
  if (tp.contains("step_counts")) t.step_counts = r.ints(tp["step_counts"], "task_params.step_counts");
  if (tp.contains("candidate")) t.candidate = r.string(tp["candidate"], "task_params.candidate");
  if (tp.contains("coefficients")) t.coefficients = r.numbers(tp["coefficients"], "task_params.coefficients");
  if (tp.contains("sample_times")) t.sample_times = r.numbers(tp["sample_times"], "task_params.sample_times");
  if (tp.contains("samples")) t.samples = static_cast<int>(r.integer(tp["samples"], "task_params.samples"));
  if (tp.contains("randomization")) t.randomization = r.ints(tp["randomization"], "task_params.randomization");
  if (tp.contains("game_gap")) t.game_gap = r.boolean(tp["game_gap"], "task_params.game_gap");

  // tolerances
  if (doc.contains("tolerances")) {
    const Json& tol = doc["tolerances"];
    if (!tol.is_object()) r.fail("tolerances", "expected an object");
    for (const auto& [k, v] : tol.items()) {
      if (!default_tolerances().count(k)) r.fail("tolerances." + k, "unknown tolerance");
      const double x = r.number(v, "tolerances." + k);
      if (x < 0) r.fail("tolerances." + k, "must be nonnegative");
      c.tolerances[k] = x;
    }
  }
  for (const auto& [k, v] : default_tolerances()) c.tolerances.emplace(k, v);

  // output
  if (doc.contains("output")) {
    const Json& out = doc["output"];
    r.only_keys(out, "output", {"dir", "format"});
    if (out.contains("dir")) c.output.dir = r.string(out["dir"], "output.dir");
    if (out.contains("format")) {
      const std::string f = r.string(out["format"], "output.format");
      try {
        c.output.format = report_format_from_name(f);
      } catch (const InvalidInput& e) {
        r.fail("output.format", e.what());
      }
    }
  }

  // cross-field validation
  check_control_indices(t.alpha, spec.num_a(), "task_params.alpha");
  check_control_indices(t.beta, spec.num_b(), "task_params.beta");
  if (c.task == Task::kDppCheck) {
    if (t.split_times.empty()) throw ValidationError("dpp_check needs task_params.split_times on the " + grid_description(c.tree));
    for (double s : t.split_times) check_on_grid(s, c.tree, "task_params.split_times");
  }
  if (t.restart_level && (*t.restart_level < 0 || *t.restart_level > c.tree.steps)) {
    throw ValidationError("task_params.restart_level must lie in [0, tree.steps]");
  }
  if (t.permutations < 0) throw ValidationError("task_params.permutations must be nonnegative");
  if (!(t.fd_step > 0)) throw ValidationError("task_params.fd_step must be positive");
  for (double h : t.order_steps) {
    if (!(h > 0)) throw ValidationError("task_params.order_steps must be positive");
  }
  for (int k : t.step_counts) {
    if (k < 1) throw ValidationError("task_params.step_counts must be positive");
  }
  for (int R : t.randomization) {
    if (R < 1) throw ValidationError("task_params.randomization entries must be positive");
  }
  for (double s : t.sample_times) {
    if (!(s >= c.tree.start_time && s < c.tree.horizon)) {
      throw ValidationError("task_params.sample_times must lie in [start_time, horizon)");
    }
  }
  if (t.samples < 1) throw ValidationError("task_params.samples must be positive");
  const bool game_task = c.task == Task::kValue || c.task == Task::kDppCheck ||
                         c.task == Task::kClassicalIdentity ||
                         (c.task == Task::kIsaacsGap && t.game_gap);
  if (game_task && c.tree.mode != NoiseMode::kExactRademacher) {
    throw ValidationError(std::string(task_name(c.task)) + " needs tree.mode = exact_rademacher");
  }

  // Capacity pre-flight: an exact tree has 2^(channels * d * K) leaves.
  if (c.tree.mode == NoiseMode::kExactRademacher) {
    std::vector<int> ks = {c.tree.steps};
    if (c.task == Task::kItoCheck) ks = t.step_counts;
    for (int k : ks) {
      const long long bits = static_cast<long long>(c.tree.channels) * c.tree.noise_dim * k;
      if (bits >= 64 || (std::uint64_t{1} << bits) > c.caps.leaves) {
        throw CapacityError("exact scenario tree would have 2^" + std::to_string(bits) +
                            " leaves (channels " + std::to_string(c.tree.channels) + " x noise dim " +
                            std::to_string(c.tree.noise_dim) + " x steps " + std::to_string(k) +
                            "), above the cap of " + std::to_string(c.caps.leaves));
      }
    }
  }

  c.normalized = to_json(c).dump(2);
  return c;
}

ExperimentConfig load_problem_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_problem_config(ss.str());
}

}  // namespace mvgame
