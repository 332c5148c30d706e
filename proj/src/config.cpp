#include "gqmc/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#ifndef GQMC_VERSION
#define GQMC_VERSION "unknown"
#endif

namespace gqmc {

namespace {

std::string join(const std::vector<std::string>& items, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

enum class Kind { integer, unsigned_integer, real, boolean, statistics, scheme, text };

struct KeySpec {
  std::string key;
  Kind kind;
  std::optional<std::string> fallback;  // nullopt = required
};

std::vector<KeySpec> schema(Mode mode) {
  const KeySpec seed{"seed", Kind::unsigned_integer, "1"};
  const KeySpec batches{"batches", Kind::integer, "20"};
  const KeySpec record{"record_interval", Kind::integer, "10"};
  const KeySpec iterations{"midpoint_iterations", Kind::integer, "4"};
  const KeySpec scheme{"scheme", Kind::scheme, "midpoint"};
  const KeySpec periodic{"periodic", Kind::boolean, "true"};
  switch (mode) {
    case Mode::hubbard:
      return {{"lx", Kind::integer, {}},
              {"ly", Kind::integer, {}},
              periodic,
              {"t", Kind::real, {}},
              {"u", Kind::real, {}},
              {"mu", Kind::real, {}},
              {"tau_max", Kind::real, {}},
              {"dtau", Kind::real, {}},
              {"trajectories", Kind::integer, {}},
              {"branch_interval", Kind::integer, "0"},
              {"branch_target", Kind::integer, ""},
              batches,
              seed,
              record,
              iterations,
              scheme,
              {"output", Kind::text, "hubbard.csv"}};
    case Mode::dissociation:
      return {{"statistics", Kind::statistics, {}},
              {"n_mean", Kind::real, {}},
              {"time_max", Kind::real, {}},
              {"dt", Kind::real, {}},
              {"trajectories", Kind::integer, {}},
              batches,
              seed,
              record,
              iterations,
              scheme,
              {"error_ceiling", Kind::real, "0.1"},
              {"output", Kind::text, "dissociation.csv"}};
    case Mode::ed:
      return {{"lx", Kind::integer, {}},
              {"ly", Kind::integer, {}},
              periodic,
              {"t", Kind::real, {}},
              {"u", Kind::real, {}},
              {"mu", Kind::real, {}},
              {"tau_max", Kind::real, {}},
              {"dtau", Kind::real, "0.01"},
              record,
              {"output", Kind::text, "ed.csv"}};
    case Mode::kernel_check:
      return {{"kernel_states", Kind::integer, "50"},
              seed,
              {"output", Kind::text, "kernel_check.csv"}};
  }
  return {};
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Parses and canonicalizes one value; returns an error message on failure.
std::optional<std::string> canonical(Kind kind, const std::string& text, std::string& out) {
  switch (kind) {
    case Kind::integer: {
      long long v = 0;
      const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc{} || p != text.data() + text.size()) return "expected an integer";
      out = std::to_string(v);
      return std::nullopt;
    }
    case Kind::unsigned_integer: {
      std::uint64_t v = 0;
      const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc{} || p != text.data() + text.size()) {
        return "expected a non-negative integer";
      }
      out = std::to_string(v);
      return std::nullopt;
    }
    case Kind::real: {
      double v = 0.0;
      const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc{} || p != text.data() + text.size() || !std::isfinite(v)) {
        return "expected a finite number";
      }
      out = format_real(v);
      return std::nullopt;
    }
    case Kind::boolean:
      if (text == "true" || text == "1" || text == "yes") out = "true";
      else if (text == "false" || text == "0" || text == "no") out = "false";
      else return "expected true or false";
      return std::nullopt;
    case Kind::statistics:
      if (text != "bose" && text != "fermi") return "expected bose or fermi";
      out = text;
      return std::nullopt;
    case Kind::scheme:
      if (text != "midpoint" && text != "euler") return "expected midpoint or euler";
      out = text;
      return std::nullopt;
    case Kind::text:
      if (text.empty()) return "must not be empty";
      out = text;
      return std::nullopt;
  }
  return "unsupported";
}

double real(const std::map<std::string, std::string>& v, const std::string& key) {
  return std::stod(v.at(key));
}
int integer(const std::map<std::string, std::string>& v, const std::string& key) {
  return std::stoi(v.at(key));
}

IntegratorConfig integrator(const std::map<std::string, std::string>& v, const std::string& step) {
  IntegratorConfig cfg;
  cfg.dstep = real(v, step);
  cfg.midpoint_iterations = integer(v, "midpoint_iterations");
  cfg.scheme = v.at("scheme") == "euler" ? Scheme::euler_maruyama : Scheme::stratonovich_midpoint;
  return cfg;
}

HubbardParams hubbard_params(const std::map<std::string, std::string>& v) {
  HubbardParams p;
  p.Lx = integer(v, "lx");
  p.Ly = integer(v, "ly");
  p.periodic = v.at("periodic") == "true";
  p.t = real(v, "t");
  p.U = real(v, "u");
  p.mu = real(v, "mu");
  return p;
}

// Grid of record points k * spacing up to tau_max (inclusive within rounding).
std::vector<double> record_grid(double tau_max, double step, int interval) {
  const auto steps = static_cast<long long>(std::llround(tau_max / step));
  std::vector<double> grid;
  for (long long k = 0; k <= steps; k += interval) grid.push_back(static_cast<double>(k) * step);
  if (steps % interval != 0) grid.push_back(static_cast<double>(steps) * step);
  return grid;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error("invalid configuration: " + join(problems, "; ")),
      problems_(std::move(problems)) {}

Mode parse_mode(const std::string& name) {
  if (name == "hubbard") return Mode::hubbard;
  if (name == "dissociation") return Mode::dissociation;
  if (name == "ed") return Mode::ed;
  if (name == "kernel-check") return Mode::kernel_check;
  throw ConfigError({"unknown mode '" + name + "'"});
}

std::string mode_name(Mode mode) {
  switch (mode) {
    case Mode::hubbard: return "hubbard";
    case Mode::dissociation: return "dissociation";
    case Mode::ed: return "ed";
    case Mode::kernel_check: return "kernel-check";
  }
  return "unknown";
}

RawConfig parse_config(std::istream& in) {
  RawConfig config;
  std::vector<std::string> problems;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      problems.push_back("line " + std::to_string(number) + ": expected key = value");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) {
      problems.push_back("line " + std::to_string(number) + ": empty key");
      continue;
    }
    if (config.count(key)) {
      problems.push_back("line " + std::to_string(number) + ": duplicate key '" + key + "'");
      continue;
    }
    config[key] = trim(line.substr(eq + 1));
  }
  if (!problems.empty()) throw ConfigError(problems);
  return config;
}

RawConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read config file '" + path + "'"});
  return parse_config(in);
}

void apply_override(RawConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError({"override '" + assignment + "' is not key=value"});
  const std::string key = trim(assignment.substr(0, eq));
  if (key.empty()) throw ConfigError({"override '" + assignment + "' has an empty key"});
  config[key] = trim(assignment.substr(eq + 1));
}

ResolvedConfig resolve_config(Mode mode, const RawConfig& raw) {
  const auto specs = schema(mode);
  std::vector<std::string> problems;
  std::set<std::string> known{"mode"};
  for (const auto& s : specs) known.insert(s.key);

  for (const auto& [key, value] : raw) {
    if (!known.count(key)) problems.push_back("unknown key '" + key + "' for mode " + mode_name(mode));
  }
  if (const auto it = raw.find("mode"); it != raw.end() && it->second != mode_name(mode)) {
    problems.push_back("config mode '" + it->second + "' does not match subcommand " +
                       mode_name(mode));
  }

  ResolvedConfig resolved;
  resolved.mode = mode;
  for (const auto& spec : specs) {
    const auto it = raw.find(spec.key);
    if (it == raw.end()) {
      if (!spec.fallback) {
        problems.push_back("missing required key '" + spec.key + "'");
        continue;
      }
      if (spec.fallback->empty()) continue;  // derived below
      resolved.values[spec.key] = *spec.fallback;
      continue;
    }
    std::string value;
    if (const auto err = canonical(spec.kind, it->second, value)) {
      problems.push_back("key '" + spec.key + "': " + *err + " (got '" + it->second + "')");
      continue;
    }
    resolved.values[spec.key] = value;
  }
  if (!problems.empty()) throw ConfigError(problems);

  auto& v = resolved.values;
  if (mode == Mode::hubbard && !v.count("branch_target")) v["branch_target"] = v.at("trajectories");
  v["mode"] = mode_name(mode);
  resolved.output = v.at("output");
  if (v.count("seed")) resolved.seed = std::stoull(v.at("seed"));

  // Semantic checks go through the module validators so the messages match.
  auto check = [&](auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      problems.emplace_back(e.what());
    }
  };
  switch (mode) {
    case Mode::hubbard:
      check([&] { resolved.hubbard().params.validate(); });
      check([&] { resolved.hubbard().run.validate(); });
      break;
    case Mode::dissociation:
      check([&] { resolved.dissociation().run.validate(); });
      if (real(v, "n_mean") < 0.0) problems.emplace_back("n_mean must be >= 0");
      break;
    case Mode::ed: {
      check([&] { resolved.ed().params.validate(); });
      const long sites = static_cast<long>(integer(v, "lx")) * integer(v, "ly");
      if (sites > 6) problems.push_back("ed supports at most 6 sites (4^sites <= 4096)");
      if (!(real(v, "dtau") > 0.0)) problems.emplace_back("dtau must be positive");
      if (!(real(v, "tau_max") >= 0.0)) problems.emplace_back("tau_max must be >= 0");
      if (integer(v, "record_interval") < 1) problems.emplace_back("record_interval must be >= 1");
      break;
    }
    case Mode::kernel_check:
      if (integer(v, "kernel_states") < 1) problems.emplace_back("kernel_states must be >= 1");
      break;
  }
  if (!problems.empty()) throw ConfigError(problems);
  return resolved;
}

HubbardJob ResolvedConfig::hubbard() const {
  const auto& v = values;
  HubbardJob job;
  job.params = hubbard_params(v);
  job.run.trajectories = integer(v, "trajectories");
  job.run.tau_max = real(v, "tau_max");
  job.run.integrator = integrator(v, "dtau");
  job.run.record_interval = integer(v, "record_interval");
  job.run.batches = integer(v, "batches");
  job.run.branching.interval = integer(v, "branch_interval");
  job.run.branching.target_population = integer(v, "branch_target");
  job.run.seed = seed;
  job.run.branching.seed = seed;
  return job;
}

DissociationJob ResolvedConfig::dissociation() const {
  const auto& v = values;
  DissociationJob job;
  job.kind = v.at("statistics") == "bose" ? StatisticsKind::bosonic : StatisticsKind::fermionic;
  job.n_mean = real(v, "n_mean");
  job.run.trajectories = integer(v, "trajectories");
  job.run.t_max = real(v, "time_max");
  job.run.integrator = integrator(v, "dt");
  job.run.record_interval = integer(v, "record_interval");
  job.run.batches = integer(v, "batches");
  job.run.error_ceiling = real(v, "error_ceiling");
  job.run.seed = seed;
  return job;
}

EdJob ResolvedConfig::ed() const {
  const auto& v = values;
  EdJob job;
  job.params = hubbard_params(v);
  job.tau_grid = record_grid(real(v, "tau_max"), real(v, "dtau"), integer(v, "record_interval"));
  return job;
}

KernelCheckJob ResolvedConfig::kernel_check() const {
  return {integer(values, "kernel_states"), seed};
}

std::string manifest_text(const ResolvedConfig& config) {
  std::ostringstream out;
  for (const auto& [key, value] : config.values) out << key << '=' << value << '\n';
  out << "code_version=" << code_version() << '\n';
  return out.str();
}

std::string code_version() { return GQMC_VERSION; }

}  // namespace gqmc
