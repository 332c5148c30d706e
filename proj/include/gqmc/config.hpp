#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "gqmc/dissociation.hpp"
#include "gqmc/hubbard.hpp"
#include "gqmc/model.hpp"

namespace gqmc {

/// Config rejection carrying every problem found, not just the first.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  [[nodiscard]] const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

enum class Mode { hubbard, dissociation, ed, kernel_check };

Mode parse_mode(const std::string& name);
std::string mode_name(Mode mode);

/// Flat key = value pairs. '#' starts a comment; blank lines are ignored.
using RawConfig = std::map<std::string, std::string>;

RawConfig parse_config(std::istream& in);
RawConfig parse_config_file(const std::string& path);

/// Applies one "key=value" override.
void apply_override(RawConfig& config, const std::string& assignment);

struct HubbardJob {
  HubbardParams params;
  HubbardRunConfig run;
};

struct DissociationJob {
  StatisticsKind kind = StatisticsKind::fermionic;
  double n_mean = 0.0;
  DissociationRunConfig run;
};

struct EdJob {
  HubbardParams params;
  std::vector<double> tau_grid;
};

struct KernelCheckJob {
  int states = 50;
  std::uint64_t seed = 1;
};

/// Every key resolved for one mode, defaults included, in canonical text form.
struct ResolvedConfig {
  Mode mode = Mode::hubbard;
  std::map<std::string, std::string> values;
  std::string output;
  std::uint64_t seed = 1;

  [[nodiscard]] HubbardJob hubbard() const;
  [[nodiscard]] DissociationJob dissociation() const;
  [[nodiscard]] EdJob ed() const;
  [[nodiscard]] KernelCheckJob kernel_check() const;
};

/// Checks keys against the mode's schema, fills defaults, and validates
/// values. Throws ConfigError listing every unknown key, missing key and bad value.
ResolvedConfig resolve_config(Mode mode, const RawConfig& raw);

/// key=value manifest: resolved config plus seed and code version, sorted by key.
std::string manifest_text(const ResolvedConfig& config);

std::string code_version();

}  // namespace gqmc
