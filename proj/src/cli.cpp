#include "gqmc/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>

#include <CLI11.hpp>

#include "gqmc/branching.hpp"
#include "gqmc/dissociation.hpp"
#include "gqmc/hubbard.hpp"
#include "gqmc/oracle.hpp"

namespace gqmc {

namespace {

constexpr double kIdentityTolerance = 1e-6;
constexpr double kTraceTolerance = 1e-12;
constexpr double kMomentTolerance = 1e-10;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string num(const std::optional<double>& v) {
  return v ? num(*v) : std::string("nan");
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  return out;
}

int threads_from_environment() {
  const char* text = std::getenv("GQMC_NUM_THREADS");
  if (text == nullptr || *text == '\0') return 0;
  char* end = nullptr;
  const long v = std::strtol(text, &end, 10);
  if (*end != '\0' || v < 0 || v > 4096) {
    throw ConfigError({std::string("GQMC_NUM_THREADS must be a non-negative integer, got '") +
                       text + "'"});
  }
  return static_cast<int>(v);
}

int run_hubbard(const ResolvedConfig& config, int threads, std::ostream& out) {
  HubbardJob job = config.hubbard();
  job.run.threads = threads;
  const Lattice lattice = build_lattice(job.params);
  auto log = open_output(config.output + ".log");
  log << "gqmc " << code_version() << " hubbard\n";
  auto on_branch = [&](const BranchEvent& e) {
    log << "branch generation=" << e.generation << " before=" << e.population_before
        << " after=" << e.population_after << " killed_invalid=" << e.killed_invalid
        << " weight_entropy=" << num(e.weight_entropy) << '\n';
  };
  HubbardRun run;
  try {
    run = run_imaginary_time(job.params, lattice, job.run, on_branch);
  } catch (const ExtinctionError& e) {
    log << "extinction: " << e.what() << '\n';
    throw;
  }
  const auto& d = run.diagnostics;
  log << "steps=" << d.steps << " weight_violations=" << d.weight_violations
      << " invalid_killed=" << d.invalid_killed << " min_population=" << d.min_population
      << " max_population=" << d.max_population << '\n';
  auto csv = open_output(config.output);
  write_hubbard_csv(csv, run.series);
  out << "hubbard: " << run.series.points.size() << " grid points, " << d.weight_violations
      << " weight violations -> " << config.output << '\n';
  return exit_ok;
}

int run_dissociation(const ResolvedConfig& config, int threads, std::ostream& out) {
  DissociationJob job = config.dissociation();
  job.run.threads = threads;
  const ObservableSeries series = run_realtime(job.kind, job.n_mean, job.run);
  auto log = open_output(config.output + ".log");
  log << "gqmc " << code_version() << " dissociation\n";
  if (series.truncated) {
    log << "truncated at t=" << num(series.truncated_at) << '\n';
  } else {
    log << "complete\n";
  }
  auto csv = open_output(config.output);
  write_dissociation_csv(csv, series);
  out << "dissociation: " << series.points.size() << " grid points"
      << (series.truncated ? " (truncated at t=" + num(series.truncated_at) + ")" : std::string())
      << " -> " << config.output << '\n';
  return exit_ok;
}

int run_ed(const ResolvedConfig& config, std::ostream& out) {
  const EdJob job = config.ed();
  const Lattice lattice = build_lattice(job.params);
  const ObservableSeries series = oracle::ed_hubbard(job.params, lattice, job.tau_grid);
  const std::vector<std::string> names{"energy_per_site", "energy_without_mu_per_site",
                                       "filling", "g2"};
  auto csv = open_output(config.output);
  oracle::write_fixture(csv, series, names);
  auto log = open_output(config.output + ".log");
  log << "gqmc " << code_version() << " ed sites=" << lattice.sites() << '\n';
  out << "ed: " << series.points.size() << " grid points -> " << config.output << '\n';
  return exit_ok;
}

int run_kernel_check(const ResolvedConfig& config, std::ostream& out) {
  const KernelCheckJob job = config.kernel_check();
  const auto rows = kernel_check(job.states, job.seed);
  auto csv = open_output(config.output);
  csv << "state,modes,trace,moments,omega_scaling,normal,mixed,antinormal\n";
  bool ok = true;
  for (const auto& r : rows) {
    csv << r.state << ',' << r.modes << ',' << num(r.trace) << ',' << num(r.moments) << ','
        << num(r.omega_scaling) << ',' << num(r.normal) << ',' << num(r.mixed) << ','
        << num(r.antinormal) << '\n';
    out << "state " << r.state << " M=" << r.modes << " trace=" << num(r.trace)
        << " moments=" << num(r.moments) << " omega=" << num(r.omega_scaling)
        << " normal=" << num(r.normal) << " mixed=" << num(r.mixed)
        << " antinormal=" << num(r.antinormal) << '\n';
    const double identities = std::max({r.omega_scaling, r.normal, r.mixed, r.antinormal});
    ok = ok && r.trace <= kTraceTolerance && r.moments <= kMomentTolerance &&
         (std::isnan(identities) || identities <= kIdentityTolerance);
  }
  auto log = open_output(config.output + ".log");
  log << "gqmc " << code_version() << " kernel-check states=" << rows.size()
      << (ok ? " pass\n" : " FAIL\n");
  out << (ok ? "kernel-check: pass\n" : "kernel-check: FAIL\n");
  return ok ? exit_ok : exit_oracle;
}

}  // namespace

void write_hubbard_csv(std::ostream& out, const ObservableSeries& series) {
  out << "tau,energy_per_site,energy_err,filling,filling_err,g2,g2_err,population,"
         "mean_log_weight\n";
  for (const auto& p : series.points) {
    const auto& e = p.at("energy_per_site");
    const auto& f = p.at("filling");
    const auto& g = p.at("g2");
    out << num(p.time) << ',' << num(e.value) << ',' << num(e.error) << ',' << num(f.value) << ','
        << num(f.error) << ',' << num(g.value) << ',' << num(g.error) << ',' << p.population << ','
        << num(p.mean_log_weight) << '\n';
  }
}

void write_dissociation_csv(std::ostream& out, const ObservableSeries& series) {
  out << "t,n1,n1_err,n2,n2_err,molecules,molecules_err,n1_imag,n1_imag_err,conserved,"
         "conserved_err\n";
  for (const auto& p : series.points) {
    out << num(p.time);
    for (const char* name : {"n1", "n2", "molecules", "n1_imag", "conserved"}) {
      const auto& e = p.at(name);
      out << ',' << num(e.value) << ',' << num(e.error);
    }
    out << '\n';
  }
}

std::vector<KernelCheckRow> kernel_check(int states, std::uint64_t seed) {
  std::vector<KernelCheckRow> rows;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int k = 0; k < states; ++k) {
    KernelCheckRow row;
    row.state = k;
    row.modes = 1 + k % 3;
    const GeneralFermiState s = oracle::random_state(row.modes, seed, static_cast<std::uint64_t>(k));
    row.trace = std::abs(oracle::materialize_kernel(s).matrix.trace() - 1.0);
    row.moments = oracle::moment_deviation(s);
    if (row.modes <= 2) {
      const auto dev = oracle::check_identities(s);
      row.omega_scaling = dev.omega_scaling;
      row.normal = dev.normal;
      row.mixed = dev.mixed;
      row.antinormal = dev.antinormal;
    } else {
      row.omega_scaling = row.normal = row.mixed = row.antinormal = nan;
    }
    rows.push_back(row);
  }
  return rows;
}

int run_job(const ResolvedConfig& config, int threads, std::ostream& out) {
  int code = exit_failure;
  switch (config.mode) {
    case Mode::hubbard: code = run_hubbard(config, threads, out); break;
    case Mode::dissociation: code = run_dissociation(config, threads, out); break;
    case Mode::ed: code = run_ed(config, out); break;
    case Mode::kernel_check: code = run_kernel_check(config, out); break;
  }
  auto manifest = open_output(config.output + ".manifest");
  manifest << manifest_text(config);
  return code;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gaussian phase-space Monte Carlo for fermions"};
  app.require_subcommand(1);
  app.set_version_flag("--version", code_version());

  std::string config_path;
  std::vector<std::string> overrides;
  std::string output;
  std::optional<std::uint64_t> seed;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"hubbard", "Imaginary-time Hubbard lattice simulation"},
      {"dissociation", "Real-time molecular dissociation dynamics"},
      {"ed", "Exact-diagonalization reference for small Hubbard lattices"},
      {"kernel-check", "Fock-space check of the Gaussian kernel identities"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "Flat key = value config file");
    sub->add_option("--set", overrides, "Override one config entry (key=value)")
        ->allow_extra_args(false);
    sub->add_option("--output", output, "CSV output path");
    sub->add_option("--seed", seed, "Master seed");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_config;
  }

  try {
    const Mode mode = parse_mode(app.get_subcommands().front()->get_name());
    RawConfig raw = config_path.empty() ? RawConfig{} : parse_config_file(config_path);
    for (const auto& o : overrides) apply_override(raw, o);
    if (!output.empty()) raw["output"] = output;
    if (seed) raw["seed"] = std::to_string(*seed);
    const ResolvedConfig resolved = resolve_config(mode, raw);
    return run_job(resolved, threads_from_environment(), out);
  } catch (const ConfigError& e) {
    for (const auto& p : e.problems()) err << "config error: " << p << '\n';
    return exit_config;
  } catch (const ExtinctionError& e) {
    err << "extinction: " << e.what() << '\n';
    return exit_extinction;
  } catch (const oracle::OracleError& e) {
    err << "oracle failure: " << e.what() << '\n';
    return exit_oracle;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_failure;
  }
}

}  // namespace gqmc
