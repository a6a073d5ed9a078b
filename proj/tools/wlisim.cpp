// wlisim: simulate, fit and study spectrally resolved white-light
// interferometry from the command line.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "wlisim/errors.hpp"
#include "wlisim/experiments.hpp"
#include "wlisim/io.hpp"
#include "wlisim/scenario.hpp"

namespace {

using namespace wlisim;

constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNotConverged = 3;
constexpr int kExitUnusable = 4;

struct Common {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format;
  unsigned threads = 0;
  bool dump_config = false;
  std::string method;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "scenario JSON file");
  app->add_option("--preset", c.preset, "named preset (paper-classical, paper-quantum)");
  app->add_option("--seed", c.seed, "override noise seed and Monte Carlo master seed");
  app->add_option("--out", c.out, "output file (default: stdout)");
  app->add_option("--format", c.format, "output format")->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--threads", c.threads, "worker threads (0: all cores)");
  app->add_flag("--dump-config", c.dump_config, "print the effective configuration and exit");
  app->add_option("--method", c.method, "classical, classical_2nd_order or quantum");
}

Scenario load(const std::string& config, const std::string& preset_name,
              const std::string& method, const Common& c) {
  Scenario s;
  if (!config.empty() && !preset_name.empty()) {
    throw ConfigError("give either --config or --preset");
  }
  if (!config.empty()) {
    s = load_scenario(config);
  } else if (!preset_name.empty()) {
    s = preset(preset_name);
  } else {
    const bool quantum = !method.empty() && fit_model_from_string(method) == FitModel::quantum;
    s = preset(quantum ? "paper-quantum" : "paper-classical");
  }
  if (!method.empty()) s.method = fit_model_from_string(method);
  if (c.seed) {
    s.noise.rng_seed = *c.seed;
    s.master_seed = *c.seed;
  }
  return s;
}

Scenario load(const Common& c) { return load(c.config, c.preset, c.method, c); }

// Writes to --out or stdout.
void emit(const Common& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(c.out, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + c.out);
  f << text;
}

std::string format_or(const Common& c, const std::string& fallback) {
  return c.format.empty() ? fallback : c.format;
}

int cmd_simulate(const Common& c) {
  const Scenario s = load(c);
  if (c.dump_config) {
    emit(c, dump_scenario(s));
    return 0;
  }
  if (format_or(c, "csv") != "csv") throw ConfigError("simulate writes CSV only");
  s.validate();
  const auto budget = photon_budget(s.acquisition.source, s.acquisition.grid,
                                    s.acquisition.integration_time_s);
  std::ostringstream os;
  write_spectrogram_csv(os, simulate(s, s.noise.rng_seed));
  emit(c, os.str());
  std::cerr << "total photons: " << format_number(budget.total) << '\n';
  return 0;
}

int cmd_fit(const Common& c, const std::string& data_path) {
  const Scenario s = load(c);
  if (c.dump_config) {
    emit(c, dump_scenario(s));
    return 0;
  }
  std::ifstream in(data_path);
  if (!in) throw FormatError(data_path + ": cannot open file");
  const Spectrogram g = read_spectrogram_csv(in, data_path);
  const bool quantum_data = std::holds_alternative<CoincidenceSpectrogram>(g);
  if (quantum_data != is_quantum(s.method)) {
    throw FormatError(data_path + ": columns do not match method '" + to_string(s.method) + "'");
  }
  const FitResult r = fit(s, normalize(g));
  emit(c, dump_json(to_json(r)));
  return r.converged ? 0 : kExitNotConverged;
}

int cmd_montecarlo(const Common& c, std::size_t trials, std::optional<int> bins,
                   const std::string& trials_out) {
  const Scenario s = load(c);
  if (c.dump_config) {
    emit(c, dump_scenario(s));
    return 0;
  }
  MonteCarloOptions opt;
  opt.n_trials = trials;
  opt.threads = c.threads;
  opt.histogram_bins = bins;
  const auto rep = run_montecarlo(s, s.method, opt);
  if (format_or(c, "json") == "csv") {
    std::ostringstream os;
    write_histogram_csv(os, rep.histogram);
    emit(c, os.str());
  } else {
    auto j = to_json(rep);
    if (rep.trials.size() >= 2 && rep.failed_trials + 2 <= rep.trials.size()) {
      j["delta_D_sqrtN"] = precision_per_photon(rep).delta_D_sqrtN;
    }
    emit(c, dump_json(j));
  }
  if (!trials_out.empty()) {
    std::ofstream f(trials_out, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + trials_out);
    write_trials_csv(f, rep);
  }
  std::cerr << to_string(rep.method) << ": mean D " << format_number(rep.mean_D) << ", std "
            << format_number(rep.std_D) << ", failed " << rep.failed_trials << '\n';
  return rep.usable ? 0 : kExitUnusable;
}

int cmd_systematics(const Common& c, const std::string& axis_name, double max_offset, int points,
                    double target, const std::string& qconfig, const std::string& qpreset) {
  const Scenario classical = load(c.config, c.preset, "classical", c);
  const bool separate = !qconfig.empty() || !qpreset.empty();
  const Scenario quantum = separate ? load(qconfig, qpreset, "quantum", c)
                                    : load(c.config, c.preset, "quantum", c);
  if (c.dump_config) {
    emit(c, dump_scenario(classical));
    return 0;
  }
  if (points < 2) throw ConfigError("--points must be at least 2");
  const auto axis = systematic_axis_from_string(axis_name);
  std::vector<double> offsets;
  for (int i = 0; i < points; ++i) offsets.push_back(max_offset * i / (points - 1));
  const auto rep = systematics_scan(classical, quantum, axis, offsets);
  bool all_ok = true;
  for (const auto& p : rep.points) all_ok = all_ok && p.classical_ok && p.quantum_ok;
  if (format_or(c, "csv") == "csv") {
    std::ostringstream os;
    write_systematics_csv(os, rep);
    emit(c, os.str());
  } else {
    auto j = to_json(rep);
    j["target_bias"] = target;
    const auto need = find_offset_for_bias(classical, FitModel::classical, axis, target, max_offset);
    j["required_offset_classical"] = need ? nlohmann::json(*need) : nlohmann::json(nullptr);
    emit(c, dump_json(j));
  }
  return all_ok ? 0 : kExitNotConverged;
}

int cmd_calibrate(const Common& c, std::optional<double> bare_d2n,
                  std::optional<double> bare_fraction) {
  Scenario loaded = load(c.config, c.preset, "quantum", c);
  if (bare_d2n && bare_fraction) throw ConfigError("give either --bare-d2n or --bare-fraction");
  if (bare_d2n) loaded.interferometer_d2n = *bare_d2n;
  if (bare_fraction) {
    if (!(*bare_fraction >= 0.0 && *bare_fraction < 1.0)) {
      throw ConfigError("--bare-fraction must be in [0, 1)");
    }
    const double sample = evaluate(loaded.truth, 2.0 * loaded.pump_wavelength_nm).d2n;
    loaded.interferometer_d2n = sample * *bare_fraction / (1.0 - *bare_fraction);
  }
  if (c.dump_config) {
    emit(c, dump_scenario(loaded));
    return 0;
  }
  const auto rep = calibration_workflow(make_bare_scenario(loaded), loaded);
  emit(c, dump_json(to_json(rep)));
  return 0;
}

int cmd_fringecheck(const Common& c, const std::string& qconfig, const std::string& qpreset) {
  const bool defaults = c.config.empty() && c.preset.empty();
  const Scenario classical =
      defaults ? preset("paper-classical") : load(c.config, c.preset, "classical", c);
  const bool separate = !qconfig.empty() || !qpreset.empty();
  const Scenario quantum = separate    ? load(qconfig, qpreset, "quantum", c)
                           : defaults  ? preset("paper-quantum")
                                       : load(c.config, c.preset, "quantum", c);
  if (c.dump_config) {
    emit(c, dump_scenario(classical));
    return 0;
  }
  const auto rep = fringe_doubling_check(classical, quantum);
  emit(c, dump_json(to_json(rep)));
  std::cerr << "ratio " << format_number(rep.ratio) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectrally resolved white-light interferometry simulator"};
  app.require_subcommand(1);

  Common c;
  auto* sim = app.add_subcommand("simulate", "synthesise a spectrogram CSV");
  add_common(sim, c);

  auto* fitc = app.add_subcommand("fit", "normalise and fit a spectrogram CSV");
  add_common(fitc, c);
  std::string data_path;
  fitc->add_option("--data", data_path, "spectrogram CSV")->required();

  auto* mc = app.add_subcommand("montecarlo", "repeated synthesis and fitting");
  add_common(mc, c);
  std::size_t trials = 100;
  std::optional<int> bins;
  std::string trials_out;
  mc->add_option("--trials", trials, "number of trials")->check(CLI::Range(2, 1000000));
  mc->add_option("--bins", bins, "histogram bins (default: Freedman-Diaconis)");
  mc->add_option("--trials-out", trials_out, "per-trial CSV");

  auto* sys = app.add_subcommand("systematics", "bias versus a systematic offset");
  add_common(sys, c);
  std::string axis;
  double max_offset = 0.0, target = 0.012;
  int points = 7;
  std::string qconfig, qpreset;
  sys->add_option("--axis", axis, "spectrometer-offset (nm) or arm-imbalance (m)")->required();
  sys->add_option("--max", max_offset, "largest offset")->required();
  sys->add_option("--points", points, "scan points including 0");
  sys->add_option("--target", target, "bias whose required offset is reported (json)");
  sys->add_option("--quantum-config", qconfig, "scenario for the quantum fits");
  sys->add_option("--quantum-preset", qpreset, "preset for the quantum fits");

  auto* cal = app.add_subcommand("calibrate", "subtract bare-interferometer dispersion");
  add_common(cal, c);
  std::optional<double> bare_d2n, bare_fraction;
  cal->add_option("--bare-d2n", bare_d2n, "bare-interferometer d2n (nm^-2)");
  cal->add_option("--bare-fraction", bare_fraction, "bare share of the total dispersion");

  auto* fc = app.add_subcommand("fringecheck", "quantum/classical fringe-count ratio");
  add_common(fc, c);
  std::string fc_qconfig, fc_qpreset;
  fc->add_option("--quantum-config", fc_qconfig, "scenario for the quantum pattern");
  fc->add_option("--quantum-preset", fc_qpreset, "preset for the quantum pattern");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*sim) return cmd_simulate(c);
    if (*fitc) return cmd_fit(c, data_path);
    if (*mc) return cmd_montecarlo(c, trials, bins, trials_out);
    if (*sys) return cmd_systematics(c, axis, max_offset, points, target, qconfig, qpreset);
    if (*cal) return cmd_calibrate(c, bare_d2n, bare_fraction);
    if (*fc) return cmd_fringecheck(c, fc_qconfig, fc_qpreset);
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNotConverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitOther;
  }
  return kExitOther;
}
