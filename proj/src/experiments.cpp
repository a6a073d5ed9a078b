#include "wlisim/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>
#include <utility>

#include "wlisim/errors.hpp"
#include "wlisim/units.hpp"

namespace wlisim {
namespace {

Scenario noiseless(Scenario s) {
  s.noise.poisson_enabled = false;
  s.noise.phase_jitter_rms = 0.0;
  return s;
}

Scenario with_method(Scenario s, FitModel m) {
  s.method = m;
  return s;
}

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double f = pos - static_cast<double>(i);
  return i + 1 < v.size() ? v[i] * (1.0 - f) + v[i + 1] * f : v[i];
}

}  // namespace

void Scenario::validate() const {
  wlisim::validate(truth);
  wlisim::validate(geometry);
  acquisition.grid.validate();
  acquisition.source.validate();
  if (!(acquisition.integration_time_s > 0.0)) throw DomainError("integration time must be > 0");
  noise.validate();
  systematics.validate();
  if (!(pump_wavelength_nm > 0.0)) throw DomainError("pump wavelength must be > 0");
  if (!std::isfinite(interferometer_d2n)) throw DomainError("interferometer d2n must be finite");
  evaluate(truth, spp_wavelength_nm);
}

bool is_quantum(FitModel m) { return m == FitModel::quantum; }

InterferometerGeometry effective_geometry(const Scenario& s) {
  InterferometerGeometry g = s.geometry;
  if (s.auto_spp) {
    g.reference_length_m =
        stationary_phase_point_length(s.truth, s.spp_wavelength_nm, g.sample_length_m);
  }
  return g;
}

ClassicalOptions classical_options(const Scenario& s) {
  ClassicalOptions o;
  o.spp_wavelength_nm = s.spp_wavelength_nm;
  o.interferometer_d2n = s.interferometer_d2n;
  return o;
}

QuantumOptions quantum_options(const Scenario& s) {
  QuantumOptions o;
  o.pump_wavelength_nm = s.pump_wavelength_nm;
  o.quartic_residual = s.quartic_residual;
  o.interferometer_d2n = s.interferometer_d2n;
  return o;
}

Spectrogram simulate(const Scenario& s, std::uint64_t seed) {
  NoiseSettings noise = s.noise;
  noise.rng_seed = seed;
  const auto geometry = effective_geometry(s);
  if (is_quantum(s.method)) {
    return synth_quantum(s.truth, geometry, s.acquisition, noise, s.systematics,
                         quantum_options(s));
  }
  return synth_classical(s.truth, geometry, s.acquisition, noise, s.systematics,
                         classical_options(s));
}

NormalizedSpectrum normalize(const Spectrogram& g) {
  return std::visit(
      [](const auto& x) -> NormalizedSpectrum {
        if constexpr (std::is_same_v<std::decay_t<decltype(x)>, ClassicalSpectrogram>) {
          return normalize_classical(x);
        } else {
          return normalize_quantum(x);
        }
      },
      g);
}

FitOptions fit_options(const Scenario& s) {
  FitOptions o;
  o.weighted = s.fit.weighted;
  o.fit_offset_phase = s.fit.fit_offset_phase;
  o.fit_visibility = s.fit.fit_visibility;
  o.absolute_sigma = s.fit.absolute_sigma;
  o.solver = s.fit.solver;
  o.visibility = s.noise.visibility;
  const double dark = s.noise.dark_counts_per_bin;
  if (dark > 0.0) {
    const auto budget = photon_budget(s.acquisition.source, s.acquisition.grid,
                                      s.acquisition.integration_time_s);
    o.bin_visibility.resize(budget.per_bin.size());
    for (std::size_t i = 0; i < budget.per_bin.size(); ++i) {
      // Classical: E/2 (1 + V cos) + d over E + 2d. Quantum: a (1 + V cos) + d
      // over 2 (a + d), a = E/4.
      const double e = budget.per_bin[i];
      o.bin_visibility[i] = is_quantum(s.method) ? s.noise.visibility * (0.25 * e) / (0.25 * e + dark)
                                                 : s.noise.visibility * e / (e + 2.0 * dark);
    }
  }
  return o;
}

FitResult fit(const Scenario& s, const NormalizedSpectrum& data) {
  const auto opt = fit_options(s);
  const double ls = s.geometry.sample_length_m;
  const double phi = s.geometry.offset_phase;
  switch (s.method) {
    case FitModel::classical:
      return fit_classical(data, ls, phi, s.fit.classical_init, opt);
    case FitModel::classical_second_order:
      return fit_classical_second_order(data, ls, phi, s.fit.classical_init, opt);
    case FitModel::quantum:
      return fit_quantum(data, ls, s.pump_wavelength_nm, phi, s.fit.quantum_init, opt);
  }
  throw DomainError("unknown fit model");
}

double reference_wavelength(const Scenario& s, FitModel method) {
  return is_quantum(method) ? 2.0 * s.pump_wavelength_nm : s.spp_wavelength_nm;
}

double true_dispersion(const Scenario& s, FitModel method) {
  const double l = reference_wavelength(s, method);
  return dispersion_coefficient(evaluate(s.truth, l).d2n, l);
}

Histogram make_histogram(const std::vector<double>& values, std::optional<int> bins) {
  Histogram h;
  if (values.empty()) return h;
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  int n = 1;
  if (bins) {
    n = std::max(*bins, 1);
  } else if (values.size() > 1 && hi > lo) {
    const double iqr = percentile(values, 0.75) - percentile(values, 0.25);
    const double width = 2.0 * iqr / std::cbrt(static_cast<double>(values.size()));
    n = width > 0.0 ? static_cast<int>(std::ceil((hi - lo) / width)) : 1;
    n = std::clamp(n, 1, 1000);
  }
  if (!(hi > lo)) n = 1;
  const double span = hi > lo ? hi - lo : 1.0;
  const double left = hi > lo ? lo : lo - 0.5;
  h.edges.resize(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) h.edges[static_cast<std::size_t>(i)] = left + span * i / n;
  h.counts.assign(static_cast<std::size_t>(n), 0);
  for (double v : values) {
    auto k = static_cast<long>(std::floor((v - left) / span * n));
    k = std::clamp<long>(k, 0, n - 1);
    ++h.counts[static_cast<std::size_t>(k)];
  }
  return h;
}

MonteCarloReport run_montecarlo(const Scenario& s, FitModel method,
                                const MonteCarloOptions& options) {
  if (options.n_trials < 2) throw DomainError("need at least 2 trials");
  s.validate();
  const Scenario sc = with_method(s, method);
  MonteCarloReport rep;
  rep.method = method;
  rep.truth_D = true_dispersion(sc, method);
  rep.n_photons_per_trial =
      photon_budget(sc.acquisition.source, sc.acquisition.grid, sc.acquisition.integration_time_s)
          .total;
  rep.trials.resize(options.n_trials);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < options.n_trials; k = next++) {
      TrialResult t;
      t.trial = k;
      t.seed = derive_seed(sc.master_seed, k);
      try {
        const auto r = fit(sc, normalize(simulate(sc, t.seed)));
        t.D = r.D;
        t.D_sigma = r.D_sigma;
        t.converged = r.converged && !r.has_flag("fringe_count_mismatch");
      } catch (const DomainError&) {
      } catch (const RankDeficientError&) {
      }
      rep.trials[k] = t;
    }
  };
  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(options.n_trials));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<double> d, sig;
  for (const auto& t : rep.trials) {
    if (t.converged) {
      d.push_back(t.D);
      sig.push_back(t.D_sigma);
    } else {
      ++rep.failed_trials;
    }
  }
  rep.usable = static_cast<double>(rep.failed_trials) <= 0.1 * static_cast<double>(options.n_trials);
  if (!d.empty()) {
    const double n = static_cast<double>(d.size());
    rep.mean_D = std::accumulate(d.begin(), d.end(), 0.0) / n;
    rep.mean_D_sigma = std::accumulate(sig.begin(), sig.end(), 0.0) / n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : d) {
      const double e = v - rep.mean_D;
      m2 += e * e;
      m3 += e * e * e;
      m4 += e * e * e * e;
    }
    if (d.size() >= 2) rep.std_D = std::sqrt(m2 / (n - 1.0));
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (m2 > 0.0) {
      rep.skewness = m3 / std::pow(m2, 1.5);
      rep.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    }
    rep.normality_ok = std::abs(rep.skewness) <= 0.5 && std::abs(rep.excess_kurtosis) <= 0.5;
  }
  rep.histogram = make_histogram(d, options.histogram_bins);
  return rep;
}

PrecisionBudget precision_per_photon(const MonteCarloReport& report) {
  std::size_t converged = 0;
  for (const auto& t : report.trials) converged += t.converged ? 1 : 0;
  if (converged < 2) throw DomainError("need at least 2 converged trials");
  if (!(report.n_photons_per_trial > 0.0)) throw DomainError("photon number must be > 0");
  return {report.method, report.n_photons_per_trial,
          precision_per_photon(report.std_D, report.n_photons_per_trial)};
}

double precision_per_photon(double sigma_D, double n_photons) {
  if (!(n_photons > 0.0)) throw DomainError("photon number must be > 0");
  return sigma_D * std::sqrt(n_photons);
}

double expected_mean_difference(double sigma_a, double sigma_b, std::size_t n_trials) {
  if (n_trials == 0 || sigma_a < 0.0 || sigma_b < 0.0) {
    throw DomainError("need non-negative sigmas and at least one trial");
  }
  return std::sqrt((sigma_a * sigma_a + sigma_b * sigma_b) / static_cast<double>(n_trials));
}

std::string to_string(SystematicAxis a) {
  return a == SystematicAxis::spectrometer_offset ? "spectrometer-offset" : "arm-imbalance";
}

SystematicAxis systematic_axis_from_string(const std::string& s) {
  if (s == "spectrometer-offset" || s == "spectrometer_offset") {
    return SystematicAxis::spectrometer_offset;
  }
  if (s == "arm-imbalance" || s == "arm_imbalance") return SystematicAxis::arm_imbalance;
  throw DomainError("unknown systematic axis '" + s + "'");
}

double systematic_bias(const Scenario& s, FitModel method, SystematicAxis axis, double offset) {
  Scenario sc = with_method(noiseless(s), method);
  if (axis == SystematicAxis::spectrometer_offset) {
    sc.systematics.spectrometer_offset_nm = offset;
  } else {
    sc.systematics.arm_imbalance_m = offset;
  }
  const auto r = fit(sc, normalize(simulate(sc, sc.noise.rng_seed)));
  if (!r.converged || r.has_flag("fringe_count_mismatch")) {
    throw ConvergenceError("fit failed at systematic offset " + std::to_string(offset));
  }
  return r.D - true_dispersion(sc, method);
}

SystematicsReport systematics_scan(const Scenario& classical, const Scenario& quantum,
                                   SystematicAxis axis, const std::vector<double>& offsets) {
  if (std::find(offsets.begin(), offsets.end(), 0.0) == offsets.end()) {
    throw DomainError("systematics scan offsets must include 0");
  }
  SystematicsReport rep;
  rep.axis = axis;
  for (double off : offsets) {
    SystematicsPoint p;
    p.offset = off;
    try {
      p.bias_classical = systematic_bias(classical, FitModel::classical, axis, off);
    } catch (const std::exception&) {
      p.classical_ok = false;
    }
    try {
      p.bias_quantum = systematic_bias(quantum, FitModel::quantum, axis, off);
    } catch (const std::exception&) {
      p.quantum_ok = false;
    }
    rep.points.push_back(p);
  }
  return rep;
}

std::optional<double> find_offset_for_bias(const Scenario& s, FitModel method,
                                           SystematicAxis axis, double target,
                                           double max_offset, double rel_tol) {
  auto excess = [&](double off) { return std::abs(systematic_bias(s, method, axis, off)) - target; };
  if (excess(max_offset) < 0.0) return std::nullopt;
  double lo = 0.0, hi = max_offset;
  if (excess(lo) >= 0.0) return 0.0;
  while (hi - lo > rel_tol * std::abs(max_offset)) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) >= 0.0 ? hi : lo) = mid;
  }
  return hi;
}

double classical_phase_excursion(const Scenario& s) {
  const auto g = effective_geometry(s);
  const auto opt = classical_options(s);
  const auto& grid = s.acquisition.grid;
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double phi = classical_fringe_phase(s.truth, g, s.systematics.arm_imbalance_m, opt,
                                              grid.wavelength(i));
    lo = std::min(lo, phi);
    hi = std::max(hi, phi);
  }
  return hi - lo;
}

double quantum_phase_excursion(const Scenario& s) {
  const auto g = effective_geometry(s);
  const auto opt = quantum_options(s);
  const auto& grid = s.acquisition.grid;
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double phi = quantum_fringe_phase(s.truth, g, opt, grid.wavelength(i));
    lo = std::min(lo, phi);
    hi = std::max(hi, phi);
  }
  return hi - lo;
}

FringeReport fringe_doubling_check(const Scenario& classical, const Scenario& quantum) {
  const Scenario c = with_method(noiseless(classical), FitModel::classical);
  const Scenario q = with_method(noiseless(quantum), FitModel::quantum);
  FringeReport r;
  r.classical_crossings = count_zero_crossings(normalize(simulate(c, 0)));
  r.quantum_crossings = count_zero_crossings(normalize(simulate(q, 0)));
  if (r.classical_crossings < 8) {
    throw DomainError("classical pattern has fewer than 4 fringes");
  }
  r.ratio = static_cast<double>(r.quantum_crossings) / static_cast<double>(r.classical_crossings);
  r.classical_excursion = classical_phase_excursion(c);
  r.quantum_excursion = quantum_phase_excursion(q);
  return r;
}

Scenario make_bare_scenario(const Scenario& loaded) {
  Scenario bare = loaded;
  const double l = 2.0 * loaded.pump_wavelength_nm;
  const auto s = evaluate(loaded.truth, l);
  bare.truth = TaylorModel{l, s.n, s.dn, 0.0, 0.0};
  return bare;
}

CalibrationReport calibration_workflow(const Scenario& bare, const Scenario& loaded) {
  const auto& gb = bare.acquisition.grid;
  const auto& gl = loaded.acquisition.grid;
  if (bare.pump_wavelength_nm != loaded.pump_wavelength_nm) {
    throw DomainError("bare and loaded scenarios use different pump wavelengths");
  }
  if (gb.start_nm != gl.start_nm || gb.stop_nm != gl.stop_nm || gb.step_nm != gl.step_nm) {
    throw DomainError("bare and loaded scenarios use different grids");
  }
  const auto& nb = bare.noise;
  const auto& nl = loaded.noise;
  if (nb.poisson_enabled != nl.poisson_enabled || nb.visibility != nl.visibility ||
      nb.dark_counts_per_bin != nl.dark_counts_per_bin ||
      nb.phase_jitter_rms != nl.phase_jitter_rms) {
    throw DomainError("bare and loaded scenarios use different noise settings");
  }
  const Scenario b = with_method(bare, FitModel::quantum);
  const Scenario l = with_method(loaded, FitModel::quantum);
  CalibrationReport rep;
  rep.bare_fit = fit(b, normalize(simulate(b, derive_seed(b.noise.rng_seed, 1))));
  if (!rep.bare_fit.converged) throw ConvergenceError("bare-interferometer fit did not converge");
  rep.loaded_fit = fit(l, normalize(simulate(l, l.noise.rng_seed)));
  if (!rep.loaded_fit.converged) throw ConvergenceError("loaded fit did not converge");
  const double lambda = 2.0 * l.pump_wavelength_nm;
  const double ls = l.geometry.sample_length_m;
  rep.corrected = subtract_calibration(
      {rep.loaded_fit.D, rep.loaded_fit.D_sigma, lambda, ls},
      {rep.bare_fit.D, rep.bare_fit.D_sigma, 2.0 * b.pump_wavelength_nm,
       b.geometry.sample_length_m},
      ls);
  rep.truth_D = true_dispersion(l, FitModel::quantum);
  return rep;
}

namespace {

// Noiseless NOON extremes at the bin nearest wavelength_nm, found by sweeping
// the offset phase through one period.
std::pair<double, double> noon_extremes(const Scenario& s, double wavelength_nm) {
  Scenario q = with_method(noiseless(s), FitModel::quantum);
  const auto& grid = q.acquisition.grid;
  const double label0 = grid.start_nm + q.systematics.spectrometer_offset_nm;
  const double pos = std::round((wavelength_nm - label0) / grid.step_nm);
  const auto bin = static_cast<std::size_t>(
      std::clamp(pos, 0.0, static_cast<double>(grid.size() - 1)));
  double lo = INFINITY, hi = -INFINITY;
  constexpr int kSteps = 64;
  const double base = q.geometry.offset_phase;
  for (int k = 0; k < kSteps; ++k) {
    q.geometry.offset_phase = base + kTwoPi * k / kSteps;
    const auto g = std::get<CoincidenceSpectrogram>(simulate(q, 0));
    lo = std::min(lo, g.noon_counts[bin]);
    hi = std::max(hi, g.noon_counts[bin]);
  }
  return {lo, hi};
}

}  // namespace

double raw_visibility(const Scenario& s, double wavelength_nm) {
  const auto [lo, hi] = noon_extremes(s, wavelength_nm);
  return hi + lo > 0.0 ? (hi - lo) / (hi + lo) : 0.0;
}

double calibrate_dark_counts(const Scenario& s, double target, double wavelength_nm) {
  if (!(target > 0.0 && target < 1.0)) throw DomainError("target visibility must be in (0, 1)");
  // Dark counts add the same amount to both extremes, so the raw visibility
  // (hi - lo) / (hi + lo + 2d) can be inverted directly.
  Scenario q = s;
  q.noise.dark_counts_per_bin = 0.0;
  const auto [lo, hi] = noon_extremes(q, wavelength_nm);
  if (!(hi + lo > 0.0) || (hi - lo) / (hi + lo) < target) {
    throw DomainError("target exceeds the dark-count-free visibility");
  }
  return 0.5 * ((hi - lo) / target - (hi + lo));
}

}  // namespace wlisim
