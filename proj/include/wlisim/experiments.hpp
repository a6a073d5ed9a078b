#pragma once

// Studies built from synthesis + fitting: Monte Carlo precision, systematic
// bias scans, fringe counting, bare-interferometer calibration.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "wlisim/fitting.hpp"
#include "wlisim/interferogram.hpp"
#include "wlisim/phase_models.hpp"

namespace wlisim {

struct FitSettings {
  bool weighted = true;
  bool fit_offset_phase = false;
  bool fit_visibility = false;
  bool absolute_sigma = false;
  std::optional<ClassicalFitParams> classical_init;
  std::optional<QuantumFitParams> quantum_init;
  SolverConfig solver;
};

/// Everything needed to synthesise and analyse one measurement.
struct Scenario {
  RefractiveIndexModel truth = ground_truth_model();
  InterferometerGeometry geometry;
  /// Set L_r to the stationary-phase length at spp_wavelength_nm (before
  /// any arm imbalance). Otherwise geometry.reference_length_m is used as is.
  bool auto_spp = true;
  double spp_wavelength_nm = 1560.493;
  /// Residual d2n of the bare interferometer, acting over L_s.
  double interferometer_d2n = 0.0;
  Acquisition acquisition;
  double pump_wavelength_nm = 780.246;
  bool quartic_residual = false;
  NoiseSettings noise;
  SystematicsSettings systematics;
  FitModel method = FitModel::classical;
  FitSettings fit;
  std::uint64_t master_seed = 1;

  void validate() const;
};

using Spectrogram = std::variant<ClassicalSpectrogram, CoincidenceSpectrogram>;

bool is_quantum(FitModel m);
InterferometerGeometry effective_geometry(const Scenario& s);
ClassicalOptions classical_options(const Scenario& s);
QuantumOptions quantum_options(const Scenario& s);

/// Synthesises the spectrogram `s.method` calls for, using `seed`.
Spectrogram simulate(const Scenario& s, std::uint64_t seed);
NormalizedSpectrum normalize(const Spectrogram& g);
/// Fit options implied by the scenario, including the per-bin contrast left
/// after dark counts dilute the fringes.
FitOptions fit_options(const Scenario& s);
FitResult fit(const Scenario& s, const NormalizedSpectrum& data);

/// Wavelength at which a method reports D: the stationary point or lambda*.
double reference_wavelength(const Scenario& s, FitModel method);
/// True D of the sample (without the bare interferometer) at the method's
/// reference wavelength.
double true_dispersion(const Scenario& s, FitModel method);

struct Histogram {
  std::vector<double> edges;  // counts.size() + 1
  std::vector<std::size_t> counts;
};

/// Freedman-Diaconis binning unless `bins` is given.
Histogram make_histogram(const std::vector<double>& values, std::optional<int> bins = {});

struct TrialResult {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double D = 0.0;
  double D_sigma = 0.0;
  bool converged = false;
};

struct MonteCarloReport {
  FitModel method = FitModel::classical;
  std::vector<TrialResult> trials;
  double truth_D = 0.0;
  double mean_D = 0.0;
  double std_D = 0.0;
  double mean_D_sigma = 0.0;
  Histogram histogram;
  double n_photons_per_trial = 0.0;
  std::size_t failed_trials = 0;
  bool usable = true;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  bool normality_ok = true;  // |skew| and |excess kurtosis| within 0.5
};

struct MonteCarloOptions {
  std::size_t n_trials = 100;
  unsigned threads = 0;  // 0: hardware concurrency
  std::optional<int> histogram_bins;
};

/// Trial k synthesises with derive_seed(master_seed, k) and fits with
/// `method`; results do not depend on the thread count.
MonteCarloReport run_montecarlo(const Scenario& s, FitModel method,
                                const MonteCarloOptions& options);

struct PrecisionBudget {
  FitModel method = FitModel::classical;
  double N = 0.0;
  double delta_D_sqrtN = 0.0;
};

PrecisionBudget precision_per_photon(const MonteCarloReport& report);
/// sigma_D * sqrt(N).
double precision_per_photon(double sigma_D, double n_photons);

/// Standard error of the difference of two n-trial means.
double expected_mean_difference(double sigma_a, double sigma_b, std::size_t n_trials);

enum class SystematicAxis { spectrometer_offset, arm_imbalance };
std::string to_string(SystematicAxis a);
SystematicAxis systematic_axis_from_string(const std::string& s);

struct SystematicsPoint {
  double offset = 0.0;  // nm or m
  double bias_classical = 0.0;
  double bias_quantum = 0.0;
  bool classical_ok = true;
  bool quantum_ok = true;
};

struct SystematicsReport {
  SystematicAxis axis = SystematicAxis::spectrometer_offset;
  std::vector<SystematicsPoint> points;
};

/// Noiseless synthesis with each offset applied, fitted by the full
/// classical model (on `classical`) and the quantum model (on `quantum`).
SystematicsReport systematics_scan(const Scenario& classical, const Scenario& quantum,
                                   SystematicAxis axis, const std::vector<double>& offsets);

/// Noiseless D bias of one method at one systematic offset.
double systematic_bias(const Scenario& s, FitModel method, SystematicAxis axis, double offset);

/// Smallest offset in [0, max_offset] whose |bias| reaches `target` by
/// bisection, or nullopt when |bias(max_offset)| stays below it.
std::optional<double> find_offset_for_bias(const Scenario& s, FitModel method,
                                           SystematicAxis axis, double target,
                                           double max_offset, double rel_tol = 1e-4);

struct FringeReport {
  std::size_t classical_crossings = 0;
  std::size_t quantum_crossings = 0;
  double ratio = 0.0;  // quantum / classical
  double classical_excursion = 0.0;  // max - min of the phase over the grid, rad
  double quantum_excursion = 0.0;
};

/// Phase excursions and zero-crossing counts of noiseless patterns. Throws
/// DomainError when the classical pattern has fewer than 4 fringes.
FringeReport fringe_doubling_check(const Scenario& classical, const Scenario& quantum);

double classical_phase_excursion(const Scenario& s);
double quantum_phase_excursion(const Scenario& s);

struct CalibrationReport {
  FitResult bare_fit;
  FitResult loaded_fit;
  CalibratedDispersion corrected;
  double truth_D = 0.0;
};

/// The bare scenario: the loaded one with a dispersion-free sample.
Scenario make_bare_scenario(const Scenario& loaded);

/// Quantum fits of both scenarios and subtraction of the bare result.
/// Throws DomainError when the scenarios differ in pump, grid or noise and
/// ConvergenceError when a fit does not converge.
CalibrationReport calibration_workflow(const Scenario& bare, const Scenario& loaded);

/// Raw contrast (max - min) / (max + min) of the noiseless N00N counts in the
/// bin nearest `wavelength_nm` while the offset phase is swept over 2 pi.
double raw_visibility(const Scenario& s, double wavelength_nm = 1550.0);

/// Dark counts per bin giving the requested raw visibility, by bisection.
double calibrate_dark_counts(const Scenario& s, double target_raw_visibility,
                             double wavelength_nm = 1550.0);

}  // namespace wlisim
