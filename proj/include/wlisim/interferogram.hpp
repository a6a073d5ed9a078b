#pragma once

// Spectrogram synthesis: expected counts per spectrometer bin, Poisson
// sampling, dark counts, visibility loss, phase jitter and systematics, plus
// the two normalisation procedures (reference-arm spectra for classical
// data, opposite-path coincidences for N00N data).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "wlisim/phase_models.hpp"

namespace wlisim {

/// Spectrometer bins; the step is also the resolution bandwidth.
struct SpectralGrid {
  double start_nm = 1450.0;
  double stop_nm = 1650.0;
  double step_nm = 0.5;

  std::size_t size() const;
  double wavelength(std::size_t i) const { return start_nm + step_nm * static_cast<double>(i); }
  double center() const { return 0.5 * (start_nm + stop_nm); }

  /// Throws DomainError unless step > 0 and either start == stop (a single
  /// degenerate bin) or start < stop with at least 16 bins.
  void validate() const;
};

enum class SpectrumShape { flat, gaussian };

struct SourceSpectrum {
  SpectrumShape shape = SpectrumShape::flat;
  double center_nm = 1550.0;
  double fwhm_nm = 140.0;
  /// W/nm at the interferometer output. For the Gaussian shape this is the
  /// mean spectral intensity over the grid.
  double spectral_intensity = 125e-12;

  void validate() const;
};

struct Acquisition {
  SpectralGrid grid;
  SourceSpectrum source;
  double integration_time_s = 0.1;
};

struct NoiseSettings {
  bool poisson_enabled = false;
  double visibility = 1.0;
  double dark_counts_per_bin = 0.0;
  double phase_jitter_rms = 0.0;  // rad
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct SystematicsSettings {
  double spectrometer_offset_nm = 0.0;
  double arm_imbalance_m = 0.0;

  void validate() const;
};

struct PhotonBudget {
  std::vector<double> per_bin;
  double total = 0.0;
};

/// Interferogram labels are `grid` (already shifted by any spectrometer
/// offset). Counts are integers when Poisson sampling was enabled.
struct ClassicalSpectrogram {
  SpectralGrid grid;
  std::vector<double> counts;
  std::vector<double> ref_a;
  std::vector<double> ref_b;
};

struct CoincidenceSpectrogram {
  SpectralGrid grid;
  std::vector<double> noon_counts;
  std::vector<double> non_noon_counts;
};

struct NormalizedSpectrum {
  std::vector<double> wavelength_nm;
  std::vector<double> value;
  std::vector<double> std_error;
  std::vector<bool> valid;

  std::size_t valid_count() const;
};

struct ClassicalOptions {
  /// Wavelength the reference arm was balanced to and where the stabilisation
  /// holds the phase at `offset_phase`.
  double spp_wavelength_nm = 1560.493;
  /// Residual dispersion of the bare interferometer, as an extra d2n acting
  /// over the sample length.
  double interferometer_d2n = 0.0;
};

struct QuantumOptions {
  double pump_wavelength_nm = 780.246;
  /// Add the residual quartic third-order term to the N00N phase.
  bool quartic_residual = false;
  double interferometer_d2n = 0.0;
};

/// Expected photons per bin: I(lambda) * step * time / (h c / lambda).
PhotonBudget photon_budget(const SourceSpectrum& source, const SpectralGrid& grid,
                           double integration_time_s);

/// Source spectral intensity (W/nm) per bin.
std::vector<double> spectral_density(const SourceSpectrum& source, const SpectralGrid& grid);

/// Phase seen by bin wavelength `lambda` of a classical interferometer whose
/// reference arm is `geometry.reference_length_m + arm_imbalance_m`.
double classical_fringe_phase(const RefractiveIndexModel& model,
                              const InterferometerGeometry& geometry, double arm_imbalance_m,
                              const ClassicalOptions& options, double lambda_nm);

/// Two-photon phase seen by bin wavelength `lambda`.
double quantum_fringe_phase(const RefractiveIndexModel& model,
                            const InterferometerGeometry& geometry,
                            const QuantumOptions& options, double lambda_nm);

ClassicalSpectrogram synth_classical(const RefractiveIndexModel& model,
                                     const InterferometerGeometry& geometry,
                                     const Acquisition& acquisition, const NoiseSettings& noise,
                                     const SystematicsSettings& systematics,
                                     const ClassicalOptions& options);

CoincidenceSpectrogram synth_quantum(const RefractiveIndexModel& model,
                                     const InterferometerGeometry& geometry,
                                     const Acquisition& acquisition, const NoiseSettings& noise,
                                     const SystematicsSettings& systematics,
                                     const QuantumOptions& options);

/// counts / (ref_a + ref_b) with delta-method Poisson standard errors.
NormalizedSpectrum normalize_classical(const ClassicalSpectrogram& s);

/// noon / (2 non_noon) with delta-method Poisson standard errors.
NormalizedSpectrum normalize_quantum(const CoincidenceSpectrogram& s);

/// Sign changes of (value - mean) over valid bins; two crossings per fringe.
std::size_t count_zero_crossings(std::span<const double> values);
std::size_t count_zero_crossings(const NormalizedSpectrum& s);

/// Seed for an independent stream derived from (seed, index).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace wlisim
