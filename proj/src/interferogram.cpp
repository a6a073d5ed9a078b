#include "wlisim/interferogram.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "wlisim/errors.hpp"
#include "wlisim/units.hpp"

namespace wlisim {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double draw_poisson(std::mt19937_64& rng, double mean) {
  if (!(mean > 0.0)) return 0.0;
  std::poisson_distribution<long long> dist(mean);
  return static_cast<double>(dist(rng));
}

SpectralGrid shifted(const SpectralGrid& g, double offset_nm) {
  SpectralGrid out = g;
  out.start_nm += offset_nm;
  out.stop_nm += offset_nm;
  return out;
}

void validate_inputs(const Acquisition& acq, const NoiseSettings& noise,
                     const SystematicsSettings& sys) {
  acq.grid.validate();
  acq.source.validate();
  if (!(acq.integration_time_s > 0.0)) throw DomainError("integration time must be > 0");
  noise.validate();
  sys.validate();
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

std::size_t SpectralGrid::size() const {
  if (!(step_nm > 0.0) || stop_nm < start_nm) return 0;
  return static_cast<std::size_t>(std::floor((stop_nm - start_nm) / step_nm + 1e-9)) + 1;
}

void SpectralGrid::validate() const {
  if (!(step_nm > 0.0)) throw DomainError("grid step must be > 0");
  if (!std::isfinite(start_nm) || !std::isfinite(stop_nm)) {
    throw DomainError("grid bounds must be finite");
  }
  if (start_nm == stop_nm) return;
  if (!(start_nm < stop_nm)) throw DomainError("grid start must be < stop");
  if (size() < 16) throw DomainError("grid must have at least 16 bins");
}

void SourceSpectrum::validate() const {
  if (!(spectral_intensity > 0.0)) throw DomainError("spectral intensity must be > 0");
  if (shape == SpectrumShape::gaussian && !(fwhm_nm > 0.0)) {
    throw DomainError("gaussian FWHM must be > 0");
  }
}

void NoiseSettings::validate() const {
  if (!(visibility > 0.0 && visibility <= 1.0)) throw DomainError("visibility must be in (0, 1]");
  if (!(dark_counts_per_bin >= 0.0)) throw DomainError("dark counts must be >= 0");
  if (!(phase_jitter_rms >= 0.0)) throw DomainError("phase jitter must be >= 0");
}

void SystematicsSettings::validate() const {
  if (!(std::abs(spectrometer_offset_nm) <= 5.0)) {
    throw DomainError("|spectrometer offset| must be <= 5 nm");
  }
  if (!(std::abs(arm_imbalance_m) <= 1e-3)) throw DomainError("|arm imbalance| must be <= 1 mm");
}

std::size_t NormalizedSpectrum::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), true));
}

std::vector<double> spectral_density(const SourceSpectrum& source, const SpectralGrid& grid) {
  const std::size_t n = grid.size();
  std::vector<double> out(n, source.spectral_intensity);
  if (source.shape == SpectrumShape::flat || n == 0) return out;
  const double k = 4.0 * std::log(2.0) / (source.fwhm_nm * source.fwhm_nm);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = grid.wavelength(i) - source.center_nm;
    out[i] = std::exp(-k * d * d);
    sum += out[i];
  }
  const double scale = source.spectral_intensity * static_cast<double>(n) / sum;
  for (double& v : out) v *= scale;
  return out;
}

PhotonBudget photon_budget(const SourceSpectrum& source, const SpectralGrid& grid,
                           double integration_time_s) {
  PhotonBudget b;
  const auto density = spectral_density(source, grid);
  b.per_bin.resize(density.size());
  for (std::size_t i = 0; i < density.size(); ++i) {
    const double photon_energy = kPlanck * kSpeedOfLight / (grid.wavelength(i) * 1e-9);
    b.per_bin[i] = density[i] * grid.step_nm * integration_time_s / photon_energy;
    b.total += b.per_bin[i];
  }
  return b;
}

double classical_fringe_phase(const RefractiveIndexModel& model,
                              const InterferometerGeometry& geometry, double arm_imbalance_m,
                              const ClassicalOptions& options, double lambda_nm) {
  const double lock = options.spp_wavelength_nm;
  // The stabilisation holds the phase at the lock wavelength to offset_phase.
  // Extended precision keeps the difference of two large phases accurate.
  const long double ls = geometry.sample_length_m;
  const long double lr = static_cast<long double>(geometry.reference_length_m) + arm_imbalance_m;
  const long double path = index_extended(model, lambda_nm) * ls - lr;
  const long double path_lock = index_extended(model, lock) * ls - lr;
  double phi = static_cast<double>(2.0L * kPi * 1e9L *
                                   (path / lambda_nm - path_lock / lock)) +
               geometry.offset_phase;
  if (options.interferometer_d2n != 0.0) {
    const double d = lambda_nm - lock;
    phi += kTwoPi * geometry.sample_length_m * kNmPerMetre * 0.5 * options.interferometer_d2n *
           d * d / lambda_nm;
  }
  return phi;
}

double quantum_fringe_phase(const RefractiveIndexModel& model,
                            const InterferometerGeometry& geometry,
                            const QuantumOptions& options, double lambda_nm) {
  // An arm imbalance only adds -2 pi dL / lambda_p, which the lock removes.
  const double degenerate = 2.0 * options.pump_wavelength_nm;
  DispersionSample s = evaluate(model, degenerate);
  s.d2n += options.interferometer_d2n;
  return noon_phase(geometry, s, lambda_nm - degenerate, options.quartic_residual);
}

ClassicalSpectrogram synth_classical(const RefractiveIndexModel& model,
                                     const InterferometerGeometry& geometry,
                                     const Acquisition& acquisition, const NoiseSettings& noise,
                                     const SystematicsSettings& systematics,
                                     const ClassicalOptions& options) {
  validate_inputs(acquisition, noise, systematics);
  validate(geometry);
  const auto& grid = acquisition.grid;
  const auto budget = photon_budget(acquisition.source, grid, acquisition.integration_time_s);
  const std::size_t n = grid.size();

  ClassicalSpectrogram out;
  out.grid = shifted(grid, systematics.spectrometer_offset_nm);
  out.counts.resize(n);
  out.ref_a.resize(n);
  out.ref_b.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double lambda = grid.wavelength(i);
    std::mt19937_64 rng(derive_seed(noise.rng_seed, i));
    double phi = classical_fringe_phase(model, geometry, systematics.arm_imbalance_m, options,
                                        lambda);
    if (noise.phase_jitter_rms > 0.0) {
      phi += std::normal_distribution<double>(0.0, noise.phase_jitter_rms)(rng);
    }
    const double photons = budget.per_bin[i];
    const double mean_counts =
        0.5 * photons * (1.0 + noise.visibility * std::cos(phi)) + noise.dark_counts_per_bin;
    const double mean_ref = 0.5 * photons + noise.dark_counts_per_bin;
    if (noise.poisson_enabled) {
      out.counts[i] = draw_poisson(rng, mean_counts);
      out.ref_a[i] = draw_poisson(rng, mean_ref);
      out.ref_b[i] = draw_poisson(rng, mean_ref);
    } else {
      out.counts[i] = mean_counts;
      out.ref_a[i] = mean_ref;
      out.ref_b[i] = mean_ref;
    }
  }
  return out;
}

CoincidenceSpectrogram synth_quantum(const RefractiveIndexModel& model,
                                     const InterferometerGeometry& geometry,
                                     const Acquisition& acquisition, const NoiseSettings& noise,
                                     const SystematicsSettings& systematics,
                                     const QuantumOptions& options) {
  validate_inputs(acquisition, noise, systematics);
  validate(geometry);
  const auto& grid = acquisition.grid;
  const auto budget = photon_budget(acquisition.source, grid, acquisition.integration_time_s);
  const std::size_t n = grid.size();

  CoincidenceSpectrogram out;
  out.grid = shifted(grid, systematics.spectrometer_offset_nm);
  out.noon_counts.resize(n);
  out.non_noon_counts.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double lambda = grid.wavelength(i);
    std::mt19937_64 rng(derive_seed(noise.rng_seed, i));
    double phi = quantum_fringe_phase(model, geometry, options, lambda);
    if (noise.phase_jitter_rms > 0.0) {
      phi += std::normal_distribution<double>(0.0, noise.phase_jitter_rms)(rng);
    }
    // photons/2 pairs, half post-selected as N00N, half on opposite paths.
    const double channel_pairs = 0.25 * budget.per_bin[i];
    const double mean_noon = channel_pairs * (1.0 + noise.visibility * std::cos(phi)) +
                             noise.dark_counts_per_bin;
    const double mean_non = channel_pairs + noise.dark_counts_per_bin;
    if (noise.poisson_enabled) {
      out.noon_counts[i] = draw_poisson(rng, mean_noon);
      out.non_noon_counts[i] = draw_poisson(rng, mean_non);
    } else {
      out.noon_counts[i] = mean_noon;
      out.non_noon_counts[i] = mean_non;
    }
  }
  return out;
}

NormalizedSpectrum normalize_classical(const ClassicalSpectrogram& s) {
  const std::size_t n = s.counts.size();
  if (s.ref_a.size() != n || s.ref_b.size() != n) {
    throw FormatError("classical spectrogram columns have different lengths");
  }
  NormalizedSpectrum out;
  out.wavelength_nm.resize(n);
  out.value.assign(n, 0.0);
  out.std_error.assign(n, 0.0);
  out.valid.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    out.wavelength_nm[i] = s.grid.wavelength(i);
    const double ref = s.ref_a[i] + s.ref_b[i];
    if (!(ref > 0.0)) continue;
    const double c = s.counts[i];
    out.value[i] = c / ref;
    // var(c/R) = c/R^2 + c^2/R^3 for independent Poisson c and R.
    out.std_error[i] = std::sqrt(std::max(c, 1.0) + c * c / ref) / ref;
    out.valid[i] = true;
  }
  return out;
}

NormalizedSpectrum normalize_quantum(const CoincidenceSpectrogram& s) {
  const std::size_t n = s.noon_counts.size();
  if (s.non_noon_counts.size() != n) {
    throw FormatError("coincidence spectrogram columns have different lengths");
  }
  NormalizedSpectrum out;
  out.wavelength_nm.resize(n);
  out.value.assign(n, 0.0);
  out.std_error.assign(n, 0.0);
  out.valid.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    out.wavelength_nm[i] = s.grid.wavelength(i);
    const double m = s.non_noon_counts[i];
    if (!(m > 0.0)) continue;
    const double c = s.noon_counts[i];
    out.value[i] = c / (2.0 * m);
    out.std_error[i] = std::sqrt(std::max(c, 1.0) + c * c / m) / (2.0 * m);
    out.valid[i] = true;
  }
  return out;
}

std::size_t count_zero_crossings(std::span<const double> values) {
  if (values.size() < 2) return 0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  std::size_t crossings = 0;
  int last_sign = 0;
  for (double v : values) {
    const double d = v - mean;
    const int sign = (d > 0.0) - (d < 0.0);
    if (sign == 0) continue;
    if (last_sign != 0 && sign != last_sign) ++crossings;
    last_sign = sign;
  }
  return crossings;
}

std::size_t count_zero_crossings(const NormalizedSpectrum& s) {
  std::vector<double> v;
  v.reserve(s.value.size());
  for (std::size_t i = 0; i < s.value.size(); ++i) {
    if (s.valid[i]) v.push_back(s.value[i]);
  }
  return count_zero_crossings(v);
}

}  // namespace wlisim
