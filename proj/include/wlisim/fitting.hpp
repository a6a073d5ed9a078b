#pragma once

// Dispersion recovery from normalised spectrograms.
//
// Classical model: 1/2 [1 + V cos phi], phi = 2 pi L_s [d2n dl^2 / 2 + d3n dl^3 / 6] / lambda
// + phi_off, dl = lambda - lambda0, free (lambda0, d2n, d3n).
// Quantum model: phi = pi L_s d2n dl^2 / (lambda*/2 + dl) + phi_off around
// lambda* = 2 lambda_p, free d2n only.

#include <optional>
#include <string>
#include <vector>

#include "wlisim/interferogram.hpp"
#include "wlisim/least_squares.hpp"

namespace wlisim {

struct ClassicalFitParams {
  double lambda0_nm = 1560.0;
  double d2n = 0.0;
  double d3n = 0.0;
};

struct QuantumFitParams {
  double d2n = 0.0;
};

enum class FitModel { classical, classical_second_order, quantum };

std::string to_string(FitModel m);
/// Accepts "classical", "classical_2nd_order" / "classical-second-order", "quantum".
FitModel fit_model_from_string(const std::string& s);

struct FitOptions {
  bool weighted = true;
  bool fit_offset_phase = false;  // nuisance mode
  bool fit_visibility = false;    // nuisance mode
  double visibility = 1.0;
  /// Optional per-bin fringe contrast (same length as the spectrum), e.g.
  /// when dark counts dilute the contrast unevenly across the envelope.
  std::vector<double> bin_visibility;
  /// Covariance from the given standard errors alone, without rescaling by
  /// the residual variance. Meaningful only for weighted fits.
  bool absolute_sigma = false;
  SolverConfig solver;
};

struct FitResult {
  FitModel model = FitModel::classical;
  std::vector<std::string> names;  // fitted parameters, in order
  std::vector<double> params;      // physical units
  std::vector<double> sigma;

  double reference_wavelength_nm = 0.0;  // fitted lambda0 or lambda*
  double d2n = 0.0;
  double d2n_sigma = 0.0;
  double d3n = 0.0;
  double offset_phase = 0.0;
  double visibility = 1.0;
  double D = 0.0;  // ps/(nm km)
  double D_sigma = 0.0;

  double residual_rms = 0.0;  // of value - model over the fitted bins
  double chi2_per_dof = 0.0;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
  std::size_t bins_used = 0;
  std::vector<std::string> flags;  // e.g. stationary_point_outside_span

  bool has_flag(const std::string& f) const;
};

/// Three-parameter classical fit. Without `init` the start point is derived
/// from the fringe spacing in the data.
FitResult fit_classical(const NormalizedSpectrum& data, double sample_length_m,
                        double offset_phase, const std::optional<ClassicalFitParams>& init,
                        const FitOptions& options = {});

/// Classical model with d3n frozen at zero.
FitResult fit_classical_second_order(const NormalizedSpectrum& data, double sample_length_m,
                                     double offset_phase,
                                     const std::optional<ClassicalFitParams>& init,
                                     const FitOptions& options = {});

FitResult fit_quantum(const NormalizedSpectrum& data, double sample_length_m, double pump_nm,
                      double offset_phase, const std::optional<QuantumFitParams>& init,
                      const FitOptions& options = {});

/// Model value 1/2 [1 + V cos phi] of a classical fit at `lambda_nm`.
double classical_model_value(const ClassicalFitParams& p, double sample_length_m,
                             double offset_phase, double visibility, double lambda_nm);
double quantum_model_value(const QuantumFitParams& p, double sample_length_m, double pump_nm,
                           double offset_phase, double visibility, double lambda_nm);

/// Fixed (non-fitted) inputs of a model, for evaluating it outside a fit.
struct ModelSetup {
  FitModel model = FitModel::classical;
  double sample_length_m = 1.0;
  double pump_nm = 780.246;  // quantum only
  double offset_phase = 0.0;
  double visibility = 1.0;
  bool fit_offset_phase = false;
  bool fit_visibility = false;
};

/// Analytic gradient of the model value at `lambda_nm` with respect to
/// `params`, which are in physical units and ordered as FitResult::names.
std::vector<double> model_gradient(const ModelSetup& setup, const std::vector<double>& params,
                                   double lambda_nm);
/// Model value for the same parameter vector.
double model_value(const ModelSetup& setup, const std::vector<double>& params, double lambda_nm);

/// A dispersion measurement made with fit length `fit_length_m` at
/// `wavelength_nm`.
struct DispersionMeasurement {
  double D = 0.0;
  double D_sigma = 0.0;
  double wavelength_nm = 0.0;
  double fit_length_m = 1.0;
};

struct CalibratedDispersion {
  double D = 0.0;
  double D_sigma = 0.0;
  double bare_fraction = 0.0;  // bare phase / total phase
};

/// Removes the bare-interferometer contribution (phase-additive) and
/// expresses the remainder per metre of sample. Throws DomainError when the
/// two measurements were made at different wavelengths.
CalibratedDispersion subtract_calibration(const DispersionMeasurement& total,
                                          const DispersionMeasurement& bare,
                                          double sample_length_m);

}  // namespace wlisim
