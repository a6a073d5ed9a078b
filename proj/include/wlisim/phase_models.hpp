#pragma once

// Refractive-index models of the sample under test and the interferometer
// phase functions built on them.
//
// Classical white-light interferometry sees
//     phi(lambda) = 2 pi / lambda * (n(lambda) L_s - L_r)
// which, once the reference arm is balanced to the stationary phase point
// lambda0, reduces to a quadratic + cubic function of dl = lambda - lambda0.
// Two-photon (N00N) interferometry sees phi(lambda1) + phi(lambda2) with the
// photons tied by energy conservation, which cancels the odd orders and leaves
// a single dispersion parameter.

#include <array>
#include <variant>

namespace wlisim {

/// n(lambda) = sqrt(1 + sum_i B_i lambda^2 / (lambda^2 - C_i)) + index_offset,
/// with lambda in um inside the formula.
struct SellmeierModel {
  std::array<double, 3> b{};
  std::array<double, 3> c_um2{};
  double index_offset = 0.0;

  /// Malitson bulk fused silica.
  static SellmeierModel fused_silica();
};

/// Third-order Taylor expansion of n around an anchor wavelength.
struct TaylorModel {
  double anchor_nm = 1560.0;
  double n = 1.0;
  double dn = 0.0;   // nm^-1
  double d2n = 0.0;  // nm^-2
  double d3n = 0.0;  // nm^-3
};

using RefractiveIndexModel = std::variant<SellmeierModel, TaylorModel>;

/// n and its first three wavelength derivatives at one wavelength.
struct DispersionSample {
  double wavelength_nm = 0.0;
  double n = 0.0;
  double dn = 0.0;
  double d2n = 0.0;
  double d3n = 0.0;
};

struct InterferometerGeometry {
  double sample_length_m = 1.0;
  double reference_length_m = 0.0;
  double offset_phase = 0.0;  // rad
};

/// Throws DomainError when the model violates its invariants (C_i <= 0,
/// B_i < 0, pole or non-finite index inside [1200, 1800] nm).
void validate(const RefractiveIndexModel& model);
void validate(const InterferometerGeometry& geometry);

/// Analytic n, n', n'', n''' at `wavelength_nm` (no finite differencing).
DispersionSample evaluate(const RefractiveIndexModel& model, double wavelength_nm);

/// n(lambda) in extended precision, for phase differences that would
/// otherwise cancel catastrophically.
long double index_extended(const RefractiveIndexModel& model, double wavelength_nm);

/// Exact phase 2 pi (n L_s - L_r) / lambda + offset_phase.
double classical_phase_exact(const InterferometerGeometry& geometry,
                             const RefractiveIndexModel& model, double wavelength_nm);

/// Phase of a reference arm balanced to the stationary phase point
/// sample.wavelength_nm, Taylor-expanded to third order in dl.
double classical_phase_taylor(const InterferometerGeometry& geometry,
                              const DispersionSample& sample, double delta_nm);

/// Reference-arm length that cancels the zeroth and first-order terms at
/// `wavelength_nm`: L_r = (n - lambda0 dn/dlambda) L_s.
double stationary_phase_point_length(const RefractiveIndexModel& model,
                                     double wavelength_nm, double sample_length_m);

/// Energy-conservation partner of `wavelength_nm` for pump `pump_nm`.
double conjugate_wavelength(double wavelength_nm, double pump_nm);

/// Two-photon phase around the degenerate wavelength sample.wavelength_nm.
/// With `include_third_order` the residual quartic term of the third-order
/// coefficient is added.
double noon_phase(const InterferometerGeometry& geometry, const DispersionSample& sample,
                  double delta_nm, bool include_third_order);

/// D = -(lambda0 / c) d2n/dlambda2, returned in ps/(nm km).
double dispersion_coefficient(double d2n, double wavelength_nm);

/// Inverse of dispersion_coefficient: d2n/dlambda2 in nm^-2.
double dispersion_to_d2n(double dispersion, double wavelength_nm);

/// dD/dlambda in ps/(nm^2 km).
double dispersion_slope(const DispersionSample& sample);

/// Taylor model with d2n and d3n set from a dispersion coefficient and slope
/// at the anchor.
TaylorModel taylor_from_dispersion(double anchor_nm, double n, double dn, double dispersion,
                                   double slope);

/// Reference fibre used throughout the toolkit: D = 17.035 ps/(nm km) and
/// slope 0.058 ps/(nm^2 km) at 1560.493 nm, SMF-28-like n and group index.
TaylorModel ground_truth_model();

}  // namespace wlisim
