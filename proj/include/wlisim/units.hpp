#pragma once

// Physical constants and unit conventions.
//
// Wavelengths are carried in nm, lengths in m, phases in rad. The only place
// where these are mixed with SI time/length units is the dispersion
// coefficient conversion in phase_models.

namespace wlisim {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kPlanck = 6.62607015e-34;     // J s

inline constexpr double kNmPerMetre = 1e9;

// D[ps/(nm km)] = -lambda[nm] * d2n[nm^-2] * kDispersionScale
inline constexpr double kDispersionScale = 1e15 / kSpeedOfLight;

// Validity range of every refractive-index model.
inline constexpr double kMinWavelengthNm = 1200.0;
inline constexpr double kMaxWavelengthNm = 1800.0;

}  // namespace wlisim
