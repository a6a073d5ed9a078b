#include "wlisim/phase_models.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>

#include "wlisim/errors.hpp"
#include "wlisim/units.hpp"

namespace wlisim {
namespace {

void require_in_range(double wavelength_nm) {
  if (!(wavelength_nm >= kMinWavelengthNm && wavelength_nm <= kMaxWavelengthNm)) {
    throw DomainError("wavelength " + std::to_string(wavelength_nm) +
                      " nm outside model range [1200, 1800] nm");
  }
}

DispersionSample evaluate_sellmeier(const SellmeierModel& m, double wavelength_nm) {
  const double x = wavelength_nm * 1e-3;  // um
  double f = 1.0, f1 = 0.0, f2 = 0.0, f3 = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double b = m.b[i];
    const double c = m.c_um2[i];
    if (b == 0.0) continue;
    const double w = x * x - c;
    if (std::abs(w) <= 1e-12 * std::max(1.0, c)) {
      throw SingularityError("Sellmeier pole at " + std::to_string(wavelength_nm) + " nm");
    }
    // lambda^2 / (lambda^2 - C) = 1 + C / w
    const double w2 = w * w, w3 = w2 * w, w4 = w3 * w;
    f += b * (1.0 + c / w);
    f1 += b * (-2.0 * c * x / w2);
    f2 += b * (-2.0 * c / w2 + 8.0 * c * x * x / w3);
    f3 += b * (24.0 * c * x / w3 - 48.0 * c * x * x * x / w4);
  }
  if (!(f > 0.0) || !std::isfinite(f)) {
    throw DomainError("Sellmeier index not real at " + std::to_string(wavelength_nm) + " nm");
  }
  // Differentiate n^2 = f three times.
  const double n = std::sqrt(f);
  const double n1 = f1 / (2.0 * n);
  const double n2 = (f2 - 2.0 * n1 * n1) / (2.0 * n);
  const double n3 = (f3 - 6.0 * n1 * n2) / (2.0 * n);
  return {wavelength_nm, n + m.index_offset, n1 * 1e-3, n2 * 1e-6, n3 * 1e-9};
}

DispersionSample evaluate_taylor(const TaylorModel& m, double wavelength_nm) {
  const double d = wavelength_nm - m.anchor_nm;
  DispersionSample s;
  s.wavelength_nm = wavelength_nm;
  s.n = m.n + d * (m.dn + d * (0.5 * m.d2n + d * m.d3n / 6.0));
  s.dn = m.dn + d * (m.d2n + 0.5 * d * m.d3n);
  s.d2n = m.d2n + d * m.d3n;
  s.d3n = m.d3n;
  return s;
}

}  // namespace

long double index_extended(const RefractiveIndexModel& model, double wavelength_nm) {
  require_in_range(wavelength_nm);
  if (const auto* t = std::get_if<TaylorModel>(&model)) {
    const long double d = static_cast<long double>(wavelength_nm) - t->anchor_nm;
    return t->n + d * (t->dn + d * (0.5L * t->d2n + d * t->d3n / 6.0L));
  }
  const auto& m = std::get<SellmeierModel>(model);
  const long double x = static_cast<long double>(wavelength_nm) * 1e-3L;
  long double f = 1.0L;
  for (std::size_t i = 0; i < 3; ++i) {
    if (m.b[i] == 0.0) continue;
    const long double w = x * x - m.c_um2[i];
    if (std::abs(static_cast<double>(w)) <= 1e-12 * std::max(1.0, m.c_um2[i])) {
      throw SingularityError("Sellmeier pole at " + std::to_string(wavelength_nm) + " nm");
    }
    f += m.b[i] * x * x / w;
  }
  if (!(f > 0.0L)) {
    throw DomainError("Sellmeier index not real at " + std::to_string(wavelength_nm) + " nm");
  }
  return std::sqrt(f) + m.index_offset;
}

SellmeierModel SellmeierModel::fused_silica() {
  SellmeierModel m;
  m.b = {0.6961663, 0.4079426, 0.8974794};
  m.c_um2 = {0.0684043 * 0.0684043, 0.1162414 * 0.1162414, 9.896161 * 9.896161};
  return m;
}

void validate(const RefractiveIndexModel& model) {
  if (const auto* s = std::get_if<SellmeierModel>(&model)) {
    for (std::size_t i = 0; i < 3; ++i) {
      if (!(s->c_um2[i] > 0.0)) throw DomainError("Sellmeier C_i must be > 0");
      if (!(s->b[i] >= 0.0)) throw DomainError("Sellmeier B_i must be >= 0");
      const double lo = kMinWavelengthNm * 1e-3, hi = kMaxWavelengthNm * 1e-3;
      if (s->b[i] > 0.0 && s->c_um2[i] >= lo * lo && s->c_um2[i] <= hi * hi) {
        throw SingularityError("Sellmeier pole inside [1200, 1800] nm");
      }
    }
    if (!std::isfinite(s->index_offset)) throw DomainError("index offset not finite");
  } else {
    const auto& t = std::get<TaylorModel>(model);
    for (double v : {t.anchor_nm, t.n, t.dn, t.d2n, t.d3n}) {
      if (!std::isfinite(v)) throw DomainError("Taylor coefficients must be finite");
    }
    require_in_range(t.anchor_nm);
  }
  for (double l = kMinWavelengthNm; l <= kMaxWavelengthNm; l += 1.0) {
    const auto s = evaluate(model, l);
    if (!std::isfinite(s.n) || !(s.n > 0.0)) {
      throw DomainError("refractive index not real and positive at " + std::to_string(l) + " nm");
    }
  }
}

void validate(const InterferometerGeometry& g) {
  if (!(g.sample_length_m > 0.0)) throw DomainError("sample length must be > 0");
  if (!(g.reference_length_m >= 0.0)) throw DomainError("reference length must be >= 0");
  if (!std::isfinite(g.offset_phase)) throw DomainError("offset phase must be finite");
}

DispersionSample evaluate(const RefractiveIndexModel& model, double wavelength_nm) {
  require_in_range(wavelength_nm);
  return std::visit(
      [&](const auto& m) -> DispersionSample {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, SellmeierModel>) {
          return evaluate_sellmeier(m, wavelength_nm);
        } else {
          return evaluate_taylor(m, wavelength_nm);
        }
      },
      model);
}

double classical_phase_exact(const InterferometerGeometry& geometry,
                             const RefractiveIndexModel& model, double wavelength_nm) {
  const double n = evaluate(model, wavelength_nm).n;
  const double path_nm =
      (n * geometry.sample_length_m - geometry.reference_length_m) * kNmPerMetre;
  return kTwoPi * path_nm / wavelength_nm + geometry.offset_phase;
}

double classical_phase_taylor(const InterferometerGeometry& geometry,
                              const DispersionSample& sample, double delta_nm) {
  const double lambda = sample.wavelength_nm + delta_nm;
  if (!(lambda > 0.0)) throw DomainError("lambda0 + dl must be positive");
  const double length_nm = geometry.sample_length_m * kNmPerMetre;
  const double d2 = delta_nm * delta_nm;
  return kTwoPi * length_nm *
             (0.5 * sample.d2n * d2 / lambda + sample.d3n * d2 * delta_nm / (6.0 * lambda)) +
         geometry.offset_phase;
}

double stationary_phase_point_length(const RefractiveIndexModel& model, double wavelength_nm,
                                     double sample_length_m) {
  const auto s = evaluate(model, wavelength_nm);
  return (s.n - s.dn * wavelength_nm) * sample_length_m;
}

double conjugate_wavelength(double wavelength_nm, double pump_nm) {
  if (!(pump_nm > 0.0) || !(wavelength_nm > pump_nm)) {
    throw DomainError("no conjugate wavelength: need lambda > pump wavelength > 0");
  }
  return wavelength_nm * pump_nm / (wavelength_nm - pump_nm);
}

double noon_phase(const InterferometerGeometry& geometry, const DispersionSample& sample,
                  double delta_nm, bool include_third_order) {
  const double den = 0.5 * sample.wavelength_nm + delta_nm;
  if (!(den > 0.0)) throw DomainError("lambda*/2 + dl must be positive");
  const double length_nm = geometry.sample_length_m * kNmPerMetre;
  const double d2 = delta_nm * delta_nm;
  double phi = sample.d2n * kPi * length_nm * d2 / den;
  if (include_third_order) {
    phi += kTwoPi * length_nm * sample.d3n / 6.0 * d2 * d2 / (den * den);
  }
  return phi + geometry.offset_phase;
}

double dispersion_coefficient(double d2n, double wavelength_nm) {
  if (!(wavelength_nm > 0.0)) throw DomainError("wavelength must be positive");
  return -wavelength_nm * d2n * kDispersionScale;
}

double dispersion_to_d2n(double dispersion, double wavelength_nm) {
  if (!(wavelength_nm > 0.0)) throw DomainError("wavelength must be positive");
  return -dispersion / (wavelength_nm * kDispersionScale);
}

double dispersion_slope(const DispersionSample& s) {
  return -(s.d2n + s.wavelength_nm * s.d3n) * kDispersionScale;
}

TaylorModel taylor_from_dispersion(double anchor_nm, double n, double dn, double dispersion,
                                   double slope) {
  TaylorModel t;
  t.anchor_nm = anchor_nm;
  t.n = n;
  t.dn = dn;
  t.d2n = dispersion_to_d2n(dispersion, anchor_nm);
  t.d3n = (-slope / kDispersionScale - t.d2n) / anchor_nm;
  return t;
}

TaylorModel ground_truth_model() {
  constexpr double anchor = 1560.493;
  constexpr double n_eff = 1.4624;
  constexpr double n_group = 1.4682;
  return taylor_from_dispersion(anchor, n_eff, (n_eff - n_group) / anchor, 17.035, 0.058);
}

}  // namespace wlisim
