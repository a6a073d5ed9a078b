#include "wlisim/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <tuple>

#include "wlisim/errors.hpp"
#include "wlisim/phase_models.hpp"
#include "wlisim/units.hpp"

namespace wlisim {
namespace {

// Internal parameters are scaled to order one: lambda0 in nm, d2n * 1e9,
// d3n * 1e12.
constexpr double kD2nScale = 1e-9;
constexpr double kD3nScale = 1e-12;
constexpr std::size_t kMinBins = 50;

struct Bins {
  std::vector<double> x, y, w, vis;
  std::vector<double> se;
};

struct Problem {
  FitModel model;
  double length_nm;      // L_s in nm
  double degenerate_nm;  // lambda* (quantum only)
  double offset_phase;
  double visibility;
  bool fit_offset;
  bool fit_visibility;

  std::size_t core() const {
    switch (model) {
      case FitModel::classical: return 3;
      case FitModel::classical_second_order: return 2;
      case FitModel::quantum: return 1;
    }
    return 0;
  }
  std::size_t size() const { return core() + (fit_offset ? 1 : 0) + (fit_visibility ? 1 : 0); }
  std::size_t offset_index() const { return core(); }
  std::size_t visibility_index() const { return core() + (fit_offset ? 1 : 0); }

  double offset(const Eigen::VectorXd& p) const {
    return fit_offset ? p(static_cast<Eigen::Index>(offset_index())) : offset_phase;
  }
  double vis(const Eigen::VectorXd& p, double bin_vis) const {
    return fit_visibility ? p(static_cast<Eigen::Index>(visibility_index())) : bin_vis;
  }

  // Phase at lambda and its gradient with respect to the core parameters.
  double phase(const Eigen::VectorXd& p, double lambda, double* grad) const {
    if (model == FitModel::quantum) {
      const double d = lambda - degenerate_nm;
      const double den = 0.5 * degenerate_nm + d;
      const double h = kPi * length_nm * d * d / den;
      if (grad) grad[0] = h * kD2nScale;
      return p(0) * kD2nScale * h + offset(p);
    }
    const double l0 = p(0);
    const double n2 = p(1) * kD2nScale;
    const double n3 = model == FitModel::classical ? p(2) * kD3nScale : 0.0;
    const double d = lambda - l0;
    const double k = kTwoPi * length_nm / lambda;
    if (grad) {
      grad[0] = k * (-n2 * d - 0.5 * n3 * d * d);
      grad[1] = k * 0.5 * d * d * kD2nScale;
      if (model == FitModel::classical) grad[2] = k * d * d * d / 6.0 * kD3nScale;
    }
    return k * (0.5 * n2 * d * d + n3 * d * d * d / 6.0) + offset(p);
  }

  double value(const Eigen::VectorXd& p, double lambda, double bin_vis) const {
    return 0.5 * (1.0 + vis(p, bin_vis) * std::cos(phase(p, lambda, nullptr)));
  }

  Eigen::VectorXd residual(const Bins& b, const Eigen::VectorXd& p) const {
    Eigen::VectorXd r(static_cast<Eigen::Index>(b.x.size()));
    for (std::size_t i = 0; i < b.x.size(); ++i) {
      r(static_cast<Eigen::Index>(i)) = (b.y[i] - value(p, b.x[i], b.vis[i])) * b.w[i];
    }
    return r;
  }

  Eigen::MatrixXd jacobian(const Bins& b, const Eigen::VectorXd& p) const {
    const auto n = static_cast<Eigen::Index>(size());
    Eigen::MatrixXd j(static_cast<Eigen::Index>(b.x.size()), n);
    double grad[3] = {0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < b.x.size(); ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      const double phi = phase(p, b.x[i], grad);
      const double v = vis(p, b.vis[i]);
      const double dm_dphi = -0.5 * v * std::sin(phi);
      for (std::size_t c = 0; c < core(); ++c) {
        j(row, static_cast<Eigen::Index>(c)) = -b.w[i] * dm_dphi * grad[c];
      }
      if (fit_offset) j(row, static_cast<Eigen::Index>(offset_index())) = -b.w[i] * dm_dphi;
      if (fit_visibility) {
        j(row, static_cast<Eigen::Index>(visibility_index())) = -b.w[i] * 0.5 * std::cos(phi);
      }
    }
    return j;
  }
};

Bins select_bins(const NormalizedSpectrum& data, const FitOptions& opt) {
  const std::size_t n = data.value.size();
  if (data.wavelength_nm.size() != n || data.std_error.size() != n || data.valid.size() != n) {
    throw DomainError("normalised spectrum columns have different lengths");
  }
  if (!opt.bin_visibility.empty() && opt.bin_visibility.size() != n) {
    throw DomainError("bin_visibility length does not match the spectrum");
  }
  Bins b;
  for (std::size_t i = 0; i < n; ++i) {
    if (!data.valid[i]) continue;
    const double se = data.std_error[i];
    if (opt.weighted && !(se > 0.0)) continue;
    b.x.push_back(data.wavelength_nm[i]);
    b.y.push_back(data.value[i]);
    b.se.push_back(se);
    b.w.push_back(opt.weighted ? 1.0 / se : 1.0);
    b.vis.push_back(opt.bin_visibility.empty() ? opt.visibility : opt.bin_visibility[i]);
  }
  if (b.x.size() < kMinBins) {
    throw DomainError("need at least 50 valid bins, got " + std::to_string(b.x.size()));
  }
  return b;
}

Bins window(const Bins& all, double center, double half_width) {
  Bins b;
  for (std::size_t i = 0; i < all.x.size(); ++i) {
    if (std::abs(all.x[i] - center) > half_width) continue;
    b.x.push_back(all.x[i]);
    b.y.push_back(all.y[i]);
    b.w.push_back(all.w[i]);
    b.se.push_back(all.se[i]);
    b.vis.push_back(all.vis[i]);
  }
  return b;
}

// Wavelengths where the data cross the fringe midline 1/2, by linear
// interpolation between neighbouring bins.
std::vector<double> midline_crossings(const Bins& b) {
  std::vector<double> out;
  for (std::size_t i = 1; i < b.x.size(); ++i) {
    const double a = b.y[i - 1] - 0.5;
    const double c = b.y[i] - 0.5;
    if ((a < 0.0 && c >= 0.0) || (a >= 0.0 && c < 0.0)) {
      const double t = a / (a - c);
      out.push_back(b.x[i - 1] + t * (b.x[i] - b.x[i - 1]));
    }
  }
  return out;
}

struct PhaseRegression {
  double amplitude = 0.0;  // |dphi/dh|
  double misfit = std::numeric_limits<double>::infinity();
};

// Consecutive midline crossings are pi apart in phase. Moving away from the
// stationary point on either side, crossing j sits at phase r + (j - 1) pi
// from the offset, with r in (0, pi]; fit |phase| = a h(d) against that.
template <class H>
PhaseRegression regress_crossings(const std::vector<double>& crossings, double center, H h) {
  std::vector<double> hv, target;
  std::vector<double> left, right;
  for (double c : crossings) (c < center ? left : right).push_back(c);
  std::reverse(left.begin(), left.end());
  for (const auto* side : {&left, &right}) {
    for (std::size_t j = 0; j < side->size(); ++j) {
      hv.push_back(h((*side)[j] - center));
      target.push_back(kPi * static_cast<double>(j));
    }
  }
  PhaseRegression out;
  if (hv.empty()) return out;
  // target = a h - r
  double shh = 0, sh = 0, st = 0, sht = 0;
  const double m = static_cast<double>(hv.size());
  for (std::size_t i = 0; i < hv.size(); ++i) {
    shh += hv[i] * hv[i];
    sh += hv[i];
    st += target[i];
    sht += hv[i] * target[i];
  }
  double a = 0.0, r = 0.0;
  const double det = m * shh - sh * sh;
  if (hv.size() >= 2 && std::abs(det) > 1e-300) {
    a = (m * sht - sh * st) / det;
    r = (a * sh - st) / m;
  }
  if (!(r > 0.0 && r <= kPi)) {
    r = std::clamp(r, 0.0, kPi);
    a = shh > 0.0 ? (sht + r * sh) / shh : 0.0;
  }
  if (!(a > 0.0)) return out;
  double ss = 0.0;
  for (std::size_t i = 0; i < hv.size(); ++i) {
    const double e = a * hv[i] - r - target[i];
    ss += e * e;
  }
  out.amplitude = a;
  out.misfit = ss / m;
  return out;
}

struct Seed {
  double center;          // lambda0 or lambda*
  double abs_d2n_scaled;  // |d2n| * 1e9
};

Seed classical_seed(const Bins& b, double length_nm) {
  const auto crossings = midline_crossings(b);
  const double lo = b.x.front(), hi = b.x.back();
  Seed best{0.5 * (lo + hi), 0.0};
  double best_misfit = std::numeric_limits<double>::infinity();
  const double step = std::max((hi - lo) / 800.0, 1e-3);
  for (double l0 = lo; l0 <= hi; l0 += step) {
    auto h = [&](double d) { return d * d / (l0 + d); };
    const auto reg = regress_crossings(crossings, l0, h);
    if (reg.misfit < best_misfit) {
      best_misfit = reg.misfit;
      best = {l0, reg.amplitude / (kPi * length_nm) / kD2nScale};
    }
  }
  if (!(best.abs_d2n_scaled > 0.0)) {
    // No usable crossings: assume about one fringe over the half span.
    const double d = 0.5 * (hi - lo);
    best.abs_d2n_scaled = kTwoPi / (kPi * length_nm * d * d / best.center) / kD2nScale;
  }
  return best;
}

Seed quantum_seed(const Bins& b, double length_nm, double degenerate) {
  const auto crossings = midline_crossings(b);
  auto h = [&](double d) { return d * d / (0.5 * degenerate + d); };
  const auto reg = regress_crossings(crossings, degenerate, h);
  Seed s{degenerate, reg.amplitude / (kPi * length_nm) / kD2nScale};
  if (!(s.abs_d2n_scaled > 0.0)) {
    const double d = 0.5 * (b.x.back() - b.x.front());
    s.abs_d2n_scaled = kTwoPi / (kPi * length_nm * h(d)) / kD2nScale;
  }
  return s;
}

std::size_t data_crossings(const Bins& b) { return count_zero_crossings(b.y); }

std::size_t model_crossings(const Problem& pr, const Bins& b, const Eigen::VectorXd& p) {
  std::vector<double> v(b.x.size());
  for (std::size_t i = 0; i < b.x.size(); ++i) v[i] = pr.value(p, b.x[i], b.vis[i]);
  return count_zero_crossings(v);
}

struct Attempt {
  SolverResult solver;
  bool ok = false;
  bool aliased = false;
};

Attempt run_staged(const Problem& pr, const Bins& all, Eigen::VectorXd p, double center,
                   const SolverConfig& cfg_in) {
  const double half = std::max(center - all.x.front(), all.x.back() - center);
  const std::size_t min_bins = std::max<std::size_t>(10, 4 * pr.size());
  Attempt a;
  for (double frac : {0.3, 0.6, 1.0}) {
    const Bins b = frac < 1.0 ? window(all, center, frac * half) : all;
    if (b.x.size() < min_bins) continue;
    SolverConfig cfg = cfg_in;
    double scale = 0.0;
    for (std::size_t i = 0; i < b.y.size(); ++i) scale += std::pow(b.y[i] * b.w[i], 2);
    cfg.gradient_scale = std::max(cfg.gradient_scale, std::sqrt(scale));
    try {
      a.solver = solve_least_squares([&](const Eigen::VectorXd& q) { return pr.residual(b, q); },
                                     [&](const Eigen::VectorXd& q) { return pr.jacobian(b, q); },
                                     p, cfg);
    } catch (const RankDeficientError&) {
      if (frac < 1.0) continue;
      throw;
    }
    p = a.solver.params;
  }
  a.ok = a.solver.converged && std::isfinite(a.solver.cost);
  const double nd = static_cast<double>(data_crossings(all));
  const double nm = static_cast<double>(model_crossings(pr, all, p));
  a.aliased = std::abs(nm - nd) > std::max(0.1 * nd, 2.0);
  return a;
}

FitResult finish(const Problem& pr, const Bins& b, const Attempt& a, const FitOptions& opt) {
  FitResult r;
  r.model = pr.model;
  const auto& s = a.solver;
  const Eigen::VectorXd& p = s.params;
  const Eigen::MatrixXd cov = opt.absolute_sigma ? s.jtj_inverse : s.covariance;
  auto sd = [&](std::size_t i) {
    const auto k = static_cast<Eigen::Index>(i);
    return std::sqrt(std::max(cov(k, k), 0.0));
  };

  if (pr.model == FitModel::quantum) {
    r.reference_wavelength_nm = pr.degenerate_nm;
    r.d2n = p(0) * kD2nScale;
    r.d2n_sigma = sd(0) * kD2nScale;
    r.names = {"d2n"};
    r.params = {r.d2n};
    r.sigma = {r.d2n_sigma};
    r.D = dispersion_coefficient(r.d2n, r.reference_wavelength_nm);
    r.D_sigma = r.reference_wavelength_nm * r.d2n_sigma * kDispersionScale;
  } else {
    r.reference_wavelength_nm = p(0);
    r.d2n = p(1) * kD2nScale;
    r.d2n_sigma = sd(1) * kD2nScale;
    r.names = {"lambda0_nm", "d2n"};
    r.params = {p(0), r.d2n};
    r.sigma = {sd(0), r.d2n_sigma};
    if (pr.model == FitModel::classical) {
      r.d3n = p(2) * kD3nScale;
      r.names.push_back("d3n");
      r.params.push_back(r.d3n);
      r.sigma.push_back(sd(2) * kD3nScale);
    }
    r.D = dispersion_coefficient(r.d2n, r.reference_wavelength_nm);
    // D = -lambda0 q 1e-9 k over the (lambda0, q) block.
    Eigen::Vector2d g(-p(1) * kD2nScale * kDispersionScale,
                      -p(0) * kD2nScale * kDispersionScale);
    const double var = g.transpose() * cov.topLeftCorner(2, 2) * g;
    r.D_sigma = std::sqrt(std::max(var, 0.0));
    if (p(0) < b.x.front() || p(0) > b.x.back()) {
      r.flags.push_back("stationary_point_outside_span");
    }
  }
  r.offset_phase = pr.offset(p);
  r.visibility = pr.fit_visibility ? p(static_cast<Eigen::Index>(pr.visibility_index()))
                                   : opt.visibility;
  if (pr.fit_offset) {
    r.names.push_back("offset_phase");
    r.params.push_back(r.offset_phase);
    r.sigma.push_back(sd(pr.offset_index()));
  }
  if (pr.fit_visibility) {
    r.names.push_back("visibility");
    r.params.push_back(r.visibility);
    r.sigma.push_back(sd(pr.visibility_index()));
  }

  double ss = 0.0, chi2 = 0.0;
  std::size_t chi_bins = 0;
  for (std::size_t i = 0; i < b.x.size(); ++i) {
    const double e = b.y[i] - pr.value(p, b.x[i], b.vis[i]);
    ss += e * e;
    if (b.se[i] > 0.0) {
      chi2 += e * e / (b.se[i] * b.se[i]);
      ++chi_bins;
    }
  }
  const double m = static_cast<double>(b.x.size());
  r.residual_rms = std::sqrt(ss / m);
  const double dof = std::max(static_cast<double>(chi_bins) - static_cast<double>(pr.size()), 1.0);
  r.chi2_per_dof = chi2 / dof;
  r.converged = s.converged;
  r.iterations = s.iterations;
  r.gradient_norm = s.gradient_norm;
  r.bins_used = b.x.size();
  if (a.aliased) r.flags.push_back("fringe_count_mismatch");
  if (!s.converged) r.flags.push_back("not_converged");
  return r;
}

// Tries the candidate start points in order and keeps the first one that
// converges without aliasing; otherwise the lowest-cost attempt.
FitResult fit_with_starts(const Problem& pr, const Bins& b,
                          const std::vector<std::pair<Eigen::VectorXd, double>>& starts,
                          const FitOptions& opt) {
  std::optional<Attempt> best;
  std::optional<RankDeficientError> last_error;
  for (const auto& [p0, center] : starts) {
    Attempt a;
    try {
      a = run_staged(pr, b, p0, center, opt.solver);
    } catch (const RankDeficientError& e) {
      last_error = e;
      continue;
    }
    if (a.ok && !a.aliased) return finish(pr, b, a, opt);
    auto rank = [](const Attempt& x) { return std::make_tuple(!x.ok, x.aliased, x.solver.cost); };
    if (!best || rank(a) < rank(*best)) best = a;
  }
  if (!best) throw last_error ? *last_error : RankDeficientError("no start point could be fitted");
  return finish(pr, b, *best, opt);
}

Eigen::VectorXd with_nuisance(const Problem& pr, std::vector<double> core, double visibility) {
  if (pr.fit_offset) core.push_back(pr.offset_phase);
  if (pr.fit_visibility) core.push_back(visibility);
  return Eigen::Map<Eigen::VectorXd>(core.data(), static_cast<Eigen::Index>(core.size()));
}

std::vector<double> signs_to_try(double offset_phase) {
  // phi_off = 0 leaves the sign of d2n undetermined; prefer normal dispersion.
  if (std::abs(std::sin(offset_phase)) > 1e-6) return {-1.0, 1.0};
  return {-1.0};
}

FitResult fit_classical_impl(FitModel model, const NormalizedSpectrum& data, double length_m,
                             double offset_phase, const std::optional<ClassicalFitParams>& init,
                             const FitOptions& opt) {
  if (!(length_m > 0.0)) throw DomainError("sample length must be > 0");
  const Bins b = select_bins(data, opt);
  Problem pr{model,        length_m * kNmPerMetre, 0.0,
             offset_phase, opt.visibility,         opt.fit_offset_phase,
             opt.fit_visibility};
  const bool full = model == FitModel::classical;
  std::vector<std::pair<Eigen::VectorXd, double>> starts;
  if (init) {
    std::vector<double> core = {init->lambda0_nm, init->d2n / kD2nScale};
    if (full) core.push_back(init->d3n / kD3nScale);
    starts.emplace_back(with_nuisance(pr, core, opt.visibility), init->lambda0_nm);
  }
  const Seed seed = classical_seed(b, pr.length_nm);
  for (double sign : signs_to_try(offset_phase)) {
    std::vector<double> core = {seed.center, sign * seed.abs_d2n_scaled};
    if (full) core.push_back(0.0);
    starts.emplace_back(with_nuisance(pr, core, opt.visibility), seed.center);
  }
  return fit_with_starts(pr, b, starts, opt);
}

}  // namespace

std::string to_string(FitModel m) {
  switch (m) {
    case FitModel::classical: return "classical";
    case FitModel::classical_second_order: return "classical_2nd_order";
    case FitModel::quantum: return "quantum";
  }
  return "unknown";
}

FitModel fit_model_from_string(const std::string& s) {
  if (s == "classical") return FitModel::classical;
  if (s == "classical_2nd_order" || s == "classical-second-order" ||
      s == "classical_second_order" || s == "classical-2nd-order") {
    return FitModel::classical_second_order;
  }
  if (s == "quantum") return FitModel::quantum;
  throw DomainError("unknown method '" + s + "'");
}

bool FitResult::has_flag(const std::string& f) const {
  return std::find(flags.begin(), flags.end(), f) != flags.end();
}

FitResult fit_classical(const NormalizedSpectrum& data, double sample_length_m,
                        double offset_phase, const std::optional<ClassicalFitParams>& init,
                        const FitOptions& options) {
  return fit_classical_impl(FitModel::classical, data, sample_length_m, offset_phase, init,
                            options);
}

FitResult fit_classical_second_order(const NormalizedSpectrum& data, double sample_length_m,
                                     double offset_phase,
                                     const std::optional<ClassicalFitParams>& init,
                                     const FitOptions& options) {
  return fit_classical_impl(FitModel::classical_second_order, data, sample_length_m,
                            offset_phase, init, options);
}

FitResult fit_quantum(const NormalizedSpectrum& data, double sample_length_m, double pump_nm,
                      double offset_phase, const std::optional<QuantumFitParams>& init,
                      const FitOptions& options) {
  if (!(sample_length_m > 0.0)) throw DomainError("sample length must be > 0");
  if (!(pump_nm > 0.0)) throw DomainError("pump wavelength must be > 0");
  const Bins b = select_bins(data, options);
  const double degenerate = 2.0 * pump_nm;
  if (degenerate < b.x.front() || degenerate > b.x.back()) {
    throw DomainError("degenerate wavelength 2 * pump lies outside the data span");
  }
  Problem pr{FitModel::quantum, sample_length_m * kNmPerMetre, degenerate,
             offset_phase,      options.visibility,            options.fit_offset_phase,
             options.fit_visibility};
  std::vector<std::pair<Eigen::VectorXd, double>> starts;
  if (init) starts.emplace_back(with_nuisance(pr, {init->d2n / kD2nScale}, options.visibility),
                                degenerate);
  const Seed seed = quantum_seed(b, pr.length_nm, degenerate);
  for (double sign : signs_to_try(offset_phase)) {
    starts.emplace_back(with_nuisance(pr, {sign * seed.abs_d2n_scaled}, options.visibility),
                        degenerate);
  }
  return fit_with_starts(pr, b, starts, options);
}

double classical_model_value(const ClassicalFitParams& p, double sample_length_m,
                             double offset_phase, double visibility, double lambda_nm) {
  Problem pr{FitModel::classical, sample_length_m * kNmPerMetre, 0.0, offset_phase, visibility,
             false, false};
  Eigen::Vector3d q(p.lambda0_nm, p.d2n / kD2nScale, p.d3n / kD3nScale);
  return pr.value(q, lambda_nm, visibility);
}

double quantum_model_value(const QuantumFitParams& p, double sample_length_m, double pump_nm,
                           double offset_phase, double visibility, double lambda_nm) {
  Problem pr{FitModel::quantum, sample_length_m * kNmPerMetre, 2.0 * pump_nm, offset_phase,
             visibility,        false,                         false};
  Eigen::VectorXd q(1);
  q(0) = p.d2n / kD2nScale;
  return pr.value(q, lambda_nm, visibility);
}

namespace {

std::pair<Problem, Eigen::VectorXd> scaled_problem(const ModelSetup& m,
                                                   const std::vector<double>& params) {
  Problem pr{m.model,        m.sample_length_m * kNmPerMetre, 2.0 * m.pump_nm,
             m.offset_phase, m.visibility,                    m.fit_offset_phase,
             m.fit_visibility};
  if (params.size() != pr.size()) throw DomainError("parameter count does not match the model");
  Eigen::VectorXd q = Eigen::Map<const Eigen::VectorXd>(params.data(),
                                                        static_cast<Eigen::Index>(params.size()));
  if (m.model == FitModel::quantum) {
    q(0) /= kD2nScale;
  } else {
    q(1) /= kD2nScale;
    if (m.model == FitModel::classical) q(2) /= kD3nScale;
  }
  return {pr, q};
}

}  // namespace

std::vector<double> model_gradient(const ModelSetup& setup, const std::vector<double>& params,
                                   double lambda_nm) {
  const auto [pr, q] = scaled_problem(setup, params);
  const Bins one{{lambda_nm}, {0.0}, {1.0}, {setup.visibility}, {0.0}};
  // Residuals are (y - model), so the model gradient is minus the Jacobian row.
  const Eigen::MatrixXd j = pr.jacobian(one, q);
  std::vector<double> g(params.size());
  for (std::size_t c = 0; c < g.size(); ++c) g[c] = -j(0, static_cast<Eigen::Index>(c));
  if (setup.model == FitModel::quantum) {
    g[0] /= kD2nScale;
  } else {
    g[1] /= kD2nScale;
    if (setup.model == FitModel::classical) g[2] /= kD3nScale;
  }
  return g;
}

double model_value(const ModelSetup& setup, const std::vector<double>& params, double lambda_nm) {
  const auto [pr, q] = scaled_problem(setup, params);
  return pr.value(q, lambda_nm, setup.visibility);
}

CalibratedDispersion subtract_calibration(const DispersionMeasurement& total,
                                          const DispersionMeasurement& bare,
                                          double sample_length_m) {
  if (!(sample_length_m > 0.0)) throw DomainError("sample length must be > 0");
  if (!(total.fit_length_m > 0.0) || !(bare.fit_length_m > 0.0)) {
    throw DomainError("fit lengths must be > 0");
  }
  if (std::abs(total.wavelength_nm - bare.wavelength_nm) > 1e-6) {
    throw DomainError("total and bare measurements were made at different wavelengths");
  }
  // Phases add, and each fitted D scales its phase by its fit length.
  const double total_phase = total.D * total.fit_length_m;
  const double bare_phase = bare.D * bare.fit_length_m;
  CalibratedDispersion out;
  out.D = (total_phase - bare_phase) / sample_length_m;
  out.D_sigma = std::hypot(total.D_sigma * total.fit_length_m, bare.D_sigma * bare.fit_length_m) /
                sample_length_m;
  out.bare_fraction = total_phase != 0.0 ? bare_phase / total_phase : 0.0;
  return out;
}

}  // namespace wlisim
