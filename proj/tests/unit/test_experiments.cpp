#include <doctest.h>

#include <cmath>
#include <numeric>

#include "wlisim/errors.hpp"
#include "wlisim/experiments.hpp"
#include "wlisim/scenario.hpp"

using namespace wlisim;

namespace {

double sample_std(const std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::vector<double> trial_D(const MonteCarloReport& r) {
  std::vector<double> out;
  for (const auto& t : r.trials) {
    if (t.converged) out.push_back(t.D);
  }
  return out;
}

}  // namespace

TEST_CASE("precision per photon from the published sigma and N") {
  CHECK(precision_per_photon(0.051, 2.0e10) == doctest::Approx(7146).epsilon(0.02));
  CHECK(precision_per_photon(0.021, 3.1e8) == doctest::Approx(372).epsilon(0.02));
  const double ratio = std::pow(7146.0 / 372.0, 2);
  CHECK(ratio == doctest::Approx(369).epsilon(0.03));
  CHECK_THROWS_AS(expected_mean_difference(0.1, 0.1, 0), DomainError);
  CHECK(expected_mean_difference(0.3, 0.4, 25) == doctest::Approx(0.1).epsilon(1e-14));
}

TEST_CASE("histogram bookkeeping") {
  std::vector<double> v;
  for (int i = 0; i < 500; ++i) v.push_back(std::sin(i * 0.37) + 0.001 * i);
  const auto h = make_histogram(v);
  CHECK(h.edges.size() == h.counts.size() + 1);
  CHECK(std::accumulate(h.counts.begin(), h.counts.end(), std::size_t{0}) == 500);
  for (std::size_t i = 1; i < h.edges.size(); ++i) CHECK(h.edges[i] > h.edges[i - 1]);
  const auto fixed = make_histogram(v, 7);
  CHECK(fixed.counts.size() == 7);
  const auto same = make_histogram(std::vector<double>(10, 2.5));
  CHECK(std::accumulate(same.counts.begin(), same.counts.end(), std::size_t{0}) == 10);
}

TEST_CASE("monte carlo is reproducible and independent of the thread count") {
  const auto s = preset("paper-classical");
  MonteCarloOptions one{12, 1, {}}, three{12, 3, {}};
  const auto a = run_montecarlo(s, FitModel::classical, one);
  const auto b = run_montecarlo(s, FitModel::classical, three);
  REQUIRE(a.trials.size() == 12);
  for (std::size_t k = 0; k < 12; ++k) {
    CHECK(a.trials[k].seed == derive_seed(s.master_seed, k));
    CHECK(a.trials[k].D == b.trials[k].D);
  }
  CHECK(a.mean_D == b.mean_D);
  CHECK(a.n_photons_per_trial == doctest::Approx(1.9556e10).epsilon(1e-4));
}

TEST_CASE("classical monte carlo: unbiased and calibrated uncertainties") {
  const auto s = preset("paper-classical");
  const auto r = run_montecarlo(s, FitModel::classical, {200, 0, {}});
  REQUIRE(r.usable);
  CHECK(r.failed_trials == 0);
  CHECK(std::accumulate(r.histogram.counts.begin(), r.histogram.counts.end(), std::size_t{0}) ==
        200);
  CHECK(r.std_D == doctest::Approx(sample_std(trial_D(r))).epsilon(1e-12));
  CHECK(std::abs(r.mean_D - r.truth_D) < 4 * r.std_D / std::sqrt(200.0));
  CHECK(r.std_D == doctest::Approx(r.mean_D_sigma).epsilon(0.20));
  CHECK(r.truth_D == doctest::Approx(17.035).epsilon(1e-12));
}

TEST_CASE("quantum monte carlo: unbiased and calibrated uncertainties") {
  const auto s = preset("paper-quantum");
  const auto r = run_montecarlo(s, FitModel::quantum, {200, 0, {}});
  REQUIRE(r.usable);
  CHECK(std::abs(r.mean_D - r.truth_D) < 4 * r.std_D / std::sqrt(200.0));
  CHECK(r.std_D == doctest::Approx(r.mean_D_sigma).epsilon(0.20));
  CHECK(r.truth_D == doctest::Approx(17.034942).epsilon(1e-7));
}

TEST_CASE("quadrupling the photon budget halves the scatter") {
  auto s = preset("paper-classical");
  s.noise.visibility = 1.0;
  const auto base = run_montecarlo(s, FitModel::classical, {200, 0, {}});
  s.acquisition.integration_time_s *= 4;
  const auto more = run_montecarlo(s, FitModel::classical, {200, 0, {}});
  CHECK(more.n_photons_per_trial == doctest::Approx(4 * base.n_photons_per_trial).epsilon(1e-12));
  CHECK(base.std_D / more.std_D == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("matched budgets favour the two-photon measurement") {
  // Same flat source, grid and photon number; only the interferometer differs.
  auto c = preset("paper-classical");
  c.acquisition = preset("paper-quantum").acquisition;
  c.acquisition.source.shape = SpectrumShape::flat;
  c.noise.visibility = 1.0;
  c.noise.dark_counts_per_bin = 0.0;
  auto q = c;
  q.method = FitModel::quantum;
  const auto rc = run_montecarlo(c, FitModel::classical, {100, 0, {}});
  const auto rq = run_montecarlo(q, FitModel::quantum, {100, 0, {}});
  CHECK(rc.n_photons_per_trial == rq.n_photons_per_trial);
  CHECK(rq.std_D < rc.std_D);
}

TEST_CASE("dark counts do not bias the noiseless fit") {
  auto s = preset("paper-quantum");
  s.noise.poisson_enabled = false;
  REQUIRE(s.noise.dark_counts_per_bin > 0.0);
  const auto r = fit(s, normalize(simulate(s, 3)));
  CHECK(r.converged);
  CHECK(r.D == doctest::Approx(true_dispersion(s, FitModel::quantum)).epsilon(1e-9));
}

TEST_CASE("dark counts reproduce the raw visibility target") {
  auto s = preset("paper-quantum");
  CHECK(raw_visibility(s) == doctest::Approx(0.871).epsilon(1e-4));
  s.noise.dark_counts_per_bin = 0.0;
  CHECK(raw_visibility(s) == doctest::Approx(s.noise.visibility).epsilon(1e-9));
  const double d = calibrate_dark_counts(s, 0.9);
  s.noise.dark_counts_per_bin = d;
  CHECK(raw_visibility(s) == doctest::Approx(0.9).epsilon(1e-6));
  CHECK_THROWS_AS(calibrate_dark_counts(s, 0.99), DomainError);
}

TEST_CASE("arm imbalance: classical bias grows, quantum bias stays at zero") {
  const auto c = preset("paper-classical");
  const auto q = preset("paper-quantum");
  const auto rep = systematics_scan(c, q, SystematicAxis::arm_imbalance,
                                    {0.0, 0.25e-6, 0.5e-6, 1.0e-6, 1.5e-6});
  REQUIRE(rep.points.size() == 5);
  CHECK(std::abs(rep.points[0].bias_classical) < 1e-6);
  for (std::size_t i = 0; i < rep.points.size(); ++i) {
    CHECK(rep.points[i].classical_ok);
    CHECK(rep.points[i].quantum_ok);
    CHECK(std::abs(rep.points[i].bias_quantum) < 1e-4);
    if (i > 0) {
      CHECK(std::abs(rep.points[i].bias_classical) > std::abs(rep.points[i - 1].bias_classical));
    }
  }
  const auto off = find_offset_for_bias(c, FitModel::classical, SystematicAxis::arm_imbalance,
                                        0.012, 1.5e-6);
  REQUIRE(off.has_value());
  CHECK(std::abs(systematic_bias(c, FitModel::classical, SystematicAxis::arm_imbalance, *off)) ==
        doctest::Approx(0.012).epsilon(1e-3));
  CHECK_THROWS_AS(systematics_scan(c, q, SystematicAxis::arm_imbalance, {1e-6}), DomainError);
}

TEST_CASE("spectrometer offset bias is a relabelling of the stationary point") {
  // The fitted lambda0 follows the shifted labels; what is left is close to
  // 2 d D / lambda0 (about 0.0044 at 0.2 nm).
  const auto c = preset("paper-classical");
  const double b = systematic_bias(c, FitModel::classical, SystematicAxis::spectrometer_offset, 0.2);
  CHECK(b == doctest::Approx(2 * 0.2 * 17.035 / 1560.493).epsilon(0.05));
  CHECK(std::abs(systematic_bias(c, FitModel::classical, SystematicAxis::spectrometer_offset,
                                 0.1)) < std::abs(b));
}

TEST_CASE("fringe doubling") {
  const auto c = preset("paper-classical");
  auto q = preset("paper-quantum");
  auto cg = c;
  cg.acquisition.grid = q.acquisition.grid;
  const auto f = fringe_doubling_check(cg, q);
  CHECK(f.ratio == doctest::Approx(2.0).epsilon(0.05));

  auto tiny = cg;
  tiny.geometry.sample_length_m = 0.01;
  CHECK_THROWS_AS(fringe_doubling_check(tiny, q), DomainError);
}

TEST_CASE("third-order-only sample: classical fringes, no quantum fringes") {
  auto c = preset("paper-classical");
  TaylorModel t = ground_truth_model();
  t.anchor_nm = 2 * 780.246;
  t.d2n = 0.0;
  t.d3n *= 4;
  c.truth = t;
  auto q = preset("paper-quantum");
  q.truth = t;
  CHECK(classical_phase_excursion(c) > 4 * 2 * 3.141592653589793);
  CHECK(quantum_phase_excursion(q) == 0.0);
  q.quartic_residual = true;
  CHECK(quantum_phase_excursion(q) > 0.0);
}

TEST_CASE("bare-interferometer calibration recovers the sample dispersion") {
  auto loaded = preset("paper-quantum");
  loaded.noise.poisson_enabled = false;
  const double n2 = evaluate(loaded.truth, 2 * loaded.pump_wavelength_nm).d2n;
  loaded.interferometer_d2n = n2 * 0.1 / 0.9;
  const auto bare = make_bare_scenario(loaded);
  const auto rep = calibration_workflow(bare, loaded);
  CHECK(rep.corrected.D == doctest::Approx(rep.truth_D).epsilon(1e-8));
  CHECK(rep.corrected.bare_fraction == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(rep.loaded_fit.D > rep.truth_D);

  auto other = bare;
  other.pump_wavelength_nm += 0.1;
  CHECK_THROWS_AS(calibration_workflow(other, loaded), DomainError);
}

TEST_CASE("scenario validation") {
  auto s = preset("paper-classical");
  CHECK_NOTHROW(s.validate());
  s.geometry.sample_length_m = -1;
  CHECK_THROWS_AS(s.validate(), DomainError);
  s = preset("paper-classical");
  s.systematics.arm_imbalance_m = 2e-3;
  CHECK_THROWS_AS(s.validate(), DomainError);
}
