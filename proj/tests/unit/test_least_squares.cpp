#include <doctest.h>

#include <cmath>
#include <random>

#include "wlisim/errors.hpp"
#include "wlisim/least_squares.hpp"

using namespace wlisim;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// y = a + b x + c x^2 on 40 points with fixed pseudo-random noise.
struct Quadratic {
  VectorXd x, y;
  Quadratic() : x(40), y(40) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> noise(0.0, 0.05);
    for (int i = 0; i < 40; ++i) {
      x(i) = -2.0 + 0.1 * i;
      y(i) = 1.5 - 0.7 * x(i) + 0.3 * x(i) * x(i) + noise(rng);
    }
  }
  MatrixXd design() const {
    MatrixXd a(40, 3);
    for (int i = 0; i < 40; ++i) a.row(i) << 1.0, x(i), x(i) * x(i);
    return a;
  }
  ResidualFn residual() const {
    return [this](const VectorXd& p) -> VectorXd { return y - design() * p; };
  }
  JacobianFn jacobian() const {
    return [this](const VectorXd&) -> MatrixXd { return -design(); };
  }
};

}  // namespace

TEST_CASE("linear problem: gauss-newton start solves it in one step") {
  Quadratic q;
  SolverConfig cfg;
  cfg.initial_damping = 0.0;
  const auto r = solve_least_squares(q.residual(), q.jacobian(), VectorXd::Zero(3), cfg);
  // normal-equations oracle through a different factorisation
  const VectorXd expect = q.design().colPivHouseholderQr().solve(q.y);
  CHECK(r.converged);
  CHECK(r.iterations <= 2);
  for (int k = 0; k < 3; ++k) CHECK(r.params(k) == doctest::Approx(expect(k)).epsilon(1e-10));

  // covariance s^2 (A^T A)^-1 with s^2 = RSS / (m - n)
  const VectorXd res = q.y - q.design() * expect;
  const MatrixXd cov = res.squaredNorm() / 37.0 * (q.design().transpose() * q.design()).inverse();
  CHECK(r.covariance(0, 0) == doctest::Approx(cov(0, 0)).epsilon(1e-8));
  CHECK(r.covariance(1, 2) == doctest::Approx(cov(1, 2)).epsilon(1e-8));
  CHECK(r.jtj_inverse(2, 2) ==
        doctest::Approx((q.design().transpose() * q.design()).inverse()(2, 2)).epsilon(1e-10));
}

TEST_CASE("damped start still reaches the linear solution") {
  Quadratic q;
  const auto r = solve_least_squares(q.residual(), q.jacobian(), VectorXd::Constant(3, 10.0));
  const VectorXd expect = q.design().colPivHouseholderQr().solve(q.y);
  CHECK(r.converged);
  CHECK(r.status == SolverStatus::gradient);
  CHECK((r.params - expect).norm() < 1e-9);
}

TEST_CASE("rosenbrock valley") {
  // r = (10 (y - x^2), 1 - x), minimum at (1, 1) with zero residual.
  ResidualFn res = [](const VectorXd& p) {
    VectorXd r(2);
    r << 10.0 * (p(1) - p(0) * p(0)), 1.0 - p(0);
    return r;
  };
  JacobianFn jac = [](const VectorXd& p) {
    MatrixXd j(2, 2);
    j << -20.0 * p(0), 10.0, -1.0, 0.0;
    return j;
  };
  VectorXd p0(2);
  p0 << -1.2, 1.0;
  SolverConfig cfg;
  cfg.gradient_scale = 1.0;
  const auto r = solve_least_squares(res, jac, p0, cfg);
  CHECK(r.converged);
  CHECK(r.params(0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(r.params(1) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("accepted steps never increase the cost") {
  // exponential decay fit from a poor start
  VectorXd t(30), y(30);
  for (int i = 0; i < 30; ++i) {
    t(i) = 0.2 * i;
    y(i) = 3.0 * std::exp(-0.8 * t(i)) + 0.01 * std::sin(7.0 * i);
  }
  ResidualFn res = [&](const VectorXd& p) -> VectorXd {
    return y - (p(0) * (-p(1) * t.array()).exp()).matrix();
  };
  JacobianFn jac = [&](const VectorXd& p) {
    MatrixXd j(30, 2);
    j.col(0) = -(-p(1) * t.array()).exp().matrix();
    j.col(1) = (p(0) * t.array() * (-p(1) * t.array()).exp()).matrix();
    return j;
  };
  VectorXd p0(2);
  p0 << 0.5, 3.0;
  const auto r = solve_least_squares(res, jac, p0);
  CHECK(r.converged);
  REQUIRE(r.cost_history.size() >= 2);
  for (std::size_t k = 1; k < r.cost_history.size(); ++k) {
    CHECK(r.cost_history[k] <= r.cost_history[k - 1]);
  }
  CHECK(r.cost == r.cost_history.back());
  CHECK(r.params(1) == doctest::Approx(0.8).epsilon(0.02));
}

TEST_CASE("rank-deficient problems are reported") {
  // two identical columns
  ResidualFn res = [](const VectorXd& p) {
    VectorXd r(5);
    for (int i = 0; i < 5; ++i) r(i) = i - (p(0) + p(1)) * i;
    return r;
  };
  JacobianFn jac = [](const VectorXd&) {
    MatrixXd j(5, 2);
    for (int i = 0; i < 5; ++i) j.row(i) << -i, -i;
    return j;
  };
  CHECK_THROWS_AS(solve_least_squares(res, jac, VectorXd::Zero(2)), RankDeficientError);
}

TEST_CASE("shape errors") {
  ResidualFn res = [](const VectorXd& p) { return VectorXd::Constant(1, p(0)); };
  JacobianFn jac = [](const VectorXd&) { return MatrixXd::Ones(1, 2); };
  CHECK_THROWS_AS(solve_least_squares(res, jac, VectorXd::Zero(2)), std::invalid_argument);
}

TEST_CASE("iteration cap yields a non-converged status") {
  Quadratic q;
  SolverConfig cfg;
  cfg.max_iter = 1;
  cfg.initial_damping = 1e6;
  const auto r = solve_least_squares(q.residual(), q.jacobian(), VectorXd::Constant(3, 10.0), cfg);
  CHECK_FALSE(r.converged);
  CHECK(r.status == SolverStatus::max_iterations);
  CHECK(to_string(r.status) == "max_iterations");
}

TEST_CASE("numeric jacobian matches analytic") {
  ResidualFn res = [](const VectorXd& p) {
    VectorXd r(3);
    r << std::sin(p(0)) * p(1), std::exp(0.1 * p(1)), p(0) * p(0) * p(0);
    return r;
  };
  VectorXd p(2);
  p << 0.3, 2.0;
  MatrixXd exact(3, 2);
  exact << std::cos(0.3) * 2.0, std::sin(0.3), 0.0, 0.1 * std::exp(0.2), 3 * 0.09, 0.0;
  const MatrixXd j = numeric_jacobian(res, p);
  CHECK((j - exact).cwiseAbs().maxCoeff() < 1e-9);
}
