#include "wlisim/least_squares.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "wlisim/errors.hpp"

namespace wlisim {
namespace {

void check_rank(const Eigen::MatrixXd& jtj) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(jtj);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return;
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  if (!(smax > 0.0) || !std::isfinite(smax) || smin <= smax * 1e-14 * static_cast<double>(jtj.rows())) {
    throw RankDeficientError("normal equations are singular (condition " +
                             std::to_string(smin > 0.0 ? smax / smin : INFINITY) + ")");
  }
}

double max_column_norm(const Eigen::MatrixXd& j) {
  double m = 0.0;
  for (Eigen::Index c = 0; c < j.cols(); ++c) m = std::max(m, j.col(c).norm());
  return m;
}

double relative_step(const Eigen::VectorXd& step, const Eigen::VectorXd& p) {
  double m = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    m = std::max(m, std::abs(step(k)) / (std::abs(p(k)) + 1e-12));
  }
  return m;
}

}  // namespace

std::string to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::gradient: return "gradient";
    case SolverStatus::step: return "step";
    case SolverStatus::max_iterations: return "max_iterations";
  }
  return "unknown";
}

Eigen::MatrixXd numeric_jacobian(const ResidualFn& residual, const Eigen::VectorXd& p,
                                 double rel) {
  const Eigen::VectorXd r0 = residual(p);
  Eigen::MatrixXd j(r0.size(), p.size());
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    const double h = rel * std::max(std::abs(p(k)), 1.0);
    Eigen::VectorXd a = p, b = p;
    a(k) += h;
    b(k) -= h;
    j.col(k) = (residual(a) - residual(b)) / (2.0 * h);
  }
  return j;
}

SolverResult solve_least_squares(const ResidualFn& residual, const JacobianFn& jacobian,
                                 const Eigen::VectorXd& init, const SolverConfig& config) {
  const Eigen::Index n = init.size();
  Eigen::VectorXd p = init;
  Eigen::VectorXd r = residual(p);
  const Eigen::Index m = r.size();
  if (n == 0 || m < n) throw std::invalid_argument("need at least as many residuals as parameters");
  Eigen::MatrixXd j = jacobian(p);
  if (j.rows() != m || j.cols() != n) throw std::invalid_argument("Jacobian shape mismatch");

  SolverResult out;
  double cost = 0.5 * r.squaredNorm();
  out.cost_history.push_back(cost);
  const double r_scale = std::max(r.norm(), config.gradient_scale);

  Eigen::MatrixXd jtj = j.transpose() * j;
  Eigen::VectorXd g = j.transpose() * r;
  check_rank(jtj);

  auto gradient_measure = [&](const Eigen::MatrixXd& jac, const Eigen::VectorXd& grad) {
    const double denom = max_column_norm(jac) * r_scale;
    return denom > 0.0 ? grad.cwiseAbs().maxCoeff() / denom : 0.0;
  };

  double mu = config.initial_damping;
  constexpr double kMuRestart = 1e-3;
  constexpr double kMuGiveUp = 1e20;
  // Large weighted residuals of cos(phase) with phases of 100+ rad carry
  // rounding noise near 1e-13 of the cost.
  constexpr double kCostResolution = 1e-12;
  out.gradient_norm = gradient_measure(j, g);
  out.status = SolverStatus::max_iterations;

  int it = 0;
  if (out.gradient_norm <= config.grad_tol) {
    out.status = SolverStatus::gradient;
    out.converged = true;
  }
  while (!out.converged && it < config.max_iter) {
    ++it;
    // Marquardt scaling: damp with the diagonal of J^T J.
    Eigen::MatrixXd a = jtj;
    a.diagonal() += mu * jtj.diagonal();
    const Eigen::VectorXd step = a.ldlt().solve(-g);
    const Eigen::VectorXd trial = p + step;
    const Eigen::VectorXd r_trial = residual(trial);
    const double cost_trial = 0.5 * r_trial.squaredNorm();

    bool accept = std::isfinite(cost_trial) && cost_trial < cost;
    Eigen::MatrixXd j_trial;
    bool have_j_trial = false;
    if (!accept && std::isfinite(cost_trial) && cost_trial <= cost * (1.0 + kCostResolution)) {
      // Below the evaluation noise of the cost the gradient still discriminates.
      j_trial = jacobian(trial);
      have_j_trial = true;
      accept = gradient_measure(j_trial, j_trial.transpose() * r_trial) < out.gradient_norm;
    }

    if (accept) {
      p = trial;
      r = r_trial;
      cost = cost_trial;
      out.cost_history.push_back(cost);
      j = have_j_trial ? j_trial : jacobian(p);
      jtj = j.transpose() * j;
      g = j.transpose() * r;
      mu = std::max(mu / 10.0, mu > 0.0 ? 1e-15 : 0.0);
      out.gradient_norm = gradient_measure(j, g);
      if (out.gradient_norm <= config.grad_tol) {
        out.status = SolverStatus::gradient;
        out.converged = true;
        break;
      }
      if (relative_step(step, p) <= config.step_tol) {
        out.status = SolverStatus::step;
        break;
      }
    } else {
      mu = mu > 0.0 ? mu * 10.0 : kMuRestart;
      if (mu > kMuGiveUp) {
        // No representable decrease left along any damped direction.
        out.status = SolverStatus::step;
        break;
      }
    }
  }

  check_rank(jtj);
  out.params = p;
  out.cost = cost;
  out.iterations = it;
  out.jtj_inverse = jtj.inverse();
  const double dof = static_cast<double>(std::max<Eigen::Index>(m - n, 1));
  out.covariance = (2.0 * cost / dof) * out.jtj_inverse;
  return out;
}

}  // namespace wlisim
