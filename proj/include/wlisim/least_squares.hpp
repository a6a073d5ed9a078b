#pragma once

// Levenberg-Marquardt for small dense problems (a handful of parameters,
// hundreds of residuals).

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace wlisim {

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

struct SolverConfig {
  int max_iter = 200;
  double step_tol = 1e-12;  // on max_j |dp_j| / |p_j|
  /// Bound on |J^T r|_inf / (max column norm of J * residual scale).
  double grad_tol = 1e-10;
  /// Starting Marquardt factor: steps solve (J^T J + mu diag(J^T J)) dp = -J^T r.
  /// Zero starts as Gauss-Newton.
  double initial_damping = 1e-3;
  /// Residual scale used in the gradient test; the larger of this and the
  /// initial residual norm is used. Fits pass |y / sigma| so an exact fit
  /// with a vanishing residual can still be recognised as converged.
  double gradient_scale = 0.0;
};

enum class SolverStatus { gradient, step, max_iterations };

struct SolverResult {
  Eigen::VectorXd params;
  Eigen::MatrixXd covariance;  // s^2 (J^T J)^-1, s^2 = 2 cost / (m - n)
  Eigen::MatrixXd jtj_inverse;
  double cost = 0.0;           // 0.5 |r|^2
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
  SolverStatus status = SolverStatus::max_iterations;
  std::vector<double> cost_history;  // initial cost, then each accepted step
};

/// Throws RankDeficientError when J^T J is numerically singular at the
/// start or at the solution, std::invalid_argument on shape mismatches.
SolverResult solve_least_squares(const ResidualFn& residual, const JacobianFn& jacobian,
                                 const Eigen::VectorXd& init, const SolverConfig& config = {});

/// Central-difference Jacobian with per-parameter step h_j = rel * max(|p_j|, 1).
Eigen::MatrixXd numeric_jacobian(const ResidualFn& residual, const Eigen::VectorXd& p,
                                 double rel = 1e-6);

std::string to_string(SolverStatus s);

}  // namespace wlisim
