#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace condenser::qp {

/// minimize x'Hx + 2c'x  subject to  0 <= x <= upper  and, for every group g with a
/// finite target, sum_{i in g} x_i = target[g]. H must be symmetric positive definite.
struct Problem {
  const Eigen::MatrixXd* H = nullptr;
  Eigen::VectorXd c;
  Eigen::VectorXd upper;           // +inf where unbounded
  std::vector<int> group;          // group id per variable, 0-based
  Eigen::VectorXd target;          // per group; NaN means no equality
};

struct Options {
  double tol = 1e-7;        // KKT residual relative to the largest diagonal entry of H
  int max_iter = 20000;
  int max_polish = 60;      // active-set iterations per polish attempt
  std::string trace_path;   // CSV trace (iteration, objective, kkt_residual) when non-empty
};

struct Result {
  Eigen::VectorXd x;
  Eigen::VectorXd multiplier;  // per group, in gradient units (gradient = 2(Hx + c))
  double objective = 0;
  double kkt_residual = 0;     // absolute, gradient units
  double kkt_tolerance = 0;
  int iterations = 0;
  int polish_steps = 0;
  bool converged = false;
  std::vector<double> objective_log;  // non-increasing
};

/// Projected gradient (Barzilai-Borwein steps, exact line search) with a primal-dual
/// active-set polish. Starts from x0 when given (projected onto the feasible set).
/// Throws Infeasible if a group target exceeds its upper bounds, SolverDiverged on failure.
Result solve(const Problem& p, const Options& opt = {}, const Eigen::VectorXd* x0 = nullptr);

double objective(const Problem& p, const Eigen::VectorXd& x);

/// Natural-map KKT residual with multipliers chosen per group; returns the residual and
/// writes the multipliers.
double kkt_residual(const Problem& p, const Eigen::VectorXd& x, const Eigen::VectorXd& Hx,
                    Eigen::VectorXd* multipliers = nullptr);

/// Euclidean projection onto the feasible set.
Eigen::VectorXd project(const Problem& p, const Eigen::VectorXd& y);

}  // namespace condenser::qp
