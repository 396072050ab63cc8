#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace sgmvar {

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct BfgsOptions {
    int max_iterations = 300;
    double gradient_step = 1e-6;  // relative: h = step * max(1, |x_i|)
    double convergence_tol = 1e-5;
    int max_backtracks = 50;
};

struct BfgsResult {
    Eigen::VectorXd x;
    double value = 0.0;
    double gradient_norm = 0.0;
    bool converged = false;
    int iterations = 0;
    std::vector<double> trace;  // objective after each accepted step, starting at x0
    std::string message;
};

/// Central finite-difference gradient. Falls back to a one-sided difference
/// when one side is infeasible (non-finite objective); zero if both are.
Eigen::VectorXd numeric_gradient(const Objective& f, const Eigen::VectorXd& x, double rel_step);

/// Central-difference Hessian with relative step, symmetrized.
Eigen::MatrixXd numeric_hessian(const Objective& f, const Eigen::VectorXd& x, double rel_step = 1e-4);

/// Quasi-Newton (BFGS) ascent with Armijo backtracking. The objective value
/// never decreases across accepted iterations; if no ascent step is found
/// the best point so far is returned with converged = false.
BfgsResult maximize_bfgs(const Objective& f, const Eigen::VectorXd& x0, const BfgsOptions& options = {});

}  // namespace sgmvar
