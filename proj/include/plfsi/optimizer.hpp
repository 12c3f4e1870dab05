#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>

namespace plfsi {

struct BoxOptions {
    int max_iterations = 200;
    double tolerance = 1e-8;   // relative objective reduction, as in L-BFGS-B's factr
    double pg_tolerance = 1e-10; // projected-gradient sup-norm
    double fd_step = 1e-6;     // central-difference step for the numerical gradient
    double max_step = 0.5;     // cap on the first trial step length (sup-norm)
};

struct BoxResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    std::string message;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

/// Projected BFGS for min f(x) s.t. lower <= x <= upper, with a central
/// difference gradient (one-sided at active bounds) and an Armijo
/// backtracking search along the projected path.
BoxResult minimize_box(const Objective& f, Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                       const Eigen::VectorXd& upper, const BoxOptions& options = {});

} // namespace plfsi
