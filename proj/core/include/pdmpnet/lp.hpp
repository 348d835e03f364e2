#pragma once

#include <Eigen/Dense>

#include <string>

#include "pdmpnet/errors.hpp"

namespace pdmpnet {

/// min c·x subject to A x = b, x ≥ 0.
struct LinearProgram {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
};

struct LpOptions {
    long max_pivots = 1000000;
    int refactor_every = 100;
    int degenerate_switch = 50;  ///< consecutive degenerate pivots before Bland's rule takes over
    double feasibility_tol = 1e-9;
};

struct LpSolution {
    std::string status = "optimal";
    Eigen::VectorXd primal;
    Eigen::VectorXd dual;  ///< one value per constraint row
    double objective = 0.0;
    double dual_objective = 0.0;
    long pivots = 0;
    double primal_residual = 0.0;   ///< |A x − b|_∞
    double dual_infeasibility = 0.0;  ///< max(0, −min reduced cost)
    double complementary_slackness = 0.0;  ///< Σ x_j·|reduced cost_j|
    int redundant_rows = 0;
};

/// Two-phase dense revised simplex with an explicit basis inverse (product
/// updates, refactorized periodically).  Entering variables are chosen by the
/// most negative reduced cost, switching to Bland's smallest-index rule after
/// a run of degenerate pivots.  Throws Infeasible, Unbounded, IterationLimit.
LpSolution solve_lp(const LinearProgram& lp, const LpOptions& opt = {});

}  // namespace pdmpnet
