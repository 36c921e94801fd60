#pragma once

#include <Eigen/Core>

#include <functional>
#include <vector>

namespace boundcue {

struct LbfgsOptions {
    int max_iters = 400;
    /// Stop when (f_prev - f) / max(|f_prev|, |f|) falls below this.
    double rel_tol = 1e-7;
    int memory = 10;
    double grad_tol = 1e-10;
    int max_line_search = 40;
    double c1 = 1e-4;  // sufficient decrease
    double c2 = 0.9;   // curvature
};

struct LbfgsResult {
    Eigen::VectorXd x;
    double f = 0.0;
    Eigen::VectorXd g;
    int iterations = 0;
    bool converged = false;
    bool line_search_failed = false;
};

/// f(x, grad) -> value, writing the gradient into `grad`.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;
/// Called after every accepted step with the iteration number (1-based).
using IterationCallback =
    std::function<void(int iter, const Eigen::VectorXd& x, double f, const Eigen::VectorXd& g)>;

/// Limited-memory BFGS with a strong-Wolfe line search (initial step 1).
/// Never throws on numerical trouble: a failed line search returns the best
/// point so far with `line_search_failed` set.
LbfgsResult minimize_lbfgs(const Objective& f, Eigen::VectorXd x0, const LbfgsOptions& opts,
                           const IterationCallback& on_iteration = {});

}  // namespace boundcue
