#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

namespace linkforge {

struct LineSearchConfig {
    double c1 = 1e-4;        // Armijo slope fraction
    double c2 = 0.9;         // curvature fraction
    double backtrack = 0.5;  // trial shrink factor
    double init_step = 1.0;
    int max_trials = 20;
};

struct BfgsConfig {
    LineSearchConfig ls{};
    double grad_tol = 1e-12;       // converged when |g|_inf <= grad_tol
    double curvature_eps = 1e-10;  // skip H update when s.y <= this
};

// Per-instance optimizer state. `history` holds the objective at the start
// point followed by the value after every accepted step (non-increasing by
// construction of the guarded search).
struct OptState {
    Eigen::VectorXd x;
    Eigen::MatrixXd H;  // inverse-Hessian approximation
    double f = 0.0;
    Eigen::VectorXd g;
    bool failed = false;     // frozen at last feasible iterate
    bool converged = false;
    bool feasible_start = true;
    int steps_taken = 0;
    std::vector<double> history;
};

// Batched objective: fill f/g/feasible for each requested instance at the
// given point. Entries must be computed independently per instance (results
// may not depend on what else is in the request).
using BatchEvalFn = std::function<void(
    const std::vector<int>& idx, const std::vector<Eigen::VectorXd>& xs,
    std::vector<double>& f, std::vector<Eigen::VectorXd>& g,
    std::vector<std::uint8_t>& feasible)>;

// Single-instance objective for the standalone line search.
using EvalFn = std::function<bool(const Eigen::VectorXd& x, double& f,
                                  Eigen::VectorXd& g)>;  // returns feasible

struct WolfeResult {
    double step = 0.0;
    double f = 0.0;
    Eigen::VectorXd g;
    int trials = 0;
};

// Backtracking search from init_step: returns the largest trial step whose
// point is feasible and satisfies both Wolfe conditions, or nullopt when
// max_trials are exhausted (the caller freezes the instance for the
// iteration). Throws std::invalid_argument if direction is not a descent
// direction (g0.d >= 0).
std::optional<WolfeResult> wolfe_guarded_search(const Eigen::VectorXd& x,
                                                double f0,
                                                const Eigen::VectorXd& g0,
                                                const Eigen::VectorXd& direction,
                                                const EvalFn& eval,
                                                const LineSearchConfig& cfg = {});

// Lockstep batch BFGS: every instance runs up to `steps` quasi-Newton
// iterations with the guarded line search; trial evaluations across instances
// are batched into single BatchEvalFn calls. An instance whose search
// exhausts its trials gets one identity-reset retry; a second consecutive
// failure freezes it at its last feasible iterate. Instances infeasible at x0
// are frozen immediately (feasible_start=false); if every instance starts
// infeasible this throws InfeasibleStateError.
std::vector<OptState> bfgs_optimize_batch(const std::vector<Eigen::VectorXd>& x0,
                                          const BatchEvalFn& eval, int steps,
                                          const BfgsConfig& cfg = {});

} // namespace linkforge
