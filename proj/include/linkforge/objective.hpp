#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <vector>

#include "linkforge/mechanism.hpp"
#include "linkforge/metrics.hpp"

namespace linkforge {

// Batched differentiable path-synthesis objective:
//
//   f_b(x) = w_od * ordered(coupler_b(x), target_b)
//          + w_cd * chamfer(target_b, coupler_b(x))
//
// where coupler_b is the target-joint trace over T timesteps and x packs
// every joint position of candidate b as [x0, y0, x1, y1, ...] (fixed and
// actuated joints move too). Each candidate carries its own fixed target,
// already rotated and resampled by the caller to exactly T points.
//
// operator() matches bfgs_optimize_batch's BatchEvalFn; bind with std::ref.
// Calls are parallel over the requested instances internally but the object
// itself is not reentrant.
class TraceObjective {
public:
    TraceObjective(std::vector<Mechanism> mechs,
                   std::vector<std::vector<Vec2>> targets, int T,
                   ObjectiveWeights weights = {});
    ~TraceObjective();
    TraceObjective(TraceObjective&&) noexcept;
    TraceObjective& operator=(TraceObjective&&) noexcept;

    int size() const;
    int dim(int b) const;               // 2 * joint count of instance b
    Eigen::VectorXd pack(int b) const;  // instance b's current joint vector

    // Copy of candidate b with the packed positions applied.
    Mechanism unpack(int b, const Eigen::VectorXd& x) const;

    void operator()(const std::vector<int>& idx,
                    const std::vector<Eigen::VectorXd>& xs,
                    std::vector<double>& f, std::vector<Eigen::VectorXd>& g,
                    std::vector<std::uint8_t>& feasible);

    // Objective breakdown at x, no gradient. Throws InfeasibleTraceError if
    // the trace does not close.
    CombinedResult metrics(int b, const Eigen::VectorXd& x);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace linkforge
