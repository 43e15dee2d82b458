#pragma once

#include <cstdint>
#include <vector>

#include "linkforge/curve.hpp"
#include "linkforge/mechanism.hpp"

namespace linkforge {

// Joint paths over one full actuator rotation, theta_t = 2*pi*t/T for
// t = 0..T-1 (t = 0 reproduces the initial configuration). Positions are laid
// out time-contiguous per joint so the solver's inner loops run down t.
struct TraceBatch {
    int B = 0, N = 0, T = 0;
    std::vector<double> x, y;             // [(b*N + n)*T + t]
    std::vector<std::uint8_t> feasible;   // per mechanism: every real joint
                                          // finite at every timestep
    std::size_t at(int b, int n, int t) const {
        return (std::size_t(b) * N + n) * std::size_t(T) + t;
    }
    Vec2 pos(int b, int n, int t) const {
        const auto i = at(b, n, t);
        return {x[i], y[i]};
    }
};

// One dyadic placement: the solved joint sits at distance l_ij from X_j and
// l_ik from X_k, on the side selected by orientation_sign (the sign of
// cross(Xk0 - Xj0, Xi0 - Xj0) at the initial configuration). Throws
// SingularError when the triangle cannot close (|cos phi| > 1) or the known
// joints coincide. The batch solver flags NaN instead of throwing.
Vec2 solve_joint(Vec2 X_j, Vec2 X_k, double l_ij, double l_ik,
                 double orientation_sign);

// Rigid lengths and orientation signs are measured once from the batch's
// initial positions; infeasible mechanisms get NaN positions from the first
// failing timestep onward and feasible=0. T >= 1.
TraceBatch solve_batch(const PaddedBatch& batch, int T);

// Single-mechanism convenience (batch of one).
TraceBatch solve_mechanism(const Mechanism& m, int T);

// Copy of one joint's path.
std::vector<Vec2> joint_trace(const TraceBatch& traces, int b, int joint);

// The target joint's closed path over one rotation, resampled to `points`
// equidistant samples (not normalized). Throws InfeasibleTraceError when the
// mechanism cannot complete the rotation.
Curve coupler_curve(const Mechanism& m, int timesteps, int points);

} // namespace linkforge
