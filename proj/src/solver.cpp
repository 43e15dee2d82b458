#include "linkforge/solver.hpp"

#include <cmath>

#include "linkforge/errors.hpp"
#include "linkforge/parallel.hpp"
#include "solve_kernel.hpp"

namespace linkforge {

Vec2 solve_joint(Vec2 X_j, Vec2 X_k, double l_ij, double l_ik, double sign) {
    if (dist2(X_j, X_k) <= 0.0) throw SingularError("known joints coincide");
    Vec2 out;
    detail::place(X_j.x, X_j.y, X_k.x, X_k.y, l_ij,
                  l_ij * l_ij - l_ik * l_ik, sign >= 0.0 ? 1.0 : -1.0, out.x,
                  out.y);
    if (!std::isfinite(out.x) || !std::isfinite(out.y))
        throw SingularError("|cos phi| > 1: triangle cannot close");
    return out;
}

TraceBatch solve_batch(const PaddedBatch& batch, int T) {
    if (batch.B == 0) throw EmptyBatchError("solve_batch over empty batch");
    if (T < 1) throw EmptyBatchError("solve_batch needs T >= 1");

    TraceBatch tr;
    tr.B = batch.B;
    tr.N = batch.N;
    tr.T = T;
    tr.x.resize(std::size_t(batch.B) * batch.N * T);
    tr.y.resize(tr.x.size());
    tr.feasible.assign(batch.B, 1);

    parallel_for(std::size_t(batch.B), [&](std::size_t b) {
        tr.feasible[b] = detail::solve_one(batch, int(b), T,
                                           tr.x.data() + tr.at(int(b), 0, 0),
                                           tr.y.data() + tr.at(int(b), 0, 0))
                             ? 1
                             : 0;
    });
    return tr;
}

TraceBatch solve_mechanism(const Mechanism& m, int T) {
    return solve_batch(pad_batch({m}), T);
}

std::vector<Vec2> joint_trace(const TraceBatch& traces, int b, int joint) {
    std::vector<Vec2> path(traces.T);
    for (int t = 0; t < traces.T; ++t) path[t] = traces.pos(b, joint, t);
    return path;
}

Curve coupler_curve(const Mechanism& m, int timesteps, int points) {
    TraceBatch tr = solve_mechanism(m, timesteps);
    if (!tr.feasible[0]) throw InfeasibleTraceError("mechanism trace is infeasible over a full rotation");
    Curve raw;
    raw.closed = true;
    raw.points = joint_trace(tr, 0, m.target_joint());
    return resample_equidistant(raw, points);
}

} // namespace linkforge
