#include "linkforge/collision.hpp"

#include <algorithm>

#include "linkforge/errors.hpp"
#include "linkforge/geometry.hpp"

namespace linkforge {

namespace {

// Moves p toward q by cut, collapsing to q when the segment is shorter.
Vec2 trimmed_endpoint(Vec2 p, Vec2 q, double cut) {
    const Vec2 d = q - p;
    const double len = norm(d);
    if (len <= cut) return q;
    return p + d * (cut / len);
}

} // namespace

CollisionSets detect_collisions(const Mechanism& m, const TraceBatch& trace, int b,
                                const CollisionGeometry& geom) {
    if (b < 0 || b >= trace.B) throw InfeasibleTraceError("detect_collisions: batch row out of range");
    if (!trace.feasible[b]) throw InfeasibleTraceError("detect_collisions: trace row is infeasible");

    const int J = m.joint_count();
    const int L = int(m.linkages.size());
    const int T = trace.T;

    CollisionSets sets;
    sets.attached.resize(J);
    sets.colliding.resize(J);
    sets.overlap.resize(L);

    for (int i = 0; i < L; ++i) {
        sets.attached[m.linkages[i].first].push_back(i);
        sets.attached[m.linkages[i].second].push_back(i);
    }
    for (int j = 0; j < J; ++j)
        if (m.joints[j].is_fixed) sets.grounded.push_back(j);

    const double link_gap = 2.0 * geom.link_half_width + geom.clearance;
    const double link_gap2 = link_gap * link_gap;
    const double joint_gap = geom.joint_radius + geom.clearance;
    const double joint_gap2 = joint_gap * joint_gap;

    // Pairwise swept-capsule overlap. Pairs sharing a joint are checked on
    // segments trimmed back from the shared endpoint by the joint radius, so
    // contact at the hinge itself never counts.
    for (int i = 0; i < L; ++i) {
        const int ia = m.linkages[i].first, ib = m.linkages[i].second;
        for (int k = i + 1; k < L; ++k) {
            const int ka = m.linkages[k].first, kb = m.linkages[k].second;
            int shared = -1;
            if (ia == ka || ia == kb) shared = ia;
            else if (ib == ka || ib == kb) shared = ib;

            bool hit = false;
            for (int t = 0; t < T && !hit; ++t) {
                Vec2 a0 = trace.pos(b, ia, t), a1 = trace.pos(b, ib, t);
                Vec2 b0 = trace.pos(b, ka, t), b1 = trace.pos(b, kb, t);
                if (shared >= 0) {
                    if (ia == shared) a0 = trimmed_endpoint(a0, a1, geom.joint_radius);
                    else a1 = trimmed_endpoint(a1, a0, geom.joint_radius);
                    if (ka == shared) b0 = trimmed_endpoint(b0, b1, geom.joint_radius);
                    else b1 = trimmed_endpoint(b1, b0, geom.joint_radius);
                }
                hit = segment_segment_dist2(a0, a1, b0, b1) < link_gap2;
            }
            if (hit) {
                sets.overlap[i].push_back(k);
                sets.overlap[k].push_back(i);
            }
        }
    }

    // Joint-vs-linkage proximity, free joints only.
    for (int j = 0; j < J; ++j) {
        if (m.joints[j].is_fixed) continue;
        for (int i = 0; i < L; ++i) {
            const int ia = m.linkages[i].first, ib = m.linkages[i].second;
            if (ia == j || ib == j) continue;
            bool hit = false;
            for (int t = 0; t < T && !hit; ++t)
                hit = point_segment_dist2(trace.pos(b, j, t), trace.pos(b, ia, t),
                                          trace.pos(b, ib, t)) < joint_gap2;
            if (hit) sets.colliding[j].push_back(i);
        }
    }

    for (auto& o : sets.overlap) std::sort(o.begin(), o.end());
    return sets;
}

} // namespace linkforge
