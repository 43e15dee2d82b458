#pragma once

#include <vector>

#include "linkforge/mechanism.hpp"
#include "linkforge/solver.hpp"

namespace linkforge {

// Capsule/disk geometry used for swept collision checks, in normalized units
// (actuator arm length 0.05). Links are segments fattened by half_width;
// joints are disks of radius joint_radius.
struct CollisionGeometry {
    double link_half_width = 0.01;
    double joint_radius = 0.015;
    double clearance = 0.0;
};

// Collision structure of one mechanism over a full traced rotation.
//   attached[j]  linkage indices incident to joint j
//   colliding[j] non-attached linkages passing too close to joint j (free joints only)
//   overlap[i]   linkages whose swept capsules intersect linkage i's (symmetric)
//   grounded     fixed joint indices
// attached[j] and colliding[j] are disjoint; all lists sorted ascending.
struct CollisionSets {
    std::vector<std::vector<int>> attached;
    std::vector<std::vector<int>> colliding;
    std::vector<std::vector<int>> overlap;
    std::vector<int> grounded;

    int joint_count() const { return int(attached.size()); }
    int linkage_count() const { return int(overlap.size()); }
};

// Checks every timestep of trace row b. Two linkages overlap when their
// segments pass within 2*half_width (+clearance); pairs sharing a joint ignore
// the region within joint_radius of the shared endpoint. A linkage collides
// with a free joint when its segment passes within joint_radius (+clearance)
// of the joint center. Fixed joints never produce colliding entries.
// Throws InfeasibleTraceError when the trace row is infeasible.
CollisionSets detect_collisions(const Mechanism& m, const TraceBatch& trace, int b,
                                const CollisionGeometry& geom = {});

} // namespace linkforge
