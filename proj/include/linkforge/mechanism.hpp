#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "linkforge/geometry.hpp"

namespace linkforge {

struct Joint {
    Vec2 pos;
    bool is_fixed = false;
    bool is_actuated = false;  // true only for joint 1
    bool is_target = false;
};

// Planar dyadic linkage. Conventions baked into every consumer:
//   - joint 0 is fixed, joint 1 is free and actuated, linkage (0,1) is the
//     actuator arm;
//   - every free joint other than joint 1 has exactly two incident linkages;
//   - linkages are stored with lo < hi, sorted lexicographically.
struct Mechanism {
    std::vector<Joint> joints;
    std::vector<std::pair<int, int>> linkages;
    // Permutation of joint indices in solve order (fixed joints ascending,
    // then joint 1, then each solved free joint). Empty until computed.
    std::vector<int> solution_order;

    int joint_count() const { return int(joints.size()); }
    int target_joint() const {
        for (int i = 0; i < joint_count(); ++i)
            if (joints[i].is_target) return i;
        return -1;
    }
};

// One dyadic solve: joint is placed from already-known neighbors (j, k), with
// j the lower-indexed neighbor. Rigid lengths and orientation sign come from
// the initial positions.
struct SolveStep {
    int joint;
    int nbr_j;
    int nbr_k;
};

struct ValidationReport {
    bool ok = false;
    std::vector<std::string> problems;
    // (solved, j, k) triples whose initial positions are collinear within
    // tolerance 1e-9 on the orientation cross product.
    std::vector<std::array<int, 3>> degenerate_triangles;
};

// Batch of mechanisms padded to a common joint count with unconnected fixed
// joints at the origin. Padding joints take no part in solving; true joints
// solve exactly as they would alone.
struct PaddedBatch {
    int B = 0;
    int N = 0;                              // padded joint count
    std::vector<double> x, y;               // B*N initial positions, [b*N + n]
    std::vector<std::uint8_t> fixed_mask;   // B*N (padding counts as fixed)
    std::vector<std::uint8_t> real_mask;    // B*N
    std::vector<int> n_joints;              // true joint count per mechanism
    std::vector<int> target_joint;          // per mechanism, -1 if none
    std::vector<std::vector<SolveStep>> plans;

    std::size_t at(int b, int n) const { return std::size_t(b) * N + n; }
};

// Solve order via dyadic propagation: known = {fixed joints} + {joint 1};
// repeatedly pick the lowest-indexed unknown free joint with two known
// neighbors. Throws UnsolvableError when free joints remain unreachable.
// Does not mutate the mechanism.
std::vector<int> compute_solution_order(const Mechanism& m);

// Ordered solve steps for the free joints other than joint 1 (derived from
// compute_solution_order; neighbor j is the lower-indexed one).
std::vector<SolveStep> solve_plan(const Mechanism& m);

// Structural and geometric checks; never throws. ok means: joint 0 fixed,
// joint 1 free+actuated, arm linkage present, exact dyadic degrees, linkage
// list canonical (lo<hi, sorted, unique, in range), at most one target joint
// (a free one), a solution order exists, and no degenerate solve triangle.
ValidationReport validate(const Mechanism& m);

// Canonical pose: joint 0 at the origin, actuator arm length 0.05, arm angle
// zero. Idempotent. Throws ZeroArmError when joints 0 and 1 coincide.
Mechanism normalize_mechanism(const Mechanism& m);

// Throws EmptyBatchError on an empty input; mechanisms must pass validate.
PaddedBatch pad_batch(const std::vector<Mechanism>& mechanisms);

} // namespace linkforge
