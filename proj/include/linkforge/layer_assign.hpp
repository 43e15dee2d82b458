#pragma once

#include <string>
#include <vector>

#include "linkforge/collision.hpp"

namespace linkforge {

// Integer layer per linkage, minimizing the maximum layer in use.
//   z[i]     layer of linkage i, in [0, L-1]
//   u[j]/v[j] lowest/highest layer among linkages attached to joint j
//   M        max z (0 when L == 0)
// When feasible is false no assignment satisfies the constraints and the
// other fields are empty/zero.
struct LayerAssignment {
    std::vector<int> z;
    std::vector<int> u, v;
    int M = 0;
    bool feasible = false;
};

// Exact branch-and-bound over integer layers. Constraints:
//   - overlapping linkages occupy distinct layers;
//   - for every non-grounded joint j, each linkage in colliding[j] lies either
//     strictly above every attached layer or strictly below every attached
//     layer (z outside the integer interval [u_j, v_j]).
// Deterministic: returns the lexicographically first optimum in a fixed search
// order. Infeasibility is reported via the result, never thrown.
LayerAssignment assign_layers(const CollisionSets& sets, int linkage_count);

// Emits the same program as CPLEX-style LP text so an external MILP solver can
// cross-check assign_layers. Variables: z_<i>, u_<j>, v_<j>, ordering binaries
// x_<i>_<k>, clearance selectors y_<j>_<i>, objective variable M. The big
// constant in the indicator rows is 2 * linkage_count.
std::string export_lp(const CollisionSets& sets, int linkage_count);

// True when every constraint encoded by export_lp holds for the given layers
// (ignores u/v/M bookkeeping, recomputing intervals from z).
bool check_assignment(const CollisionSets& sets, const std::vector<int>& z);

} // namespace linkforge
