#pragma once

#include "linkforge/mechanism.hpp"
#include "linkforge/rng.hpp"

namespace linkforge {

struct GeneratorConfig {
    int n_joints_max = 20;   // >= 5
    int retry_budget = 100;  // whole-mechanism attempts before giving up
    int sim_timesteps = 360; // full-rotation feasibility check resolution
};

// Random dyadic mechanism: joints 0 (fixed) and 1 (free, actuated) seed the
// build, a grounded rocker driven by the crank comes next, then fixed joints
// or dyads over two existing joints are appended with positions uniform in
// [-0.3, 0.3]^2. Each added dyad must stay feasible over the full rotation;
// unused fixed joints are dropped.
//
// The last joint is the target, and its parents are constrained so the traced
// path is a genuine coupler curve: a joint linked to a motionless joint can
// only sweep a circular arc around it, and one whose parents both move
// rigidly with the crank sweeps an exact circle, so such joints make useless
// targets (every circle normalizes to the same curve). That also puts the
// minimum joint count at 5: ground, crank, second ground, rocker, coupler.
//
// Output passes validate() and solves feasibly at sim_timesteps. Throws
// GenerationExhaustedError when the budget runs out.
Mechanism generate_random(const GeneratorConfig& cfg, Rng& rng);

} // namespace linkforge
