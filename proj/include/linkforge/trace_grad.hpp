#pragma once

#include <vector>

#include "linkforge/mechanism.hpp"

namespace linkforge {

// Gradient with respect to the batch's initial joint positions, laid out like
// PaddedBatch::x / ::y.
struct InitialGradient {
    std::vector<double> gx, gy;  // B*N each
};

// Reverse-mode accumulation through the dyadic solve: given dL/d(trace)
// (same layout as TraceBatch::x/::y, [(b*N+n)*T + t]), returns dL/d(initial
// positions). Rigid lengths, the actuator arm length/phase and orientation
// signs are differentiated through to the initial positions; orientation
// signs themselves are held constant (they are piecewise constant in the
// positions). Mechanisms whose solve is infeasible get a zero gradient.
InitialGradient trace_gradient(const PaddedBatch& batch, int T,
                               const std::vector<double>& dL_dx,
                               const std::vector<double>& dL_dy);

} // namespace linkforge
