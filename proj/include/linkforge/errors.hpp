#pragma once

#include <stdexcept>
#include <string>

namespace linkforge {

// One exception type per named failure mode. Batch-level infeasibility is NOT
// reported through these (it is encoded in feasibility masks); exceptions are
// for contract violations and unrecoverable states.

#define LINKFORGE_ERROR(Name)                                            \
    struct Name : std::runtime_error {                                   \
        explicit Name(const std::string& what) : std::runtime_error(what) {} \
    }

LINKFORGE_ERROR(UnsolvableError);         // no dyadic solution order exists
LINKFORGE_ERROR(ZeroArmError);            // actuator arm has zero length
LINKFORGE_ERROR(EmptyBatchError);
LINKFORGE_ERROR(GenerationExhaustedError);
LINKFORGE_ERROR(DegenerateCurveError);    // < 3 points or zero total length
LINKFORGE_ERROR(OpenCurveUnsupportedError);
LINKFORGE_ERROR(SingularError);           // |cos phi| > 1 in scalar solve
LINKFORGE_ERROR(InfeasibleStateError);    // optimization asked to start from NaN
LINKFORGE_ERROR(EmptySetError);           // metric over an empty point set
LINKFORGE_ERROR(LengthMismatchError);     // ordered distance over unequal N
LINKFORGE_ERROR(NoAdmissibleStepError);   // line search exhausted its trials
LINKFORGE_ERROR(ShapeMismatchError);      // tape op shape violation
LINKFORGE_ERROR(DivergenceError);         // training loss went non-finite
LINKFORGE_ERROR(CheckpointMismatchError); // corrupted or foreign checkpoint
LINKFORGE_ERROR(EmptyIndexError);         // retrieval over an empty/filtered-out index
LINKFORGE_ERROR(InfeasibleTraceError);    // layer assignment over an infeasible trace
LINKFORGE_ERROR(IoError);

#undef LINKFORGE_ERROR

} // namespace linkforge
