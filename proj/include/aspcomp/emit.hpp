#pragma once

#include "aspcomp/plan.hpp"

#include <string>

namespace aspcomp {

struct SourceArtifact {
    std::string source;       // standalone C++ translation unit
    std::string digest;       // content digest of the canonical lambda
    std::string build_recipe; // how to turn the source into a loadable object
};

// Generates a self-contained evaluator for the plan: every rule becomes
// straight-line join code, the strata drive unrolled fixpoint loops, and the
// failed-constraint tracer runs over an embedded rule table. The object
// exposes `aspc_evaluate` / `aspc_digest` with C linkage and an optional
// standalone main (-DASPC_STANDALONE). Byte-deterministic.
SourceArtifact emit_source(const EvaluationPlan&);

} // namespace aspcomp
