#pragma once

#include "aspcomp/interp.hpp"
#include "aspcomp/language.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace aspcomp {

// ------------------------------------------------------------------
// Specialized evaluation plans: everything Algorithm-shaped that depends on
// lambda's syntax (component order, rule classification, starter selection,
// join nesting, index signatures) is computed here, once. Executing a plan
// touches no Program, DependencyGraph or SccOrder.
// ------------------------------------------------------------------

// One argument position of a join step: a plan-local constant or a variable slot.
struct PlanArg {
    bool is_const = false;
    std::int32_t value = 0; // constant pool id, or slot index

    static PlanArg constant(std::int32_t pool_id) { return PlanArg{true, pool_id}; }
    static PlanArg slot(std::int32_t s) { return PlanArg{false, s}; }
    bool operator==(const PlanArg&) const = default;
};

struct PlanAtom {
    std::int32_t pred = 0; // plan predicate id
    std::vector<PlanArg> args;
    bool operator==(const PlanAtom&) const = default;
};

// Join steps after the starter, in execution order.
struct StepLookup {  // bind unbound slots from matching rows
    PlanAtom atom;
    std::uint32_t bound_mask = 0; // argument positions already bound when this step runs
    bool operator==(const StepLookup&) const = default;
};
struct StepCheckPresent { // fully bound positive literal
    PlanAtom atom;
    bool operator==(const StepCheckPresent&) const = default;
};
struct StepCheckAbsent {  // fully bound negative literal
    PlanAtom atom;
    bool operator==(const StepCheckAbsent&) const = default;
};
using JoinStep = std::variant<StepLookup, StepCheckPresent, StepCheckAbsent>;

struct JoinProgram {
    std::int32_t slot_count = 0;
    std::optional<PlanAtom> starter; // nullopt: run once with no bindings
    std::vector<JoinStep> steps;
    PlanAtom head;                 // projected head (rule joins)
    std::int32_t origin_rule = -1; // index into the source lambda (diagnostics)
    bool operator==(const JoinProgram&) const = default;
};

struct RecursiveVariant {
    std::int32_t starter_pred = 0; // working-set predicate that seeds this variant
    JoinProgram join;
    bool operator==(const RecursiveVariant&) const = default;
};

struct StratumBlock {
    std::vector<std::int32_t> member_preds; // predicates whose working sets drive the fixpoint
    std::vector<JoinProgram> exit_joins;
    std::vector<RecursiveVariant> recursive;
    bool operator==(const StratumBlock&) const = default;
};

// A constraint join emits the ground body instance built from `body_pattern`.
struct ConstraintJoin {
    JoinProgram join;
    std::vector<std::pair<PlanAtom, bool>> body_pattern; // (atom pattern, negative)
    std::int32_t origin_rule = -1;
    bool operator==(const ConstraintJoin&) const = default;
};

struct EvaluationPlan {
    std::vector<std::string> predicate_names;
    std::vector<std::uint32_t> predicate_arities;
    std::vector<Term> constant_pool;
    std::vector<StratumBlock> strata;
    std::vector<ConstraintJoin> constraints;
    std::vector<std::pair<std::int32_t, std::uint32_t>> index_requirements; // (pred, bound mask)

    // Back-trace metadata for the failed-constraint explanation.
    Program trace_rules; // lambda_r

    std::string canonical_lambda; // canonical text of lambda_r then lambda_c
    std::string digest;           // content hash of canonical_lambda

    bool operator==(const EvaluationPlan&) const = default;
};

// Compiles lambda into a plan; rejects non-stratified input. Deterministic
// given lambda's canonical text.
EvaluationPlan specialize(const Program& lambda_r, const Program& lambda_c);

// Runs the plan against a candidate interpretation; same outcome as
// evaluate_bottom_up on the lambda that produced the plan.
EvalOutcome execute_plan(const EvaluationPlan& plan, const Interpretation& m,
                         const std::set<std::string>& pi_prime_predicates, const EvalOptions& opts = {});

// Versioned binary serialization for the compilation cache.
std::string plan_serialize(const EvaluationPlan&);
std::optional<EvaluationPlan> plan_deserialize(const std::string& bytes);

} // namespace aspcomp
