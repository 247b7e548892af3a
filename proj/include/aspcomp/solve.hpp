#pragma once

#include "aspcomp/analysis.hpp"
#include "aspcomp/cache.hpp"
#include "aspcomp/interp.hpp"
#include "aspcomp/language.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace aspcomp {

class GroundBudgetError : public AspError {
public:
    using AspError::AspError;
};

class IncoherentError : public AspError {
public:
    using AspError::AspError;
};

// Ground(p): every substitution of each rule's variables by constants of U_p.
// Used by the internal enumerator and the test oracles only.
Program ground_program(const Program& p, std::size_t budget = 10'000'000);

// Possible-atom grounder (the bench baseline): instantiates rule bodies by
// joining over derivable atoms instead of blind substitution, simplifying
// literals that cannot be true. Counts materialized instances per rule.
struct SmartGroundResult {
    Program ground;
    std::vector<std::uint64_t> per_rule_instances; // aligned with p.rules()
    std::uint64_t total_instances = 0;
};
SmartGroundResult ground_with_possible_atoms(const Program& p, std::size_t budget = 10'000'000);

// Lazy brute-force stable-model stream: lexicographic over the fixed atom
// ordering (predicate name, argument tuple), exhaustive. Learned constraints
// restrict later candidates.
class AnswerSetEnumerator {
public:
    explicit AnswerSetEnumerator(const Program& p, std::size_t ground_budget = 10'000'000);
    ~AnswerSetEnumerator();
    AnswerSetEnumerator(AnswerSetEnumerator&&) noexcept;
    AnswerSetEnumerator& operator=(AnswerSetEnumerator&&) noexcept;

    std::optional<Interpretation> next();
    void add_constraint(const GroundConstraint&);
    std::size_t ground_rule_count() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::vector<Interpretation> enumerate_answer_sets(const Program& p, std::size_t limit = SIZE_MAX,
                                                  std::size_t ground_budget = 10'000'000);

// Runs `command` as a shell pipeline: the program (plus learned constraints)
// goes to its stdin in the core grammar, the first output line is either
// INCOHERENT or a space-separated list of ground atoms.
std::optional<Interpretation> external_answer_set(const std::string& command, const Program& pi_prime,
                                                  const std::vector<GroundConstraint>& learned);

struct SolveStats {
    std::uint64_t candidates_examined = 0;
    std::uint64_t constraints_learned = 0;  // learning events (rejected candidates)
    std::uint64_t constraints_added = 0;    // distinct constraints accumulated
    std::uint64_t lambda_ground_instances = 0;
    std::uint64_t pi_prime_ground_rules = 0;
    double t_compile_s = 0;
    double t_candidates_s = 0;
    double t_eval_s = 0;
    EvalStats eval;
};

struct SolveOptions {
    Backend backend = Backend::interp;
    std::filesystem::path cache_dir; // empty: build in memory
    std::string external_command;    // empty: internal enumerator
    std::size_t candidate_budget = 100'000;
    std::size_t ground_budget = 10'000'000;
    std::size_t trace_budget = 512;
    EmitConfig emit;
    CacheStats* cache_stats = nullptr;
};

struct SolveResult {
    enum class Status { answer, incoherent, budget_exceeded };
    Status status = Status::incoherent;
    Interpretation model; // meaningful when status == answer
    SolveStats stats;
    std::vector<GroundConstraint> learned;

    bool is_answer() const { return status == Status::answer; }
};

// The main loop: compile lambda, draw candidate answer sets of pi', evaluate
// lambda^eval, learn returned constraints, repeat until an extension or
// incoherence.
SolveResult solve(const Program& pi_prime, const Program& lambda_r, const Program& lambda_c,
                  const SolveOptions& opts = {});

// Unique answer set of a stratified, disjunction-free program via the
// compiled path (facts become the candidate, the rest becomes lambda).
// Throws IncoherentError when a constraint is violated.
Interpretation perfect_model(const Program& p, const SolveOptions& opts = {});

} // namespace aspcomp
