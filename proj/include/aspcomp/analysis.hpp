#pragma once

#include "aspcomp/language.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace aspcomp {

struct DependencyEdge {
    std::string from;
    std::string to;
    bool negative = false;

    auto operator<=>(const DependencyEdge&) const = default;
};

// Labeled predicate graph: vertices are the predicates occurring in some head,
// edges run from body predicates to head predicates (+ for positive body, -
// for negative body) and between distinct atoms of a disjunctive head (-).
struct DependencyGraph {
    std::vector<std::string> vertices; // first-head-occurrence order
    std::set<DependencyEdge> edges;
    // Position of the first textual occurrence of every predicate (heads and
    // bodies); used for deterministic tie-breaking.
    std::map<std::string, int> first_occurrence;

    bool has_vertex(const std::string& p) const;
};

DependencyGraph dependency_graph(const Program&);

struct SccOrder {
    std::vector<std::vector<std::string>> components; // topologically sorted
    std::map<std::string, std::size_t> component_of;
};

// Condensation of the dependency graph; every edge source's component appears
// no later than its target's. Ties broken by smallest first-occurrence
// position of any member predicate.
SccOrder scc_order(const DependencyGraph&);

struct StratificationResult {
    bool stratified = true;
    std::vector<std::string> witness_cycle; // a cycle through a negative edge, when not stratified
};

StratificationResult is_stratified(const DependencyGraph&);

struct CompilabilityReport {
    bool compilable = false;
    bool stratified = false;
    std::vector<std::string> negative_cycle;  // witness when not stratified
    std::set<std::string> head_overlap;       // lambda head predicates occurring in pi \ lambda

    std::string describe() const;
};

class CompilabilityError : public AspError {
public:
    explicit CompilabilityError(CompilabilityReport report);
    const CompilabilityReport& report() const { return report_; }

private:
    CompilabilityReport report_;
};

// Def. 3 check; throws AspError if lambda is not a rule-wise sub-multiset of pi.
CompilabilityReport is_compilable(const Program& lambda, const Program& pi);

struct SccRules {
    std::vector<std::size_t> exit_rules;      // indices into lambda_r.rules()
    std::vector<std::size_t> recursive_rules;
};

// Per component of `order`: rules with a head in the component, split into
// exit rules (all body predicates precede the component) and recursive rules.
std::vector<SccRules> classify_rules(const Program& lambda_r, const SccOrder& order);

struct SplitProgram {
    Program pi_prime; // pi \ lambda
    Program lambda_r; // lambda's rules with a head
    Program lambda_c; // lambda's constraints
};

// Splits pi by 0-based rule indices; throws CompilabilityError if the
// selection is not compilable w.r.t. pi.
SplitProgram split_program(const Program& pi, const std::set<std::size_t>& selection);

// Greedy maximal compilable selection: starts from all constraints and adds
// rules (closed over shared head predicates) while Def. 3 holds. Facts stay
// in pi'. Deterministic.
std::set<std::size_t> suggest_subprogram(const Program& pi);

} // namespace aspcomp
