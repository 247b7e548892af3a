#pragma once

#include "aspcomp/language.hpp"

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace aspcomp {

// Set of true ground atoms; everything else is false (closed world).
class Interpretation {
public:
    Interpretation() = default;
    explicit Interpretation(std::set<Atom> atoms) : atoms_(std::move(atoms)) {}

    bool contains(const Atom& a) const { return atoms_.count(a) != 0; }
    bool insert(Atom a) { return atoms_.insert(std::move(a)).second; }
    std::size_t size() const { return atoms_.size(); }
    bool empty() const { return atoms_.empty(); }

    auto begin() const { return atoms_.begin(); }
    auto end() const { return atoms_.end(); }
    const std::set<Atom>& atoms() const { return atoms_; }

    bool operator==(const Interpretation&) const = default;

private:
    std::set<Atom> atoms_;
};

std::string to_string(const Interpretation&); // atoms sorted, space separated

struct Substitution {
    std::map<std::string, Term> bindings;

    // Binds var to t, following var->var chains; false on clash.
    bool bind(const std::string& var, const Term& t);
    Term apply(const Term&) const;
    Atom apply(const Atom&) const;
    Literal apply(const Literal&) const;
};

// One-sided matcher: sigma with sigma(pattern) == ground, requires equal polarity.
std::optional<Substitution> match(const Literal& pattern, const Literal& ground);

// Two-sided unification of flat atoms (no function symbols, no occurs check needed).
std::optional<Substitution> unify(const Atom& a, const Atom& b);

struct GroundConstraint {
    std::vector<Literal> body; // canonical: positive literals sorted, then negative sorted

    static GroundConstraint canonical(std::vector<Literal> body);
    auto operator<=>(const GroundConstraint&) const = default;
};

std::string to_string(const GroundConstraint&);

struct EvalStats {
    // Runtime consultations of program syntax (rule lists, SCCs, classification).
    std::uint64_t dispatch_events = 0;
    std::uint64_t rule_evaluations = 0;  // join seeds executed
    std::uint64_t fixpoint_iterations = 0;
    std::uint64_t tuples_inserted = 0;
    std::uint64_t index_lookups = 0;
    std::uint64_t ground_instances = 0;  // violated constraint instances materialized
    std::uint64_t constraint_traces = 0; // BuildConstraint runs
    std::uint64_t trace_fallbacks = 0;
    std::uint64_t working_inserted = 0;  // atoms that ever entered a working set
    std::uint64_t recursive_seeded = 0;  // (recursive variant, working atom) evaluations

    void add(const EvalStats& o);
};

struct EvalOutcome {
    std::set<GroundConstraint> constraints;
    Interpretation m_ext;
    EvalStats stats;

    bool same_result(const EvalOutcome& o) const {
        return constraints == o.constraints && m_ext == o.m_ext;
    }
};

struct EvalOptions {
    std::size_t trace_budget = 512;        // NextLiteral selections per BuildConstraint call
    std::set<Term> universe_constants;     // extra constants for the fallback's closed-world part
};

// ------------------------------------------------------------------
// Relation store: per-predicate result sets over interned constants, with
// lazily built hash indices keyed by bound argument positions, and FIFO
// working sets for the semi-naive fixpoint.
// ------------------------------------------------------------------

using Tuple = std::vector<std::int32_t>;

class EvaluationState {
public:
    EvaluationState() = default;
    explicit EvaluationState(const Interpretation& init);

    int predicate_id(const std::string& name, std::size_t arity); // interns
    std::optional<int> find_predicate(const std::string& name) const;
    int constant_id(const Term& constant); // interns
    const Term& constant(int id) const { return constants_[static_cast<std::size_t>(id)]; }

    bool insert(int pred, const Tuple& t);         // into the result set; true if new
    bool insert_atom(const Atom& ground_atom);
    bool contains(int pred, const Tuple& t) const;
    bool contains_atom(const Atom& ground_atom) const;

    std::size_t relation_size(int pred) const;
    const std::vector<Tuple>& rows(int pred) const;
    // Row indices whose tuple agrees with `key` on the positions set in `mask`.
    const std::vector<std::uint32_t>& lookup(int pred, std::uint32_t mask, const Tuple& key);
    void ensure_index(int pred, std::uint32_t mask);

    // Working sets (W_P <= R_P, FIFO).
    void seed_working_from_result(int pred);
    void push_working(int pred, Tuple t);
    bool working_empty(int pred) const;
    std::optional<Tuple> pop_working(int pred);

    Atom tuple_to_atom(int pred, const Tuple& t) const;
    std::optional<Tuple> atom_to_tuple(const Atom& ground_atom) const; // nullopt if a constant is unknown
    std::set<Atom> relation_atoms(const std::string& predicate) const;
    Interpretation all_atoms() const;

    EvalStats stats; // counters shared by whichever engine drives this state

private:
    struct Relation {
        std::size_t arity = 0;
        std::vector<Tuple> rows;
        std::unordered_map<std::size_t, std::vector<std::uint32_t>> full_index; // tuple hash -> rows
        std::map<std::uint32_t, std::unordered_map<std::size_t, std::vector<std::uint32_t>>> indices;
        std::deque<Tuple> working;
    };

    static std::size_t hash_tuple(const Tuple& t);
    static std::size_t hash_key(std::uint32_t mask, const Tuple& t);
    void index_insert(Relation& rel, std::uint32_t mask, std::uint32_t row);

    std::vector<Relation> relations_;
    std::map<std::string, int> pred_ids_;
    std::vector<std::string> pred_names_;
    std::vector<Term> constants_;
    std::map<Term, int> constant_ids_;
    std::vector<std::uint32_t> empty_rows_;
};

// ------------------------------------------------------------------
// Generic (non-specialized) evaluation: semi-naive bottom-up computation of
// lambda's unique stable model over a candidate answer set, plus the failed
// constraint explanation procedure.
// ------------------------------------------------------------------

// Nested join loop of rule `r` seeded by `starter_value` at body position
// `starter_index` (must be a positive literal). Returns the derived head atoms.
std::set<Atom> evaluate_rule(const Rule& r, std::size_t starter_index, const Atom& starter_value,
                             EvaluationState& state);

// As evaluate_rule, for a constraint: returns the fully ground, satisfied
// body instances (violated constraint instances).
std::vector<std::vector<Literal>> ground_constraint_instances(const Rule& constraint, std::size_t starter_index,
                                                              const Atom& starter_value, EvaluationState& state);

struct TraceResult {
    GroundConstraint constraint;
    bool fallback_used = false;
};

// Failed-constraint explanation: traces the violated ground body back to
// literals over pi' that are true in m_pi. Falls back to the m_pi snapshot
// over lambda's dependency predicates when the trace cannot be represented
// or exceeds the budget.
TraceResult build_constraint(const std::vector<Literal>& violated_body, const Interpretation& m_pi,
                             const Interpretation& m_ext, const Program& lambda_r,
                             const std::set<std::string>& pi_prime_predicates, const EvalOptions& opts = {});

// The full bottom-up evaluation: result sets start at `m`, components are
// processed in topological order (exit rules once, recursive rules to
// fixpoint), then constraints are grounded and explained.
EvalOutcome evaluate_bottom_up(const Program& lambda_r, const Program& lambda_c, const Interpretation& m,
                               const std::set<std::string>& pi_prime_predicates, const EvalOptions& opts = {});

} // namespace aspcomp
