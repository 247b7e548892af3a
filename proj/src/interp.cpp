#include "aspcomp/interp.hpp"

#include "aspcomp/analysis.hpp"

#include <algorithm>
#include <cassert>
#include <functional>

namespace aspcomp {

std::string to_string(const Interpretation& m) {
    std::string out;
    for (const Atom& a : m) {
        if (!out.empty()) out += " ";
        out += to_string(a);
    }
    return out;
}

void EvalStats::add(const EvalStats& o) {
    dispatch_events += o.dispatch_events;
    rule_evaluations += o.rule_evaluations;
    fixpoint_iterations += o.fixpoint_iterations;
    tuples_inserted += o.tuples_inserted;
    index_lookups += o.index_lookups;
    ground_instances += o.ground_instances;
    constraint_traces += o.constraint_traces;
    trace_fallbacks += o.trace_fallbacks;
    working_inserted += o.working_inserted;
    recursive_seeded += o.recursive_seeded;
}

// ------------------------------------------------------------------
// Substitution and unification
// ------------------------------------------------------------------

Term Substitution::apply(const Term& t) const {
    const Term* cur = &t;
    // Follow var->var chains; terminates because binding walks never cycle
    // (bind() resolves both sides before linking).
    while (cur->is_variable()) {
        auto it = bindings.find(cur->name);
        if (it == bindings.end()) break;
        cur = &it->second;
    }
    return *cur;
}

bool Substitution::bind(const std::string& var, const Term& t) {
    Term lhs = apply(Term::variable(var));
    Term rhs = apply(t);
    if (lhs == rhs) return true;
    if (lhs.is_variable()) {
        bindings[lhs.name] = rhs;
        return true;
    }
    if (rhs.is_variable()) {
        bindings[rhs.name] = lhs;
        return true;
    }
    return false; // two distinct constants
}

Atom Substitution::apply(const Atom& a) const {
    Atom out;
    out.predicate = a.predicate;
    out.args.reserve(a.args.size());
    for (const Term& t : a.args) out.args.push_back(apply(t));
    return out;
}

Literal Substitution::apply(const Literal& l) const {
    return Literal{apply(l.atom), l.negative};
}

std::optional<Substitution> match(const Literal& pattern, const Literal& ground) {
    if (pattern.negative != ground.negative) return std::nullopt;
    if (pattern.atom.predicate != ground.atom.predicate) return std::nullopt;
    if (pattern.atom.args.size() != ground.atom.args.size()) return std::nullopt;
    Substitution sigma;
    for (std::size_t i = 0; i < pattern.atom.args.size(); ++i) {
        const Term& p = pattern.atom.args[i];
        const Term& g = ground.atom.args[i];
        if (p.is_constant()) {
            if (p != g) return std::nullopt;
        } else if (!sigma.bind(p.name, g)) {
            return std::nullopt;
        }
    }
    return sigma;
}

std::optional<Substitution> unify(const Atom& a, const Atom& b) {
    if (a.predicate != b.predicate || a.args.size() != b.args.size()) return std::nullopt;
    Substitution sigma;
    for (std::size_t i = 0; i < a.args.size(); ++i) {
        Term x = sigma.apply(a.args[i]);
        Term y = sigma.apply(b.args[i]);
        if (x == y) continue;
        if (x.is_variable()) {
            sigma.bindings[x.name] = y;
        } else if (y.is_variable()) {
            sigma.bindings[y.name] = x;
        } else {
            return std::nullopt;
        }
    }
    return sigma;
}

GroundConstraint GroundConstraint::canonical(std::vector<Literal> body) {
    std::sort(body.begin(), body.end(), [](const Literal& a, const Literal& b) {
        if (a.negative != b.negative) return !a.negative; // positives first
        return a.atom < b.atom;
    });
    body.erase(std::unique(body.begin(), body.end()), body.end());
    return GroundConstraint{std::move(body)};
}

std::string to_string(const GroundConstraint& c) {
    std::string out = ":-";
    for (std::size_t i = 0; i < c.body.size(); ++i) {
        out += i ? ", " : " ";
        out += to_string(c.body[i]);
    }
    out += ".";
    return out;
}

// ------------------------------------------------------------------
// EvaluationState
// ------------------------------------------------------------------

std::size_t EvaluationState::hash_tuple(const Tuple& t) {
    std::size_t h = 1469598103934665603ull;
    for (std::int32_t v : t) {
        h ^= static_cast<std::size_t>(static_cast<std::uint32_t>(v));
        h *= 1099511628211ull;
    }
    return h;
}

std::size_t EvaluationState::hash_key(std::uint32_t mask, const Tuple& t) {
    std::size_t h = 1469598103934665603ull ^ mask;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(mask & (1u << i))) continue;
        h ^= static_cast<std::size_t>(static_cast<std::uint32_t>(t[i]));
        h *= 1099511628211ull;
    }
    return h;
}

EvaluationState::EvaluationState(const Interpretation& init) {
    for (const Atom& a : init) insert_atom(a);
}

int EvaluationState::predicate_id(const std::string& name, std::size_t arity) {
    auto it = pred_ids_.find(name);
    if (it != pred_ids_.end()) return it->second;
    int id = static_cast<int>(relations_.size());
    pred_ids_.emplace(name, id);
    pred_names_.push_back(name);
    relations_.emplace_back();
    relations_.back().arity = arity;
    return id;
}

std::optional<int> EvaluationState::find_predicate(const std::string& name) const {
    auto it = pred_ids_.find(name);
    if (it == pred_ids_.end()) return std::nullopt;
    return it->second;
}

int EvaluationState::constant_id(const Term& constant) {
    auto it = constant_ids_.find(constant);
    if (it != constant_ids_.end()) return it->second;
    int id = static_cast<int>(constants_.size());
    constant_ids_.emplace(constant, id);
    constants_.push_back(constant);
    return id;
}

bool EvaluationState::insert(int pred, const Tuple& t) {
    Relation& rel = relations_[static_cast<std::size_t>(pred)];
    std::size_t h = hash_tuple(t);
    auto& chain = rel.full_index[h];
    for (std::uint32_t row : chain)
        if (rel.rows[row] == t) return false;
    auto row = static_cast<std::uint32_t>(rel.rows.size());
    rel.rows.push_back(t);
    chain.push_back(row);
    for (auto& [mask, index] : rel.indices) index[hash_key(mask, t)].push_back(row);
    ++stats.tuples_inserted;
    return true;
}

bool EvaluationState::insert_atom(const Atom& a) {
    int pred = predicate_id(a.predicate, a.arity());
    Tuple t;
    t.reserve(a.args.size());
    for (const Term& term : a.args) t.push_back(constant_id(term));
    return insert(pred, t);
}

bool EvaluationState::contains(int pred, const Tuple& t) const {
    const Relation& rel = relations_[static_cast<std::size_t>(pred)];
    auto it = rel.full_index.find(hash_tuple(t));
    if (it == rel.full_index.end()) return false;
    for (std::uint32_t row : it->second)
        if (rel.rows[row] == t) return true;
    return false;
}

bool EvaluationState::contains_atom(const Atom& a) const {
    auto pred = find_predicate(a.predicate);
    if (!pred) return false;
    auto t = atom_to_tuple(a);
    return t && contains(*pred, *t);
}

std::size_t EvaluationState::relation_size(int pred) const {
    return relations_[static_cast<std::size_t>(pred)].rows.size();
}

const std::vector<Tuple>& EvaluationState::rows(int pred) const {
    return relations_[static_cast<std::size_t>(pred)].rows;
}

void EvaluationState::ensure_index(int pred, std::uint32_t mask) {
    Relation& rel = relations_[static_cast<std::size_t>(pred)];
    if (rel.indices.count(mask)) return;
    auto& index = rel.indices[mask];
    for (std::uint32_t row = 0; row < rel.rows.size(); ++row)
        index[hash_key(mask, rel.rows[row])].push_back(row);
}

const std::vector<std::uint32_t>& EvaluationState::lookup(int pred, std::uint32_t mask, const Tuple& key) {
    ++stats.index_lookups;
    ensure_index(pred, mask);
    Relation& rel = relations_[static_cast<std::size_t>(pred)];
    auto& index = rel.indices[mask];
    auto it = index.find(hash_key(mask, key));
    if (it == index.end()) return empty_rows_;
    return it->second;
}

void EvaluationState::seed_working_from_result(int pred) {
    Relation& rel = relations_[static_cast<std::size_t>(pred)];
    rel.working.assign(rel.rows.begin(), rel.rows.end());
    stats.working_inserted += rel.working.size();
}

void EvaluationState::push_working(int pred, Tuple t) {
    relations_[static_cast<std::size_t>(pred)].working.push_back(std::move(t));
    ++stats.working_inserted;
}

bool EvaluationState::working_empty(int pred) const {
    return relations_[static_cast<std::size_t>(pred)].working.empty();
}

std::optional<Tuple> EvaluationState::pop_working(int pred) {
    Relation& rel = relations_[static_cast<std::size_t>(pred)];
    if (rel.working.empty()) return std::nullopt;
    Tuple t = std::move(rel.working.front());
    rel.working.pop_front();
    return t;
}

Atom EvaluationState::tuple_to_atom(int pred, const Tuple& t) const {
    Atom a;
    a.predicate = pred_names_[static_cast<std::size_t>(pred)];
    a.args.reserve(t.size());
    for (std::int32_t id : t) a.args.push_back(constants_[static_cast<std::size_t>(id)]);
    return a;
}

std::optional<Tuple> EvaluationState::atom_to_tuple(const Atom& a) const {
    Tuple t;
    t.reserve(a.args.size());
    for (const Term& term : a.args) {
        auto it = constant_ids_.find(term);
        if (it == constant_ids_.end()) return std::nullopt;
        t.push_back(it->second);
    }
    return t;
}

std::set<Atom> EvaluationState::relation_atoms(const std::string& predicate) const {
    std::set<Atom> out;
    auto pred = find_predicate(predicate);
    if (!pred) return out;
    for (const Tuple& t : rows(*pred)) out.insert(tuple_to_atom(*pred, t));
    return out;
}

Interpretation EvaluationState::all_atoms() const {
    Interpretation out;
    for (std::size_t pred = 0; pred < relations_.size(); ++pred)
        for (const Tuple& t : relations_[pred].rows) out.insert(tuple_to_atom(static_cast<int>(pred), t));
    return out;
}

// ------------------------------------------------------------------
// Generic nested join loops
// ------------------------------------------------------------------

namespace {

// Slot-based binding environment for one rule evaluation.
struct JoinEnv {
    std::map<std::string, int> var_slot;
    std::vector<std::int32_t> values; // -1 = unbound

    int slot(const std::string& var) {
        auto it = var_slot.find(var);
        if (it != var_slot.end()) return it->second;
        int s = static_cast<int>(values.size());
        var_slot.emplace(var, s);
        values.push_back(-1);
        return s;
    }
};

// Precomputed per-literal slot pattern.
struct LiteralPattern {
    int pred = -1; // -1 when the predicate has no relation yet (always empty)
    bool negative = false;
    std::size_t arity = 0;
    // For each argument: constant id (>= 0) or ~slot (< 0 via onescomplement).
    std::vector<std::int32_t> spec;

    static std::int32_t const_spec(std::int32_t cid) { return cid; }
    static std::int32_t slot_spec(int slot) { return ~static_cast<std::int32_t>(slot); }
    static bool is_slot(std::int32_t s) { return s < 0; }
    static int slot_of(std::int32_t s) { return ~s; }
};

LiteralPattern make_pattern(const Literal& l, JoinEnv& env, EvaluationState& state) {
    LiteralPattern p;
    p.negative = l.negative;
    p.arity = l.atom.args.size();
    p.pred = state.predicate_id(l.atom.predicate, l.atom.args.size());
    for (const Term& t : l.atom.args) {
        if (t.is_constant())
            p.spec.push_back(LiteralPattern::const_spec(state.constant_id(t)));
        else
            p.spec.push_back(LiteralPattern::slot_spec(env.slot(t.name)));
    }
    return p;
}

bool pattern_fully_bound(const LiteralPattern& p, const std::vector<std::int32_t>& values) {
    for (std::int32_t s : p.spec)
        if (LiteralPattern::is_slot(s) && values[static_cast<std::size_t>(LiteralPattern::slot_of(s))] < 0)
            return false;
    return true;
}

Tuple pattern_image(const LiteralPattern& p, const std::vector<std::int32_t>& values) {
    Tuple t;
    t.reserve(p.spec.size());
    for (std::int32_t s : p.spec)
        t.push_back(LiteralPattern::is_slot(s) ? values[static_cast<std::size_t>(LiteralPattern::slot_of(s))] : s);
    return t;
}

// Binds the pattern against a ground tuple; records newly bound slots in
// `touched` so the caller can undo. False on mismatch.
bool pattern_bind(const LiteralPattern& p, const Tuple& row, std::vector<std::int32_t>& values,
                  std::vector<int>& touched) {
    for (std::size_t i = 0; i < p.spec.size(); ++i) {
        std::int32_t s = p.spec[i];
        if (!LiteralPattern::is_slot(s)) {
            if (row[i] != s) return false;
            continue;
        }
        int slot = LiteralPattern::slot_of(s);
        std::int32_t& v = values[static_cast<std::size_t>(slot)];
        if (v < 0) {
            v = row[i];
            touched.push_back(slot);
        } else if (v != row[i]) {
            return false;
        }
    }
    return true;
}

void undo_bindings(std::vector<std::int32_t>& values, std::vector<int>& touched, std::size_t from) {
    while (touched.size() > from) {
        values[static_cast<std::size_t>(touched.back())] = -1;
        touched.pop_back();
    }
}

std::uint32_t bound_mask(const LiteralPattern& p, const std::vector<std::int32_t>& values) {
    std::uint32_t mask = 0;
    for (std::size_t i = 0; i < p.spec.size(); ++i) {
        std::int32_t s = p.spec[i];
        if (!LiteralPattern::is_slot(s) || values[static_cast<std::size_t>(LiteralPattern::slot_of(s))] >= 0)
            mask |= (1u << i);
    }
    return mask;
}

// The generic join driver: after the starter is bound, repeatedly resolves
// any fully bound literal (containment / absence check), otherwise descends
// into the next positive literal in textual order via an index lookup.
template <typename Emit>
void join_recurse(std::vector<LiteralPattern>& pending, std::vector<bool>& done, EvaluationState& state,
                  std::vector<std::int32_t>& values, const Emit& emit) {
    std::vector<std::size_t> checked;
    for (std::size_t i = 0; i < pending.size(); ++i) {
        if (done[i]) continue;
        const LiteralPattern& p = pending[i];
        if (!pattern_fully_bound(p, values)) continue;
        Tuple img = pattern_image(p, values);
        bool present = state.contains(p.pred, img);
        if (p.negative == present) { // failed check
            for (std::size_t j : checked) done[j] = false;
            return;
        }
        done[i] = true;
        checked.push_back(i);
    }
    std::size_t next = pending.size();
    for (std::size_t i = 0; i < pending.size(); ++i) {
        if (!done[i] && !pending[i].negative) {
            next = i;
            break;
        }
    }
    if (next == pending.size()) {
        // Safety guarantees every negative literal became ground above.
        emit(values);
        for (std::size_t j : checked) done[j] = false;
        return;
    }
    LiteralPattern& p = pending[next];
    done[next] = true;
    std::uint32_t mask = bound_mask(p, values);
    Tuple key = pattern_image(p, values); // unbound slots hold -1, masked out of the key hash
    const auto& rows = state.lookup(p.pred, mask, key);
    const auto& rel_rows = state.rows(p.pred);
    std::vector<int> touched;
    for (std::uint32_t row : rows) {
        touched.clear();
        if (pattern_bind(p, rel_rows[row], values, touched)) join_recurse(pending, done, state, values, emit);
        undo_bindings(values, touched, 0);
    }
    done[next] = false;
    for (std::size_t j : checked) done[j] = false;
}

struct PreparedRule {
    JoinEnv env;
    std::vector<LiteralPattern> body;
    std::vector<LiteralPattern> head;
};

PreparedRule prepare_rule(const Rule& r, EvaluationState& state) {
    PreparedRule out;
    for (const Literal& l : r.body) out.body.push_back(make_pattern(l, out.env, state));
    for (const Atom& a : r.head) out.head.push_back(make_pattern(Literal{a, false}, out.env, state));
    return out;
}

} // namespace

std::set<Atom> evaluate_rule(const Rule& r, std::size_t starter_index, const Atom& starter_value,
                             EvaluationState& state) {
    assert(starter_index < r.body.size());
    assert(!r.body[starter_index].negative);
    ++state.stats.rule_evaluations;
    PreparedRule pr = prepare_rule(r, state);
    std::vector<std::int32_t> values(pr.env.values.size(), -1);
    auto starter_tuple = state.atom_to_tuple(starter_value);
    std::set<Atom> derived;
    if (!starter_tuple) return derived;
    std::vector<int> touched;
    if (!pattern_bind(pr.body[starter_index], *starter_tuple, values, touched)) return derived;
    std::vector<bool> done(pr.body.size(), false);
    done[starter_index] = true;
    join_recurse(pr.body, done, state, values, [&](const std::vector<std::int32_t>& vals) {
        for (const LiteralPattern& h : pr.head) derived.insert(state.tuple_to_atom(h.pred, pattern_image(h, vals)));
    });
    return derived;
}

std::vector<std::vector<Literal>> ground_constraint_instances(const Rule& constraint, std::size_t starter_index,
                                                              const Atom& starter_value, EvaluationState& state) {
    assert(constraint.is_constraint());
    ++state.stats.rule_evaluations;
    PreparedRule pr = prepare_rule(constraint, state);
    std::vector<std::int32_t> values(pr.env.values.size(), -1);
    std::vector<std::vector<Literal>> out;
    auto starter_tuple = state.atom_to_tuple(starter_value);
    if (!starter_tuple) return out;
    std::vector<int> touched;
    if (!pattern_bind(pr.body[starter_index], *starter_tuple, values, touched)) return out;
    std::vector<bool> done(pr.body.size(), false);
    done[starter_index] = true;
    join_recurse(pr.body, done, state, values, [&](const std::vector<std::int32_t>& vals) {
        std::vector<Literal> body;
        for (const LiteralPattern& p : pr.body)
            body.push_back(Literal{state.tuple_to_atom(p.pred, pattern_image(p, vals)), p.negative});
        out.push_back(std::move(body));
    });
    return out;
}

namespace {

// Evaluates a rule with no positive body literal: all negative checks are
// ground (safety), run once.
std::set<Atom> evaluate_starterless(const Rule& r, EvaluationState& state) {
    ++state.stats.rule_evaluations;
    PreparedRule pr = prepare_rule(r, state);
    std::vector<std::int32_t> values(pr.env.values.size(), -1);
    std::set<Atom> derived;
    std::vector<bool> done(pr.body.size(), false);
    join_recurse(pr.body, done, state, values, [&](const std::vector<std::int32_t>& vals) {
        for (const LiteralPattern& h : pr.head) derived.insert(state.tuple_to_atom(h.pred, pattern_image(h, vals)));
    });
    return derived;
}

std::vector<std::vector<Literal>> ground_starterless(const Rule& c, EvaluationState& state) {
    ++state.stats.rule_evaluations;
    PreparedRule pr = prepare_rule(c, state);
    std::vector<std::int32_t> values(pr.env.values.size(), -1);
    std::vector<std::vector<Literal>> out;
    std::vector<bool> done(pr.body.size(), false);
    join_recurse(pr.body, done, state, values, [&](const std::vector<std::int32_t>& vals) {
        std::vector<Literal> body;
        for (const LiteralPattern& p : pr.body)
            body.push_back(Literal{state.tuple_to_atom(p.pred, pattern_image(p, vals)), p.negative});
        out.push_back(std::move(body));
    });
    return out;
}

// Starter heuristic for exit rules and constraints: first positive body
// literal whose predicate has the smallest current result set.
std::optional<std::size_t> select_starter(const Rule& r, EvaluationState& state) {
    std::optional<std::size_t> best;
    std::size_t best_size = 0;
    for (std::size_t i = 0; i < r.body.size(); ++i) {
        const Literal& l = r.body[i];
        if (l.negative) continue;
        auto pred = state.find_predicate(l.atom.predicate);
        std::size_t size = pred ? state.relation_size(*pred) : 0;
        if (!best || size < best_size) {
            best = i;
            best_size = size;
        }
    }
    return best;
}

} // namespace

// ------------------------------------------------------------------
// BuildConstraint
// ------------------------------------------------------------------

namespace {

// Canonical renaming: variables numbered by first occurrence; used to detect
// already-processed literals up to renaming.
std::string renaming_key(const Literal& l) {
    std::map<std::string, int> seen;
    std::string out = l.negative ? "~" : "+";
    out += l.atom.predicate;
    for (const Term& t : l.atom.args) {
        out += "|";
        if (t.is_variable()) {
            auto [it, fresh] = seen.emplace(t.name, static_cast<int>(seen.size()));
            out += "V" + std::to_string(it->second);
        } else {
            out += to_string(t);
        }
    }
    return out;
}

GroundConstraint fallback_constraint(const Interpretation& m_pi, const std::set<std::string>& pi_prime_predicates,
                                     const std::set<Term>& universe,
                                     const std::map<std::string, std::size_t>& dep_arities) {
    // Snapshot of m_pi over the predicates lambda depends on: positive part
    // plus the closed-world complement over the constant universe. True
    // exactly in the candidates that agree with m_pi on those predicates.
    std::vector<Literal> body;
    for (const Atom& a : m_pi)
        if (dep_arities.count(a.predicate) && pi_prime_predicates.count(a.predicate))
            body.push_back(Literal{a, false});
    std::vector<Term> consts(universe.begin(), universe.end());
    for (const auto& [pred, arity] : dep_arities) {
        if (!pi_prime_predicates.count(pred)) continue;
        if (arity > 0 && consts.empty()) continue;
        std::vector<std::size_t> idx(arity, 0);
        for (;;) {
            Atom a;
            a.predicate = pred;
            for (std::size_t i = 0; i < arity; ++i) a.args.push_back(consts[idx[i]]);
            if (!m_pi.contains(a)) body.push_back(Literal{a, true});
            std::size_t pos = 0;
            while (pos < arity && ++idx[pos] == consts.size()) {
                idx[pos] = 0;
                ++pos;
            }
            if (pos == arity) break;
        }
    }
    return GroundConstraint::canonical(std::move(body));
}

} // namespace

TraceResult build_constraint(const std::vector<Literal>& violated_body, const Interpretation& m_pi,
                             const Interpretation& m_ext, const Program& lambda_r,
                             const std::set<std::string>& pi_prime_predicates, const EvalOptions& opts) {
    (void)m_ext; // the violated body is known true in m_ext by construction
    std::set<std::string> lambda_heads = lambda_r.head_predicates();

    // Predicates lambda depends on, with arities, for the fallback.
    std::map<std::string, std::size_t> dep_arities;
    auto note_dep = [&](const Atom& a) {
        if (!lambda_heads.count(a.predicate)) dep_arities.emplace(a.predicate, a.arity());
    };
    for (const Rule& r : lambda_r.rules())
        for (const Literal& l : r.body) note_dep(l.atom);
    for (const Literal& l : violated_body) note_dep(l.atom);

    std::set<Term> universe = opts.universe_constants;
    for (const Term& t : lambda_r.constants()) universe.insert(t);
    for (const Atom& a : m_pi)
        for (const Term& t : a.args) universe.insert(t);
    for (const Literal& l : violated_body)
        for (const Term& t : l.atom.args)
            if (t.is_constant()) universe.insert(t);

    auto fallback = [&]() {
        return TraceResult{fallback_constraint(m_pi, pi_prime_predicates, universe, dep_arities), true};
    };

    std::deque<Literal> queue(violated_body.begin(), violated_body.end());
    std::set<std::string> visited; // S, up to variable renaming; covers queued literals too
    for (const Literal& l : violated_body) visited.insert(renaming_key(l));

    std::vector<Literal> result; // R
    std::size_t selections = 0;
    int fresh_counter = 0;

    while (!queue.empty()) {
        if (++selections > opts.trace_budget) return fallback();
        Literal l = std::move(queue.front());
        queue.pop_front();

        if (pi_prime_predicates.count(l.atom.predicate)) {
            if (l.positive()) {
                if (l.atom.ground()) {
                    if (m_pi.contains(l.atom)) result.push_back(l);
                    // A false positive literal contributes nothing: the rule
                    // body it came from fails elsewhere.
                } else {
                    for (const Atom& a : m_pi)
                        if (a.predicate == l.atom.predicate && match(Literal{l.atom, false}, Literal{a, false}))
                            result.push_back(Literal{a, false});
                }
            } else {
                if (!l.atom.ground()) return fallback(); // not representable as one ground constraint
                if (!m_pi.contains(l.atom)) result.push_back(l);
            }
            continue;
        }

        // Non-pi' predicate: replace through the rules of lambda_r.
        for (const Rule& r : lambda_r.rules()) {
            if (r.head.empty() || r.head[0].predicate != l.atom.predicate) continue;
            // Rename the rule apart from the traced literal.
            Substitution rename;
            for (const std::string& v : r.variables())
                rename.bindings[v] = Term::variable("T" + std::to_string(fresh_counter) + "_" + v);
            ++fresh_counter;
            Atom head = rename.apply(r.head[0]);
            auto sigma = unify(head, l.atom);
            if (!sigma) continue;
            for (const Literal& b : r.body) {
                Literal image = sigma->apply(rename.apply(l.positive() ? b : b.complement()));
                std::string key = renaming_key(image);
                if (visited.insert(key).second) queue.push_back(std::move(image));
            }
        }
        // No matching rule: a positive literal cannot have been derived, and
        // a negative one is vacuously true; either way nothing to add.
    }

    GroundConstraint out = GroundConstraint::canonical(std::move(result));
    for (const Literal& l : out.body) {
        bool true_in_m = l.positive() ? m_pi.contains(l.atom) : !m_pi.contains(l.atom);
        if (!true_in_m || !l.atom.ground() || !pi_prime_predicates.count(l.atom.predicate)) return fallback();
    }
    return TraceResult{std::move(out), false};
}

// ------------------------------------------------------------------
// Bottom-up evaluation (the generic engine)
// ------------------------------------------------------------------

EvalOutcome evaluate_bottom_up(const Program& lambda_r, const Program& lambda_c, const Interpretation& m,
                               const std::set<std::string>& pi_prime_predicates, const EvalOptions& opts) {
    for (const Rule& r : lambda_r.rules())
        if (r.head.size() != 1)
            throw AspError("lambda_r must contain single-head rules only, got '" + to_string(r) + "'");
    for (const Rule& r : lambda_c.rules())
        if (!r.is_constraint())
            throw AspError("lambda_c must contain constraints only, got '" + to_string(r) + "'");

    EvaluationState state(m);
    EvalStats& stats = state.stats;

    // Runtime syntax work: the generic engine derives the evaluation order
    // from the program on every call.
    std::vector<Rule> all_rules = lambda_r.rules();
    for (const Rule& r : lambda_c.rules()) all_rules.push_back(r);
    Program lambda(all_rules);
    DependencyGraph dg = dependency_graph(lambda);
    SccOrder order = scc_order(dg);
    std::vector<SccRules> classes = classify_rules(lambda_r, order);
    stats.dispatch_events += lambda.size() + order.components.size();

    // Make sure every lambda predicate has a relation (possibly empty).
    for (const auto& [pred, arity] : lambda.predicate_arities()) state.predicate_id(pred, arity);

    for (std::size_t comp = 0; comp < order.components.size(); ++comp) {
        // Exit rules: evaluated once from their starter atoms.
        for (std::size_t ri : classes[comp].exit_rules) {
            const Rule& r = lambda_r.rules()[ri];
            ++stats.dispatch_events;
            auto starter = select_starter(r, state);
            if (!starter) {
                for (const Atom& a : evaluate_starterless(r, state)) state.insert_atom(a);
                continue;
            }
            int spred = state.predicate_id(r.body[*starter].atom.predicate, r.body[*starter].atom.arity());
            std::vector<Tuple> snapshot = state.rows(spred);
            for (const Tuple& t : snapshot) {
                Atom s = state.tuple_to_atom(spred, t);
                for (const Atom& a : evaluate_rule(r, *starter, s, state)) state.insert_atom(a);
            }
        }

        // Working sets seeded from the result sets of the component.
        std::vector<int> member_preds;
        for (const std::string& p : order.components[comp]) {
            int pid = state.predicate_id(p, lambda.predicate_arities().count(p) ? lambda.predicate_arities().at(p) : 0);
            member_preds.push_back(pid);
            state.seed_working_from_result(pid);
        }
        std::set<std::string> member_set(order.components[comp].begin(), order.components[comp].end());

        // Semi-naive fixpoint over the recursive rules. For every popped
        // working atom the generic engine walks the whole rule list and
        // re-derives which rules apply; this per-tuple syntax dispatch is
        // exactly the work specialization removes.
        std::set<std::size_t> recursive_here(classes[comp].recursive_rules.begin(),
                                             classes[comp].recursive_rules.end());
        bool any = true;
        while (any) {
            any = false;
            for (std::size_t mi = 0; mi < member_preds.size(); ++mi) {
                int wpred = member_preds[mi];
                const std::string& wname = order.components[comp][mi];
                while (auto popped = state.pop_working(wpred)) {
                    any = true;
                    ++stats.fixpoint_iterations;
                    Atom s = state.tuple_to_atom(wpred, *popped);
                    for (std::size_t ri = 0; ri < lambda.size(); ++ri) {
                        ++stats.dispatch_events;
                        if (ri >= lambda_r.rules().size() || !recursive_here.count(ri)) continue;
                        const Rule& r = lambda_r.rules()[ri];
                        for (std::size_t li = 0; li < r.body.size(); ++li) {
                            const Literal& l = r.body[li];
                            if (l.negative || l.atom.predicate != wname) continue;
                            ++stats.recursive_seeded;
                            for (const Atom& derived : evaluate_rule(r, li, s, state)) {
                                int hpred = state.predicate_id(derived.predicate, derived.arity());
                                auto tup = state.atom_to_tuple(derived);
                                if (state.insert(hpred, *tup) && member_set.count(derived.predicate))
                                    state.push_working(hpred, *tup);
                            }
                        }
                    }
                }
            }
        }
    }

    // Constraints: ground the violated instances, then explain them.
    std::vector<std::vector<Literal>> violated;
    for (const Rule& c : lambda_c.rules()) {
        ++stats.dispatch_events;
        auto starter = select_starter(c, state);
        std::vector<std::vector<Literal>> instances;
        if (!starter) {
            instances = ground_starterless(c, state);
        } else {
            int spred = state.predicate_id(c.body[*starter].atom.predicate, c.body[*starter].atom.arity());
            std::vector<Tuple> snapshot = state.rows(spred);
            for (const Tuple& t : snapshot) {
                Atom s = state.tuple_to_atom(spred, t);
                for (auto& inst : ground_constraint_instances(c, *starter, s, state)) instances.push_back(std::move(inst));
            }
        }
        stats.ground_instances += instances.size();
        for (auto& inst : instances) violated.push_back(std::move(inst));
    }

    EvalOutcome out;
    out.m_ext = state.all_atoms();
    for (const auto& body : violated) {
        ++stats.constraint_traces;
        TraceResult traced = build_constraint(body, m, out.m_ext, lambda_r, pi_prime_predicates, opts);
        if (traced.fallback_used) ++stats.trace_fallbacks;
        out.constraints.insert(std::move(traced.constraint));
    }
    out.stats = stats;
    return out;
}

} // namespace aspcomp
