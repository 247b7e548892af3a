#include "aspcomp/plan.hpp"

#include "aspcomp/analysis.hpp"
#include "aspcomp/cache.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <sstream>

namespace aspcomp {

// ------------------------------------------------------------------
// specialize
// ------------------------------------------------------------------

namespace {

struct PlanBuilder {
    EvaluationPlan plan;
    std::map<std::string, std::int32_t> pred_ids;
    std::map<Term, std::int32_t> const_ids;
    std::set<std::pair<std::int32_t, std::uint32_t>> index_req;

    std::int32_t pred(const std::string& name, std::size_t arity) {
        auto it = pred_ids.find(name);
        if (it != pred_ids.end()) return it->second;
        auto id = static_cast<std::int32_t>(plan.predicate_names.size());
        pred_ids.emplace(name, id);
        plan.predicate_names.push_back(name);
        plan.predicate_arities.push_back(static_cast<std::uint32_t>(arity));
        return id;
    }

    std::int32_t constant(const Term& t) {
        auto it = const_ids.find(t);
        if (it != const_ids.end()) return it->second;
        auto id = static_cast<std::int32_t>(plan.constant_pool.size());
        const_ids.emplace(t, id);
        plan.constant_pool.push_back(t);
        return id;
    }
};

struct SlotMap {
    std::map<std::string, std::int32_t> slots;

    std::int32_t slot(const std::string& var) {
        auto it = slots.find(var);
        if (it != slots.end()) return it->second;
        auto s = static_cast<std::int32_t>(slots.size());
        slots.emplace(var, s);
        return s;
    }
};

PlanAtom make_plan_atom(const Atom& a, PlanBuilder& b, SlotMap& sm) {
    PlanAtom out;
    out.pred = b.pred(a.predicate, a.arity());
    for (const Term& t : a.args)
        out.args.push_back(t.is_constant() ? PlanArg::constant(b.constant(t)) : PlanArg::slot(sm.slot(t.name)));
    return out;
}

bool atom_bound(const PlanAtom& a, const std::vector<bool>& bound) {
    for (const PlanArg& arg : a.args)
        if (!arg.is_const && !bound[static_cast<std::size_t>(arg.value)]) return false;
    return true;
}

std::uint32_t atom_bound_mask(const PlanAtom& a, const std::vector<bool>& bound) {
    std::uint32_t mask = 0;
    for (std::size_t i = 0; i < a.args.size(); ++i)
        if (a.args[i].is_const || bound[static_cast<std::size_t>(a.args[i].value)]) mask |= (1u << i);
    return mask;
}

void mark_bound(const PlanAtom& a, std::vector<bool>& bound) {
    for (const PlanArg& arg : a.args)
        if (!arg.is_const) bound[static_cast<std::size_t>(arg.value)] = true;
}

// Builds the join program for one rule and one starter occurrence (or none).
// Bound-first order: after the starter, any literal whose variables are all
// bound becomes a presence/absence check as soon as possible; otherwise the
// next positive literal in textual order becomes an index lookup.
JoinProgram build_join(const Rule& r, std::optional<std::size_t> starter_index, PlanBuilder& b,
                       std::int32_t origin_rule) {
    SlotMap sm;
    JoinProgram jp;
    jp.origin_rule = origin_rule;

    std::vector<PlanAtom> body_atoms;
    for (const Literal& l : r.body) body_atoms.push_back(make_plan_atom(l.atom, b, sm));
    std::vector<PlanAtom> head_atoms;
    for (const Atom& a : r.head) head_atoms.push_back(make_plan_atom(a, b, sm));

    jp.slot_count = static_cast<std::int32_t>(sm.slots.size());
    std::vector<bool> bound(static_cast<std::size_t>(jp.slot_count), false);
    std::vector<bool> used(r.body.size(), false);

    if (starter_index) {
        jp.starter = body_atoms[*starter_index];
        used[*starter_index] = true;
        mark_bound(*jp.starter, bound);
    }

    // Repeated-variable or constant starter positions still need a filter at
    // run time; the executor re-checks the starter pattern itself.

    auto flush_checks = [&]() {
        bool progress = true;
        while (progress) {
            progress = false;
            for (std::size_t i = 0; i < r.body.size(); ++i) {
                if (used[i] || !atom_bound(body_atoms[i], bound)) continue;
                used[i] = true;
                progress = true;
                if (r.body[i].negative)
                    jp.steps.push_back(StepCheckAbsent{body_atoms[i]});
                else
                    jp.steps.push_back(StepCheckPresent{body_atoms[i]});
            }
        }
    };

    flush_checks();
    for (;;) {
        std::size_t next = r.body.size();
        for (std::size_t i = 0; i < r.body.size(); ++i) {
            if (!used[i] && !r.body[i].negative) {
                next = i;
                break;
            }
        }
        if (next == r.body.size()) break;
        used[next] = true;
        StepLookup step;
        step.atom = body_atoms[next];
        step.bound_mask = atom_bound_mask(step.atom, bound);
        b.index_req.insert({step.atom.pred, step.bound_mask});
        jp.steps.push_back(step);
        mark_bound(step.atom, bound);
        flush_checks();
    }
    // Safety guarantees everything is consumed by now.
    for (bool u : used) assert(u);

    if (!head_atoms.empty()) jp.head = head_atoms[0];
    return jp;
}

// Static starter for exit rules and constraints: first positive body literal
// in textual order (result-set sizes are unknown at compile time).
std::optional<std::size_t> static_starter(const Rule& r) {
    for (std::size_t i = 0; i < r.body.size(); ++i)
        if (!r.body[i].negative) return i;
    return std::nullopt;
}

} // namespace

EvaluationPlan specialize(const Program& lambda_r, const Program& lambda_c) {
    for (const Rule& r : lambda_r.rules())
        if (r.head.size() != 1)
            throw AspError("cannot specialize: rule '" + to_string(r) + "' does not have a single head");

    std::vector<Rule> all_rules = lambda_r.rules();
    for (const Rule& r : lambda_c.rules()) all_rules.push_back(r);
    Program lambda(all_rules);

    DependencyGraph dg = dependency_graph(lambda);
    StratificationResult strat = is_stratified(dg);
    if (!strat.stratified) {
        CompilabilityReport report;
        report.stratified = false;
        report.negative_cycle = strat.witness_cycle;
        throw CompilabilityError(std::move(report));
    }
    SccOrder order = scc_order(dg);
    std::vector<SccRules> classes = classify_rules(lambda_r, order);

    PlanBuilder b;
    // Register every lambda predicate up front so executor relations exist.
    for (const auto& [name, arity] : lambda.predicate_arities()) b.pred(name, arity);

    for (std::size_t comp = 0; comp < order.components.size(); ++comp) {
        StratumBlock block;
        for (const std::string& p : order.components[comp])
            block.member_preds.push_back(b.pred(p, lambda.predicate_arities().at(p)));
        std::set<std::string> members(order.components[comp].begin(), order.components[comp].end());

        for (std::size_t ri : classes[comp].exit_rules) {
            const Rule& r = lambda_r.rules()[ri];
            block.exit_joins.push_back(build_join(r, static_starter(r), b, static_cast<std::int32_t>(ri)));
        }
        for (std::size_t ri : classes[comp].recursive_rules) {
            const Rule& r = lambda_r.rules()[ri];
            // One variant per positive body occurrence of a member predicate.
            for (std::size_t li = 0; li < r.body.size(); ++li) {
                const Literal& l = r.body[li];
                if (l.negative || !members.count(l.atom.predicate)) continue;
                RecursiveVariant v;
                v.starter_pred = b.pred(l.atom.predicate, l.atom.arity());
                v.join = build_join(r, li, b, static_cast<std::int32_t>(ri));
                block.recursive.push_back(std::move(v));
            }
        }
        b.plan.strata.push_back(std::move(block));
    }

    for (std::size_t ci = 0; ci < lambda_c.rules().size(); ++ci) {
        const Rule& c = lambda_c.rules()[ci];
        ConstraintJoin cj;
        cj.origin_rule = static_cast<std::int32_t>(lambda_r.rules().size() + ci);
        cj.join = build_join(c, static_starter(c), b, cj.origin_rule);
        // The emitted instance reuses the join's slot numbering.
        SlotMap sm;
        for (const Literal& l : c.body) {
            PlanAtom a = make_plan_atom(l.atom, b, sm);
            cj.body_pattern.push_back({std::move(a), l.negative});
        }
        b.plan.constraints.push_back(std::move(cj));
    }

    b.plan.index_requirements.assign(b.index_req.begin(), b.index_req.end());
    b.plan.trace_rules = lambda_r;
    b.plan.canonical_lambda = canonical_text(lambda_r) + canonical_text(lambda_c);
    b.plan.digest = program_hash(lambda_r, lambda_c);
    return std::move(b.plan);
}

// ------------------------------------------------------------------
// execute_plan
// ------------------------------------------------------------------

namespace {

struct Executor {
    const EvaluationPlan& plan;
    EvaluationState& state;
    std::vector<int> pred_map;    // plan pred id -> state pred id
    std::vector<std::int32_t> const_map; // plan const id -> state const id
    std::vector<std::vector<Literal>> violated;

    Executor(const EvaluationPlan& p, EvaluationState& s) : plan(p), state(s) {
        pred_map.reserve(plan.predicate_names.size());
        for (std::size_t i = 0; i < plan.predicate_names.size(); ++i)
            pred_map.push_back(state.predicate_id(plan.predicate_names[i], plan.predicate_arities[i]));
        const_map.reserve(plan.constant_pool.size());
        for (const Term& t : plan.constant_pool) const_map.push_back(state.constant_id(t));
        for (const auto& [pred, mask] : plan.index_requirements)
            state.ensure_index(pred_map[static_cast<std::size_t>(pred)], mask);
    }

    std::int32_t arg_value(const PlanArg& a, const std::vector<std::int32_t>& slots) const {
        return a.is_const ? const_map[static_cast<std::size_t>(a.value)]
                          : slots[static_cast<std::size_t>(a.value)];
    }

    Tuple image(const PlanAtom& a, const std::vector<std::int32_t>& slots) const {
        Tuple t;
        t.reserve(a.args.size());
        for (const PlanArg& arg : a.args) t.push_back(arg_value(arg, slots));
        return t;
    }

    bool bind(const PlanAtom& a, const Tuple& row, std::vector<std::int32_t>& slots,
              std::vector<std::int32_t>& touched) const {
        for (std::size_t i = 0; i < a.args.size(); ++i) {
            const PlanArg& arg = a.args[i];
            if (arg.is_const) {
                if (row[i] != const_map[static_cast<std::size_t>(arg.value)]) return false;
                continue;
            }
            std::int32_t& v = slots[static_cast<std::size_t>(arg.value)];
            if (v < 0) {
                v = row[i];
                touched.push_back(arg.value);
            } else if (v != row[i]) {
                return false;
            }
        }
        return true;
    }

    template <typename Emit>
    void run_steps(const JoinProgram& jp, std::size_t step, std::vector<std::int32_t>& slots, const Emit& emit) {
        if (step == jp.steps.size()) {
            emit(slots);
            return;
        }
        const JoinStep& s = jp.steps[step];
        if (const auto* lk = std::get_if<StepLookup>(&s)) {
            Tuple key = image(lk->atom, slots); // unbound slots are -1, masked out
            const auto& rows = state.lookup(pred_map[static_cast<std::size_t>(lk->atom.pred)], lk->bound_mask, key);
            const auto& rel_rows = state.rows(pred_map[static_cast<std::size_t>(lk->atom.pred)]);
            std::vector<std::int32_t> touched;
            for (std::uint32_t row : rows) {
                touched.clear();
                if (bind(lk->atom, rel_rows[row], slots, touched)) run_steps(jp, step + 1, slots, emit);
                for (std::int32_t t : touched) slots[static_cast<std::size_t>(t)] = -1;
            }
            return;
        }
        if (const auto* cp = std::get_if<StepCheckPresent>(&s)) {
            if (state.contains(pred_map[static_cast<std::size_t>(cp->atom.pred)], image(cp->atom, slots)))
                run_steps(jp, step + 1, slots, emit);
            return;
        }
        const auto& ca = std::get<StepCheckAbsent>(s);
        if (!state.contains(pred_map[static_cast<std::size_t>(ca.atom.pred)], image(ca.atom, slots)))
            run_steps(jp, step + 1, slots, emit);
    }

    template <typename Emit>
    void run_seeded(const JoinProgram& jp, const Tuple& seed, const Emit& emit) {
        ++state.stats.rule_evaluations;
        std::vector<std::int32_t> slots(static_cast<std::size_t>(jp.slot_count), -1);
        std::vector<std::int32_t> touched;
        if (!jp.starter) {
            run_steps(jp, 0, slots, emit);
            return;
        }
        if (bind(*jp.starter, seed, slots, touched)) run_steps(jp, 0, slots, emit);
    }

    template <typename Emit>
    void run_scan(const JoinProgram& jp, const Emit& emit) {
        if (!jp.starter) {
            run_seeded(jp, Tuple{}, emit);
            return;
        }
        int spred = pred_map[static_cast<std::size_t>(jp.starter->pred)];
        std::vector<Tuple> snapshot = state.rows(spred);
        for (const Tuple& row : snapshot) run_seeded(jp, row, emit);
    }

    // Derivations are buffered and inserted after each join finishes, so a
    // join never mutates a relation it may be iterating.
    std::vector<std::pair<int, Tuple>> derived_buffer;

    void flush_derived(bool to_working, const std::vector<bool>& member_state_pred) {
        for (auto& [pred, tuple] : derived_buffer) {
            if (state.insert(pred, tuple) && to_working && member_state_pred[static_cast<std::size_t>(pred)])
                state.push_working(pred, std::move(tuple));
        }
        derived_buffer.clear();
    }

    void run() {
        int max_state_pred = 0;
        for (int p : pred_map) max_state_pred = std::max(max_state_pred, p);
        std::vector<bool> member_state_pred(static_cast<std::size_t>(max_state_pred) + 1, false);
        auto set_member = [&](std::int32_t plan_pred, bool on) {
            member_state_pred[static_cast<std::size_t>(pred_map[static_cast<std::size_t>(plan_pred)])] = on;
        };

        for (const StratumBlock& block : plan.strata) {
            for (std::int32_t p : block.member_preds) set_member(p, true);

            for (const JoinProgram& jp : block.exit_joins) {
                run_scan(jp, [&](const std::vector<std::int32_t>& slots) {
                    derived_buffer.push_back({pred_map[static_cast<std::size_t>(jp.head.pred)], image(jp.head, slots)});
                });
                flush_derived(false, member_state_pred);
            }

            for (std::int32_t p : block.member_preds)
                state.seed_working_from_result(pred_map[static_cast<std::size_t>(p)]);

            // Fixpoint over the block's working sets; the variant list per
            // predicate was fixed at specialize time.
            bool any = true;
            while (any) {
                any = false;
                for (std::int32_t p : block.member_preds) {
                    int wpred = pred_map[static_cast<std::size_t>(p)];
                    while (auto popped = state.pop_working(wpred)) {
                        any = true;
                        ++state.stats.fixpoint_iterations;
                        for (const RecursiveVariant& v : block.recursive) {
                            if (v.starter_pred != p) continue;
                            ++state.stats.recursive_seeded;
                            run_seeded(v.join, *popped, [&](const std::vector<std::int32_t>& slots) {
                                derived_buffer.push_back(
                                    {pred_map[static_cast<std::size_t>(v.join.head.pred)], image(v.join.head, slots)});
                            });
                            flush_derived(true, member_state_pred);
                        }
                    }
                }
            }

            for (std::int32_t p : block.member_preds) set_member(p, false);
        }

        for (const ConstraintJoin& cj : plan.constraints) {
            run_scan(cj.join, [&](const std::vector<std::int32_t>& slots) {
                std::vector<Literal> body;
                body.reserve(cj.body_pattern.size());
                for (const auto& [atom, negative] : cj.body_pattern) {
                    Atom ground = state.tuple_to_atom(pred_map[static_cast<std::size_t>(atom.pred)],
                                                      image(atom, slots));
                    body.push_back(Literal{std::move(ground), negative});
                }
                ++state.stats.ground_instances;
                violated.push_back(std::move(body));
            });
        }
    }
};

} // namespace

EvalOutcome execute_plan(const EvaluationPlan& plan, const Interpretation& m,
                         const std::set<std::string>& pi_prime_predicates, const EvalOptions& opts) {
    EvaluationState state(m);
    Executor exec(plan, state);
    exec.run();

    EvalOutcome out;
    out.m_ext = state.all_atoms();
    for (const auto& body : exec.violated) {
        ++state.stats.constraint_traces;
        TraceResult traced = build_constraint(body, m, out.m_ext, plan.trace_rules, pi_prime_predicates, opts);
        if (traced.fallback_used) ++state.stats.trace_fallbacks;
        out.constraints.insert(std::move(traced.constraint));
    }
    out.stats = state.stats;
    return out;
}

// ------------------------------------------------------------------
// Serialization (versioned, with a trailing length check)
// ------------------------------------------------------------------

namespace {

constexpr char kMagic[] = "ASPCPLAN";
constexpr std::uint32_t kVersion = 1;

struct Writer {
    std::string out;

    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        out += s;
    }
    void term(const Term& t) {
        out.push_back(static_cast<char>(t.kind));
        u64(static_cast<std::uint64_t>(t.value));
        str(t.name);
    }
    void arg(const PlanArg& a) {
        out.push_back(a.is_const ? 1 : 0);
        i32(a.value);
    }
    void atom(const PlanAtom& a) {
        i32(a.pred);
        u32(static_cast<std::uint32_t>(a.args.size()));
        for (const PlanArg& x : a.args) arg(x);
    }
    void join(const JoinProgram& jp) {
        i32(jp.slot_count);
        out.push_back(jp.starter ? 1 : 0);
        if (jp.starter) atom(*jp.starter);
        u32(static_cast<std::uint32_t>(jp.steps.size()));
        for (const JoinStep& s : jp.steps) {
            if (const auto* lk = std::get_if<StepLookup>(&s)) {
                out.push_back(0);
                atom(lk->atom);
                u32(lk->bound_mask);
            } else if (const auto* cp = std::get_if<StepCheckPresent>(&s)) {
                out.push_back(1);
                atom(cp->atom);
            } else {
                out.push_back(2);
                atom(std::get<StepCheckAbsent>(s).atom);
            }
        }
        atom(jp.head);
        i32(jp.origin_rule);
    }
};

struct Reader {
    const std::string& in;
    std::size_t pos = 0;
    bool ok = true;

    explicit Reader(const std::string& s) : in(s) {}

    std::uint8_t byte() {
        if (pos >= in.size()) {
            ok = false;
            return 0;
        }
        return static_cast<std::uint8_t>(in[pos++]);
    }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(byte()) << (8 * i);
        return v;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(byte()) << (8 * i);
        return v;
    }
    std::string str() {
        std::uint32_t n = u32();
        if (pos + n > in.size()) {
            ok = false;
            return {};
        }
        std::string s = in.substr(pos, n);
        pos += n;
        return s;
    }
    Term term() {
        Term t;
        t.kind = static_cast<TermKind>(byte());
        t.value = static_cast<long long>(u64());
        t.name = str();
        return t;
    }
    PlanArg arg() {
        PlanArg a;
        a.is_const = byte() != 0;
        a.value = i32();
        return a;
    }
    PlanAtom atom() {
        PlanAtom a;
        a.pred = i32();
        std::uint32_t n = u32();
        if (n > 64) ok = false;
        for (std::uint32_t i = 0; ok && i < n; ++i) a.args.push_back(arg());
        return a;
    }
    JoinProgram join() {
        JoinProgram jp;
        jp.slot_count = i32();
        if (byte()) jp.starter = atom();
        std::uint32_t n = u32();
        for (std::uint32_t i = 0; ok && i < n; ++i) {
            switch (byte()) {
            case 0: {
                StepLookup lk;
                lk.atom = atom();
                lk.bound_mask = u32();
                jp.steps.push_back(std::move(lk));
                break;
            }
            case 1: jp.steps.push_back(StepCheckPresent{atom()}); break;
            case 2: jp.steps.push_back(StepCheckAbsent{atom()}); break;
            default: ok = false;
            }
        }
        jp.head = atom();
        jp.origin_rule = i32();
        return jp;
    }
};

} // namespace

std::string plan_serialize(const EvaluationPlan& plan) {
    Writer w;
    w.out += kMagic;
    w.u32(kVersion);
    w.u32(static_cast<std::uint32_t>(plan.predicate_names.size()));
    for (std::size_t i = 0; i < plan.predicate_names.size(); ++i) {
        w.str(plan.predicate_names[i]);
        w.u32(plan.predicate_arities[i]);
    }
    w.u32(static_cast<std::uint32_t>(plan.constant_pool.size()));
    for (const Term& t : plan.constant_pool) w.term(t);
    w.u32(static_cast<std::uint32_t>(plan.strata.size()));
    for (const StratumBlock& b : plan.strata) {
        w.u32(static_cast<std::uint32_t>(b.member_preds.size()));
        for (std::int32_t p : b.member_preds) w.i32(p);
        w.u32(static_cast<std::uint32_t>(b.exit_joins.size()));
        for (const JoinProgram& jp : b.exit_joins) w.join(jp);
        w.u32(static_cast<std::uint32_t>(b.recursive.size()));
        for (const RecursiveVariant& v : b.recursive) {
            w.i32(v.starter_pred);
            w.join(v.join);
        }
    }
    w.u32(static_cast<std::uint32_t>(plan.constraints.size()));
    for (const ConstraintJoin& cj : plan.constraints) {
        w.join(cj.join);
        w.u32(static_cast<std::uint32_t>(cj.body_pattern.size()));
        for (const auto& [atom, neg] : cj.body_pattern) {
            w.atom(atom);
            w.out.push_back(neg ? 1 : 0);
        }
        w.i32(cj.origin_rule);
    }
    w.u32(static_cast<std::uint32_t>(plan.index_requirements.size()));
    for (const auto& [pred, mask] : plan.index_requirements) {
        w.i32(pred);
        w.u32(mask);
    }
    w.str(canonical_text(plan.trace_rules));
    w.str(plan.canonical_lambda);
    w.str(plan.digest);
    w.u64(0x504c414e454e44ull); // end marker
    return std::move(w.out);
}

std::optional<EvaluationPlan> plan_deserialize(const std::string& bytes) {
    if (bytes.size() < 12 || bytes.compare(0, 8, kMagic) != 0) return std::nullopt;
    Reader r(bytes);
    r.pos = 8;
    if (r.u32() != kVersion) return std::nullopt;
    EvaluationPlan plan;
    std::uint32_t npred = r.u32();
    for (std::uint32_t i = 0; r.ok && i < npred; ++i) {
        plan.predicate_names.push_back(r.str());
        plan.predicate_arities.push_back(r.u32());
    }
    std::uint32_t nconst = r.u32();
    for (std::uint32_t i = 0; r.ok && i < nconst; ++i) plan.constant_pool.push_back(r.term());
    std::uint32_t nstrata = r.u32();
    for (std::uint32_t i = 0; r.ok && i < nstrata; ++i) {
        StratumBlock b;
        std::uint32_t nm = r.u32();
        for (std::uint32_t j = 0; r.ok && j < nm; ++j) b.member_preds.push_back(r.i32());
        std::uint32_t ne = r.u32();
        for (std::uint32_t j = 0; r.ok && j < ne; ++j) b.exit_joins.push_back(r.join());
        std::uint32_t nr = r.u32();
        for (std::uint32_t j = 0; r.ok && j < nr; ++j) {
            RecursiveVariant v;
            v.starter_pred = r.i32();
            v.join = r.join();
            b.recursive.push_back(std::move(v));
        }
        plan.strata.push_back(std::move(b));
    }
    std::uint32_t nc = r.u32();
    for (std::uint32_t i = 0; r.ok && i < nc; ++i) {
        ConstraintJoin cj;
        cj.join = r.join();
        std::uint32_t nb = r.u32();
        for (std::uint32_t j = 0; r.ok && j < nb; ++j) {
            PlanAtom a = r.atom();
            bool neg = r.byte() != 0;
            cj.body_pattern.push_back({std::move(a), neg});
        }
        cj.origin_rule = r.i32();
        plan.constraints.push_back(std::move(cj));
    }
    std::uint32_t ni = r.u32();
    for (std::uint32_t i = 0; r.ok && i < ni; ++i) {
        std::int32_t pred = r.i32();
        std::uint32_t mask = r.u32();
        plan.index_requirements.push_back({pred, mask});
    }
    std::string trace_text = r.str();
    plan.canonical_lambda = r.str();
    plan.digest = r.str();
    if (!r.ok || r.u64() != 0x504c414e454e44ull || r.pos != bytes.size()) return std::nullopt;
    try {
        plan.trace_rules = parse_program(trace_text);
    } catch (const AspError&) {
        return std::nullopt;
    }
    // Structural sanity: predicate ids must be in range.
    auto pred_ok = [&](std::int32_t p) {
        return p >= 0 && static_cast<std::size_t>(p) < plan.predicate_names.size();
    };
    for (const auto& [pred, mask] : plan.index_requirements)
        if (!pred_ok(pred)) return std::nullopt;
    return plan;
}

} // namespace aspcomp
