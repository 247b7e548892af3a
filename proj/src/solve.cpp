#include "aspcomp/solve.hpp"

#include "aspcomp/plan.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <set>

namespace aspcomp {

// ------------------------------------------------------------------
// Brute-force grounding
// ------------------------------------------------------------------

Program ground_program(const Program& p, std::size_t budget) {
    std::set<Term> universe_set = p.constants();
    std::vector<Term> universe(universe_set.begin(), universe_set.end());
    std::vector<Rule> out;
    std::uint64_t produced = 0;

    for (const Rule& r : p.rules()) {
        std::vector<std::string> vars = r.variables();
        if (vars.empty()) {
            if (++produced > budget)
                throw GroundBudgetError("ground instantiation exceeds the budget of " + std::to_string(budget) +
                                        " instances");
            out.push_back(r);
            continue;
        }
        if (universe.empty()) continue; // no substitution exists
        std::vector<std::size_t> idx(vars.size(), 0);
        for (;;) {
            Substitution sigma;
            for (std::size_t i = 0; i < vars.size(); ++i) sigma.bindings[vars[i]] = universe[idx[i]];
            Rule ground;
            for (const Atom& a : r.head) ground.head.push_back(sigma.apply(a));
            for (const Literal& l : r.body) ground.body.push_back(sigma.apply(l));
            if (++produced > budget)
                throw GroundBudgetError("ground instantiation exceeds the budget of " + std::to_string(budget) +
                                        " instances");
            out.push_back(std::move(ground));
            std::size_t pos = 0;
            while (pos < vars.size() && ++idx[pos] == universe.size()) {
                idx[pos] = 0;
                ++pos;
            }
            if (pos == vars.size()) break;
        }
    }
    return Program(std::move(out));
}

// ------------------------------------------------------------------
// Possible-atom grounding (bench baseline)
// ------------------------------------------------------------------

SmartGroundResult ground_with_possible_atoms(const Program& p, std::size_t budget) {
    // Possible atoms: least fixpoint treating every head atom of a rule whose
    // positive body is possibly true as possible (negation ignored).
    EvaluationState possible{Interpretation{}};
    for (const Rule& r : p.rules())
        if (r.is_fact()) possible.insert_atom(r.head[0]);
    bool changed = true;
    while (changed) {
        changed = false;
        for (const Rule& r : p.rules()) {
            if (r.is_constraint() || r.is_fact()) continue;
            Rule positive_only;
            positive_only.head = r.head;
            for (const Literal& l : r.body)
                if (l.positive()) positive_only.body.push_back(l);
            std::set<Atom> derived;
            if (positive_only.body.empty()) {
                // ground head (safety)
                for (const Atom& a : r.head)
                    if (possible.insert_atom(a)) changed = true;
                continue;
            }
            std::size_t starter = 0;
            int spred = possible.predicate_id(positive_only.body[starter].atom.predicate,
                                              positive_only.body[starter].atom.arity());
            std::vector<Tuple> snapshot = possible.rows(spred);
            for (const Tuple& t : snapshot) {
                Atom s = possible.tuple_to_atom(spred, t);
                for (const Atom& a : evaluate_rule(positive_only, starter, s, possible)) derived.insert(a);
            }
            for (const Atom& a : derived)
                if (possible.insert_atom(a)) changed = true;
        }
    }

    // Instantiate each rule by joining its positive body over the possible
    // atoms; negative literals are kept when their atom is possible, dropped
    // (as true) otherwise.
    SmartGroundResult result;
    std::vector<Rule> ground_rules;
    std::uint64_t total = 0;
    for (const Rule& r : p.rules()) {
        std::uint64_t count = 0;
        auto emit_instance = [&](const Substitution& sigma) {
            Rule inst;
            for (const Atom& a : r.head) inst.head.push_back(sigma.apply(a));
            for (const Literal& l : r.body) {
                Literal g = sigma.apply(l);
                if (l.positive()) {
                    inst.body.push_back(std::move(g));
                } else if (possible.contains_atom(g.atom)) {
                    inst.body.push_back(std::move(g));
                }
                // impossible negative literal: true, dropped
            }
            ++count;
            if (total + count > budget)
                throw GroundBudgetError("possible-atom grounding exceeds the budget of " + std::to_string(budget));
            ground_rules.push_back(std::move(inst));
        };

        std::vector<Literal> pos = r.positive_body();
        if (pos.empty()) {
            emit_instance(Substitution{});
        } else {
            // Join positive literals left to right over the possible atoms.
            std::function<void(std::size_t, Substitution)> rec = [&](std::size_t i, Substitution sigma) {
                if (i == pos.size()) {
                    emit_instance(sigma);
                    return;
                }
                Atom pattern = sigma.apply(pos[i].atom);
                auto pred = possible.find_predicate(pattern.predicate);
                if (!pred) return;
                for (const Tuple& t : possible.rows(*pred)) {
                    Atom candidate = possible.tuple_to_atom(*pred, t);
                    auto ext = match(Literal{pattern, false}, Literal{candidate, false});
                    if (!ext) continue;
                    Substitution next = sigma;
                    for (const auto& [v, term] : ext->bindings) next.bindings[v] = term;
                    rec(i + 1, std::move(next));
                }
            };
            rec(0, Substitution{});
        }
        result.per_rule_instances.push_back(count);
        total += count;
    }
    result.ground = Program(std::move(ground_rules));
    result.total_instances = total;
    return result;
}

// ------------------------------------------------------------------
// Propositional enumeration
// ------------------------------------------------------------------

namespace {

struct BitVec {
    std::vector<std::uint64_t> w;

    explicit BitVec(std::size_t bits = 0) : w((bits + 63) / 64, 0) {}
    void set(std::size_t i) { w[i / 64] |= (1ull << (i % 64)); }
    bool get(std::size_t i) const { return (w[i / 64] >> (i % 64)) & 1; }
    bool subset_of(const BitVec& o) const {
        for (std::size_t i = 0; i < w.size(); ++i)
            if (w[i] & ~o.w[i]) return false;
        return true;
    }
    bool intersects(const BitVec& o) const {
        for (std::size_t i = 0; i < w.size(); ++i)
            if (w[i] & o.w[i]) return true;
        return false;
    }
    bool operator==(const BitVec&) const = default;
};

struct PropRule {
    BitVec head, pos, neg;
    bool head_empty = true;
};

struct PropProgram {
    std::vector<Atom> atoms; // sorted universe: head atoms of the ground program
    std::map<Atom, std::size_t> index;
    std::vector<PropRule> rules;
    BitVec facts;
    std::vector<std::size_t> free_atoms; // non-fact head atoms, ascending

    bool is_model(const BitVec& m) const {
        for (const PropRule& r : rules) {
            if (!r.pos.subset_of(m) || r.neg.intersects(m)) continue;
            if (r.head_empty || !r.head.intersects(m)) return false;
        }
        return true;
    }

    // No proper subset of m (containing the facts) is a model of the reduct w.r.t. m.
    bool is_minimal(const BitVec& m) const {
        std::vector<std::size_t> on; // free atoms set in m
        for (std::size_t a : free_atoms)
            if (m.get(a)) on.push_back(a);
        if (on.size() > 25)
            throw GroundBudgetError("reduct minimality check over " + std::to_string(on.size()) +
                                    " candidate atoms exceeds the supported size");
        std::vector<const PropRule*> reduct;
        for (const PropRule& r : rules)
            if (!r.neg.intersects(m)) reduct.push_back(&r);
        std::uint64_t subsets = 1ull << on.size();
        for (std::uint64_t sub = 0; sub + 1 < subsets; ++sub) { // excludes m itself
            BitVec j = facts;
            for (std::size_t i = 0; i < on.size(); ++i)
                if ((sub >> i) & 1) j.set(on[i]);
            bool model = true;
            for (const PropRule* r : reduct) {
                if (!r->pos.subset_of(j)) continue;
                if (r->head_empty || !r->head.intersects(j)) {
                    model = false;
                    break;
                }
            }
            if (model) return false;
        }
        return true;
    }
};

PropProgram propositionalize(const Program& ground) {
    PropProgram pp;
    std::set<Atom> universe;
    for (const Rule& r : ground.rules())
        for (const Atom& a : r.head) universe.insert(a);
    pp.atoms.assign(universe.begin(), universe.end());
    for (std::size_t i = 0; i < pp.atoms.size(); ++i) pp.index.emplace(pp.atoms[i], i);

    std::size_t n = pp.atoms.size();
    pp.facts = BitVec(n);
    std::set<std::size_t> fact_set;
    for (const Rule& r : ground.rules())
        if (r.is_fact()) {
            std::size_t i = pp.index.at(r.head[0]);
            pp.facts.set(i);
            fact_set.insert(i);
        }
    for (std::size_t i = 0; i < n; ++i)
        if (!fact_set.count(i)) pp.free_atoms.push_back(i);

    for (const Rule& r : ground.rules()) {
        PropRule pr{BitVec(n), BitVec(n), BitVec(n)};
        pr.head_empty = r.head.empty();
        bool vacuous = false;
        for (const Atom& a : r.head) pr.head.set(pp.index.at(a));
        for (const Literal& l : r.body) {
            auto it = pp.index.find(l.atom);
            if (it == pp.index.end()) {
                // Atom below every head: false in every candidate.
                if (l.positive()) vacuous = true; // body unsatisfiable
                continue;                         // negative literal is simply true
            }
            if (l.positive())
                pr.pos.set(it->second);
            else
                pr.neg.set(it->second);
        }
        if (!vacuous) pp.rules.push_back(std::move(pr));
    }
    return pp;
}

} // namespace

struct AnswerSetEnumerator::Impl {
    PropProgram pp;
    std::size_t ground_rules = 0;
    // DFS stack producing subsets of the free atoms in lexicographic order
    // over the sorted atom sequence: {} first, then {a0}, {a0,a1}, ...
    struct Frame {
        BitVec mask;
        std::size_t next; // next free-atom position eligible for inclusion
        bool yielded = false;
    };
    std::vector<Frame> stack;
    std::vector<PropRule> learned;
    std::size_t free_bits = 0;

    explicit Impl(const Program& p, std::size_t ground_budget) {
        Program ground = ground_program(p, ground_budget);
        ground_rules = ground.size();
        pp = propositionalize(ground);
        free_bits = pp.free_atoms.size();
        if (free_bits > 30)
            throw GroundBudgetError("candidate space of 2^" + std::to_string(free_bits) +
                                    " interpretations is beyond the enumerator's budget");
        stack.push_back(Frame{pp.facts, 0, false});
    }

    bool satisfies_learned(const BitVec& m) const {
        for (const PropRule& c : learned)
            if (c.pos.subset_of(m) && !c.neg.intersects(m)) return false;
        return true;
    }

    std::optional<Interpretation> next() {
        while (!stack.empty()) {
            Frame& top = stack.back();
            if (!top.yielded) {
                top.yielded = true;
                BitVec m = top.mask;
                if (pp.is_model(m) && satisfies_learned(m) && pp.is_minimal(m)) {
                    Interpretation out;
                    for (std::size_t i = 0; i < pp.atoms.size(); ++i)
                        if (m.get(i)) out.insert(pp.atoms[i]);
                    return out;
                }
                continue;
            }
            if (top.next < free_bits) {
                Frame child;
                child.mask = top.mask;
                child.mask.set(pp.free_atoms[top.next]);
                child.next = top.next + 1;
                ++top.next;
                stack.push_back(std::move(child));
                continue;
            }
            stack.pop_back();
        }
        return std::nullopt;
    }

    void add_constraint(const GroundConstraint& c) {
        std::size_t n = pp.atoms.size();
        PropRule pr{BitVec(n), BitVec(n), BitVec(n)};
        for (const Literal& l : c.body) {
            auto it = pp.index.find(l.atom);
            if (it == pp.index.end()) {
                if (l.positive()) return; // can never fire
                continue;                 // always-true negative literal
            }
            if (l.positive())
                pr.pos.set(it->second);
            else
                pr.neg.set(it->second);
        }
        learned.push_back(std::move(pr));
    }
};

AnswerSetEnumerator::AnswerSetEnumerator(const Program& p, std::size_t ground_budget)
    : impl_(std::make_unique<Impl>(p, ground_budget)) {}
AnswerSetEnumerator::~AnswerSetEnumerator() = default;
AnswerSetEnumerator::AnswerSetEnumerator(AnswerSetEnumerator&&) noexcept = default;
AnswerSetEnumerator& AnswerSetEnumerator::operator=(AnswerSetEnumerator&&) noexcept = default;

std::optional<Interpretation> AnswerSetEnumerator::next() {
    return impl_->next();
}

void AnswerSetEnumerator::add_constraint(const GroundConstraint& c) {
    impl_->add_constraint(c);
}

std::size_t AnswerSetEnumerator::ground_rule_count() const {
    return impl_->ground_rules;
}

std::vector<Interpretation> enumerate_answer_sets(const Program& p, std::size_t limit, std::size_t ground_budget) {
    AnswerSetEnumerator en(p, ground_budget);
    std::vector<Interpretation> out;
    while (out.size() < limit) {
        auto m = en.next();
        if (!m) break;
        out.push_back(std::move(*m));
    }
    return out;
}

// ------------------------------------------------------------------
// External solver adapter
// ------------------------------------------------------------------

std::optional<Interpretation> external_answer_set(const std::string& command, const Program& pi_prime,
                                                  const std::vector<GroundConstraint>& learned) {
    namespace fs = std::filesystem;
    std::string input = canonical_text(pi_prime);
    for (const GroundConstraint& c : learned) input += to_string(c) + "\n";

    fs::path tmp = fs::temp_directory_path() / ("aspcomp-solver-" + std::to_string(::getpid()) + "-" +
                                                std::to_string(reinterpret_cast<std::uintptr_t>(&input) % 100003));
    {
        std::FILE* f = std::fopen(tmp.c_str(), "wb");
        if (!f) throw AspError("external adapter: cannot create " + tmp.string());
        std::fwrite(input.data(), 1, input.size(), f);
        std::fclose(f);
    }
    std::string cmd = command + " < '" + tmp.string() + "'";
    std::FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) {
        fs::remove(tmp);
        throw AspError("external adapter: cannot spawn '" + command + "'");
    }
    std::string output;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) output.append(buf, n);
    int rc = ::pclose(pipe);
    fs::remove(tmp);
    if (rc != 0) throw AspError("external adapter: '" + command + "' exited with a nonzero status");

    std::string first_line = output.substr(0, output.find('\n'));
    // Trim trailing carriage returns and spaces.
    while (!first_line.empty() && (first_line.back() == '\r' || first_line.back() == ' ')) first_line.pop_back();
    if (first_line == "INCOHERENT") return std::nullopt;

    Interpretation out;
    std::size_t i = 0;
    const auto& arities = pi_prime.predicate_arities();
    while (i < first_line.size()) {
        while (i < first_line.size() && first_line[i] == ' ') ++i;
        std::size_t j = i;
        while (j < first_line.size() && first_line[j] != ' ') ++j;
        if (j > i) {
            Atom a = parse_ground_atom(first_line.substr(i, j - i));
            auto it = arities.find(a.predicate);
            if (it == arities.end())
                throw ParseError("external adapter: unknown predicate '" + a.predicate + "' in the answer", 1, 1);
            if (it->second != a.arity())
                throw ArityError(a.predicate, a.arity(), it->second);
            out.insert(std::move(a));
        }
        i = j;
    }
    return out;
}

// ------------------------------------------------------------------
// solve / perfect_model
// ------------------------------------------------------------------

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

} // namespace

SolveResult solve(const Program& pi_prime, const Program& lambda_r, const Program& lambda_c,
                  const SolveOptions& opts) {
    SolveResult result;
    auto t0 = std::chrono::steady_clock::now();

    EvaluatorHandle handle =
        cache_get_or_build(lambda_r, lambda_c, opts.backend, opts.cache_dir, opts.cache_stats, opts.emit);
    result.stats.t_compile_s = seconds_since(t0);

    std::set<std::string> pi_preds = pi_prime.predicates();

    EvalOptions eval_opts;
    eval_opts.trace_budget = opts.trace_budget;
    eval_opts.universe_constants = pi_prime.constants();
    for (const Term& t : lambda_r.constants()) eval_opts.universe_constants.insert(t);
    for (const Term& t : lambda_c.constants()) eval_opts.universe_constants.insert(t);

    std::optional<AnswerSetEnumerator> internal;
    if (opts.external_command.empty()) {
        auto tg = std::chrono::steady_clock::now();
        internal.emplace(pi_prime, opts.ground_budget);
        result.stats.pi_prime_ground_rules = internal->ground_rule_count();
        result.stats.t_candidates_s += seconds_since(tg);
    }

    for (std::size_t round = 0; round < opts.candidate_budget; ++round) {
        auto tc = std::chrono::steady_clock::now();
        std::optional<Interpretation> candidate;
        if (internal)
            candidate = internal->next();
        else
            candidate = external_answer_set(opts.external_command, pi_prime, result.learned);
        result.stats.t_candidates_s += seconds_since(tc);

        if (!candidate) {
            result.status = SolveResult::Status::incoherent;
            return result;
        }
        ++result.stats.candidates_examined;

        auto te = std::chrono::steady_clock::now();
        EvalOutcome outcome = handle->evaluate(*candidate, pi_preds, eval_opts);
        result.stats.t_eval_s += seconds_since(te);
        result.stats.eval.add(outcome.stats);
        result.stats.lambda_ground_instances += outcome.stats.ground_instances;

        if (outcome.constraints.empty()) {
            result.status = SolveResult::Status::answer;
            result.model = std::move(outcome.m_ext);
            return result;
        }
        ++result.stats.constraints_learned;
        for (const GroundConstraint& c : outcome.constraints) {
            if (std::find(result.learned.begin(), result.learned.end(), c) != result.learned.end()) continue;
            result.learned.push_back(c);
            ++result.stats.constraints_added;
            if (internal) internal->add_constraint(c);
        }
    }
    result.status = SolveResult::Status::budget_exceeded;
    return result;
}

Interpretation perfect_model(const Program& p, const SolveOptions& opts) {
    for (const Rule& r : p.rules())
        if (r.head.size() > 1)
            throw AspError("perfect_model requires a disjunction-free program, got '" + to_string(r) + "'");
    StratificationResult strat = is_stratified(dependency_graph(p));
    if (!strat.stratified) {
        std::string cycle;
        for (const std::string& v : strat.witness_cycle) cycle += (cycle.empty() ? "" : " ") + v;
        throw AspError("perfect_model requires a stratified program (negative cycle: " + cycle + ")");
    }

    // pi' = facts, lambda = the rest; facts of derived predicates must live in
    // lambda or the split would violate the head-overlap condition.
    std::set<std::string> rule_heads;
    for (const Rule& r : p.rules())
        if (!r.is_fact() && !r.is_constraint()) rule_heads.insert(r.head[0].predicate);

    std::vector<Rule> fact_rules, lambda_r_rules, lambda_c_rules;
    for (const Rule& r : p.rules()) {
        if (r.is_constraint())
            lambda_c_rules.push_back(r);
        else if (r.is_fact() && !rule_heads.count(r.head[0].predicate))
            fact_rules.push_back(r);
        else
            lambda_r_rules.push_back(r);
    }
    Program pi_prime{fact_rules};
    Program lambda_r{lambda_r_rules};
    Program lambda_c{lambda_c_rules};

    SolveResult res = solve(pi_prime, lambda_r, lambda_c, opts);
    if (res.status == SolveResult::Status::answer) return res.model;
    throw IncoherentError("the program has no perfect model: a constraint is violated");
}

} // namespace aspcomp
