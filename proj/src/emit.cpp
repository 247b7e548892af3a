#include "aspcomp/emit.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace aspcomp {

// The generated translation unit is assembled from four parts: a fixed
// runtime prelude (tuple store, input parsing), the plan's static data
// (predicates, constants, the trace-rule table), a fixed failed-constraint
// tracer that walks the trace table, and the specialized part: one
// straight-line join function per rule plus an unrolled strata driver.

namespace {

// ---------------------------------------------------------------- prelude
const char* kPrelude = R"__(// generated evaluator; do not edit
#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace {

using Row = std::vector<int32_t>;

static size_t hash_row(const Row& t) {
    size_t h = 1469598103934665603ull;
    for (int32_t v : t) { h ^= (size_t)(uint32_t)v; h *= 1099511628211ull; }
    return h;
}
static size_t hash_key(uint32_t mask, const Row& t) {
    size_t h = 1469598103934665603ull ^ mask;
    for (size_t i = 0; i < t.size(); ++i) {
        if (!(mask & (1u << i))) continue;
        h ^= (size_t)(uint32_t)t[i]; h *= 1099511628211ull;
    }
    return h;
}

struct Rel {
    std::vector<Row> rows;
    std::unordered_map<size_t, std::vector<uint32_t>> full;
    std::map<uint32_t, std::unordered_map<size_t, std::vector<uint32_t>>> idx;
    std::deque<Row> work;
};

struct GLit {
    int pred;
    Row args;
    bool neg;
};

struct Ctx {
    std::vector<Rel> rel;
    std::vector<std::string> const_names;
    std::unordered_map<std::string, int32_t> const_ids;
    std::vector<std::pair<int, Row>> derived;
    std::vector<std::vector<GLit>> K;
    uint64_t ground_instances = 0, fallbacks = 0;
    std::vector<uint32_t> empty;

    int32_t cid(const std::string& tok) {
        auto it = const_ids.find(tok);
        if (it != const_ids.end()) return it->second;
        int32_t id = (int32_t)const_names.size();
        const_ids.emplace(tok, id);
        const_names.push_back(tok);
        return id;
    }
    bool insert(int pred, const Row& t) {
        Rel& r = rel[(size_t)pred];
        size_t h = hash_row(t);
        auto& chain = r.full[h];
        for (uint32_t row : chain)
            if (r.rows[row] == t) return false;
        uint32_t row = (uint32_t)r.rows.size();
        r.rows.push_back(t);
        chain.push_back(row);
        for (auto& kv : r.idx) kv.second[hash_key(kv.first, t)].push_back(row);
        return true;
    }
    bool contains(int pred, const Row& t) const {
        const Rel& r = rel[(size_t)pred];
        auto it = r.full.find(hash_row(t));
        if (it == r.full.end()) return false;
        for (uint32_t row : it->second)
            if (r.rows[row] == t) return true;
        return false;
    }
    void ensure_index(int pred, uint32_t mask) {
        Rel& r = rel[(size_t)pred];
        if (r.idx.count(mask)) return;
        auto& index = r.idx[mask];
        for (uint32_t row = 0; row < r.rows.size(); ++row)
            index[hash_key(mask, r.rows[row])].push_back(row);
    }
    const std::vector<uint32_t>& lookup(int pred, uint32_t mask, const Row& key) {
        Rel& r = rel[(size_t)pred];
        auto& index = r.idx[mask];
        auto it = index.find(hash_key(mask, key));
        return it == index.end() ? empty : it->second;
    }
    void seed_work(int pred) {
        Rel& r = rel[(size_t)pred];
        r.work.assign(r.rows.begin(), r.rows.end());
    }
    void flush_exit() {
        for (auto& d : derived) insert(d.first, d.second);
        derived.clear();
    }
    void flush_rec(const bool* member) {
        for (auto& d : derived)
            if (insert(d.first, d.second) && member[d.first]) rel[(size_t)d.first].work.push_back(d.second);
        derived.clear();
    }
};

// string-level atoms for the constraint tracer; an argument token starting
// with an uppercase letter is a variable
struct SAtom {
    std::string pred;
    std::vector<std::string> args;
    bool operator==(const SAtom& o) const { return pred == o.pred && args == o.args; }
    bool operator<(const SAtom& o) const { return pred != o.pred ? pred < o.pred : args < o.args; }
};
struct SLit {
    SAtom a;
    bool neg;
};

static bool is_var(const std::string& tok) { return !tok.empty() && std::isupper((unsigned char)tok[0]); }
static bool atom_ground(const SAtom& a) {
    for (const auto& t : a.args)
        if (is_var(t)) return false;
    return true;
}
static std::string atom_text(const SAtom& a) {
    if (a.args.empty()) return a.pred;
    std::string out = a.pred + "(";
    for (size_t i = 0; i < a.args.size(); ++i) {
        if (i) out += ",";
        out += a.args[i];
    }
    return out + ")";
}

struct Subst {
    std::map<std::string, std::string> b;
    std::string apply(const std::string& tok) const {
        std::string cur = tok;
        while (is_var(cur)) {
            auto it = b.find(cur);
            if (it == b.end()) break;
            cur = it->second;
        }
        return cur;
    }
    bool bind(const std::string& var, const std::string& t) {
        std::string lhs = apply(var), rhs = apply(t);
        if (lhs == rhs) return true;
        if (is_var(lhs)) { b[lhs] = rhs; return true; }
        if (is_var(rhs)) { b[rhs] = lhs; return true; }
        return false;
    }
    SAtom apply(const SAtom& a) const {
        SAtom out;
        out.pred = a.pred;
        for (const auto& t : a.args) out.args.push_back(apply(t));
        return out;
    }
};

static bool match_atom(const SAtom& pat, const SAtom& ground, Subst& sigma) {
    if (pat.pred != ground.pred || pat.args.size() != ground.args.size()) return false;
    for (size_t i = 0; i < pat.args.size(); ++i) {
        if (!is_var(pat.args[i])) {
            if (pat.args[i] != ground.args[i]) return false;
        } else if (!sigma.bind(pat.args[i], ground.args[i])) {
            return false;
        }
    }
    return true;
}

static bool unify_atoms(const SAtom& a, const SAtom& b, Subst& sigma) {
    if (a.pred != b.pred || a.args.size() != b.args.size()) return false;
    for (size_t i = 0; i < a.args.size(); ++i) {
        std::string x = sigma.apply(a.args[i]), y = sigma.apply(b.args[i]);
        if (x == y) continue;
        if (is_var(x)) sigma.b[x] = y;
        else if (is_var(y)) sigma.b[y] = x;
        else return false;
    }
    return true;
}

static std::string renaming_key(const SLit& l) {
    std::map<std::string, int> seen;
    std::string out = l.neg ? "~" : "+";
    out += l.a.pred;
    for (const auto& t : l.a.args) {
        out += "|";
        if (is_var(t)) {
            auto it = seen.emplace(t, (int)seen.size()).first;
            out += "V" + std::to_string(it->second);
        } else {
            out += t;
        }
    }
    return out;
}

} // namespace
)__";

// ------------------------------------------------------------------ tracer
const char* kTracer = R"__(
namespace {

struct TraceInput {
    const std::set<std::string>* pi_preds;
    const std::set<std::string>* m_atoms;                          // atom text
    const std::map<std::string, std::vector<SAtom>>* m_by_pred;
    const std::set<std::string>* universe;
    size_t budget;
};

static SLit tlit_to_slit(const TLit& t) {
    SLit out;
    out.neg = t.neg;
    out.a.pred = t.pred;
    for (int i = 0; i < t.n; ++i) out.a.args.push_back(t.a[i].tok);
    return out;
}

static bool in_m(const TraceInput& in, const SAtom& a) { return in.m_atoms->count(atom_text(a)) != 0; }

static std::vector<SLit> fallback_body(const TraceInput& in, const std::vector<SLit>& violated) {
    std::map<std::string, size_t> dep;
    std::set<std::string> heads;
    for (int i = 0; i < kNumTraceRules; ++i) heads.insert(kTraceRules[i].head.pred);
    for (int i = 0; i < kNumTraceRules; ++i)
        for (int j = 0; j < kTraceRules[i].nbody; ++j) {
            const TLit& b = kTraceRules[i].body[j];
            if (!heads.count(b.pred)) dep.emplace(b.pred, (size_t)b.n);
        }
    for (const SLit& l : violated)
        if (!heads.count(l.a.pred)) dep.emplace(l.a.pred, l.a.args.size());

    std::vector<SLit> body;
    for (const auto& kv : *in.m_by_pred)
        if (dep.count(kv.first) && in.pi_preds->count(kv.first))
            for (const SAtom& a : kv.second) body.push_back(SLit{a, false});
    std::vector<std::string> consts(in.universe->begin(), in.universe->end());
    for (const auto& pa : dep) {
        if (!in.pi_preds->count(pa.first)) continue;
        size_t arity = pa.second;
        if (arity > 0 && consts.empty()) continue;
        std::vector<size_t> idx(arity, 0);
        for (;;) {
            SAtom a;
            a.pred = pa.first;
            for (size_t i = 0; i < arity; ++i) a.args.push_back(consts[idx[i]]);
            if (!in_m(in, a)) body.push_back(SLit{a, true});
            size_t pos = 0;
            while (pos < arity && ++idx[pos] == consts.size()) { idx[pos] = 0; ++pos; }
            if (pos == arity) break;
        }
    }
    return body;
}

// traces a violated ground body back to pi' literals true in m; mirrors the
// generic engine's procedure, including the fallback conditions
static std::vector<SLit> trace_constraint(const TraceInput& in, const std::vector<SLit>& violated, bool* used_fallback) {
    *used_fallback = false;
    std::deque<SLit> queue(violated.begin(), violated.end());
    std::set<std::string> visited;
    for (const SLit& l : violated) visited.insert(renaming_key(l));

    std::vector<SLit> result;
    size_t selections = 0;
    int fresh = 0;
    bool fail = false;

    while (!queue.empty() && !fail) {
        if (++selections > in.budget) { fail = true; break; }
        SLit l = queue.front();
        queue.pop_front();

        if (in.pi_preds->count(l.a.pred)) {
            if (!l.neg) {
                if (atom_ground(l.a)) {
                    if (in_m(in, l.a)) result.push_back(l);
                } else {
                    auto it = in.m_by_pred->find(l.a.pred);
                    if (it != in.m_by_pred->end())
                        for (const SAtom& a : it->second) {
                            Subst sigma;
                            if (match_atom(l.a, a, sigma)) result.push_back(SLit{a, false});
                        }
                }
            } else {
                if (!atom_ground(l.a)) { fail = true; break; }
                if (!in_m(in, l.a)) result.push_back(l);
            }
            continue;
        }

        for (int ri = 0; ri < kNumTraceRules; ++ri) {
            const TRule& r = kTraceRules[ri];
            if (std::string(r.head.pred) != l.a.pred) continue;
            Subst rename;
            SLit head = tlit_to_slit(r.head);
            std::vector<SLit> body;
            for (int j = 0; j < r.nbody; ++j) body.push_back(tlit_to_slit(r.body[j]));
            std::string prefix = "T" + std::to_string(fresh) + "_";
            ++fresh;
            for (auto& tok : head.a.args)
                if (is_var(tok)) tok = prefix + tok;
            for (auto& bl : body)
                for (auto& tok : bl.a.args)
                    if (is_var(tok)) tok = prefix + tok;
            Subst sigma;
            if (!unify_atoms(head.a, l.a, sigma)) continue;
            for (const SLit& b : body) {
                SLit image;
                image.a = sigma.apply(b.a);
                image.neg = l.neg ? !b.neg : b.neg;
                std::string key = renaming_key(image);
                if (visited.insert(key).second) queue.push_back(image);
            }
        }
    }

    if (!fail) {
        for (const SLit& l : result) {
            bool true_in_m = l.neg ? !in_m(in, l.a) : in_m(in, l.a);
            if (!true_in_m || !atom_ground(l.a) || !in.pi_preds->count(l.a.pred)) { fail = true; break; }
        }
    }
    if (fail) {
        *used_fallback = true;
        return fallback_body(in, violated);
    }
    return result;
}

} // namespace
)__";

// -------------------------------------------------------------- entrypoint
const char* kEntry = R"__(
namespace {

static void split_tokens(const std::string& line, std::vector<std::string>& out) {
    size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace((unsigned char)line[i])) ++i;
        size_t j = i;
        while (j < line.size() && !std::isspace((unsigned char)line[j])) ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
}

static bool parse_atom_token(const std::string& tok, SAtom& out) {
    size_t lp = tok.find('(');
    if (lp == std::string::npos) {
        out.pred = tok;
        out.args.clear();
        return !tok.empty();
    }
    if (tok.back() != ')') return false;
    out.pred = tok.substr(0, lp);
    out.args.clear();
    size_t i = lp + 1;
    while (i < tok.size() - 1) {
        size_t j = tok.find(',', i);
        if (j == std::string::npos || j > tok.size() - 1) j = tok.size() - 1;
        out.args.push_back(tok.substr(i, j - i));
        i = j + 1;
    }
    return !out.pred.empty();
}

static std::string lit_text(const SLit& l) { return l.neg ? "not " + atom_text(l.a) : atom_text(l.a); }

static std::string constraint_text(std::vector<SLit> body) {
    std::sort(body.begin(), body.end(), [](const SLit& a, const SLit& b) {
        if (a.neg != b.neg) return !a.neg;
        return a.a < b.a;
    });
    body.erase(std::unique(body.begin(), body.end(),
                           [](const SLit& a, const SLit& b) { return a.neg == b.neg && a.a == b.a; }),
               body.end());
    std::string out = ":-";
    for (size_t i = 0; i < body.size(); ++i) {
        out += i ? ", " : " ";
        out += lit_text(body[i]);
    }
    out += ".";
    return out;
}

} // namespace

extern "C" const char* aspc_evaluate(const char* input) {
    static std::string out;
    out.clear();

    std::string text(input ? input : "");
    std::vector<std::string> lines;
    {
        size_t i = 0;
        for (int k = 0; k < 3; ++k) {
            size_t j = text.find('\n', i);
            if (j == std::string::npos) j = text.size();
            lines.push_back(text.substr(i, j - i));
            i = j < text.size() ? j + 1 : j;
        }
        lines.push_back(text.substr(i));
    }
    std::vector<std::string> pi_pred_list, universe_list, budget_tok, atom_toks;
    split_tokens(lines[0], pi_pred_list);
    split_tokens(lines[1], universe_list);
    split_tokens(lines[2], budget_tok);
    split_tokens(lines[3], atom_toks);

    std::set<std::string> pi_preds(pi_pred_list.begin(), pi_pred_list.end());
    std::set<std::string> universe(universe_list.begin(), universe_list.end());
    size_t budget = 512;
    if (!budget_tok.empty()) budget = (size_t)std::strtoull(budget_tok[0].c_str(), nullptr, 10);

    Ctx g;
    g.rel.resize(kNumPreds);
    std::map<std::string, int> pred_of;
    for (int i = 0; i < kNumPreds; ++i) pred_of.emplace(kPredNames[i], i);
    int32_t PC[kNumPoolConsts ? kNumPoolConsts : 1];
    for (int i = 0; i < kNumPoolConsts; ++i) PC[i] = g.cid(kPoolConsts[i]);
    for (int i = 0; i < kNumIndexReqs; ++i) g.ensure_index(kIndexReqs[i][0], (uint32_t)kIndexReqs[i][1]);

    std::set<std::string> m_atoms;
    std::map<std::string, std::vector<SAtom>> m_by_pred;
    std::vector<std::string> extra_atoms; // predicates this plan does not know
    for (const std::string& tok : atom_toks) {
        SAtom a;
        if (!parse_atom_token(tok, a)) continue;
        bool fresh = m_atoms.insert(atom_text(a)).second;
        if (fresh) m_by_pred[a.pred].push_back(a);
        for (const auto& c : a.args) universe.insert(c);
        auto it = pred_of.find(a.pred);
        if (it == pred_of.end()) {
            if (fresh) extra_atoms.push_back(atom_text(a));
            continue;
        }
        if (!fresh) continue;
        Row row;
        for (const auto& c : a.args) row.push_back(g.cid(c));
        g.insert(it->second, row);
    }

    run_plan(g, PC);

    // m_ext
    std::vector<std::string> ext;
    for (int p = 0; p < kNumPreds; ++p)
        for (const Row& row : g.rel[(size_t)p].rows) {
            SAtom a;
            a.pred = kPredNames[p];
            for (int32_t c : row) a.args.push_back(g.const_names[(size_t)c]);
            ext.push_back(atom_text(a));
        }
    for (const std::string& s : extra_atoms) ext.push_back(s);
    std::sort(ext.begin(), ext.end());

    // trace rule constants join the fallback universe
    for (int i = 0; i < kNumTraceRules; ++i) {
        for (int j = 0; j < kTraceRules[i].head.n; ++j)
            if (!is_var(kTraceRules[i].head.a[j].tok)) universe.insert(kTraceRules[i].head.a[j].tok);
        for (int j = 0; j < kTraceRules[i].nbody; ++j)
            for (int k = 0; k < kTraceRules[i].body[j].n; ++k)
                if (!is_var(kTraceRules[i].body[j].a[k].tok)) universe.insert(kTraceRules[i].body[j].a[k].tok);
    }

    TraceInput tin;
    tin.pi_preds = &pi_preds;
    tin.m_atoms = &m_atoms;
    tin.m_by_pred = &m_by_pred;
    tin.budget = budget;

    std::set<std::string> constraint_lines;
    for (const auto& inst : g.K) {
        std::vector<SLit> body;
        std::set<std::string> local_universe = universe;
        for (const GLit& gl : inst) {
            SLit l;
            l.neg = gl.neg;
            l.a.pred = kPredNames[gl.pred];
            for (int32_t c : gl.args) {
                l.a.args.push_back(g.const_names[(size_t)c]);
                local_universe.insert(g.const_names[(size_t)c]);
            }
            body.push_back(l);
        }
        tin.universe = &local_universe;
        bool used_fallback = false;
        std::vector<SLit> traced = trace_constraint(tin, body, &used_fallback);
        if (used_fallback) ++g.fallbacks;
        constraint_lines.insert(constraint_text(std::move(traced)));
    }

    out += "ext:";
    for (const std::string& s : ext) {
        out += " ";
        out += s;
    }
    out += "\n";
    for (const std::string& line : constraint_lines) {
        out += "c: ";
        out += line;
        out += "\n";
    }
    out += "stats: ground_instances=" + std::to_string(g.ground_instances) +
           " fallbacks=" + std::to_string(g.fallbacks) + "\n";
    return out.c_str();
}

extern "C" const char* aspc_digest() { return kDigest; }

#ifdef ASPC_STANDALONE
int main() {
    std::string buf, chunk(1 << 16, '\0');
    size_t n;
    while ((n = fread(chunk.data(), 1, chunk.size(), stdin)) > 0) buf.append(chunk.data(), n);
    fputs(aspc_evaluate(buf.c_str()), stdout);
    return 0;
}
#endif
)__";

// ------------------------------------------------------------ codegen utils

std::string term_token(const Term& t) {
    return to_string(t); // integers print as digits, symbols as names; unambiguous
}

struct Gen {
    std::string out;
    int indent = 0;

    void line(const std::string& s) {
        for (int i = 0; i < indent; ++i) out += "    ";
        out += s;
        out += "\n";
    }
    void open(const std::string& s) {
        line(s);
        ++indent;
    }
    void close() {
        --indent;
        line("}");
    }
};

std::string arg_expr(const PlanArg& a, const std::map<std::int32_t, std::string>& slot_expr) {
    if (a.is_const) return "PC[" + std::to_string(a.value) + "]";
    return slot_expr.at(a.value);
}

std::string row_expr(const PlanAtom& atom, const std::map<std::int32_t, std::string>& slot_expr) {
    std::string out = "Row{";
    for (std::size_t i = 0; i < atom.args.size(); ++i) {
        if (i) out += ", ";
        out += arg_expr(atom.args[i], slot_expr);
    }
    out += "}";
    return out;
}

// Emits the nested join for one JoinProgram. `seed` names a Row expression
// for the starter, or empty for starterless joins. `emit_body` writes the
// innermost code given the final slot expressions.
void gen_join(Gen& g, const JoinProgram& jp, const std::string& seed,
              const std::function<void(Gen&, const std::map<std::int32_t, std::string>&)>& emit_body) {
    std::map<std::int32_t, std::string> slot_expr;
    int close_count = 0;

    auto bind_atom_from_row = [&](const PlanAtom& atom, const std::string& row, bool as_filter) {
        for (std::size_t i = 0; i < atom.args.size(); ++i) {
            const PlanArg& a = atom.args[i];
            std::string cell = row + "[" + std::to_string(i) + "]";
            if (a.is_const) {
                g.open("if (" + cell + " == PC[" + std::to_string(a.value) + "]) {");
                ++close_count;
            } else if (slot_expr.count(a.value)) {
                g.open("if (" + cell + " == " + slot_expr[a.value] + ") {");
                ++close_count;
            } else {
                std::string name = "s" + std::to_string(a.value);
                g.line("const int32_t " + name + " = " + cell + ";");
                slot_expr[a.value] = name;
            }
        }
        (void)as_filter;
    };

    if (jp.starter) bind_atom_from_row(*jp.starter, seed, true);

    int loop_id = 0;
    for (const JoinStep& step : jp.steps) {
        if (const auto* lk = std::get_if<StepLookup>(&step)) {
            std::string rows_var = "m" + std::to_string(loop_id);
            std::string row_var = "t" + std::to_string(loop_id);
            ++loop_id;
            if (lk->bound_mask == 0) {
                g.open("for (const Row& " + row_var + " : g.rel[" + std::to_string(lk->atom.pred) + "].rows) {");
                ++close_count;
            } else {
                // unbound key positions stay -1; they are masked out of the hash
                std::map<std::int32_t, std::string> key_expr = slot_expr;
                std::string key = "Row{";
                for (std::size_t i = 0; i < lk->atom.args.size(); ++i) {
                    if (i) key += ", ";
                    const PlanArg& a = lk->atom.args[i];
                    if (a.is_const)
                        key += "PC[" + std::to_string(a.value) + "]";
                    else if (key_expr.count(a.value))
                        key += key_expr[a.value];
                    else
                        key += "-1";
                }
                key += "}";
                g.line("const auto& " + rows_var + " = g.lookup(" + std::to_string(lk->atom.pred) + ", " +
                       std::to_string(lk->bound_mask) + "u, " + key + ");");
                g.open("for (uint32_t ri" + std::to_string(loop_id) + " : " + rows_var + ") {");
                ++close_count;
                g.line("const Row& " + row_var + " = g.rel[" + std::to_string(lk->atom.pred) + "].rows[ri" +
                       std::to_string(loop_id) + "];");
            }
            bind_atom_from_row(lk->atom, row_var, false);
        } else if (const auto* cp = std::get_if<StepCheckPresent>(&step)) {
            g.open("if (g.contains(" + std::to_string(cp->atom.pred) + ", " + row_expr(cp->atom, slot_expr) + ")) {");
            ++close_count;
        } else {
            const auto& ca = std::get<StepCheckAbsent>(step);
            g.open("if (!g.contains(" + std::to_string(ca.atom.pred) + ", " + row_expr(ca.atom, slot_expr) + ")) {");
            ++close_count;
        }
    }

    emit_body(g, slot_expr);
    for (int i = 0; i < close_count; ++i) g.close();
}

std::string escape_c_string(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

} // namespace

SourceArtifact emit_source(const EvaluationPlan& plan) {
    Gen g;
    g.out.reserve(1 << 16);
    g.out += "// digest: " + plan.digest + "\n";
    g.out += kPrelude;

    // ---- plan data
    g.line("namespace {");
    g.line("");
    g.line("static const char* kDigest = \"" + plan.digest + "\";");
    g.line("static const int kNumPreds = " + std::to_string(plan.predicate_names.size()) + ";");
    {
        std::string names = "static const char* const kPredNames[] = {";
        for (std::size_t i = 0; i < plan.predicate_names.size(); ++i) {
            if (i) names += ", ";
            names += "\"" + escape_c_string(plan.predicate_names[i]) + "\"";
        }
        names += plan.predicate_names.empty() ? "\"\"};" : "};";
        g.line(names);
    }
    g.line("static const int kNumPoolConsts = " + std::to_string(plan.constant_pool.size()) + ";");
    {
        std::string pool = "static const char* const kPoolConsts[] = {";
        for (std::size_t i = 0; i < plan.constant_pool.size(); ++i) {
            if (i) pool += ", ";
            pool += "\"" + escape_c_string(term_token(plan.constant_pool[i])) + "\"";
        }
        pool += plan.constant_pool.empty() ? "\"\"};" : "};";
        g.line(pool);
    }
    g.line("static const int kNumIndexReqs = " + std::to_string(plan.index_requirements.size()) + ";");
    {
        std::string reqs = "static const int kIndexReqs[][2] = {";
        for (std::size_t i = 0; i < plan.index_requirements.size(); ++i) {
            if (i) reqs += ", ";
            reqs += "{" + std::to_string(plan.index_requirements[i].first) + ", " +
                    std::to_string(plan.index_requirements[i].second) + "}";
        }
        reqs += plan.index_requirements.empty() ? "{0, 0}};" : "};";
        g.line(reqs);
    }
    g.line("");

    // ---- trace-rule table (for the failed-constraint tracer only)
    g.line("struct TTerm { const char* tok; };");
    g.line("struct TLit { bool neg; const char* pred; int n; const TTerm* a; };");
    g.line("struct TRule { TLit head; int nbody; const TLit* body; };");
    const auto& rules = plan.trace_rules.rules();
    auto emit_tterm_array = [&](const std::string& name, const Atom& atom) {
        std::string s = "static const TTerm " + name + "[] = {";
        for (std::size_t i = 0; i < atom.args.size(); ++i) {
            if (i) s += ", ";
            s += "{\"" + escape_c_string(to_string(atom.args[i])) + "\"}";
        }
        s += atom.args.empty() ? "{\"\"}};" : "};";
        g.line(s);
    };
    auto tlit_expr = [&](const Literal& l, const std::string& terms_name) {
        return std::string("{") + (l.negative ? "true" : "false") + ", \"" + escape_c_string(l.atom.predicate) +
               "\", " + std::to_string(l.atom.args.size()) + ", " + terms_name + "}";
    };
    for (std::size_t ri = 0; ri < rules.size(); ++ri) {
        const Rule& r = rules[ri];
        emit_tterm_array("kTrH" + std::to_string(ri), r.head[0]);
        for (std::size_t bi = 0; bi < r.body.size(); ++bi)
            emit_tterm_array("kTrB" + std::to_string(ri) + "_" + std::to_string(bi), r.body[bi].atom);
        std::string body = "static const TLit kTrBody" + std::to_string(ri) + "[] = {";
        for (std::size_t bi = 0; bi < r.body.size(); ++bi) {
            if (bi) body += ", ";
            body += tlit_expr(r.body[bi], "kTrB" + std::to_string(ri) + "_" + std::to_string(bi));
        }
        body += r.body.empty() ? "{false, \"\", 0, nullptr}};" : "};";
        g.line(body);
    }
    g.line("static const int kNumTraceRules = " + std::to_string(rules.size()) + ";");
    {
        std::string table = "static const TRule kTraceRules[] = {";
        for (std::size_t ri = 0; ri < rules.size(); ++ri) {
            if (ri) table += ", ";
            table += "{" + tlit_expr(Literal{rules[ri].head[0], false}, "kTrH" + std::to_string(ri)) + ", " +
                     std::to_string(rules[ri].body.size()) + ", kTrBody" + std::to_string(ri) + "}";
        }
        table += rules.empty() ? "{{false, \"\", 0, nullptr}, 0, nullptr}};" : "};";
        g.line(table);
    }
    g.line("");
    g.line("} // namespace");
    g.out += kTracer;

    // ---- specialized joins
    g.line("namespace {");
    g.line("");

    for (std::size_t si = 0; si < plan.strata.size(); ++si) {
        const StratumBlock& block = plan.strata[si];
        std::string member = "static const bool kStratum" + std::to_string(si) + "Member[] = {";
        for (std::size_t p = 0; p < plan.predicate_names.size(); ++p) {
            if (p) member += ", ";
            bool is_member =
                std::find(block.member_preds.begin(), block.member_preds.end(), static_cast<std::int32_t>(p)) !=
                block.member_preds.end();
            member += is_member ? "true" : "false";
        }
        member += plan.predicate_names.empty() ? "false};" : "};";
        g.line(member);

        for (std::size_t ei = 0; ei < block.exit_joins.size(); ++ei) {
            const JoinProgram& jp = block.exit_joins[ei];
            g.line("// exit join, rule " + std::to_string(jp.origin_rule));
            if (jp.starter) {
                g.open("static void stratum" + std::to_string(si) + "_exit" + std::to_string(ei) +
                       "(Ctx& g, const int32_t* PC) {");
                g.line("const size_t n = g.rel[" + std::to_string(jp.starter->pred) + "].rows.size();");
                g.open("for (size_t i = 0; i < n; ++i) {");
                g.line("const Row seed = g.rel[" + std::to_string(jp.starter->pred) + "].rows[i];");
            } else {
                g.open("static void stratum" + std::to_string(si) + "_exit" + std::to_string(ei) +
                       "(Ctx& g, const int32_t* PC) {");
                g.open("{");
                g.line("(void)PC;");
            }
            gen_join(g, jp, "seed", [&](Gen& gg, const std::map<std::int32_t, std::string>& slots) {
                gg.line("g.derived.push_back({" + std::to_string(jp.head.pred) + ", " + row_expr(jp.head, slots) +
                        "});");
            });
            g.close();
            g.close();
        }

        for (std::size_t vi = 0; vi < block.recursive.size(); ++vi) {
            const JoinProgram& jp = block.recursive[vi].join;
            g.line("// recursive variant, rule " + std::to_string(jp.origin_rule));
            g.open("static void stratum" + std::to_string(si) + "_rec" + std::to_string(vi) +
                   "(Ctx& g, const int32_t* PC, const Row& seed) {");
            gen_join(g, jp, "seed", [&](Gen& gg, const std::map<std::int32_t, std::string>& slots) {
                gg.line("g.derived.push_back({" + std::to_string(jp.head.pred) + ", " + row_expr(jp.head, slots) +
                        "});");
            });
            g.close();
        }
    }

    for (std::size_t ci = 0; ci < plan.constraints.size(); ++ci) {
        const ConstraintJoin& cj = plan.constraints[ci];
        g.line("// constraint join, rule " + std::to_string(cj.origin_rule));
        if (cj.join.starter) {
            g.open("static void constraint" + std::to_string(ci) + "(Ctx& g, const int32_t* PC) {");
            g.line("const size_t n = g.rel[" + std::to_string(cj.join.starter->pred) + "].rows.size();");
            g.open("for (size_t i = 0; i < n; ++i) {");
            g.line("const Row seed = g.rel[" + std::to_string(cj.join.starter->pred) + "].rows[i];");
        } else {
            g.open("static void constraint" + std::to_string(ci) + "(Ctx& g, const int32_t* PC) {");
            g.open("{");
            g.line("(void)PC;");
        }
        gen_join(g, cj.join, "seed", [&](Gen& gg, const std::map<std::int32_t, std::string>& slots) {
            std::string inst = "std::vector<GLit>{";
            for (std::size_t li = 0; li < cj.body_pattern.size(); ++li) {
                if (li) inst += ", ";
                const auto& [atom, neg] = cj.body_pattern[li];
                inst += "GLit{" + std::to_string(atom.pred) + ", " + row_expr(atom, slots) + ", " +
                        (neg ? "true" : "false") + "}";
            }
            inst += "}";
            gg.line("g.K.push_back(" + inst + ");");
            gg.line("++g.ground_instances;");
        });
        g.close();
        g.close();
    }

    // ---- strata driver, unrolled
    g.open("static void run_plan(Ctx& g, const int32_t* PC) {");
    g.line("(void)PC;");
    for (std::size_t si = 0; si < plan.strata.size(); ++si) {
        const StratumBlock& block = plan.strata[si];
        g.line("// stratum " + std::to_string(si));
        for (std::size_t ei = 0; ei < block.exit_joins.size(); ++ei) {
            g.line("stratum" + std::to_string(si) + "_exit" + std::to_string(ei) + "(g, PC);");
            g.line("g.flush_exit();");
        }
        for (std::int32_t p : block.member_preds) g.line("g.seed_work(" + std::to_string(p) + ");");
        if (!block.recursive.empty() || !block.member_preds.empty()) {
            g.open("for (;;) {");
            g.line("bool any = false;");
            for (std::int32_t p : block.member_preds) {
                g.open("while (!g.rel[" + std::to_string(p) + "].work.empty()) {");
                g.line("any = true;");
                g.line("Row s = g.rel[" + std::to_string(p) + "].work.front();");
                g.line("g.rel[" + std::to_string(p) + "].work.pop_front();");
                for (std::size_t vi = 0; vi < block.recursive.size(); ++vi) {
                    if (block.recursive[vi].starter_pred != p) continue;
                    g.line("stratum" + std::to_string(si) + "_rec" + std::to_string(vi) + "(g, PC, s);");
                    g.line("g.flush_rec(kStratum" + std::to_string(si) + "Member);");
                }
                g.close();
            }
            g.line("if (!any) break;");
            g.close();
        }
    }
    for (std::size_t ci = 0; ci < plan.constraints.size(); ++ci)
        g.line("constraint" + std::to_string(ci) + "(g, PC);");
    g.close();
    g.line("");
    g.line("} // namespace");

    g.out += kEntry;

    SourceArtifact artifact;
    artifact.source = std::move(g.out);
    artifact.digest = plan.digest;
    artifact.build_recipe = "c++ -std=c++17 -O2 -shared -fPIC -o eval.so eval.src.cpp";
    return artifact;
}

} // namespace aspcomp
