#include "aspcomp/analysis.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <limits>

namespace aspcomp {

bool DependencyGraph::has_vertex(const std::string& p) const {
    return std::find(vertices.begin(), vertices.end(), p) != vertices.end();
}

DependencyGraph dependency_graph(const Program& p) {
    DependencyGraph g;
    int position = 0;
    auto note_occurrence = [&](const std::string& pred) {
        g.first_occurrence.emplace(pred, position++);
    };
    std::set<std::string> vertex_set;
    for (const Rule& r : p.rules()) {
        for (const Atom& a : r.head) {
            note_occurrence(a.predicate);
            if (vertex_set.insert(a.predicate).second) g.vertices.push_back(a.predicate);
        }
        for (const Literal& l : r.body) note_occurrence(l.atom.predicate);
    }
    for (const Rule& r : p.rules()) {
        for (const Literal& l : r.body)
            for (const Atom& h : r.head)
                g.edges.insert(DependencyEdge{l.atom.predicate, h.predicate, l.negative});
        // Negative edges between distinct atoms of a disjunctive head; a
        // single-atom head yields none, two atoms with the same predicate
        // yield a negative self-edge.
        for (std::size_t i = 0; i < r.head.size(); ++i)
            for (std::size_t j = 0; j < r.head.size(); ++j)
                if (i != j)
                    g.edges.insert(DependencyEdge{r.head[i].predicate, r.head[j].predicate, true});
    }
    // Drop edges whose source is not a vertex (pure EDB predicates have no
    // vertex, so they induce no edges either).
    for (auto it = g.edges.begin(); it != g.edges.end();) {
        if (!vertex_set.count(it->from) || !vertex_set.count(it->to))
            it = g.edges.erase(it);
        else
            ++it;
    }
    return g;
}

namespace {

struct TarjanState {
    const std::vector<std::string>* verts;
    std::map<std::string, std::vector<std::string>> succ;
    std::map<std::string, int> index, lowlink;
    std::map<std::string, bool> on_stack;
    std::vector<std::string> stack;
    int counter = 0;
    std::vector<std::vector<std::string>> sccs;

    void dfs(const std::string& v) {
        index[v] = lowlink[v] = counter++;
        stack.push_back(v);
        on_stack[v] = true;
        for (const std::string& w : succ[v]) {
            if (!index.count(w)) {
                dfs(w);
                lowlink[v] = std::min(lowlink[v], lowlink[w]);
            } else if (on_stack[w]) {
                lowlink[v] = std::min(lowlink[v], index[w]);
            }
        }
        if (lowlink[v] == index[v]) {
            std::vector<std::string> scc;
            for (;;) {
                std::string w = stack.back();
                stack.pop_back();
                on_stack[w] = false;
                scc.push_back(w);
                if (w == v) break;
            }
            sccs.push_back(std::move(scc));
        }
    }
};

} // namespace

SccOrder scc_order(const DependencyGraph& g) {
    TarjanState t;
    t.verts = &g.vertices;
    for (const std::string& v : g.vertices) t.succ[v]; // ensure entry
    for (const DependencyEdge& e : g.edges) t.succ[e.from].push_back(e.to);
    for (auto& [v, s] : t.succ) {
        std::sort(s.begin(), s.end());
        s.erase(std::unique(s.begin(), s.end()), s.end());
    }
    for (const std::string& v : g.vertices)
        if (!t.index.count(v)) t.dfs(v);

    // Map predicates to their Tarjan component.
    std::map<std::string, std::size_t> comp_of;
    for (std::size_t i = 0; i < t.sccs.size(); ++i)
        for (const std::string& v : t.sccs[i]) comp_of[v] = i;

    // Kahn over the condensation, frontier ordered by the smallest
    // first-occurrence position of any member predicate.
    std::size_t n = t.sccs.size();
    std::vector<int> indegree(n, 0);
    std::vector<std::set<std::size_t>> csucc(n);
    for (const DependencyEdge& e : g.edges) {
        std::size_t a = comp_of[e.from], b = comp_of[e.to];
        if (a != b && csucc[a].insert(b).second) ++indegree[b];
    }
    auto occurrence_key = [&](std::size_t c) {
        int best = std::numeric_limits<int>::max();
        for (const std::string& v : t.sccs[c]) {
            auto it = g.first_occurrence.find(v);
            if (it != g.first_occurrence.end()) best = std::min(best, it->second);
        }
        return best;
    };
    std::set<std::pair<int, std::size_t>> frontier;
    for (std::size_t c = 0; c < n; ++c)
        if (indegree[c] == 0) frontier.insert({occurrence_key(c), c});

    SccOrder order;
    while (!frontier.empty()) {
        auto [key, c] = *frontier.begin();
        frontier.erase(frontier.begin());
        std::vector<std::string> members = t.sccs[c];
        std::sort(members.begin(), members.end(), [&](const std::string& a, const std::string& b) {
            return g.first_occurrence.at(a) < g.first_occurrence.at(b);
        });
        for (const std::string& v : members) order.component_of[v] = order.components.size();
        order.components.push_back(std::move(members));
        for (std::size_t d : csucc[c])
            if (--indegree[d] == 0) frontier.insert({occurrence_key(d), d});
    }
    return order;
}

StratificationResult is_stratified(const DependencyGraph& g) {
    SccOrder order = scc_order(g);
    // A negative edge inside one component closes a cycle through it.
    for (const DependencyEdge& e : g.edges) {
        if (!e.negative) continue;
        if (order.component_of.at(e.from) != order.component_of.at(e.to)) continue;
        StratificationResult res;
        res.stratified = false;
        if (e.from == e.to) {
            res.witness_cycle = {e.from};
            return res;
        }
        // Shortest path e.to -> e.from inside the component (it exists).
        std::map<std::string, std::vector<std::string>> succ;
        for (const DependencyEdge& d : g.edges)
            if (order.component_of.at(d.from) == order.component_of.at(e.from) &&
                order.component_of.at(d.to) == order.component_of.at(e.from))
                succ[d.from].push_back(d.to);
        for (auto& [v, s] : succ) {
            std::sort(s.begin(), s.end());
            s.erase(std::unique(s.begin(), s.end()), s.end());
        }
        std::map<std::string, std::string> parent;
        std::deque<std::string> queue{e.to};
        parent[e.to] = e.to;
        while (!queue.empty()) {
            std::string v = queue.front();
            queue.pop_front();
            if (v == e.from) break;
            for (const std::string& w : succ[v])
                if (!parent.count(w)) {
                    parent[w] = v;
                    queue.push_back(w);
                }
        }
        std::vector<std::string> path; // e.to .. e.from
        for (std::string v = e.from;; v = parent.at(v)) {
            path.push_back(v);
            if (v == e.to) break;
        }
        std::reverse(path.begin(), path.end());
        // Cycle starting at the negative edge's source.
        res.witness_cycle.push_back(e.from);
        for (const std::string& v : path)
            if (v != e.from) res.witness_cycle.push_back(v);
        return res;
    }
    return StratificationResult{};
}

std::string CompilabilityReport::describe() const {
    if (compilable) return "compilable";
    std::string out = "not compilable:";
    if (!stratified) {
        out += " not stratified (negative cycle:";
        for (const std::string& p : negative_cycle) out += " " + p;
        out += ")";
    }
    if (!head_overlap.empty()) {
        out += " head predicates occurring outside lambda:";
        for (const std::string& p : head_overlap) out += " " + p;
    }
    return out;
}

CompilabilityError::CompilabilityError(CompilabilityReport report)
    : AspError(report.describe()), report_(std::move(report)) {}

namespace {

// Rule-wise multiset difference pi \ lambda; throws if lambda is not contained in pi.
std::vector<Rule> multiset_difference(const Program& pi, const Program& lambda) {
    std::vector<Rule> rest = pi.rules();
    for (const Rule& r : lambda.rules()) {
        auto it = std::find(rest.begin(), rest.end(), r);
        if (it == rest.end())
            throw AspError("lambda is not a sub-program of pi: rule '" + to_string(r) + "' not found");
        rest.erase(it);
    }
    return rest;
}

} // namespace

CompilabilityReport is_compilable(const Program& lambda, const Program& pi) {
    Program rest(multiset_difference(pi, lambda));
    CompilabilityReport report;
    StratificationResult strat = is_stratified(dependency_graph(lambda));
    report.stratified = strat.stratified;
    report.negative_cycle = strat.witness_cycle;
    std::set<std::string> outside = rest.predicates();
    for (const std::string& p : lambda.head_predicates())
        if (outside.count(p)) report.head_overlap.insert(p);
    report.compilable = report.stratified && report.head_overlap.empty();
    return report;
}

std::vector<SccRules> classify_rules(const Program& lambda_r, const SccOrder& order) {
    std::vector<SccRules> out(order.components.size());
    for (std::size_t i = 0; i < lambda_r.rules().size(); ++i) {
        const Rule& r = lambda_r.rules()[i];
        if (r.is_constraint()) continue; // constraints are handled separately
        std::size_t comp = order.component_of.at(r.head[0].predicate);
        bool recursive = false;
        for (const Literal& l : r.body) {
            auto it = order.component_of.find(l.atom.predicate);
            // Predicates without a vertex (EDB / pi') precede every component.
            if (it != order.component_of.end() && it->second == comp) {
                recursive = true;
                break;
            }
        }
        if (recursive)
            out[comp].recursive_rules.push_back(i);
        else
            out[comp].exit_rules.push_back(i);
    }
    return out;
}

SplitProgram split_program(const Program& pi, const std::set<std::size_t>& selection) {
    if (!selection.empty() && *selection.rbegin() >= pi.rules().size())
        throw AspError("selection index " + std::to_string(*selection.rbegin() + 1) + " out of range (program has " +
                       std::to_string(pi.rules().size()) + " rules)");
    std::vector<Rule> lambda_rules, rest;
    for (std::size_t i = 0; i < pi.rules().size(); ++i) {
        if (selection.count(i))
            lambda_rules.push_back(pi.rules()[i]);
        else
            rest.push_back(pi.rules()[i]);
    }
    Program lambda(lambda_rules);
    CompilabilityReport report = is_compilable(lambda, pi);
    if (!report.compilable) throw CompilabilityError(std::move(report));
    SplitProgram out;
    std::vector<Rule> lr, lc;
    for (Rule& r : lambda_rules) {
        if (r.is_constraint())
            lc.push_back(std::move(r));
        else
            lr.push_back(std::move(r));
    }
    out.pi_prime = Program(std::move(rest));
    out.lambda_r = Program(std::move(lr));
    out.lambda_c = Program(std::move(lc));
    return out;
}

std::set<std::size_t> suggest_subprogram(const Program& pi) {
    std::set<std::size_t> selection;
    for (std::size_t i = 0; i < pi.rules().size(); ++i)
        if (pi.rules()[i].is_constraint()) selection.insert(i);

    auto build = [&](const std::set<std::size_t>& sel) {
        std::vector<Rule> rules;
        for (std::size_t i : sel) rules.push_back(pi.rules()[i]);
        return Program(std::move(rules));
    };

    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < pi.rules().size(); ++i) {
            const Rule& r = pi.rules()[i];
            if (selection.count(i) || r.is_fact()) continue;
            // Close the candidate set over shared head predicates: any
            // outside rule mentioning a candidate head predicate must come
            // along, or condition (ii) can never hold.
            std::set<std::size_t> candidate = selection;
            candidate.insert(i);
            bool grew = true;
            bool includes_fact = false;
            while (grew) {
                grew = false;
                std::set<std::string> heads = build(candidate).head_predicates();
                for (std::size_t j = 0; j < pi.rules().size(); ++j) {
                    if (candidate.count(j)) continue;
                    const Rule& rj = pi.rules()[j];
                    bool mentions = false;
                    for (const Atom& a : rj.head)
                        if (heads.count(a.predicate)) mentions = true;
                    for (const Literal& l : rj.body)
                        if (heads.count(l.atom.predicate)) mentions = true;
                    if (mentions) {
                        if (rj.is_fact()) includes_fact = true; // facts stay in pi'
                        candidate.insert(j);
                        grew = true;
                    }
                }
            }
            if (includes_fact) continue;
            if (is_compilable(build(candidate), pi).compilable) {
                selection = std::move(candidate);
                changed = true;
            }
        }
    }
    return selection;
}

} // namespace aspcomp
