#include "aspcomp/bench.hpp"

#include "aspcomp/solve.hpp"

#include <chrono>
#include <random>

namespace aspcomp {

namespace {

Term node_term(int i) {
    return Term::integer(i);
}

Rule fact(Atom a) {
    Rule r;
    r.head.push_back(std::move(a));
    return r;
}

} // namespace

Program random_graph_facts(int nodes, double density, std::uint64_t seed, bool undirected_self_loops) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::vector<Rule> rules;
    for (int i = 1; i <= nodes; ++i) rules.push_back(fact(Atom{"v", {node_term(i)}}));
    if (undirected_self_loops)
        for (int i = 1; i <= nodes; ++i) rules.push_back(fact(Atom{"e", {node_term(i), node_term(i)}}));
    for (int i = 1; i <= nodes; ++i)
        for (int j = undirected_self_loops ? i + 1 : 1; j <= nodes; ++j) {
            if (i == j) continue;
            if (coin(rng) >= density) continue;
            rules.push_back(fact(Atom{"e", {node_term(i), node_term(j)}}));
            if (undirected_self_loops) rules.push_back(fact(Atom{"e", {node_term(j), node_term(i)}}));
        }
    return Program(std::move(rules));
}

namespace {

Program parse_rules(const std::string& text) {
    return parse_program(text);
}

Program concat(const Program& a, const Program& b) {
    std::vector<Rule> rules = a.rules();
    for (const Rule& r : b.rules()) rules.push_back(r);
    return Program(std::move(rules));
}

nlohmann::json eval_stats_json(const EvalStats& s) {
    return nlohmann::json{{"dispatch_events", s.dispatch_events},
                          {"rule_evaluations", s.rule_evaluations},
                          {"fixpoint_iterations", s.fixpoint_iterations},
                          {"tuples_inserted", s.tuples_inserted},
                          {"index_lookups", s.index_lookups},
                          {"ground_instances", s.ground_instances},
                          {"constraint_traces", s.constraint_traces},
                          {"trace_fallbacks", s.trace_fallbacks}};
}

nlohmann::json solve_stats_json(const SolveStats& s, bool timings) {
    nlohmann::json out{{"candidates_examined", s.candidates_examined},
                       {"constraints_learned", s.constraints_learned},
                       {"constraints_added", s.constraints_added},
                       {"lambda_ground_instances", s.lambda_ground_instances},
                       {"pi_prime_ground_rules", s.pi_prime_ground_rules},
                       {"eval", eval_stats_json(s.eval)}};
    if (timings)
        out["timings"] = {{"compile_s", s.t_compile_s}, {"candidates_s", s.t_candidates_s}, {"eval_s", s.t_eval_s}};
    return out;
}

// Naive fixpoint over an already-ground positive-and-stratum-free program;
// good enough as the e1 baseline evaluator (TC has no negation).
std::pair<Interpretation, bool> baseline_fixpoint(const Program& ground) {
    Interpretation m;
    for (const Rule& r : ground.rules())
        if (r.is_fact()) m.insert(r.head[0]);
    bool changed = true;
    while (changed) {
        changed = false;
        for (const Rule& r : ground.rules()) {
            if (r.is_constraint() || r.is_fact()) continue;
            bool body_true = true;
            for (const Literal& l : r.body) {
                bool holds = l.positive() ? m.contains(l.atom) : !m.contains(l.atom);
                if (!holds) {
                    body_true = false;
                    break;
                }
            }
            if (body_true && m.insert(r.head[0])) changed = true;
        }
    }
    bool violated = false;
    for (const Rule& r : ground.rules()) {
        if (!r.is_constraint()) continue;
        bool body_true = true;
        for (const Literal& l : r.body) {
            bool holds = l.positive() ? m.contains(l.atom) : !m.contains(l.atom);
            if (!holds) {
                body_true = false;
                break;
            }
        }
        if (body_true) violated = true;
    }
    return {std::move(m), violated};
}

const char* kTcRules = "r(X,Y) :- e(X,Y).\n"
                       "r(X,Y) :- e(X,Z), r(Z,Y).\n";

const char* kCutGuess = "in(X) | out(X) :- v(X).\n";

const char* kCutLambdaRules = "ein(X,Y) :- e(X,Y), in(X), in(Y).\n"
                              "eout(X,Y) :- e(X,Y), out(X), out(Y).\n"
                              "rin(X,Y) :- ein(X,Y).\n"
                              "rin(X,Y) :- ein(X,Z), rin(Z,Y).\n"
                              "rout(X,Y) :- eout(X,Y).\n"
                              "rout(X,Y) :- eout(X,Z), rout(Z,Y).\n";

const char* kCutConstraints = ":- in(X), in(Y), not rin(X,Y).\n"
                              ":- out(X), out(Y), not rout(X,Y).\n";

nlohmann::json bench_row_e1(const BenchParams& p, int instance) {
    Program facts = random_graph_facts(p.nodes, p.density, p.seed + static_cast<std::uint64_t>(instance), false);
    Program full = concat(facts, parse_rules(kTcRules));

    nlohmann::json row;
    row["instance"] = instance;

    SolveOptions opts;
    opts.backend = p.backend;
    opts.cache_dir = p.cache_dir;
    opts.ground_budget = p.ground_budget;
    opts.candidate_budget = p.candidate_budget;

    auto t0 = std::chrono::steady_clock::now();
    SolveStats stats;
    std::string outcome = "answer";
    std::size_t model_size = 0;
    try {
        // perfect model over the compiled path
        Program pi_prime = facts;
        Program lambda_r = parse_rules(kTcRules);
        Program lambda_c;
        SolveResult res = solve(pi_prime, lambda_r, lambda_c, opts);
        stats = res.stats;
        outcome = res.is_answer() ? "answer" : "incoherent";
        model_size = res.model.size();
    } catch (const GroundBudgetError&) {
        outcome = "budget_exceeded";
    }
    double compiled_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    row["outcome"] = outcome;
    row["model_size"] = model_size;
    row["compiled"] = solve_stats_json(stats, p.timings);

    nlohmann::json baseline;
    auto t1 = std::chrono::steady_clock::now();
    try {
        SmartGroundResult g = ground_with_possible_atoms(full, p.ground_budget);
        baseline["ground_rules"] = g.total_instances;
        baseline["per_rule"] = g.per_rule_instances;
        if (g.total_instances <= p.baseline_eval_limit) {
            auto [m, violated] = baseline_fixpoint(g.ground);
            baseline["outcome"] = violated ? "incoherent" : "answer";
            baseline["model_size"] = m.size();
            baseline["model_match"] = (!violated && outcome == "answer") ? (m.size() == model_size) : false;
        } else {
            baseline["outcome"] = "ground_only";
        }
    } catch (const GroundBudgetError&) {
        baseline["outcome"] = "budget_exceeded";
    }
    if (p.timings) {
        baseline["wall_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
        row["compiled_wall_s"] = compiled_s;
    }
    row["baseline"] = baseline;
    return row;
}

nlohmann::json bench_row_cut(const BenchParams& p, int instance, bool with_constraints) {
    Program facts = random_graph_facts(p.nodes, p.density, p.seed + static_cast<std::uint64_t>(instance), true);

    // Anchor one vertex on each side so the partition is never trivial.
    std::string guess = kCutGuess;
    guess += ":- out(1).\n";
    guess += ":- in(2).\n";
    Program pi_prime = concat(facts, parse_rules(guess));
    Program lambda_r = parse_rules(kCutLambdaRules);
    Program lambda_c = with_constraints ? parse_rules(kCutConstraints) : Program{};

    nlohmann::json row;
    row["instance"] = instance;

    SolveOptions opts;
    opts.backend = p.backend;
    opts.cache_dir = p.cache_dir;
    opts.ground_budget = p.ground_budget;
    opts.candidate_budget = p.candidate_budget;

    auto t0 = std::chrono::steady_clock::now();
    std::string outcome;
    SolveResult res;
    try {
        res = solve(pi_prime, lambda_r, lambda_c, opts);
        switch (res.status) {
        case SolveResult::Status::answer: outcome = "answer"; break;
        case SolveResult::Status::incoherent: outcome = "incoherent"; break;
        case SolveResult::Status::budget_exceeded: outcome = "budget_exceeded"; break;
        }
    } catch (const GroundBudgetError&) {
        outcome = "budget_exceeded";
    }
    row["outcome"] = outcome;
    row["compiled"] = solve_stats_json(res.stats, p.timings);
    if (p.timings)
        row["compiled_wall_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    // Oracle comparison on desk-size instances: enumerate the full program.
    Program full = concat(concat(pi_prime, lambda_r), lambda_c);
    if (p.nodes <= 12) {
        try {
            auto models = enumerate_answer_sets(full, 1, p.ground_budget);
            bool oracle_coherent = !models.empty();
            row["oracle_outcome"] = oracle_coherent ? "answer" : "incoherent";
            row["outcome_match"] = (outcome == "answer") == oracle_coherent;
        } catch (const GroundBudgetError&) {
            row["oracle_outcome"] = "budget_exceeded";
        }
    }

    nlohmann::json baseline;
    try {
        SmartGroundResult g = ground_with_possible_atoms(full, p.ground_budget);
        baseline["ground_rules"] = g.total_instances;
        baseline["per_rule"] = g.per_rule_instances;
    } catch (const GroundBudgetError&) {
        baseline["outcome"] = "budget_exceeded";
    }
    row["baseline"] = baseline;
    return row;
}

} // namespace

nlohmann::json run_bench(const BenchParams& p) {
    nlohmann::json report;
    report["scenario"] = p.scenario;
    report["params"] = {{"nodes", p.nodes},
                        {"density", p.density},
                        {"instances", p.instances},
                        {"seed", p.seed},
                        {"backend", p.backend == Backend::interp ? "interp" : "emit"}};
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < p.instances; ++i) {
        if (p.scenario == "e1")
            rows.push_back(bench_row_e1(p, i));
        else if (p.scenario == "e3-kcut")
            rows.push_back(bench_row_cut(p, i, true));
        else if (p.scenario == "e4-mincut-tc")
            rows.push_back(bench_row_cut(p, i, false));
        else
            throw AspError("unknown bench scenario '" + p.scenario + "'");
    }
    report["rows"] = rows;
    return report;
}

} // namespace aspcomp
