#include "aspcomp/analysis.hpp"
#include "aspcomp/bench.hpp"
#include "aspcomp/cache.hpp"
#include "aspcomp/language.hpp"
#include "aspcomp/solve.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace aspcomp;

struct SelectionFlags {
    std::string lambda_idx_file;
    bool markers = false;
    bool constraints_only = false;
    bool suggest = false;
};

void add_selection_flags(CLI::App* cmd, SelectionFlags& sel) {
    auto* a = cmd->add_option("--lambda-idx", sel.lambda_idx_file, "sidecar file with 1-based rule indices for lambda");
    auto* b = cmd->add_flag("--markers", sel.markers, "take lambda from %@compile marker lines");
    auto* c = cmd->add_flag("--constraints-only", sel.constraints_only, "lambda = all constraints");
    auto* d = cmd->add_flag("--suggest", sel.suggest, "greedy maximal compilable lambda (default)");
    a->excludes(b)->excludes(c)->excludes(d);
    b->excludes(c)->excludes(d);
    c->excludes(d);
}

std::string read_input(const std::vector<std::string>& paths) {
    std::string text;
    for (const std::string& p : paths) {
        if (p == "-") {
            std::ostringstream ss;
            ss << std::cin.rdbuf();
            text += ss.str();
        } else {
            std::ifstream in(p);
            if (!in) throw AspError("cannot open " + p);
            std::ostringstream ss;
            ss << in.rdbuf();
            text += ss.str();
        }
        text += "\n";
    }
    return text;
}

std::set<std::size_t> resolve_selection(const SelectionFlags& sel, const ParsedProgram& parsed) {
    const Program& p = parsed.program;
    if (!sel.lambda_idx_file.empty()) {
        std::ifstream in(sel.lambda_idx_file);
        if (!in) throw AspError("cannot open " + sel.lambda_idx_file);
        std::set<std::size_t> out;
        long long idx;
        while (in >> idx) {
            if (idx < 1 || static_cast<std::size_t>(idx) > p.rules().size())
                throw AspError("lambda index " + std::to_string(idx) + " out of range (program has " +
                               std::to_string(p.rules().size()) + " rules)");
            out.insert(static_cast<std::size_t>(idx - 1));
        }
        return out;
    }
    if (sel.markers) return std::set<std::size_t>(parsed.marked_rules.begin(), parsed.marked_rules.end());
    if (sel.constraints_only) {
        std::set<std::size_t> out;
        for (std::size_t i = 0; i < p.rules().size(); ++i)
            if (p.rules()[i].is_constraint()) out.insert(i);
        return out;
    }
    return suggest_subprogram(p); // default: --suggest
}

void write_stats(const std::string& path, const nlohmann::json& doc) {
    if (path.empty()) return;
    std::ofstream out(path);
    out << doc.dump(2) << "\n";
}

nlohmann::json stats_json(const SolveStats& s) {
    return nlohmann::json{{"candidates_examined", s.candidates_examined},
                          {"constraints_learned", s.constraints_learned},
                          {"constraints_added", s.constraints_added},
                          {"lambda_ground_instances", s.lambda_ground_instances},
                          {"eval",
                           {{"dispatch_events", s.eval.dispatch_events},
                            {"rule_evaluations", s.eval.rule_evaluations},
                            {"fixpoint_iterations", s.eval.fixpoint_iterations},
                            {"tuples_inserted", s.eval.tuples_inserted},
                            {"index_lookups", s.eval.index_lookups},
                            {"ground_instances", s.eval.ground_instances},
                            {"trace_fallbacks", s.eval.trace_fallbacks}}},
                          {"timings",
                           {{"compile_s", s.t_compile_s}, {"candidates_s", s.t_candidates_s}, {"eval_s", s.t_eval_s}}}};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"aspcomp: splits an ASP program, compiles the stratified part, and solves via "
                 "candidate generation plus compiled evaluation"};
    app.require_subcommand(1);

    std::vector<std::string> paths;
    SelectionFlags sel;
    std::string backend_name = "interp";
    std::string cache_dir;
    std::string solver_cmd;
    std::string stats_path;
    std::size_t budget_ground = 10'000'000;
    std::size_t budget_candidates = 100'000;

    auto add_common = [&](CLI::App* cmd, bool with_selection) {
        cmd->add_option("paths", paths, "program file(s), '-' for stdin")->required();
        if (with_selection) add_selection_flags(cmd, sel);
        cmd->add_option("--backend", backend_name, "evaluation backend")->check(CLI::IsMember({"interp", "emit"}));
        cmd->add_option("--cache", cache_dir, "compilation cache directory");
        cmd->add_option("--budget-ground", budget_ground, "ground instance budget");
        cmd->add_option("--budget-candidates", budget_candidates, "candidate budget");
        cmd->add_option("--stats", stats_path, "write run statistics to this file");
    };

    auto* cmd_check = app.add_subcommand("check", "report compilability of the selected lambda");
    add_common(cmd_check, true);

    auto* cmd_split = app.add_subcommand("split", "print pi', lambda_R and lambda_C");
    add_common(cmd_split, true);

    auto* cmd_compile = app.add_subcommand("compile", "populate the compilation cache and print the digest");
    add_common(cmd_compile, true);

    auto* cmd_eval = app.add_subcommand("eval", "perfect model of a stratified program");
    add_common(cmd_eval, false);

    auto* cmd_solve = app.add_subcommand("solve", "compute one answer set or INCOHERENT");
    add_common(cmd_solve, true);
    cmd_solve->add_option("--solver-cmd", solver_cmd, "external command producing answer sets of pi'");

    auto* cmd_bench = app.add_subcommand("bench", "desk-scale experiment harness");
    BenchParams bench;
    bool no_timings = false;
    cmd_bench->add_option("--scenario", bench.scenario, "e1 | e3-kcut | e4-mincut-tc")
        ->required()
        ->check(CLI::IsMember({"e1", "e3-kcut", "e4-mincut-tc"}));
    cmd_bench->add_option("--nodes", bench.nodes, "graph size");
    cmd_bench->add_option("--density", bench.density, "edge probability");
    cmd_bench->add_option("--instances", bench.instances, "instances per scenario");
    cmd_bench->add_option("--seed", bench.seed, "random seed");
    cmd_bench->add_option("--backend", backend_name, "evaluation backend")->check(CLI::IsMember({"interp", "emit"}));
    cmd_bench->add_option("--cache", cache_dir, "compilation cache directory");
    cmd_bench->add_option("--budget-ground", budget_ground, "ground instance budget");
    cmd_bench->add_option("--budget-candidates", budget_candidates, "candidate budget");
    cmd_bench->add_option("--stats", stats_path, "write the report to this file");
    cmd_bench->add_flag("--no-timings", no_timings, "omit wall times (byte-reproducible reports)");

    CLI11_PARSE(app, argc, argv);

    Backend backend = backend_name == "emit" ? Backend::emit : Backend::interp;

    try {
        if (cmd_bench->parsed()) {
            bench.backend = backend;
            bench.cache_dir = cache_dir;
            bench.timings = !no_timings;
            bench.ground_budget = budget_ground;
            bench.candidate_budget = budget_candidates;
            nlohmann::json report = run_bench(bench);
            std::cout << report.dump(2) << "\n";
            write_stats(stats_path, report);
            return 0;
        }

        ParsedProgram parsed = parse_program_with_markers(read_input(paths));
        const Program& program = parsed.program;

        if (cmd_eval->parsed()) {
            SolveOptions opts;
            opts.backend = backend;
            opts.cache_dir = cache_dir;
            opts.ground_budget = budget_ground;
            opts.candidate_budget = budget_candidates;
            Interpretation m = perfect_model(program, opts);
            std::cout << to_string(m) << "\n";
            write_stats(stats_path, nlohmann::json{{"command", "eval"}, {"atoms", m.size()}});
            return 0;
        }

        std::set<std::size_t> selection = resolve_selection(sel, parsed);

        if (cmd_check->parsed()) {
            std::vector<Rule> lambda_rules;
            for (std::size_t i : selection) lambda_rules.push_back(program.rules()[i]);
            CompilabilityReport report = is_compilable(Program(lambda_rules), program);
            std::cout << report.describe() << "\n";
            nlohmann::json doc{{"command", "check"},
                               {"compilable", report.compilable},
                               {"stratified", report.stratified},
                               {"negative_cycle", report.negative_cycle},
                               {"head_overlap", report.head_overlap},
                               {"selection_size", selection.size()}};
            write_stats(stats_path, doc);
            return report.compilable ? 0 : 1;
        }

        SplitProgram split = split_program(program, selection);

        if (cmd_split->parsed()) {
            std::cout << "% pi_prime\n" << canonical_text(split.pi_prime);
            std::cout << "% lambda_r\n" << canonical_text(split.lambda_r);
            std::cout << "% lambda_c\n" << canonical_text(split.lambda_c);
            write_stats(stats_path, nlohmann::json{{"command", "split"},
                                                   {"pi_prime_rules", split.pi_prime.size()},
                                                   {"lambda_r_rules", split.lambda_r.size()},
                                                   {"lambda_c_rules", split.lambda_c.size()}});
            return 0;
        }

        if (cmd_compile->parsed()) {
            CacheStats cstats;
            EvaluatorHandle handle =
                cache_get_or_build(split.lambda_r, split.lambda_c, backend, cache_dir, &cstats);
            std::cout << handle->digest() << "\n";
            write_stats(stats_path, nlohmann::json{{"command", "compile"},
                                                   {"digest", handle->digest()},
                                                   {"hits", cstats.hits},
                                                   {"misses", cstats.misses},
                                                   {"builds", cstats.builds}});
            return 0;
        }

        if (cmd_solve->parsed()) {
            SolveOptions opts;
            opts.backend = backend;
            opts.cache_dir = cache_dir;
            opts.external_command = solver_cmd;
            opts.ground_budget = budget_ground;
            opts.candidate_budget = budget_candidates;
            SolveResult res = solve(split.pi_prime, split.lambda_r, split.lambda_c, opts);
            nlohmann::json doc = stats_json(res.stats);
            doc["command"] = "solve";
            switch (res.status) {
            case SolveResult::Status::answer:
                std::cout << to_string(res.model) << "\n";
                doc["outcome"] = "answer";
                write_stats(stats_path, doc);
                return 0;
            case SolveResult::Status::incoherent:
                std::cout << "INCOHERENT\n";
                doc["outcome"] = "incoherent";
                write_stats(stats_path, doc);
                return 0;
            case SolveResult::Status::budget_exceeded:
                std::cerr << "aspcomp: candidate budget exhausted after " << res.stats.candidates_examined
                          << " candidates\n";
                doc["outcome"] = "budget_exceeded";
                write_stats(stats_path, doc);
                return 2;
            }
        }
    } catch (const GroundBudgetError& e) {
        std::cerr << "aspcomp: " << e.what() << "\n";
        return 2;
    } catch (const AspError& e) {
        std::cerr << "aspcomp: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
