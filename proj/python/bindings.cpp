#include "aspcomp/analysis.hpp"
#include "aspcomp/cache.hpp"
#include "aspcomp/interp.hpp"
#include "aspcomp/language.hpp"
#include "aspcomp/emit.hpp"
#include "aspcomp/plan.hpp"
#include "aspcomp/solve.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

namespace py = pybind11;
using namespace aspcomp;

namespace {

std::set<std::size_t> to_selection(const std::optional<std::vector<std::size_t>>& sel, const Program& p) {
    if (sel) return std::set<std::size_t>(sel->begin(), sel->end());
    return suggest_subprogram(p);
}

Interpretation atoms_to_interpretation(const std::vector<std::string>& atoms) {
    Interpretation m;
    for (const std::string& a : atoms) m.insert(parse_ground_atom(a));
    return m;
}

std::vector<std::string> interpretation_to_atoms(const Interpretation& m) {
    std::vector<std::string> out;
    for (const Atom& a : m) out.push_back(to_string(a));
    return out;
}

std::vector<std::string> constraints_to_strings(const std::set<GroundConstraint>& cs) {
    std::vector<std::string> out;
    for (const GroundConstraint& c : cs) out.push_back(to_string(c));
    return out;
}

SolveOptions make_options(const std::string& backend, const std::string& cache_dir,
                          const std::string& external_command, std::size_t candidate_budget,
                          std::size_t ground_budget) {
    SolveOptions opts;
    opts.backend = backend == "emit" ? Backend::emit : Backend::interp;
    opts.cache_dir = cache_dir;
    opts.external_command = external_command;
    opts.candidate_budget = candidate_budget;
    opts.ground_budget = ground_budget;
    return opts;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "ASP partial-compilation toolkit: split, specialize, evaluate, solve";

    py::register_exception<AspError>(m, "AspError");

    m.def("canonical", [](const std::string& text) { return canonical_text(parse_program(text)); },
          py::arg("program"), "parse and print the canonical form");

    m.def("rule_count", [](const std::string& text) { return parse_program(text).size(); }, py::arg("program"));

    m.def(
        "predicates",
        [](const std::string& text) {
            auto preds = parse_program(text).predicates();
            return std::vector<std::string>(preds.begin(), preds.end());
        },
        py::arg("program"));

    m.def(
        "program_hash",
        [](const std::string& lambda_r, const std::string& lambda_c) {
            return program_hash(parse_program(lambda_r), parse_program(lambda_c));
        },
        py::arg("lambda_r"), py::arg("lambda_c") = std::string{});

    m.def(
        "suggest",
        [](const std::string& text) {
            auto sel = suggest_subprogram(parse_program(text));
            return std::vector<std::size_t>(sel.begin(), sel.end());
        },
        py::arg("program"), "0-based indices of a greedy maximal compilable sub-program");

    m.def(
        "check",
        [](const std::string& text, const std::optional<std::vector<std::size_t>>& selection) {
            Program p = parse_program(text);
            std::set<std::size_t> sel = to_selection(selection, p);
            std::vector<Rule> lambda;
            for (std::size_t i : sel) lambda.push_back(p.rules().at(i));
            CompilabilityReport r = is_compilable(Program(lambda), p);
            py::dict out;
            out["compilable"] = r.compilable;
            out["stratified"] = r.stratified;
            out["negative_cycle"] = r.negative_cycle;
            out["head_overlap"] = std::vector<std::string>(r.head_overlap.begin(), r.head_overlap.end());
            return out;
        },
        py::arg("program"), py::arg("selection") = std::nullopt);

    m.def(
        "split",
        [](const std::string& text, const std::optional<std::vector<std::size_t>>& selection) {
            Program p = parse_program(text);
            SplitProgram s = split_program(p, to_selection(selection, p));
            return py::make_tuple(canonical_text(s.pi_prime), canonical_text(s.lambda_r),
                                  canonical_text(s.lambda_c));
        },
        py::arg("program"), py::arg("selection") = std::nullopt);

    m.def(
        "evaluate",
        [](const std::string& lambda_r, const std::string& lambda_c, const std::vector<std::string>& atoms,
           const std::vector<std::string>& pi_prime_predicates, bool specialized) {
            Program lr = parse_program(lambda_r);
            Program lc = parse_program(lambda_c);
            Interpretation mi = atoms_to_interpretation(atoms);
            std::set<std::string> preds(pi_prime_predicates.begin(), pi_prime_predicates.end());
            EvalOutcome out = specialized ? execute_plan(specialize(lr, lc), mi, preds)
                                          : evaluate_bottom_up(lr, lc, mi, preds);
            return py::make_tuple(constraints_to_strings(out.constraints), interpretation_to_atoms(out.m_ext));
        },
        py::arg("lambda_r"), py::arg("lambda_c"), py::arg("atoms"), py::arg("pi_prime_predicates"),
        py::arg("specialized") = true,
        "evaluate lambda over a candidate; returns (constraints, extended model)");

    m.def(
        "enumerate_answer_sets",
        [](const std::string& text, std::size_t limit) {
            std::vector<std::vector<std::string>> out;
            for (const Interpretation& m : enumerate_answer_sets(parse_program(text), limit))
                out.push_back(interpretation_to_atoms(m));
            return out;
        },
        py::arg("program"), py::arg("limit") = static_cast<std::size_t>(64));

    m.def(
        "solve",
        [](const std::string& text, const std::optional<std::vector<std::size_t>>& selection,
           const std::string& backend, const std::string& cache_dir, const std::string& external_command,
           std::size_t candidate_budget,
           std::size_t ground_budget) -> std::optional<std::vector<std::string>> {
            Program p = parse_program(text);
            SplitProgram s = split_program(p, to_selection(selection, p));
            SolveResult res = solve(s.pi_prime, s.lambda_r, s.lambda_c,
                                    make_options(backend, cache_dir, external_command, candidate_budget,
                                                 ground_budget));
            if (res.status == SolveResult::Status::budget_exceeded)
                throw AspError("candidate budget exhausted");
            if (!res.is_answer()) return std::nullopt;
            return interpretation_to_atoms(res.model);
        },
        py::arg("program"), py::arg("selection") = std::nullopt, py::arg("backend") = "interp",
        py::arg("cache_dir") = std::string{}, py::arg("external_command") = std::string{},
        py::arg("candidate_budget") = static_cast<std::size_t>(100'000),
        py::arg("ground_budget") = static_cast<std::size_t>(10'000'000),
        "one answer set of the program under the selected split, or None when incoherent");

    m.def(
        "perfect_model",
        [](const std::string& text, const std::string& backend, const std::string& cache_dir) {
            SolveOptions opts = make_options(backend, cache_dir, {}, 100'000, 10'000'000);
            return interpretation_to_atoms(perfect_model(parse_program(text), opts));
        },
        py::arg("program"), py::arg("backend") = "interp", py::arg("cache_dir") = std::string{});

    m.def(
        "emit_source",
        [](const std::string& lambda_r, const std::string& lambda_c) {
            return emit_source(specialize(parse_program(lambda_r), parse_program(lambda_c))).source;
        },
        py::arg("lambda_r"), py::arg("lambda_c") = std::string{},
        "the specialized evaluator as standalone C++ source");
}
