#pragma once

#include "aspcomp/cache.hpp"
#include "aspcomp/language.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

namespace aspcomp {

struct BenchParams {
    std::string scenario; // e1 | e3-kcut | e4-mincut-tc
    int nodes = 30;
    double density = 0.1;
    int instances = 3;
    std::uint64_t seed = 1;
    Backend backend = Backend::interp;
    std::filesystem::path cache_dir;
    bool timings = true;
    std::size_t ground_budget = 10'000'000;
    std::size_t candidate_budget = 100'000;
    // Baseline evaluation is skipped (counters only) above this many ground instances.
    std::uint64_t baseline_eval_limit = 200'000;
};

// Desk-scale analogues of the paper-style experiments: generates seeded
// random graph instances, runs the compiled path against the full-grounding
// baseline and reports counters per row. Deterministic given the seed.
nlohmann::json run_bench(const BenchParams&);

// Random digraph as fact rules v/1 and e/2. When `undirected_self_loops` is
// set, edges come in both directions and every vertex carries a self loop.
Program random_graph_facts(int nodes, double density, std::uint64_t seed, bool undirected_self_loops);

} // namespace aspcomp
