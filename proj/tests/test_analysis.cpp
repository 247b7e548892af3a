#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "aspcomp/analysis.hpp"
#include "support/oracle.hpp"

#include <random>

using namespace aspcomp;

namespace {

const char* kPi1 = "in(X) | out(X) :- v(X).\n"
                   "r(X,Y) :- e(X,Y).\n"
                   "r(X,Y) :- e(X,Z), r(Z,Y).\n"
                   ":- in(X), in(Y), not r(X,Y).\n"
                   "v(1). v(2). e(1,2). e(2,1).\n";

bool has_edge(const DependencyGraph& g, const std::string& from, const std::string& to, bool neg) {
    return g.edges.count(DependencyEdge{from, to, neg}) != 0;
}

} // namespace

TEST_CASE("dependency graph of the guess-and-check program") {
    DependencyGraph g = dependency_graph(parse_program(kPi1));
    // vertices: only predicates that appear in some head
    CHECK(g.vertices == std::vector<std::string>{"in", "out", "r", "v", "e"});
    // v and e are heads here because of the facts; without facts they vanish
    DependencyGraph g2 = dependency_graph(parse_program("in(X) | out(X) :- v(X).\n"
                                                        "r(X,Y) :- e(X,Y).\n"
                                                        "r(X,Y) :- e(X,Z), r(Z,Y).\n"
                                                        ":- in(X), in(Y), not r(X,Y).\n"));
    CHECK(g2.vertices == std::vector<std::string>{"in", "out", "r"});
    CHECK(g2.edges.size() == 3);
    CHECK(has_edge(g2, "in", "out", true));
    CHECK(has_edge(g2, "out", "in", true));
    CHECK(has_edge(g2, "r", "r", false));
}

TEST_CASE("dependency graph: empty program and negative body edge") {
    CHECK(dependency_graph(parse_program("")).vertices.empty());
    DependencyGraph g = dependency_graph(parse_program("p :- not q. q."));
    CHECK(g.vertices == std::vector<std::string>{"p", "q"});
    CHECK(g.edges.size() == 1);
    CHECK(has_edge(g, "q", "p", true));
}

TEST_CASE("self-edge nuances of the definition") {
    // positive self-loop from recursion
    DependencyGraph g1 = dependency_graph(parse_program("p(X) :- p(X), q(X). q(1)."));
    CHECK(has_edge(g1, "p", "p", false));
    // negative self-edge from a single-predicate disjunctive head
    DependencyGraph g2 = dependency_graph(parse_program("p(X) | p(Y) :- e(X,Y). e(1,2)."));
    CHECK(has_edge(g2, "p", "p", true));
    CHECK(!is_stratified(g2).stratified);
}

TEST_CASE("stratification and witnesses") {
    DependencyGraph tc = dependency_graph(parse_program("r(X,Y) :- e(X,Y). r(X,Y) :- e(X,Z), r(Z,Y). e(1,2)."));
    CHECK(is_stratified(tc).stratified);

    DependencyGraph selfneg = dependency_graph(parse_program("p :- not p."));
    StratificationResult s1 = is_stratified(selfneg);
    CHECK(!s1.stratified);
    CHECK(s1.witness_cycle == std::vector<std::string>{"p"});

    StratificationResult s2 = is_stratified(dependency_graph(parse_program(kPi1)));
    CHECK(!s2.stratified);
    CHECK(s2.witness_cycle == std::vector<std::string>{"in", "out"});
}

TEST_CASE("scc order: components and determinism") {
    // lambda of the example: single component {r} (v, e have no vertex there)
    SccOrder tc = scc_order(dependency_graph(parse_program("r(X,Y) :- e(X,Y). r(X,Y) :- e(X,Z), r(Z,Y).")));
    REQUIRE(tc.components.size() == 1);
    CHECK(tc.components[0] == std::vector<std::string>{"r"});

    SccOrder chain = scc_order(dependency_graph(parse_program("p(X) :- q(X). q(X) :- d(X).")));
    REQUIRE(chain.components.size() == 2);
    CHECK(chain.components[0] == std::vector<std::string>{"q"});
    CHECK(chain.components[1] == std::vector<std::string>{"p"});

    SccOrder mutual = scc_order(dependency_graph(parse_program("p(X) :- q(X). q(X) :- p(X). p(1).")));
    REQUIRE(mutual.components.size() == 1);
    CHECK(mutual.components[0].size() == 2);
}

TEST_CASE("scc order respects every edge over random programs") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 60; ++i) {
        Program p = oracle::random_stratified_program(rng, false);
        DependencyGraph g = dependency_graph(p);
        SccOrder order = scc_order(g);
        std::set<std::string> seen;
        for (const auto& comp : order.components)
            for (const auto& v : comp) CHECK(seen.insert(v).second);
        CHECK(seen.size() == g.vertices.size());
        for (const DependencyEdge& e : g.edges)
            CHECK(order.component_of.at(e.from) <= order.component_of.at(e.to));
    }
}

TEST_CASE("compilability of the example selections") {
    Program pi1 = parse_program(kPi1);

    auto lambda_of = [&](std::initializer_list<std::size_t> idx) {
        std::vector<Rule> rules;
        for (std::size_t i : idx) rules.push_back(pi1.rules()[i]);
        return Program(rules);
    };

    CompilabilityReport full = is_compilable(lambda_of({1, 2, 3}), pi1);
    CHECK(full.compilable);

    CompilabilityReport constraint_only = is_compilable(lambda_of({3}), pi1);
    CHECK(constraint_only.compilable);

    CompilabilityReport guess = is_compilable(lambda_of({0}), pi1);
    CHECK(!guess.compilable);
    CHECK(guess.head_overlap == std::set<std::string>{"in"});
    CHECK(!guess.stratified); // in | out also fails condition (i)

    // lambda not a sub-program of pi
    CHECK_THROWS_AS(is_compilable(parse_program("zz(1)."), pi1), AspError);
}

TEST_CASE("sets of constraints are always compilable") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 40; ++i) {
        oracle::GeneratedCase c = oracle::random_case(rng);
        std::vector<Rule> constraints;
        for (const Rule& r : c.full.rules())
            if (r.is_constraint()) constraints.push_back(r);
        CHECK(is_compilable(Program(constraints), c.full).compilable);
    }
}

TEST_CASE("classify rules into exit and recursive") {
    Program lambda_r = parse_program("r(X,Y) :- e(X,Y).\nr(X,Y) :- e(X,Z), r(Z,Y).");
    SccOrder order = scc_order(dependency_graph(lambda_r));
    auto classes = classify_rules(lambda_r, order);
    REQUIRE(classes.size() == 1);
    CHECK(classes[0].exit_rules == std::vector<std::size_t>{0});
    CHECK(classes[0].recursive_rules == std::vector<std::size_t>{1});

    Program single = parse_program("p(X) :- d(X).");
    auto classes2 = classify_rules(single, scc_order(dependency_graph(single)));
    CHECK(classes2[0].exit_rules.size() == 1);
    CHECK(classes2[0].recursive_rules.empty());
}

TEST_CASE("split_program on the example") {
    Program pi1 = parse_program(kPi1);
    SplitProgram s = split_program(pi1, {1, 2, 3});
    CHECK(s.pi_prime.size() == 5); // guess + 4 facts
    CHECK(s.lambda_r.size() == 2);
    CHECK(s.lambda_c.size() == 1);
    for (const Rule& r : s.lambda_r.rules()) CHECK(r.head.size() == 1);

    SplitProgram empty = split_program(pi1, {});
    CHECK(empty.pi_prime == pi1);
    CHECK(empty.lambda_r.empty());
    CHECK(empty.lambda_c.empty());

    CHECK_THROWS_AS(split_program(pi1, {0}), CompilabilityError);
    CHECK_THROWS_AS(split_program(pi1, {99}), AspError);
}

TEST_CASE("split then re-union preserves the rule multiset") {
    std::mt19937_64 rng(23);
    for (int i = 0; i < 40; ++i) {
        oracle::GeneratedCase c = oracle::random_case(rng);
        std::set<std::size_t> sel = suggest_subprogram(c.full);
        SplitProgram s = split_program(c.full, sel);
        std::multiset<std::string> before, after;
        for (const Rule& r : c.full.rules()) before.insert(to_string(r));
        for (const Rule& r : s.pi_prime.rules()) after.insert(to_string(r));
        for (const Rule& r : s.lambda_r.rules()) after.insert(to_string(r));
        for (const Rule& r : s.lambda_c.rules()) after.insert(to_string(r));
        CHECK(before == after);
        for (const Rule& r : s.lambda_r.rules()) CHECK(r.head.size() == 1);
    }
}

TEST_CASE("compilable selections never leak head predicates (textual scan)") {
    std::mt19937_64 rng(29);
    for (int i = 0; i < 40; ++i) {
        oracle::GeneratedCase c = oracle::random_case(rng);
        std::set<std::size_t> sel = suggest_subprogram(c.full);
        SplitProgram s = split_program(c.full, sel);
        std::set<std::string> heads = s.lambda_r.head_predicates();
        std::string rest = canonical_text(s.pi_prime);
        for (const std::string& h : heads) {
            // token-level scan of pi' for the head predicate name
            Program rp = parse_program(rest);
            CHECK(!rp.predicates().count(h));
        }
    }
}

TEST_CASE("suggest_subprogram reproduces the example and the edge cases") {
    Program pi1 = parse_program(kPi1);
    CHECK(suggest_subprogram(pi1) == std::set<std::size_t>{1, 2, 3});

    Program facts_only = parse_program("v(1). v(2). e(1,2).");
    CHECK(suggest_subprogram(facts_only).empty());

    Program stratified = parse_program("p(X) :- d(X). q(X) :- p(X), not z(X). d(1). z(2).");
    CHECK(suggest_subprogram(stratified) == std::set<std::size_t>{0, 1});
}
