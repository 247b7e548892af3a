#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace aspcomp {

class AspError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public AspError {
public:
    ParseError(const std::string& msg, int line, int column);
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

class ArityError : public AspError {
public:
    ArityError(const std::string& predicate, std::size_t seen, std::size_t expected);
    const std::string& predicate() const { return predicate_; }

private:
    std::string predicate_;
};

class SafetyError : public AspError {
public:
    SafetyError(std::size_t rule_index, const std::string& variable, const std::string& rule_text);
    std::size_t rule_index() const { return rule_index_; }
    const std::string& variable() const { return variable_; }

private:
    std::size_t rule_index_;
    std::string variable_;
};

// Kind order matters: constants compare kind-then-value, variables sort last.
enum class TermKind : std::uint8_t { integer = 0, symbol = 1, variable = 2 };

struct Term {
    TermKind kind = TermKind::symbol;
    long long value = 0;   // integer constants
    std::string name;      // symbolic constants and variables

    static Term integer(long long v) { return Term{TermKind::integer, v, {}}; }
    static Term symbol(std::string n) { return Term{TermKind::symbol, 0, std::move(n)}; }
    static Term variable(std::string n) { return Term{TermKind::variable, 0, std::move(n)}; }

    bool is_constant() const { return kind != TermKind::variable; }
    bool is_variable() const { return kind == TermKind::variable; }

    auto operator<=>(const Term&) const = default;
};

struct Atom {
    std::string predicate;
    std::vector<Term> args;

    std::size_t arity() const { return args.size(); }
    bool ground() const;

    auto operator<=>(const Atom&) const = default;
};

struct Literal {
    Atom atom;
    bool negative = false;

    Literal complement() const { return Literal{atom, !negative}; }
    bool positive() const { return !negative; }

    auto operator<=>(const Literal&) const = default;
};

struct Rule {
    std::vector<Atom> head;    // n >= 0
    std::vector<Literal> body; // m >= 0, n + m != 0

    bool is_constraint() const { return head.empty(); }
    bool is_fact() const { return head.size() == 1 && body.empty(); }
    bool ground() const;

    std::vector<Literal> positive_body() const;
    std::vector<Literal> negative_body() const;
    // Variables of the whole rule / of the positive body, in first-occurrence order.
    std::vector<std::string> variables() const;
    std::vector<std::string> positive_body_variables() const;

    auto operator<=>(const Rule&) const = default;
};

class Program {
public:
    Program() = default;
    explicit Program(std::vector<Rule> rules); // throws ArityError on conflicting arities

    const std::vector<Rule>& rules() const { return rules_; }
    bool empty() const { return rules_.empty(); }
    std::size_t size() const { return rules_.size(); }

    // name -> arity, fixed per predicate across the program
    const std::map<std::string, std::size_t>& predicate_arities() const { return arities_; }

    std::set<std::string> predicates() const;      // P(pi): every predicate occurring anywhere
    std::set<std::string> head_predicates() const; // P(heads(pi))
    std::set<Term> constants() const;              // Herbrand universe U_pi

    bool operator==(const Program&) const;

private:
    std::vector<Rule> rules_;
    std::map<std::string, std::size_t> arities_;
};

// Parses the core language; throws ParseError / ArityError / SafetyError.
Program parse_program(std::string_view text);

struct ParsedProgram {
    Program program;
    std::vector<std::size_t> marked_rules; // 0-based indices of rules preceded by a %@compile line
};
ParsedProgram parse_program_with_markers(std::string_view text);

// Single ground atom, e.g. "r(1,2)"; used by the external-solver adapter.
Atom parse_ground_atom(std::string_view text);

std::string to_string(const Term&);
std::string to_string(const Atom&);
std::string to_string(const Literal&);
std::string to_string(const Rule&);

// Deterministic printing: rules in input order, one per line; re-parses to an
// equal Program and equal Programs print byte-identically.
std::string canonical_text(const Program&);

// Returns the witness variable if the rule is unsafe, i.e. some variable has
// no occurrence in a positive body literal.
std::optional<std::string> unsafe_variable(const Rule&);

} // namespace aspcomp
