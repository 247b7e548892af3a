#include "aspcomp/language.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace aspcomp {

ParseError::ParseError(const std::string& msg, int line, int column)
    : AspError("parse error at " + std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
      line_(line),
      column_(column) {}

ArityError::ArityError(const std::string& predicate, std::size_t seen, std::size_t expected)
    : AspError("arity conflict for predicate '" + predicate + "': used with " + std::to_string(seen) +
               " arguments but previously with " + std::to_string(expected)),
      predicate_(predicate) {}

SafetyError::SafetyError(std::size_t rule_index, const std::string& variable, const std::string& rule_text)
    : AspError("unsafe rule " + std::to_string(rule_index + 1) + ": variable '" + variable +
               "' does not occur in a positive body literal in '" + rule_text + "'"),
      rule_index_(rule_index),
      variable_(variable) {}

bool Atom::ground() const {
    return std::all_of(args.begin(), args.end(), [](const Term& t) { return t.is_constant(); });
}

bool Rule::ground() const {
    for (const Atom& a : head)
        if (!a.ground()) return false;
    for (const Literal& l : body)
        if (!l.atom.ground()) return false;
    return true;
}

std::vector<Literal> Rule::positive_body() const {
    std::vector<Literal> out;
    for (const Literal& l : body)
        if (l.positive()) out.push_back(l);
    return out;
}

std::vector<Literal> Rule::negative_body() const {
    std::vector<Literal> out;
    for (const Literal& l : body)
        if (l.negative) out.push_back(l);
    return out;
}

namespace {

void collect_vars(const Atom& a, std::vector<std::string>& out) {
    for (const Term& t : a.args)
        if (t.is_variable() && std::find(out.begin(), out.end(), t.name) == out.end())
            out.push_back(t.name);
}

} // namespace

std::vector<std::string> Rule::variables() const {
    std::vector<std::string> out;
    for (const Atom& a : head) collect_vars(a, out);
    for (const Literal& l : body) collect_vars(l.atom, out);
    return out;
}

std::vector<std::string> Rule::positive_body_variables() const {
    std::vector<std::string> out;
    for (const Literal& l : body)
        if (l.positive()) collect_vars(l.atom, out);
    return out;
}

std::optional<std::string> unsafe_variable(const Rule& r) {
    auto safe = r.positive_body_variables();
    for (const std::string& v : r.variables())
        if (std::find(safe.begin(), safe.end(), v) == safe.end()) return v;
    return std::nullopt;
}

Program::Program(std::vector<Rule> rules) : rules_(std::move(rules)) {
    auto note = [&](const Atom& a) {
        auto [it, fresh] = arities_.emplace(a.predicate, a.arity());
        if (!fresh && it->second != a.arity()) throw ArityError(a.predicate, a.arity(), it->second);
    };
    for (const Rule& r : rules_) {
        for (const Atom& a : r.head) note(a);
        for (const Literal& l : r.body) note(l.atom);
    }
}

std::set<std::string> Program::predicates() const {
    std::set<std::string> out;
    for (const auto& [name, arity] : arities_) out.insert(name);
    return out;
}

std::set<std::string> Program::head_predicates() const {
    std::set<std::string> out;
    for (const Rule& r : rules_)
        for (const Atom& a : r.head) out.insert(a.predicate);
    return out;
}

std::set<Term> Program::constants() const {
    std::set<Term> out;
    auto scan = [&](const Atom& a) {
        for (const Term& t : a.args)
            if (t.is_constant()) out.insert(t);
    };
    for (const Rule& r : rules_) {
        for (const Atom& a : r.head) scan(a);
        for (const Literal& l : r.body) scan(l.atom);
    }
    return out;
}

bool Program::operator==(const Program& other) const {
    return rules_ == other.rules_;
}

// ------------------------------------------------------------------
// Lexer / parser
//
// Grammar (one rule per '.'):
//   rule    := head? (":-" body)? "."
//   head    := atom ("|" atom)*
//   body    := literal ("," literal)*
//   literal := "not"? atom
//   atom    := ident ("(" term ("," term)* ")")?
//   term    := ident | integer
// '%' starts a comment running to end of line; a comment line that is
// exactly "%@compile" marks the next rule for the lambda selection.
// ------------------------------------------------------------------

namespace {

enum class Tok { ident_lower, ident_upper, integer, implied_by, pipe, comma, lparen, rparen, dot, kw_not, eof };

struct Token {
    Tok kind;
    std::string text;
    long long value = 0;
    int line = 1;
    int column = 1;
};

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) {}

    // Marker lines seen so far (consumed as comments).
    const std::vector<int>& marker_positions() const { return marker_positions_; }
    int tokens_emitted() const { return emitted_; }

    Token next() {
        skip_ws_and_comments();
        Token t;
        t.line = line_;
        t.column = column_;
        if (pos_ >= text_.size()) {
            t.kind = Tok::eof;
            return t;
        }
        char c = text_[pos_];
        if (c == ':') {
            if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '-') {
                advance();
                advance();
                t.kind = Tok::implied_by;
                t.text = ":-";
                return emit(t);
            }
            throw ParseError("expected ':-'", line_, column_);
        }
        if (c == '|') { advance(); t.kind = Tok::pipe; t.text = "|"; return emit(t); }
        if (c == ',') { advance(); t.kind = Tok::comma; t.text = ","; return emit(t); }
        if (c == '(') { advance(); t.kind = Tok::lparen; t.text = "("; return emit(t); }
        if (c == ')') { advance(); t.kind = Tok::rparen; t.text = ")"; return emit(t); }
        if (c == '.') { advance(); t.kind = Tok::dot; t.text = "."; return emit(t); }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::string digits;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                digits.push_back(text_[pos_]);
                advance();
            }
            t.kind = Tok::integer;
            t.text = digits;
            try {
                t.value = std::stoll(digits);
            } catch (const std::out_of_range&) {
                throw ParseError("integer constant out of range: " + digits, t.line, t.column);
            }
            return emit(t);
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::string word;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
                word.push_back(text_[pos_]);
                advance();
            }
            t.text = word;
            if (word == "not") {
                t.kind = Tok::kw_not;
            } else if (std::isupper(static_cast<unsigned char>(word[0]))) {
                t.kind = Tok::ident_upper;
            } else {
                t.kind = Tok::ident_lower;
            }
            return emit(t);
        }
        throw ParseError(std::string("unexpected character '") + c + "'", line_, column_);
    }

private:
    Token emit(Token t) {
        ++emitted_;
        return t;
    }

    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            column_ = 1;
        } else {
            ++column_;
        }
        ++pos_;
    }

    void skip_ws_and_comments() {
        for (;;) {
            while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) advance();
            if (pos_ < text_.size() && text_[pos_] == '%') {
                std::string comment;
                while (pos_ < text_.size() && text_[pos_] != '\n') {
                    comment.push_back(text_[pos_]);
                    advance();
                }
                while (!comment.empty() && std::isspace(static_cast<unsigned char>(comment.back())))
                    comment.pop_back();
                if (comment == "%@compile") marker_positions_.push_back(emitted_);
                continue;
            }
            break;
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int column_ = 1;
    int emitted_ = 0;
    std::vector<int> marker_positions_;
};

class Parser {
public:
    explicit Parser(std::string_view text) : lexer_(text) { shift(); }

    ParsedProgram parse() {
        std::vector<Rule> rules;
        std::vector<std::size_t> marked;
        std::size_t marker_cursor = 0;
        while (cur_.kind != Tok::eof) {
            int rule_start_token = tokens_before_cur_;
            Rule r = parse_rule();
            // A %@compile marker applies to the rule whose first token follows it.
            const auto& markers = lexer_.marker_positions();
            while (marker_cursor < markers.size() && markers[marker_cursor] <= rule_start_token) {
                marked.push_back(rules.size());
                ++marker_cursor;
            }
            rules.push_back(std::move(r));
        }
        // Validate safety per rule, with the rule index for diagnostics.
        for (std::size_t i = 0; i < rules.size(); ++i)
            if (auto v = unsafe_variable(rules[i])) throw SafetyError(i, *v, to_string(rules[i]));
        ParsedProgram out;
        out.program = Program(std::move(rules)); // arity table built and checked here
        // Drop duplicate marker hits on the same rule.
        std::sort(marked.begin(), marked.end());
        marked.erase(std::unique(marked.begin(), marked.end()), marked.end());
        out.marked_rules = std::move(marked);
        return out;
    }

private:
    void shift() {
        tokens_before_cur_ = lexer_.tokens_emitted();
        cur_ = lexer_.next();
    }

    Token expect(Tok kind, const char* what) {
        if (cur_.kind != kind) throw ParseError(std::string("expected ") + what, cur_.line, cur_.column);
        Token t = cur_;
        shift();
        return t;
    }

    Rule parse_rule() {
        Rule r;
        if (cur_.kind == Tok::ident_lower) {
            r.head.push_back(parse_atom());
            while (cur_.kind == Tok::pipe) {
                shift();
                r.head.push_back(parse_atom());
            }
        }
        if (cur_.kind == Tok::implied_by) {
            shift();
            r.body.push_back(parse_literal());
            while (cur_.kind == Tok::comma) {
                shift();
                r.body.push_back(parse_literal());
            }
        }
        if (r.head.empty() && r.body.empty())
            throw ParseError("a rule needs a head or a body", cur_.line, cur_.column);
        expect(Tok::dot, "'.'");
        return r;
    }

    Literal parse_literal() {
        Literal l;
        if (cur_.kind == Tok::kw_not) {
            shift();
            l.negative = true;
        }
        l.atom = parse_atom();
        return l;
    }

    Atom parse_atom() {
        Token name = expect(Tok::ident_lower, "a predicate name (lowercase identifier)");
        Atom a;
        a.predicate = name.text;
        if (cur_.kind == Tok::lparen) {
            shift();
            a.args.push_back(parse_term());
            while (cur_.kind == Tok::comma) {
                shift();
                a.args.push_back(parse_term());
            }
            expect(Tok::rparen, "')'");
        }
        if (a.args.size() > 32)
            throw ParseError("predicate '" + a.predicate + "' exceeds the supported arity of 32", name.line,
                             name.column);
        return a;
    }

    Term parse_term() {
        if (cur_.kind == Tok::integer) {
            Term t = Term::integer(cur_.value);
            shift();
            return t;
        }
        if (cur_.kind == Tok::ident_lower) {
            Term t = Term::symbol(cur_.text);
            shift();
            return t;
        }
        if (cur_.kind == Tok::ident_upper) {
            Term t = Term::variable(cur_.text);
            shift();
            return t;
        }
        throw ParseError("expected a term (constant, integer or variable)", cur_.line, cur_.column);
    }

    Lexer lexer_;
    Token cur_;
    int tokens_before_cur_ = 0;
};

} // namespace

ParsedProgram parse_program_with_markers(std::string_view text) {
    Parser p(text);
    return p.parse();
}

Program parse_program(std::string_view text) {
    return parse_program_with_markers(text).program;
}

Atom parse_ground_atom(std::string_view text) {
    std::string wrapped = std::string(text) + ".";
    Program p = parse_program(wrapped);
    if (p.rules().size() != 1 || !p.rules()[0].is_fact())
        throw ParseError("expected a single ground atom", 1, 1);
    return p.rules()[0].head[0];
}

std::string to_string(const Term& t) {
    switch (t.kind) {
    case TermKind::integer: return std::to_string(t.value);
    case TermKind::symbol:
    case TermKind::variable: return t.name;
    }
    return {};
}

std::string to_string(const Atom& a) {
    if (a.args.empty()) return a.predicate;
    std::string out = a.predicate + "(";
    for (std::size_t i = 0; i < a.args.size(); ++i) {
        if (i) out += ",";
        out += to_string(a.args[i]);
    }
    out += ")";
    return out;
}

std::string to_string(const Literal& l) {
    return l.negative ? "not " + to_string(l.atom) : to_string(l.atom);
}

std::string to_string(const Rule& r) {
    std::string out;
    for (std::size_t i = 0; i < r.head.size(); ++i) {
        if (i) out += " | ";
        out += to_string(r.head[i]);
    }
    if (!r.body.empty()) {
        if (!r.head.empty()) out += " ";
        out += ":- ";
        for (std::size_t i = 0; i < r.body.size(); ++i) {
            if (i) out += ", ";
            out += to_string(r.body[i]);
        }
    }
    out += ".";
    return out;
}

std::string canonical_text(const Program& p) {
    std::string out;
    for (const Rule& r : p.rules()) {
        out += to_string(r);
        out += "\n";
    }
    return out;
}

} // namespace aspcomp
