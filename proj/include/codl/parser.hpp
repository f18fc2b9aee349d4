#pragma once

// Text front end for Datalog sources and for query goals.
//
// Clause grammar:
//   program   ::= clause*
//   clause    ::= atom ( ":-" literal ("," literal)* )? "."
//   literal   ::= "\+"? atom
//   atom      ::= predicate ( "(" term ("," term)* ")" )?
//   term      ::= constant | variable
//   constant  ::= lowercase identifier | single-quoted text | integer
//   variable  ::= identifier starting uppercase or "_"
// "%" starts a line comment. Facts must be ground. Arity is fixed per
// predicate; the first occurrence pins it.
//
// Goals use the same atom syntax but bind goal variables with "?name"
// (plain uppercase variables are not goal syntax); "_" is anonymous.
// The bare predicate "True" is the built-in that always holds.

#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "codl/ast.hpp"
#include "codl/diagnostics.hpp"

namespace codl {

struct ParseResult {
    Program program;
    std::vector<Diag> errors;
    bool ok() const { return errors.empty(); }
};

namespace detail {

struct Token {
    enum class Kind {
        Ident,     // lowercase identifier
        Variable,  // uppercase or leading underscore
        Text,      // quoted constant
        Int,
        Implies,   // :-
        Not,       // \+
        LParen,
        RParen,
        Comma,
        Dot,
        QMark,  // ? (goal variables)
        End,
        Bad,
    };
    Kind kind = Kind::End;
    std::string text;
    std::int64_t number = 0;
    int line = 1;
    int col = 1;
};

class Lexer {
public:
    Lexer(std::string_view src, std::string file)
        : src_(src), file_(std::move(file)) {}

    Token next() {
        skip_ws();
        Token t;
        t.line = line_;
        t.col = col_;
        if (eof()) {
            t.kind = Token::Kind::End;
            return t;
        }
        char c = peek();
        if (c == '(') return simple(t, Token::Kind::LParen);
        if (c == ')') return simple(t, Token::Kind::RParen);
        if (c == ',') return simple(t, Token::Kind::Comma);
        if (c == '.') return simple(t, Token::Kind::Dot);
        if (c == '?') return simple(t, Token::Kind::QMark);
        if (c == ':') {
            get();
            if (!eof() && peek() == '-') {
                get();
                t.kind = Token::Kind::Implies;
                return t;
            }
            t.kind = Token::Kind::Bad;
            t.text = ":";
            return t;
        }
        if (c == '\\') {
            get();
            if (!eof() && peek() == '+') {
                get();
                t.kind = Token::Kind::Not;
                return t;
            }
            t.kind = Token::Kind::Bad;
            t.text = "\\";
            return t;
        }
        if (c == '\'') return quoted(t);
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '-') return number(t);
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return word(t);
        get();
        t.kind = Token::Kind::Bad;
        t.text = std::string(1, c);
        return t;
    }

    const std::string& file() const { return file_; }

private:
    bool eof() const { return pos_ >= src_.size(); }
    char peek() const { return src_[pos_]; }
    char get() {
        char c = src_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    void skip_ws() {
        while (!eof()) {
            char c = peek();
            if (c == '%') {
                while (!eof() && peek() != '\n') get();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                get();
            } else {
                break;
            }
        }
    }

    Token simple(Token& t, Token::Kind k) {
        get();
        t.kind = k;
        return t;
    }

    Token quoted(Token& t) {
        get();  // opening quote
        std::string out;
        while (true) {
            if (eof() || peek() == '\n') {
                t.kind = Token::Kind::Bad;
                t.text = "unterminated quoted constant";
                return t;
            }
            char c = get();
            if (c == '\'') break;
            if (c == '\\' && !eof()) {
                char e = get();
                switch (e) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case '\'': out += '\''; break;
                    case '\\': out += '\\'; break;
                    default:
                        out += '\\';
                        out += e;
                }
                continue;
            }
            out += c;
        }
        t.kind = Token::Kind::Text;
        t.text = std::move(out);
        return t;
    }

    Token number(Token& t) {
        std::string digits;
        if (peek() == '-') digits += get();
        while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) digits += get();
        if (digits.empty() || digits == "-") {
            t.kind = Token::Kind::Bad;
            t.text = digits.empty() ? "-" : digits;
            return t;
        }
        t.kind = Token::Kind::Int;
        t.number = std::strtoll(digits.c_str(), nullptr, 10);
        return t;
    }

    Token word(Token& t) {
        std::string w;
        while (!eof() &&
               (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_'))
            w += get();
        char c0 = w[0];
        t.kind = (c0 == '_' || std::isupper(static_cast<unsigned char>(c0)))
                     ? Token::Kind::Variable
                     : Token::Kind::Ident;
        t.text = std::move(w);
        return t;
    }

    std::string_view src_;
    std::string file_;
    size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

}  // namespace detail

class Parser {
public:
    Parser(std::string_view src, std::string file = "<input>")
        : lex_(src, std::move(file)) {
        advance();
    }

    // Parses clauses, appending to `out`. The predicate table in `out` may be
    // pre-populated (multi-source contexts share one table).
    void parse_into(Program& out, std::vector<Diag>& errors) {
        errors_ = &errors;
        while (tok_.kind != detail::Token::Kind::End) {
            anon_counter_ = 0;
            parse_clause(out);
        }
    }

    // One goal: comma-separated literals, optionally parenthesized as a whole,
    // optional trailing dot. Returns nullopt on error.
    std::optional<Goal> parse_goal(std::vector<Diag>& errors);

    // One ground atom with optional trailing dot (tell/retract input).
    std::optional<Atom> parse_fact(std::vector<Diag>& errors);

private:
    using Token = detail::Token;

    void advance() { tok_ = lex_.next(); }

    SourceLoc here() const { return SourceLoc{lex_.file(), tok_.line, tok_.col}; }

    void error(const std::string& msg) { errors_->push_back({here(), msg}); }
    void error_at(SourceLoc loc, const std::string& msg) {
        errors_->push_back({std::move(loc), msg});
    }

    // Skip to just past the next '.', resynchronizing after an error.
    void recover() {
        while (tok_.kind != Token::Kind::End) {
            bool stop = tok_.kind == Token::Kind::Dot;
            advance();
            if (stop) return;
        }
    }

    void parse_clause(Program& out) {
        SourceLoc loc = here();
        auto head = parse_atom(out, /*allow_goal_vars=*/false);
        if (!head) {
            recover();
            return;
        }
        Rule rule;
        rule.head = std::move(*head);
        rule.loc = loc;
        if (tok_.kind == Token::Kind::Implies) {
            advance();
            while (true) {
                auto lit = parse_literal(out);
                if (!lit) {
                    recover();
                    return;
                }
                rule.body.push_back(std::move(*lit));
                if (tok_.kind == Token::Kind::Comma) {
                    advance();
                    continue;
                }
                break;
            }
        }
        if (tok_.kind != Token::Kind::Dot) {
            error("expected '.' at end of clause");
            recover();
            return;
        }
        advance();
        if (rule.is_fact() && !rule.head.ground()) {
            error_at(loc, "fact is not ground: " + print_atom(rule.head));
            return;
        }
        out.rules.push_back(std::move(rule));
    }

    std::optional<Literal> parse_literal(Program& out) {
        bool positive = true;
        if (tok_.kind == Token::Kind::Not) {
            positive = false;
            advance();
        }
        auto a = parse_atom(out, /*allow_goal_vars=*/false);
        if (!a) return std::nullopt;
        return Literal{std::move(*a), positive};
    }

    std::optional<Atom> parse_atom(Program& table, bool allow_goal_vars) {
        SourceLoc loc = here();
        Atom atom;
        if (tok_.kind == Token::Kind::Ident) {
            atom.pred = tok_.text;
        } else if (allow_goal_vars && tok_.kind == Token::Kind::Variable &&
                   tok_.text == kTruePredicate) {
            atom.pred = std::string(kTruePredicate);
        } else {
            error(allow_goal_vars ? "expected a predicate (lowercase identifier or True)"
                                  : "expected a predicate (lowercase identifier)");
            return std::nullopt;
        }
        advance();
        if (tok_.kind == Token::Kind::LParen) {
            advance();
            while (true) {
                auto t = parse_term(allow_goal_vars);
                if (!t) return std::nullopt;
                atom.args.push_back(std::move(*t));
                if (tok_.kind == Token::Kind::Comma) {
                    advance();
                    continue;
                }
                break;
            }
            if (tok_.kind != Token::Kind::RParen) {
                error("expected ')' in argument list");
                return std::nullopt;
            }
            advance();
        }
        auto it = table.arity.find(atom.pred);
        if (it == table.arity.end()) {
            table.arity[atom.pred] = atom.arity();
        } else if (it->second != atom.arity()) {
            error_at(loc, "arity mismatch: " + atom.pred + "/" +
                              std::to_string(atom.arity()) + " conflicts with earlier " +
                              atom.pred + "/" + std::to_string(it->second));
            return std::nullopt;
        }
        return atom;
    }

    std::optional<Term> parse_term(bool allow_goal_vars) {
        switch (tok_.kind) {
            case Token::Kind::Ident: {
                Term t = Term::constant(tok_.text);
                advance();
                return t;
            }
            case Token::Kind::Text: {
                Term t = Term::constant(tok_.text);
                advance();
                return t;
            }
            case Token::Kind::Int: {
                Term t = Term::constant(tok_.number);
                advance();
                return t;
            }
            case Token::Kind::QMark: {
                if (!allow_goal_vars) {
                    error("'?' goal variables are only valid in goals");
                    return std::nullopt;
                }
                advance();
                if (tok_.kind != Token::Kind::Ident && tok_.kind != Token::Kind::Variable) {
                    error("expected a name after '?'");
                    return std::nullopt;
                }
                if (tok_.text[0] == '_') {
                    error("goal variable names must not start with '_'");
                    return std::nullopt;
                }
                Term t = Term::var(tok_.text);
                advance();
                return t;
            }
            case Token::Kind::Variable: {
                if (allow_goal_vars && tok_.text[0] != '_') {
                    error("goal variables are written '?" + tok_.text + "'");
                    return std::nullopt;
                }
                Term t;
                if (tok_.text[0] == '_') {
                    // Each anonymous occurrence is a distinct variable; naming
                    // is deterministic per clause so print/reparse is stable.
                    t = Term::var("_" + std::to_string(++anon_counter_));
                } else {
                    t = Term::var(tok_.text);
                }
                advance();
                return t;
            }
            default:
                error("expected a term");
                return std::nullopt;
        }
    }

    detail::Lexer lex_;
    Token tok_;
    std::vector<Diag>* errors_ = nullptr;
    int anon_counter_ = 0;
};

inline std::optional<Goal> Parser::parse_goal(std::vector<Diag>& errors) {
    errors_ = &errors;
    anon_counter_ = 0;
    Program scratch;  // goals do not pin arities; atoms are checked by the caller
    Goal goal;
    bool wrapped = false;
    if (tok_.kind == Token::Kind::LParen) {
        wrapped = true;
        advance();
    }
    while (true) {
        bool positive = true;
        if (tok_.kind == Token::Kind::Not) {
            positive = false;
            advance();
        }
        auto a = parse_atom(scratch, /*allow_goal_vars=*/true);
        if (!a) return std::nullopt;
        goal.literals.push_back(Literal{std::move(*a), positive});
        if (tok_.kind == Token::Kind::Comma) {
            advance();
            continue;
        }
        break;
    }
    if (wrapped) {
        if (tok_.kind != Token::Kind::RParen) {
            error("expected ')' closing the goal");
            return std::nullopt;
        }
        advance();
    }
    if (tok_.kind == Token::Kind::Dot) advance();
    if (tok_.kind != Token::Kind::End) {
        error("unexpected input after goal");
        return std::nullopt;
    }
    return goal;
}

inline std::optional<Atom> Parser::parse_fact(std::vector<Diag>& errors) {
    errors_ = &errors;
    anon_counter_ = 0;
    Program scratch;
    SourceLoc loc = here();
    auto a = parse_atom(scratch, /*allow_goal_vars=*/false);
    if (!a) return std::nullopt;
    if (tok_.kind == Token::Kind::Dot) advance();
    if (tok_.kind != Token::Kind::End) {
        error("unexpected input after fact");
        return std::nullopt;
    }
    if (!a->ground()) {
        error_at(loc, "fact is not ground: " + print_atom(*a));
        return std::nullopt;
    }
    return a;
}

inline ParseResult parse_program(std::string_view source,
                                 std::string file = "<input>") {
    ParseResult res;
    Parser p(source, std::move(file));
    p.parse_into(res.program, res.errors);
    return res;
}

inline std::optional<Goal> parse_goal(std::string_view text,
                                      std::vector<Diag>& errors,
                                      std::string file = "<goal>") {
    Parser p(text, std::move(file));
    return p.parse_goal(errors);
}

inline std::optional<Atom> parse_fact(std::string_view text,
                                      std::vector<Diag>& errors,
                                      std::string file = "<fact>") {
    Parser p(text, std::move(file));
    return p.parse_fact(errors);
}

}  // namespace codl
