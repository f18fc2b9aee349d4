#pragma once

// Datalog abstract syntax: terms, atoms, literals, rules, programs, and the
// stratum assignment attached to an admitted program.

#include <cctype>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace codl {

// Atom values are either signed 64-bit integers or text; equality is structural.
using Value = std::variant<std::int64_t, std::string>;

inline Value text(std::string s) { return Value{std::move(s)}; }
inline Value integer(std::int64_t n) { return Value{n}; }

// Nullary predicate that holds in every model.
inline constexpr std::string_view kTruePredicate = "True";

struct SourceLoc {
    std::string file;
    int line = 0;
    int col = 0;
};

struct Term {
    enum class Kind { Const, Var };
    Kind kind = Kind::Const;
    Value value;       // Const only
    std::string name;  // Var only

    static Term constant(Value v) { return Term{Kind::Const, std::move(v), {}}; }
    static Term constant(std::string s) { return constant(Value{std::move(s)}); }
    static Term constant(std::int64_t n) { return constant(Value{n}); }
    static Term var(std::string n) { return Term{Kind::Var, {}, std::move(n)}; }

    bool is_const() const { return kind == Kind::Const; }
    bool is_var() const { return kind == Kind::Var; }
    // A variable whose name starts with '_' is anonymous; the parser gives each
    // occurrence a distinct name so occurrences never alias.
    bool is_anon() const { return is_var() && !name.empty() && name[0] == '_'; }

    friend bool operator==(const Term& a, const Term& b) {
        if (a.kind != b.kind) return false;
        return a.is_const() ? a.value == b.value : a.name == b.name;
    }
};

struct Atom {
    std::string pred;
    std::vector<Term> args;

    int arity() const { return static_cast<int>(args.size()); }
    bool ground() const {
        for (const auto& t : args)
            if (t.is_var()) return false;
        return true;
    }
    friend bool operator==(const Atom&, const Atom&) = default;
};

struct Literal {
    Atom atom;
    bool positive = true;

    friend bool operator==(const Literal&, const Literal&) = default;
};

struct Rule {
    Atom head;
    std::vector<Literal> body;  // empty body = fact
    SourceLoc loc;

    bool is_fact() const { return body.empty(); }

    // Structural equality; source locations are not part of the structure.
    friend bool operator==(const Rule& a, const Rule& b) {
        return a.head == b.head && a.body == b.body;
    }
};

struct Program {
    std::vector<Rule> rules;                // in order of appearance
    std::map<std::string, int> arity;       // predicate table

    // Predicates defined only by stored facts (no non-fact rule head).
    std::set<std::string> edb() const {
        std::set<std::string> out;
        for (const auto& [p, a] : arity) out.insert(p);
        for (const auto& p : idb()) out.erase(p);
        return out;
    }
    // Predicates appearing as heads of non-fact rules.
    std::set<std::string> idb() const {
        std::set<std::string> out;
        for (const auto& r : rules)
            if (!r.is_fact()) out.insert(r.head.pred);
        return out;
    }

    friend bool operator==(const Program& a, const Program& b) {
        return a.rules == b.rules && a.arity == b.arity;
    }
};

// A conjunctive query; its variables are goal variables. Anonymous variables
// are existential and excluded from answer substitutions.
struct Goal {
    std::vector<Literal> literals;

    // Non-anonymous variable names, ordered by first occurrence.
    std::vector<std::string> vars() const {
        std::vector<std::string> out;
        for (const auto& l : literals)
            for (const auto& t : l.atom.args)
                if (t.is_var() && !t.is_anon()) {
                    bool seen = false;
                    for (const auto& v : out)
                        if (v == t.name) { seen = true; break; }
                    if (!seen) out.push_back(t.name);
                }
        return out;
    }

    friend bool operator==(const Goal&, const Goal&) = default;
};

// stratum[p] <= stratum[head] for positive body predicates,
// stratum[p] <  stratum[head] for negated ones.
struct Stratification {
    std::map<std::string, int> stratum;

    int max_stratum() const {
        int m = 0;
        for (const auto& [p, s] : stratum)
            if (s > m) m = s;
        return m;
    }
};

// --- rendering ------------------------------------------------------------

inline bool is_plain_ident(std::string_view s) {
    if (s.empty() || s[0] < 'a' || s[0] > 'z') return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
}

// Text values render bare when they look like identifiers, quoted otherwise.
inline std::string print_value(const Value& v) {
    if (const auto* n = std::get_if<std::int64_t>(&v)) return std::to_string(*n);
    const auto& s = std::get<std::string>(v);
    if (is_plain_ident(s)) return s;
    std::string out = "'";
    for (char c : s) {
        switch (c) {
            case '\'': out += "\\'"; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    out += '\'';
    return out;
}

// Bare display text of a value, no quoting (for transcripts and solutions).
inline std::string value_text(const Value& v) {
    if (const auto* n = std::get_if<std::int64_t>(&v)) return std::to_string(*n);
    return std::get<std::string>(v);
}

inline std::string print_term(const Term& t) {
    if (t.is_const()) return print_value(t.value);
    return t.is_anon() ? "_" : t.name;
}

inline std::string print_atom(const Atom& a) {
    if (a.args.empty()) return a.pred;
    std::string out = a.pred + "(";
    for (size_t i = 0; i < a.args.size(); ++i) {
        if (i) out += ", ";
        out += print_term(a.args[i]);
    }
    out += ')';
    return out;
}

inline std::string print_literal(const Literal& l) {
    return l.positive ? print_atom(l.atom) : "\\+ " + print_atom(l.atom);
}

// Goal rendering uses the '?name' goal-variable surface form.
inline std::string print_goal(const Goal& g) {
    std::string out;
    for (size_t i = 0; i < g.literals.size(); ++i) {
        if (i) out += ", ";
        const Literal& l = g.literals[i];
        if (!l.positive) out += "\\+ ";
        const Atom& a = l.atom;
        out += a.pred;
        if (!a.args.empty()) {
            out += '(';
            for (size_t j = 0; j < a.args.size(); ++j) {
                if (j) out += ", ";
                const Term& t = a.args[j];
                if (t.is_const())
                    out += print_value(t.value);
                else
                    out += t.is_anon() ? std::string("_") : "?" + t.name;
            }
            out += ')';
        }
    }
    return out;
}

inline std::string print_rule(const Rule& r) {
    std::string out = print_atom(r.head);
    if (!r.is_fact()) {
        out += " :- ";
        for (size_t i = 0; i < r.body.size(); ++i) {
            if (i) out += ", ";
            out += print_literal(r.body[i]);
        }
    }
    out += '.';
    return out;
}

inline std::string print_program(const Program& p) {
    std::string out;
    for (const auto& r : p.rules) {
        out += print_rule(r);
        out += '\n';
    }
    return out;
}

}  // namespace codl
