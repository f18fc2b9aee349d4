#pragma once

// JSON interchange for a context: {predicates: [{name, arity}], rules:
// ["...clause text..."], facts: [[pred, arg...]]}. Rules round-trip through
// the normal parser; fact arguments map to JSON strings and integers.

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "codl/ast.hpp"
#include "codl/context.hpp"
#include "codl/parser.hpp"

namespace codl {

inline nlohmann::json to_snapshot(const Context& c) {
    nlohmann::json j;
    j["predicates"] = nlohmann::json::array();
    for (const auto& [name, arity] : c.program().arity)
        j["predicates"].push_back({{"name", name}, {"arity", arity}});
    j["rules"] = nlohmann::json::array();
    for (const auto& r : c.program().rules) j["rules"].push_back(print_rule(r));
    j["facts"] = nlohmann::json::array();
    for (const auto& [pred, rel] : c.store().relations())
        for (const auto& row : rel.rows()) {
            nlohmann::json fact = nlohmann::json::array();
            fact.push_back(pred);
            for (const auto& v : row) {
                if (v.index() == 0)
                    fact.push_back(std::get<int64_t>(v));
                else
                    fact.push_back(std::get<std::string>(v));
            }
            j["facts"].push_back(std::move(fact));
        }
    return j;
}

inline LoadResult from_snapshot(const nlohmann::json& j) {
    auto parse_failure = [](const std::string& msg) {
        LoadResult out;
        out.failed = LoadResult::Stage::Parse;
        out.errors.push_back(Diag{{}, "invalid snapshot: " + msg});
        return out;
    };
    try {
        Program prog;
        if (j.contains("predicates"))
            for (const auto& p : j.at("predicates"))
                prog.arity[p.at("name").get<std::string>()] = p.at("arity").get<size_t>();

        std::vector<Diag> errors;
        if (j.contains("rules"))
            for (const auto& r : j.at("rules")) {
                // The parser reads from a view; the text must outlive it.
                std::string text = r.get<std::string>();
                Parser parser(text, "<snapshot>");
                parser.parse_into(prog, errors);
            }
        if (!errors.empty()) {
            LoadResult out;
            out.failed = LoadResult::Stage::Parse;
            out.errors = std::move(errors);
            return out;
        }

        LoadResult out = make_context(std::move(prog));
        if (!out.ok()) return out;

        if (j.contains("facts"))
            for (const auto& f : j.at("facts")) {
                if (!f.is_array() || f.empty() || !f.at(0).is_string())
                    return parse_failure("each fact must be [predicate, arg...]");
                Atom a;
                a.pred = f.at(0).get<std::string>();
                for (size_t i = 1; i < f.size(); ++i) {
                    const auto& arg = f.at(i);
                    if (arg.is_number_integer())
                        a.args.push_back(Term::constant(arg.get<int64_t>()));
                    else if (arg.is_string())
                        a.args.push_back(Term::constant(arg.get<std::string>()));
                    else
                        return parse_failure("fact arguments must be strings or integers");
                }
                try {
                    out.context->tell(a);
                } catch (const ContextError& e) {
                    return parse_failure(e.what());
                }
            }
        return out;
    } catch (const nlohmann::json::exception& e) {
        return parse_failure(e.what());
    }
}

inline LoadResult from_snapshot_text(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) {
        LoadResult out;
        out.failed = LoadResult::Stage::Parse;
        out.errors.push_back(Diag{{}, "invalid snapshot: not valid JSON"});
        return out;
    }
    return from_snapshot(j);
}

}  // namespace codl
