#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "codl/parser.hpp"
#include "support/gen.hpp"

using namespace codl;

TEST_CASE("single quoted-text fact parses with arity 2", "[parser]") {
    auto res = parse_program("physician_location('Dr. Turk', 'Cardiology').", "t.dl");
    REQUIRE(res.errors.empty());
    REQUIRE(res.program.rules.size() == 1);
    const Rule& r = res.program.rules[0];
    CHECK(r.is_fact());
    CHECK(r.head.pred == "physician_location");
    REQUIRE(r.head.args.size() == 2);
    CHECK(r.head.args[0].value == Value{std::string("Dr. Turk")});
    CHECK(r.head.args[1].value == Value{std::string("Cardiology")});
    CHECK(res.program.arity.at("physician_location") == 2);
}

TEST_CASE("empty source yields an empty program", "[parser]") {
    auto res = parse_program("", "t.dl");
    CHECK(res.errors.empty());
    CHECK(res.program.rules.empty());
    CHECK(res.program.arity.empty());
}

TEST_CASE("rule with negated literal keeps body order and polarity", "[parser]") {
    auto res = parse_program("p(X) :- q(X,Y), \\+ r(Y).", "t.dl");
    REQUIRE(res.errors.empty());
    REQUIRE(res.program.rules.size() == 1);
    const Rule& r = res.program.rules[0];
    CHECK_FALSE(r.is_fact());
    REQUIRE(r.body.size() == 2);
    CHECK(r.body[0].atom.pred == "q");
    CHECK(r.body[0].positive);
    CHECK(r.body[1].atom.pred == "r");
    CHECK_FALSE(r.body[1].positive);
    CHECK(r.body[1].atom.args[0].name == "Y");
}

TEST_CASE("comments, integers and lowercase constants", "[parser]") {
    auto res = parse_program("% setup\np(42, foo). % trailing\nq(-7).", "t.dl");
    REQUIRE(res.errors.empty());
    REQUIRE(res.program.rules.size() == 2);
    CHECK(res.program.rules[0].head.args[0].value == Value{std::int64_t{42}});
    CHECK(res.program.rules[0].head.args[1].value == Value{std::string("foo")});
    CHECK(res.program.rules[1].head.args[0].value == Value{std::int64_t{-7}});
}

TEST_CASE("anonymous variables never alias each other", "[parser]") {
    auto res = parse_program("q(X) :- p(X, _), p(_, X).", "t.dl");
    REQUIRE(res.errors.empty());
    const Rule& r = res.program.rules[0];
    const Term& a = r.body[0].atom.args[1];
    const Term& b = r.body[1].atom.args[0];
    CHECK(a.is_anon());
    CHECK(b.is_anon());
    CHECK(a.name != b.name);  // each occurrence is a fresh variable
}

TEST_CASE("syntax errors carry file, line and column", "[parser]") {
    auto res = parse_program("p(a).\np(b\nq(c).", "bad.dl");
    REQUIRE_FALSE(res.errors.empty());
    const Diag& d = res.errors[0];
    CHECK(d.loc.file == "bad.dl");
    CHECK(d.loc.line >= 2);
    CHECK(d.loc.col >= 1);
    CHECK(d.render().rfind("bad.dl:", 0) == 0);
}

TEST_CASE("arity mismatch across clauses is reported", "[parser]") {
    auto res = parse_program("p(a). p(a, b).", "t.dl");
    REQUIRE(res.errors.size() == 1);
    CHECK(res.errors[0].message.find("arity") != std::string::npos);
    CHECK(res.program.arity.at("p") == 1);  // first use pins the arity
}

TEST_CASE("non-ground facts are rejected", "[parser]") {
    auto res = parse_program("p(a, X).", "t.dl");
    REQUIRE(res.errors.size() == 1);
    CHECK(res.errors[0].message.find("ground") != std::string::npos);
}

TEST_CASE("pretty-print then re-parse is structurally identity", "[parser]") {
    const std::string src =
        "p('a b', 3).\n"
        "q(X) :- p(X, Y), \\+ r(Y).\n"
        "r(3).\n";
    auto first = parse_program(src, "t.dl");
    REQUIRE(first.errors.empty());
    std::string printed;
    for (const auto& r : first.program.rules) printed += print_rule(r) + "\n";
    auto second = parse_program(printed, "t.dl");
    REQUIRE(second.errors.empty());
    CHECK(first.program == second.program);
}

TEST_CASE("round-trip holds on random programs", "[parser][prop]") {
    std::mt19937 rng(20260822);
    for (int i = 0; i < 60; ++i) {
        auto gen = testgen::random_program(rng);
        std::string printed = testgen::to_source(gen.program);
        auto reparsed = parse_program(printed, "gen.dl");
        INFO("program:\n" << printed);
        REQUIRE(reparsed.errors.empty());
        CHECK(reparsed.program == gen.program);
    }
}

TEST_CASE("anonymous round-trip is stable on the printed form", "[parser]") {
    auto first = parse_program("q(X) :- p(X, _), p(_, X).", "t.dl");
    REQUIRE(first.errors.empty());
    std::string p1;
    for (const auto& r : first.program.rules) p1 += print_rule(r) + "\n";
    auto second = parse_program(p1, "t.dl");
    REQUIRE(second.errors.empty());
    std::string p2;
    for (const auto& r : second.program.rules) p2 += print_rule(r) + "\n";
    CHECK(p1 == p2);  // anonymous variables always print as `_`
}

TEST_CASE("goal syntax: ?vars, negation, anonymous slots", "[parser][goal]") {
    std::vector<Diag> errs;
    auto g = parse_goal("p(?X, 'a'), \\+ q(?X), r(_, 3).", errs);
    REQUIRE(errs.empty());
    REQUIRE(g.has_value());
    REQUIRE(g->literals.size() == 3);
    CHECK(g->vars() == std::vector<std::string>{"X"});
    CHECK_FALSE(g->literals[1].positive);
}

TEST_CASE("goal variables require the ?-prefix", "[parser][goal]") {
    std::vector<Diag> errs;
    auto g = parse_goal("p(X).", errs);
    CHECK_FALSE(g.has_value());
    REQUIRE_FALSE(errs.empty());
    CHECK(errs[0].message.find("?X") != std::string::npos);
}

TEST_CASE("goal variable order follows first occurrence", "[parser][goal]") {
    std::vector<Diag> errs;
    auto g = parse_goal("p(?B, ?A), q(?A, ?C).", errs);
    REQUIRE(g.has_value());
    CHECK(g->vars() == std::vector<std::string>{"B", "A", "C"});
}

TEST_CASE("facts parsed standalone must be ground", "[parser][fact]") {
    std::vector<Diag> errs;
    auto ok = parse_fact("p('x', 1).", errs);
    REQUIRE(ok.has_value());
    CHECK(ok->ground());
    CHECK(ok->pred == "p");

    errs.clear();
    auto bad = parse_fact("p(?X).", errs);
    CHECK_FALSE(bad.has_value());
    REQUIRE_FALSE(errs.empty());
}

TEST_CASE("trailing garbage after a fact is an error", "[parser][fact]") {
    std::vector<Diag> errs;
    auto bad = parse_fact("p(a). q(b).", errs);
    CHECK_FALSE(bad.has_value());
    REQUIRE_FALSE(errs.empty());
    CHECK(errs[0].message.find("after") != std::string::npos);
}
