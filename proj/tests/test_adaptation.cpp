#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "codl/adaptation.hpp"
#include "codl/context.hpp"
#include "support/gen.hpp"

using namespace codl;

namespace {

Goal goal_of(const std::string& text) {
    std::vector<Diag> errs;
    auto g = parse_goal(text, errs);
    REQUIRE(errs.empty());
    REQUIRE(g.has_value());
    return *g;
}

Atom fact_of(const std::string& text) {
    std::vector<Diag> errs;
    auto a = parse_fact(text, errs);
    REQUIRE(errs.empty());
    REQUIRE(a.has_value());
    return *a;
}

std::unique_ptr<Context> clinic() {
    auto res = load_context(std::string(
        "physician_can_view_patient(Phy, Pat) :-\n"
        "    physician_location(Phy, Room), patient_location(Pat, Room).\n"
        "physician_location('Dr. Turk', 'Cardiology').\n"
        "physician_location('Dr. Cox', 'Ward 52').\n"
        "patient_location('Bob', 'Ward 52').\n"
        "physician_exam('Dr. Cox', 'ECG').\n"
        "physician_exam('Dr. Cox', 'Blood test').\n"
        "patient_active_exam('Bob', 'Blood test')."),
        "clinic.dl");
    REQUIRE(res.ok());
    return std::move(res.context);
}

// A random context plus some goals known satisfiable / unsatisfiable in it.
struct Arena {
    std::unique_ptr<Context> ctx;
    std::vector<Goal> sat;
    std::vector<Goal> unsat;
};

Arena random_arena(std::mt19937& rng) {
    Arena a;
    for (int attempt = 0; attempt < 50; ++attempt) {
        auto gen = testgen::random_program(rng);
        auto loaded = make_context(gen.program);
        REQUIRE(loaded.ok());
        auto model = loaded.context->model();

        std::vector<Goal> sat, unsat;
        for (const auto& pred : gen.preds) {
            Goal g;
            Atom atom;
            atom.pred = pred;
            int arity = loaded.context->program().arity.at(pred);
            for (int k = 0; k < arity; ++k) atom.args.push_back(Term::var("V" + std::to_string(k)));
            g.literals.push_back({atom, true});
            if (model->rel(pred).size() > 0) {
                sat.push_back(g);
            } else {
                unsat.push_back(g);
            }
        }
        if (!sat.empty() && !unsat.empty()) {
            a.ctx = std::move(loaded.context);
            a.sat = std::move(sat);
            a.unsat = std::move(unsat);
            return a;
        }
    }
    FAIL("could not build an arena with both satisfiable and unsatisfiable goals");
    return a;
}

}  // namespace

TEST_CASE("dispatch falls through to the always-true case", "[adaptation][dispatch]") {
    auto ctx = clinic();
    std::string seen;
    BehaviouralVariation<std::string> display{
        when<std::string>(goal_of("physician_can_view_patient('Dr. Turk', 'Bob')."),
                          [&](const Substitution&) { return std::string("details"); }),
        when<std::string>(goal_of("True."), [&](const Substitution&) {
            return std::string("Dr. Turk cannot view details on Bob");
        })};
    CHECK(dispatch(display, *ctx) == "Dr. Turk cannot view details on Bob");

    BehaviouralVariation<std::string> display_cox{
        when<std::string>(goal_of("physician_can_view_patient('Dr. Cox', 'Bob')."),
                          [&](const Substitution&) { return std::string("details"); }),
        when<std::string>(goal_of("True."),
                          [&](const Substitution&) { return std::string("fallback"); })};
    CHECK(dispatch(display_cox, *ctx) == "details");
}

TEST_CASE("a sole always-true case runs with the empty substitution", "[adaptation][dispatch]") {
    auto ctx = clinic();
    BehaviouralVariation<int> bv{when<int>(goal_of("True."), [](const Substitution& s) {
        REQUIRE(s.empty());
        return 42;
    })};
    CHECK(dispatch(bv, *ctx) == 42);
}

TEST_CASE("only the first satisfiable case's body runs", "[adaptation][dispatch]") {
    auto ctx = clinic();
    int first_runs = 0, second_runs = 0;
    BehaviouralVariation<int> bv{
        when<int>(goal_of("physician_exam('Dr. Cox', ?E)."),
                  [&](const Substitution& s) {
                      ++first_runs;
                      CHECK(s.at("E") == Value{std::string("ECG")});  // first solution binds
                      return 1;
                  }),
        when<int>(goal_of("True."), [&](const Substitution&) {
            ++second_runs;
            return 2;
        })};
    CHECK(dispatch(bv, *ctx) == 1);
    CHECK(first_runs == 1);
    CHECK(second_runs == 0);
}

TEST_CASE("variations are values that compose by concatenation", "[adaptation][dispatch]") {
    auto ctx = clinic();
    BehaviouralVariation<int> left{when<int>(goal_of("no_such_pred('x')."),
                                             [](const Substitution&) { return 1; })};
    BehaviouralVariation<int> right{when<int>(goal_of("True."),
                                              [](const Substitution&) { return 2; })};
    CHECK(dispatch(left + right, *ctx) == 2);

    BehaviouralVariation<int> both =
        BehaviouralVariation<int>{when<int>(goal_of("True."),
                                            [](const Substitution&) { return 3; })} +
        right;
    CHECK(dispatch(both, *ctx) == 3);  // left operand probes first
}

TEST_CASE("an empty case list is rejected at construction", "[adaptation]") {
    CHECK_THROWS_AS(BehaviouralVariation<int>(std::vector<Case<int>>{}), std::logic_error);
    CHECK_THROWS_AS(Parameter<int>(std::vector<Case<int>>{}), std::logic_error);
}

TEST_CASE("parameters resolve innermost first", "[adaptation][resolve]") {
    auto ctx = clinic();
    Parameter<std::string> next_exam(
        when<std::string>(goal_of("True."), [](const Substitution&) { return std::string("no exam"); }));
    auto refined = next_exam.with_case(when<std::string>(
        goal_of("physician_exam('Dr. Cox', ?Exam), patient_active_exam('Bob', ?Exam)."),
        [](const Substitution& s) { return value_text(s.at("Exam")); }));

    CHECK(resolve(refined, *ctx) == "Blood test");
    CHECK(resolve(next_exam, *ctx) == "no exam");  // outer binding untouched
}

TEST_CASE("resolution falls outward when the inner goal fails", "[adaptation][resolve]") {
    auto ctx = clinic();
    Parameter<std::string> p(
        when<std::string>(goal_of("True."), [](const Substitution&) { return std::string("outer"); }));
    auto inner = p.with_case(when<std::string>(goal_of("patient_active_exam('Alice', ?E)."),
                                               [](const Substitution&) { return std::string("inner"); }));
    CHECK(resolve(inner, *ctx) == "outer");
    // After the fact arrives, the same parameter value resolves differently.
    REQUIRE(ctx->tell(fact_of("patient_active_exam('Alice', 'CT scan').")));
    CHECK(resolve(inner, *ctx) == "inner");
}

TEST_CASE("resolution is lazy: goals run at the use site", "[adaptation][resolve]") {
    auto ctx = clinic();
    int body_runs = 0;
    Parameter<std::string> location(when<std::string>(
        goal_of("physician_location('Dr. Cox', ?W)."), [&](const Substitution& s) {
            ++body_runs;
            return value_text(s.at("W"));
        }));
    CHECK(body_runs == 0);  // declaration alone runs nothing

    CHECK(resolve(location, *ctx) == "Ward 52");
    REQUIRE(ctx->retract(fact_of("physician_location('Dr. Cox', 'Ward 52').")));
    REQUIRE(ctx->tell(fact_of("physician_location('Dr. Cox', 'Ward 57').")));
    CHECK(resolve(location, *ctx) == "Ward 57");
    CHECK(body_runs == 2);
}

TEST_CASE("failure lists every failed goal and the epoch", "[adaptation][failure]") {
    auto ctx = clinic();
    Parameter<std::string> location(when<std::string>(
        goal_of("physician_location('Dr. Reid', ?W)."),
        [](const Substitution& s) { return value_text(s.at("W")); }));

    uint64_t epoch_now = ctx->epoch();
    std::string note;
    try {
        resolve(location, *ctx);
        FAIL("expected InconsistentContext");
    } catch (const InconsistentContext& e) {
        note = std::string("WARNING: cannot locate Dr. Reid:\ncodl.InconsistentContext: ") +
               e.what();
        CHECK(e.failed_goals.size() == 1);
        CHECK(e.failed_goals[0].literals[0].atom.pred == "physician_location");
        CHECK(e.epoch == epoch_now);
    }
    CHECK(note ==
          "WARNING: cannot locate Dr. Reid:\n"
          "codl.InconsistentContext: Context inconsistency detected");

    // The handler can substitute a fallback value, keeping the program going.
    std::string where;
    try {
        where = resolve(location, *ctx);
    } catch (const InconsistentContext&) {
        where = "unknown location";
    }
    CHECK(where == "unknown location");
}

TEST_CASE("dispatch failure carries all case goals in order", "[adaptation][failure]") {
    auto ctx = clinic();
    BehaviouralVariation<int> bv{
        when<int>(goal_of("missing_one('a')."), [](const Substitution&) { return 1; }),
        when<int>(goal_of("missing_two('b')."), [](const Substitution&) { return 2; })};
    try {
        dispatch(bv, *ctx);
        FAIL("expected InconsistentContext");
    } catch (const InconsistentContext& e) {
        REQUIRE(e.failed_goals.size() == 2);
        CHECK(e.failed_goals[0].literals[0].atom.pred == "missing_one");
        CHECK(e.failed_goals[1].literals[0].atom.pred == "missing_two");
    }
}

TEST_CASE("goal-driven iteration runs once per solution", "[adaptation][foreach]") {
    auto ctx = clinic();
    std::vector<std::string> exams;
    for_each(*ctx, goal_of("physician_exam('Dr. Cox', ?E)."),
             [&](const Substitution& s) { exams.push_back(value_text(s.at("E"))); });
    CHECK(exams == std::vector<std::string>{"ECG", "Blood test"});
}

TEST_CASE("zero solutions means zero invocations, not a failure", "[adaptation][foreach]") {
    auto ctx = clinic();
    int runs = 0;
    for_each(*ctx, goal_of("physician_exam('Dr. Reid', ?E)."),
             [&](const Substitution&) { ++runs; });
    CHECK(runs == 0);
}

TEST_CASE("iteration works over the model at entry", "[adaptation][foreach]") {
    auto ctx = clinic();
    int runs = 0;
    for_each(*ctx, goal_of("physician_exam('Dr. Cox', ?E)."), [&](const Substitution&) {
        ++runs;
        // A matching fact told mid-iteration must not extend this loop.
        ctx->tell(fact_of("physician_exam('Dr. Cox', 'X-ray " + std::to_string(runs) + "')."));
    });
    CHECK(runs == 2);
    // The next iteration sees the told facts.
    int runs2 = 0;
    for_each(*ctx, goal_of("physician_exam('Dr. Cox', ?E)."), [&](const Substitution&) { ++runs2; });
    CHECK(runs2 == 4);
}

TEST_CASE("unsatisfiable prefixes never change dispatch", "[adaptation][prop]") {
    std::mt19937 rng(551001);
    for (int i = 0; i < 60; ++i) {
        Arena a = random_arena(rng);

        std::vector<Case<size_t>> cases;
        for (size_t k = 0; k < a.sat.size(); ++k)
            cases.push_back(when<size_t>(a.sat[k], [k](const Substitution&) { return k; }));
        BehaviouralVariation<size_t> bv(cases);
        size_t base = dispatch(bv, *a.ctx);

        // Prepend one, two, three unsatisfiable cases.
        BehaviouralVariation<size_t> prefixed = bv;
        for (const auto& bad : a.unsat) {
            prefixed = BehaviouralVariation<size_t>{when<size_t>(
                           bad, [](const Substitution&) { return size_t{9999}; })} +
                       prefixed;
            CHECK(dispatch(prefixed, *a.ctx) == base);
        }
    }
}

TEST_CASE("pushing a satisfiable case shadows, popping restores", "[adaptation][prop]") {
    std::mt19937 rng(551002);
    for (int i = 0; i < 60; ++i) {
        Arena a = random_arena(rng);
        Parameter<int> outer(when<int>(a.sat[0], [](const Substitution&) { return 1; }));
        int base = resolve(outer, *a.ctx);
        REQUIRE(base == 1);

        auto inner = outer.with_case(when<int>(a.sat[i % a.sat.size()],
                                               [](const Substitution&) { return 2; }));
        CHECK(resolve(inner, *a.ctx) == 2);   // shadowed
        CHECK(resolve(outer, *a.ctx) == 1);   // popped / untouched value restores

        // An unsatisfiable inner case does not shadow.
        auto blocked = outer.with_case(when<int>(a.unsat[i % a.unsat.size()],
                                                 [](const Substitution&) { return 3; }));
        CHECK(resolve(blocked, *a.ctx) == 1);
    }
}

TEST_CASE("failure exactly when every goal fails", "[adaptation][prop]") {
    std::mt19937 rng(551003);
    for (int i = 0; i < 60; ++i) {
        Arena a = random_arena(rng);
        std::vector<Case<int>> cases;
        bool any_sat = false;
        int ncases = testgen::detail::pick(rng, 1, 4);
        for (int k = 0; k < ncases; ++k) {
            bool pick_sat = testgen::detail::chance(rng, 0.4);
            if (pick_sat) any_sat = true;
            const auto& pool = pick_sat ? a.sat : a.unsat;
            cases.push_back(when<int>(pool[testgen::detail::pick(
                                          rng, 0, static_cast<int>(pool.size()) - 1)],
                                      [](const Substitution&) { return 1; }));
        }
        BehaviouralVariation<int> bv(cases);
        if (any_sat) {
            CHECK_NOTHROW(dispatch(bv, *a.ctx));
        } else {
            CHECK_THROWS_AS(dispatch(bv, *a.ctx), InconsistentContext);
        }
    }
}

TEST_CASE("at most one body runs per dispatch or resolve", "[adaptation][prop]") {
    std::mt19937 rng(551004);
    for (int i = 0; i < 60; ++i) {
        Arena a = random_arena(rng);
        int invocations = 0;
        std::vector<Case<int>> cases;
        for (int k = 0; k < 4; ++k) {
            const auto& pool = testgen::detail::chance(rng, 0.5) ? a.sat : a.unsat;
            cases.push_back(when<int>(pool[testgen::detail::pick(
                                          rng, 0, static_cast<int>(pool.size()) - 1)],
                                      [&invocations](const Substitution&) {
                                          return ++invocations;
                                      }));
        }
        try {
            dispatch(BehaviouralVariation<int>(cases), *a.ctx);
        } catch (const InconsistentContext&) {
        }
        CHECK(invocations <= 1);

        invocations = 0;
        try {
            resolve(Parameter<int>(cases), *a.ctx);
        } catch (const InconsistentContext&) {
        }
        CHECK(invocations <= 1);
    }
}

TEST_CASE("iteration count equals the enumeration length", "[adaptation][prop]") {
    std::mt19937 rng(551005);
    for (int i = 0; i < 60; ++i) {
        Arena a = random_arena(rng);
        for (const auto& g : a.sat) {
            size_t n = a.ctx->all_solutions(g).size();
            size_t runs = 0;
            for_each(*a.ctx, g, [&](const Substitution&) { ++runs; });
            CHECK(runs == n);
        }
    }
}

TEST_CASE("parameter resolution tracks mutation across resolves", "[adaptation][prop]") {
    std::mt19937 rng(551006);
    for (int i = 0; i < 40; ++i) {
        Arena a = random_arena(rng);
        // A guard on a fresh predicate flips as facts are told and retracted.
        Parameter<int> p(when<int>(goal_of("True."), [](const Substitution&) { return 0; }));
        auto probe = p.with_case(when<int>(goal_of("probe_flag('on')."),
                                           [](const Substitution&) { return 1; }));
        CHECK(resolve(probe, *a.ctx) == 0);
        a.ctx->tell(fact_of("probe_flag('on')."));
        CHECK(resolve(probe, *a.ctx) == 1);
        a.ctx->retract(fact_of("probe_flag('on')."));
        CHECK(resolve(probe, *a.ctx) == 0);
    }
}
