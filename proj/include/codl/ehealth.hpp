#pragma once

// The clinical-ward walkthrough: context-driven display of a patient's exam
// record, next-exam selection, and a physician search that survives a context
// with a missing location. All behaviour goes through the adaptation API so
// the demo exercises exactly what applications would use.
//
// Scenario scripts are line-based: `display <phy> <pat>`, `tell <fact>.`,
// `retract <fact>.`, `find-physicians <pat>`, `blank` (emits one empty
// transcript line), `#` comments. Replaying a script against freshly loaded
// sources yields the transcript byte-for-byte.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "codl/adaptation.hpp"
#include "codl/ast.hpp"
#include "codl/context.hpp"
#include "codl/diagnostics.hpp"
#include "codl/parser.hpp"

namespace codl::ehealth {

namespace detail {

inline Term txt(std::string s) { return Term::constant(std::move(s)); }
inline Term gv(std::string name) { return Term::var(std::move(name)); }

inline Literal lit(std::string pred, std::vector<Term> args) {
    return Literal{Atom{std::move(pred), std::move(args)}, true};
}

inline Goal make_goal(std::vector<Literal> lits) { return Goal{std::move(lits)}; }

inline Goal goal_true() {
    return make_goal({lit(std::string(kTruePredicate), {})});
}

}  // namespace detail

// One exam line of the record view. The device check decides between the
// plain listing and the cannot-display warning suffix.
inline std::string display_exam(const Context& ctx, const std::string& phy,
                                const std::string& exam) {
    using namespace detail;
    BehaviouralVariation<std::string> line({
        Case<std::string>{make_goal({lit("physician_device", {txt(phy), gv("Device")}),
                                     lit("device_can_display_exam", {gv("Device"), txt(exam)})}),
                          [&](const Substitution&) { return " - " + exam + "\n"; }},
        Case<std::string>{goal_true(),
                          [&](const Substitution&) {
                              return " - " + exam +
                                     " (current device cannot display the exam data)\n";
                          }},
    });
    return dispatch(line, ctx);
}

// Shows a patient's record to a physician: the exam list when viewing is
// permitted (or the no-exam line), then the next exam the physician can
// submit the patient to.
inline std::string display(const Context& ctx, const std::string& phy, const std::string& pat) {
    using namespace detail;
    std::string out;

    auto view_details = [&](const Substitution&) {
        BehaviouralVariation<int> record({
            Case<int>{make_goal({lit("patient_has_result", {txt(pat), gv("e")})}),
                      [&](const Substitution&) {
                          out += phy + " sees that " + pat + " has done:\n";
                          for_each(ctx,
                                   make_goal({lit("patient_has_result", {txt(pat), gv("exam")})}),
                                   [&](const Substitution& s) {
                                       out += display_exam(ctx, phy, value_text(s.at("exam")));
                                   });
                          return 0;
                      }},
            Case<int>{goal_true(),
                      [&](const Substitution&) {
                          out += phy + " sees that " + pat + " has done no exam\n";
                          return 0;
                      }},
        });
        dispatch(record, ctx);

        Parameter<std::string> next_exam(Case<std::string>{
            goal_true(), [](const Substitution&) { return std::string("no exam"); }});
        next_exam = next_exam.with_case(Case<std::string>{
            make_goal({lit("physician_exam", {txt(phy), gv("exam")}),
                       lit("patient_active_exam", {txt(pat), gv("exam")})}),
            [](const Substitution& s) { return value_text(s.at("exam")); }});
        out += phy + " can submit " + pat + " to " + resolve(next_exam, ctx) + "\n";
        return 0;
    };

    BehaviouralVariation<int> viewer({
        Case<int>{make_goal({lit("physician_can_view_patient", {txt(phy), txt(pat)})}),
                  view_details},
        Case<int>{goal_true(),
                  [&](const Substitution&) {
                      out += phy + " cannot view details on " + pat + "\n";
                      return 0;
                  }},
    });
    dispatch(viewer, ctx);
    return out;
}

// Resolves a physician's location; on adaptation failure logs the warning to
// `log` and falls back to "unknown location".
inline std::string find_physician(const Context& ctx, const std::string& phy,
                                  std::string& log) {
    using namespace detail;
    try {
        Parameter<std::string> loc(Case<std::string>{
            make_goal({lit("physician_location", {txt(phy), gv("location")})}),
            [](const Substitution& s) { return value_text(s.at("location")); }});
        return resolve(loc, ctx);
    } catch (const InconsistentContext& e) {
        log += "WARNING: cannot locate " + phy + ":\n";
        log += std::string("codl.InconsistentContext: ") + e.what() + "\n";
        return "unknown location";
    }
}

// Lists every physician able to perform an exam the patient actively needs,
// with the physician's (possibly unresolvable) current location.
inline std::string find_physicians_for(const Context& ctx, const std::string& pat) {
    using namespace detail;
    std::string out;
    for_each(ctx,
             make_goal({lit("patient_active_exam", {txt(pat), gv("exam")}),
                        lit("physician_exam", {gv("physician"), gv("exam")})}),
             [&](const Substitution& s) {
                 std::string phy = value_text(s.at("physician"));
                 std::string loc = find_physician(ctx, phy, out);
                 out += phy + " (currently in " + loc + ") can submit " + pat + " to " +
                        value_text(s.at("exam")) + "\n";
             });
    return out;
}

// ---------------------------------------------------------------------------
// Scenario scripts

struct Step {
    enum class Kind { Display, Tell, Retract, FindPhysicians, Blank };
    Kind kind;
    std::string phy;  // Display
    std::string pat;  // Display / FindPhysicians
    Atom fact;        // Tell / Retract
};

struct Scenario {
    std::vector<Source> sources;
    std::vector<Step> steps;
};

struct ScriptParse {
    std::vector<Step> steps;
    std::vector<Diag> errors;
    bool ok() const { return errors.empty(); }
};

inline ScriptParse parse_script(const std::string& text, const std::string& name = "<script>") {
    ScriptParse out;
    int line_no = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t eol = text.find('\n', pos);
        std::string line = text.substr(pos, eol == std::string::npos ? eol : eol - pos);
        pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        size_t e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        if (line[0] == '#') continue;

        SourceLoc loc{name, line_no, static_cast<int>(b) + 1};
        size_t sp = line.find(' ');
        std::string cmd = line.substr(0, sp);
        std::string rest = sp == std::string::npos ? "" : line.substr(sp + 1);

        auto names = [&](size_t want) -> std::optional<std::vector<std::string>> {
            codl::detail::Lexer lex(rest, name);
            std::vector<std::string> got;
            for (size_t i = 0; i < want; ++i) {
                auto tok = lex.next();
                if (tok.kind != codl::detail::Token::Kind::Text &&
                    tok.kind != codl::detail::Token::Kind::Ident) {
                    out.errors.push_back({loc, cmd + " expects " + std::to_string(want) +
                                                   " quoted or bare name(s)"});
                    return std::nullopt;
                }
                got.push_back(tok.text);
            }
            if (lex.next().kind != codl::detail::Token::Kind::End) {
                out.errors.push_back({loc, "trailing input after " + cmd});
                return std::nullopt;
            }
            return got;
        };
        auto fact = [&]() -> std::optional<Atom> {
            std::vector<Diag> errs;
            auto a = parse_fact(rest, errs, name);
            if (!a) {
                for (auto& d : errs) {
                    d.loc = loc;
                    out.errors.push_back(std::move(d));
                }
                if (errs.empty())
                    out.errors.push_back({loc, "cannot parse fact in " + cmd + " step"});
            }
            return a;
        };

        if (cmd == "blank") {
            out.steps.push_back({Step::Kind::Blank, "", "", {}});
        } else if (cmd == "display") {
            if (auto n = names(2))
                out.steps.push_back({Step::Kind::Display, (*n)[0], (*n)[1], {}});
        } else if (cmd == "find-physicians") {
            if (auto n = names(1))
                out.steps.push_back({Step::Kind::FindPhysicians, "", (*n)[0], {}});
        } else if (cmd == "tell") {
            if (auto a = fact()) out.steps.push_back({Step::Kind::Tell, "", "", std::move(*a)});
        } else if (cmd == "retract") {
            if (auto a = fact()) out.steps.push_back({Step::Kind::Retract, "", "", std::move(*a)});
        } else {
            out.errors.push_back({loc, "unknown script command: " + cmd});
        }
    }
    return out;
}

struct ScenarioResult {
    std::string transcript;
    std::vector<Diag> errors;
    bool ok() const { return errors.empty(); }
};

// Loads the sources fresh and replays the steps in order.
inline ScenarioResult run_scenario(const Scenario& s) {
    ScenarioResult out;
    LoadResult loaded = load_context(s.sources);
    if (!loaded.ok()) {
        out.errors = loaded.errors;
        return out;
    }
    Context& ctx = *loaded.context;
    for (const auto& step : s.steps) {
        switch (step.kind) {
            case Step::Kind::Blank:
                out.transcript += "\n";
                break;
            case Step::Kind::Display:
                out.transcript += display(ctx, step.phy, step.pat);
                break;
            case Step::Kind::FindPhysicians:
                out.transcript += find_physicians_for(ctx, step.pat);
                break;
            case Step::Kind::Tell:
                ctx.tell(step.fact);
                break;
            case Step::Kind::Retract:
                ctx.retract(step.fact);
                break;
        }
    }
    return out;
}

}  // namespace codl::ehealth
