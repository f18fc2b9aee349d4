// codl command-line tool: check context sources, run queries, compile
// predicates to enumerator IR, poke at a context interactively, or run the
// bundled demo scenario.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifdef _WIN32
#include <io.h>
#define CODL_ISATTY _isatty
#define CODL_FILENO _fileno
#else
#include <unistd.h>
#define CODL_ISATTY isatty
#define CODL_FILENO fileno
#endif

#include "CLI11.hpp"
#include "codl/codl.hpp"
#include "codl_demo_data.hpp"

namespace {

using namespace codl;

constexpr int kExitOk = 0;
constexpr int kExitParse = 1;
constexpr int kExitSafety = 2;
constexpr int kExitStratification = 3;
constexpr int kExitNoSolution = 4;

std::optional<std::string> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Loads the given files as one context; on failure prints the diagnostics and
// returns the exit code for the failing stage.
struct Loaded {
    LoadResult result;
    int exit_code = kExitOk;
};

Loaded load_files(const std::vector<std::string>& files) {
    Loaded out;
    std::vector<Source> sources;
    for (const auto& f : files) {
        auto text = read_file(f);
        if (!text) {
            std::cerr << f << ": cannot read file\n";
            out.exit_code = kExitParse;
            return out;
        }
        sources.push_back({f, std::move(*text)});
    }
    out.result = load_context(sources);
    if (!out.result.ok()) {
        for (const auto& d : out.result.errors) std::cerr << d.render() << "\n";
        switch (out.result.failed) {
            case LoadResult::Stage::Parse: out.exit_code = kExitParse; break;
            case LoadResult::Stage::Safety: out.exit_code = kExitSafety; break;
            case LoadResult::Stage::Stratification: out.exit_code = kExitStratification; break;
            case LoadResult::Stage::Ok: break;
        }
    }
    return out;
}

void print_strata(const Stratification& st, std::ostream& os) {
    std::map<int, std::vector<std::string>> by_level;
    for (const auto& [pred, level] : st.stratum) by_level[level].push_back(pred);
    for (const auto& [level, preds] : by_level) {
        os << "stratum " << level << ":";
        for (size_t i = 0; i < preds.size(); ++i) os << (i ? ", " : " ") << preds[i];
        os << "\n";
    }
}

// One solution as `Name=value` pairs in goal-variable order; `{}` when the
// goal has no variables.
std::string solution_line(const Substitution& s, const std::vector<std::string>& order) {
    if (order.empty()) return "{}";
    std::string line;
    for (size_t i = 0; i < order.size(); ++i) {
        if (i) line += ", ";
        line += order[i] + "=" + print_value(s.at(order[i]));
    }
    return line;
}

int cmd_check(const std::vector<std::string>& files) {
    Loaded loaded = load_files(files);
    if (loaded.exit_code != kExitOk) return loaded.exit_code;
    print_strata(loaded.result.context->strata(), std::cout);
    return kExitOk;
}

int cmd_query(const std::vector<std::string>& files, const std::string& goal_text,
              bool first_only) {
    Loaded loaded = load_files(files);
    if (loaded.exit_code != kExitOk) return loaded.exit_code;

    std::vector<Diag> errors;
    auto goal = parse_goal(goal_text, errors);
    if (!goal) {
        for (const auto& d : errors) std::cerr << d.render() << "\n";
        return kExitParse;
    }
    std::vector<std::string> order = goal->vars();
    try {
        SolutionStream stream = loaded.result.context->enumerate(std::move(*goal));
        size_t count = 0;
        while (auto s = stream.next()) {
            std::cout << solution_line(*s, order) << "\n";
            ++count;
            if (first_only) break;
        }
        return count ? kExitOk : kExitNoSolution;
    } catch (const UnsafeGoal& e) {
        std::cerr << e.what() << "\n";
        return kExitParse;
    }
}

int cmd_compile(const std::vector<std::string>& files, std::string out_base) {
    Loaded loaded = load_files(files);
    if (loaded.exit_code != kExitOk) return loaded.exit_code;
    const Context& ctx = *loaded.result.context;

    if (out_base.empty()) {
        out_base = files.front();
        if (auto dot = out_base.rfind('.');
            dot != std::string::npos && dot > out_base.rfind('/') + 1)
            out_base.resize(dot);
    }

    LoopIR ir = lower(ctx.program());
    std::string ir_path = out_base + ".gen.txt";
    std::string json_path = out_base + ".json";

    std::ofstream ir_out(ir_path, std::ios::binary);
    if (!ir_out) {
        std::cerr << ir_path << ": cannot write\n";
        return kExitParse;
    }
    ir_out << print_ir(ir);

    std::ofstream json_out(json_path, std::ios::binary);
    if (!json_out) {
        std::cerr << json_path << ": cannot write\n";
        return kExitParse;
    }
    json_out << to_snapshot(ctx).dump(2) << "\n";

    std::cout << "wrote " << ir_path << "\n";
    std::cout << "wrote " << json_path << "\n";
    return kExitOk;
}

int cmd_repl(const std::vector<std::string>& files) {
    std::unique_ptr<Context> ctx;
    if (!files.empty()) {
        Loaded loaded = load_files(files);
        if (loaded.exit_code != kExitOk) return loaded.exit_code;
        ctx = std::move(loaded.result.context);
    } else {
        auto empty = load_context(std::string{}, "<empty>");
        ctx = std::move(empty.context);
    }

    const bool interactive = CODL_ISATTY(CODL_FILENO(stdin));
    std::string line;
    while (true) {
        if (interactive) std::cout << "codl> " << std::flush;
        if (!std::getline(std::cin, line)) break;

        size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        size_t e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);

        if (line == "quit") break;
        if (line == "strata") {
            print_strata(ctx->strata(), std::cout);
            continue;
        }
        if (line[0] == '?') {
            std::vector<Diag> errors;
            auto goal = parse_goal(line.substr(1), errors);
            if (!goal) {
                for (const auto& d : errors) std::cout << d.render() << "\n";
                continue;
            }
            std::vector<std::string> order = goal->vars();
            try {
                SolutionStream stream = ctx->enumerate(std::move(*goal));
                size_t count = 0;
                while (auto s = stream.next()) {
                    std::cout << solution_line(*s, order) << "\n";
                    ++count;
                }
                if (!count) std::cout << "no solutions\n";
            } catch (const UnsafeGoal& ex) {
                std::cout << ex.what() << "\n";
            }
            continue;
        }
        auto run_mutation = [&](const std::string& rest, bool is_tell) {
            std::vector<Diag> errors;
            auto fact = parse_fact(rest, errors);
            if (!fact) {
                for (const auto& d : errors) std::cout << d.render() << "\n";
                return;
            }
            try {
                bool changed = is_tell ? ctx->tell(*fact) : ctx->retract(*fact);
                std::cout << (changed ? "changed" : "unchanged") << "\n";
            } catch (const ContextError& ex) {
                std::cout << ex.what() << "\n";
            }
        };
        if (line.rfind("tell ", 0) == 0) {
            run_mutation(line.substr(5), /*is_tell=*/true);
        } else if (line.rfind("retract ", 0) == 0) {
            run_mutation(line.substr(8), /*is_tell=*/false);
        } else {
            std::cout << "commands: tell <fact>.  retract <fact>.  ? <goal>.  strata  quit\n";
        }
    }
    return kExitOk;
}

ehealth::Scenario demo_scenario() {
    ehealth::Scenario s;
    s.sources = {{"physicians.dl", std::string(embedded::kPhysiciansSource)},
                 {"patients.dl", std::string(embedded::kPatientsSource)},
                 {"devices.dl", std::string(embedded::kDevicesSource)}};
    ehealth::ScriptParse script =
        ehealth::parse_script(std::string(embedded::kDemoScript), "ehealth.script");
    s.steps = std::move(script.steps);
    return s;
}

int cmd_demo(const std::string& name, bool verify) {
    if (name != "ehealth") {
        std::cerr << "unknown scenario: " << name << " (available: ehealth)\n";
        return kExitParse;
    }
    ehealth::ScenarioResult result = ehealth::run_scenario(demo_scenario());
    if (!result.ok()) {
        for (const auto& d : result.errors) std::cerr << d.render() << "\n";
        return kExitParse;
    }
    std::cout << result.transcript << std::flush;
    if (verify) {
        if (result.transcript != embedded::kDemoGolden) {
            std::cerr << "transcript differs from the expected output\n";
            return 1;
        }
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"context-oriented datalog: checker, query tool, compiler, REPL, demo"};
    app.require_subcommand(1);

    std::vector<std::string> files;
    std::string goal_text;
    std::string out_base;
    std::string demo_name = "ehealth";
    bool first_only = false;
    bool verify = false;

    CLI::App* check = app.add_subcommand("check", "Parse and validate context sources");
    check->add_option("files", files, "context source files (.dl)")->required();

    CLI::App* query = app.add_subcommand("query", "Evaluate a goal against a context");
    query->add_option("files", files, "context source files (.dl)")->required();
    query->add_option("-g,--goal", goal_text, "goal, e.g. \"p('a', ?X).\"")->required();
    query->add_flag("--first", first_only, "print only the first solution");

    CLI::App* compile = app.add_subcommand("compile", "Compile predicates to enumerator IR");
    compile->add_option("files", files, "context source files (.dl)")->required();
    compile->add_option("-o,--out", out_base, "output base path (writes <out>.gen.txt and <out>.json)");

    CLI::App* repl = app.add_subcommand("repl", "Interactive session against a context");
    repl->add_option("files", files, "context source files (.dl)");

    CLI::App* demo = app.add_subcommand("demo", "Run a bundled scenario");
    demo->add_option("name", demo_name, "scenario name (default: ehealth)");
    demo->add_flag("--verify", verify, "compare output against the expected transcript");

    CLI11_PARSE(app, argc, argv);

    if (check->parsed()) return cmd_check(files);
    if (query->parsed()) return cmd_query(files, goal_text, first_only);
    if (compile->parsed()) return cmd_compile(files, out_base);
    if (repl->parsed()) return cmd_repl(files);
    if (demo->parsed()) return cmd_demo(demo_name, verify);
    return kExitOk;
}
