#pragma once

// The mutable knowledge-base object an application talks to: it owns a
// checked program plus an extensional store, keeps a cached model, and hands
// out snapshot-isolated solution streams.

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "codl/ast.hpp"
#include "codl/checks.hpp"
#include "codl/diagnostics.hpp"
#include "codl/engine.hpp"
#include "codl/parser.hpp"

namespace codl {

struct ContextError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ArityMismatch : ContextError {
    ArityMismatch(const std::string& pred, size_t declared, size_t got)
        : ContextError("arity mismatch: " + pred + " declared with arity " +
                       std::to_string(declared) + ", got " + std::to_string(got)) {}
};
struct NonGroundFact : ContextError {
    explicit NonGroundFact(const Atom& a)
        : ContextError("fact must be ground: " + print_atom(a)) {}
};
struct ReservedPredicate : ContextError {
    explicit ReservedPredicate(const std::string& pred)
        : ContextError(pred + " is built in and cannot be told or retracted") {}
};

// One named input text, typically the contents of a .dl file.
struct Source {
    std::string name;
    std::string text;
};

class Context {
  public:
    // Assumes parts have already passed safety and stratification; use
    // load_context for unchecked text.
    Context(Program rules_only, Stratification strata, FactStore store)
        : program_(std::move(rules_only)),
          strata_(std::move(strata)),
          store_(std::move(store)) {}

    Context(const Context&) = delete;
    Context& operator=(const Context&) = delete;

    const Program& program() const { return program_; }
    const Stratification& strata() const { return strata_; }
    const FactStore& store() const { return store_; }
    uint64_t epoch() const { return epoch_.load(); }

    // Adds a ground fact. New predicates are adopted as extensional with the
    // fact's arity. Returns whether the store changed.
    bool tell(const Atom& fact) {
        admit(fact, /*adopt_new=*/true);
        bool changed = store_.insert(fact.pred, tuple_of(fact));
        if (changed) bump();
        return changed;
    }

    // Removes a stored fact if present. Derived tuples are not retractable;
    // retracting an absent fact is a no-op returning false.
    bool retract(const Atom& fact) {
        admit(fact, /*adopt_new=*/false);
        bool changed = store_.erase(fact.pred, tuple_of(fact));
        if (changed) bump();
        return changed;
    }

    // Current model, computing it if stale. The returned snapshot is immutable
    // and stays valid (and unchanged) across later tell/retract calls.
    std::shared_ptr<const Model> model() const {
        std::lock_guard<std::mutex> lock(mu_);
        if (!cached_)
            cached_ = std::make_shared<const Model>(evaluate(program_, strata_, store_));
        return cached_;
    }

    std::optional<Substitution> solve(Goal g) const {
        return SolutionStream(model(), std::move(g)).next();
    }

    // The stream iterates over the model as of this call; concurrent mutation
    // affects later streams only.
    SolutionStream enumerate(Goal g) const { return SolutionStream(model(), std::move(g)); }

    std::vector<Substitution> all_solutions(Goal g) const {
        return enumerate(std::move(g)).drain();
    }

  private:
    Tuple tuple_of(const Atom& a) const {
        Tuple t;
        t.reserve(a.args.size());
        for (const auto& arg : a.args) t.push_back(arg.value);
        return t;
    }

    void admit(const Atom& fact, bool adopt_new) {
        if (fact.pred == kTruePredicate) throw ReservedPredicate(fact.pred);
        if (!fact.ground()) throw NonGroundFact(fact);
        auto it = program_.arity.find(fact.pred);
        if (it == program_.arity.end()) {
            if (adopt_new) {
                program_.arity[fact.pred] = fact.args.size();
                strata_.stratum.emplace(fact.pred, 0);
            }
            return;
        }
        if (it->second != fact.args.size())
            throw ArityMismatch(fact.pred, it->second, fact.args.size());
    }

    void bump() {
        epoch_.fetch_add(1);
        std::lock_guard<std::mutex> lock(mu_);
        cached_.reset();
    }

    Program program_;  // proper rules only; file facts live in store_
    Stratification strata_;
    FactStore store_;
    std::atomic<uint64_t> epoch_{0};
    mutable std::mutex mu_;
    mutable std::shared_ptr<const Model> cached_;
};

struct LoadResult {
    enum class Stage { Ok, Parse, Safety, Stratification };

    std::unique_ptr<Context> context;
    Stage failed = Stage::Ok;
    std::vector<Diag> errors;
    std::vector<std::string> cycle;  // witness when failed == Stratification

    bool ok() const { return context != nullptr; }
};

// Splits parsed clauses into proper rules and stored facts, so that file
// facts are retractable like told ones.
inline std::pair<Program, FactStore> hoist_facts(Program parsed) {
    Program rules;
    rules.arity = parsed.arity;
    FactStore store;
    for (auto& r : parsed.rules) {
        if (r.body.empty()) {
            Tuple t;
            t.reserve(r.head.args.size());
            for (const auto& a : r.head.args) t.push_back(a.value);
            store.insert(r.head.pred, std::move(t));
        } else {
            rules.rules.push_back(std::move(r));
        }
    }
    return {std::move(rules), std::move(store)};
}

// Builds a context from already-parsed parts, running both admission checks.
inline LoadResult make_context(Program parsed) {
    LoadResult out;
    auto violations = check_safety(parsed);
    if (!violations.empty()) {
        out.failed = LoadResult::Stage::Safety;
        for (const auto& v : violations) out.errors.push_back(v.to_diag());
        return out;
    }
    auto [rules, store] = hoist_facts(std::move(parsed));
    auto strat = stratify(rules);
    if (!strat.ok()) {
        out.failed = LoadResult::Stage::Stratification;
        out.cycle = strat.cycle;
        std::string msg = "not stratifiable: negation cycle";
        for (size_t i = 0; i < strat.cycle.size(); ++i)
            msg += (i ? " -> " : " ") + strat.cycle[i];
        out.errors.push_back(Diag{{}, msg});
        return out;
    }
    out.context = std::make_unique<Context>(std::move(rules), std::move(*strat.strata),
                                            std::move(store));
    return out;
}

// Parses the sources in order into one program (shared predicate table), then
// checks and assembles the context.
inline LoadResult load_context(const std::vector<Source>& sources) {
    Program parsed;
    std::vector<Diag> parse_errors;
    for (const auto& src : sources) {
        Parser parser(src.text, src.name);
        parser.parse_into(parsed, parse_errors);
    }
    if (!parse_errors.empty()) {
        LoadResult out;
        out.failed = LoadResult::Stage::Parse;
        out.errors = std::move(parse_errors);
        return out;
    }
    return make_context(std::move(parsed));
}

inline LoadResult load_context(const std::string& text, const std::string& name = "<input>") {
    return load_context(std::vector<Source>{{name, text}});
}

}  // namespace codl
