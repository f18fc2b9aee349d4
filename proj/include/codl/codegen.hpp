#pragma once

// Lowers each predicate to a nested-loop enumerator procedure: clause blocks
// in rule order, one loop per positive body literal in literal order, fresh
// variables for body-only variables, negated literals as emptiness guards at
// the earliest point their arguments are ground, and a yield at the innermost
// level. run_ir executes the IR top-down with trail-based unification plus an
// ancestor loop-check; pruned recursive calls fall back to the answers
// memoized so far, and whole queries are re-run until the answer tables stop
// growing, which restores completeness on cyclic data.
//
// At run time every enumerator first yields the predicate's stored tuples,
// then works through its clause blocks; the printed form shows a "stored
// tuples" line only for predicates that have no rules.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "codl/ast.hpp"
#include "codl/engine.hpp"

namespace codl {

struct UnknownPredicate : std::runtime_error {
    explicit UnknownPredicate(const std::string& pred)
        : std::runtime_error("unknown predicate: " + pred) {}
};

// One argument slot inside the IR: either a constant or an IR variable name
// (a parameter or a clause-local fresh variable).
struct IrArg {
    bool is_const = false;
    Value value;
    std::string var;

    static IrArg constant(Value v) { return IrArg{true, std::move(v), ""}; }
    static IrArg variable(std::string name) { return IrArg{false, Value{}, std::move(name)}; }
};

struct IrLit {
    std::string pred;
    std::vector<IrArg> args;
};

struct IrStep {
    enum class Kind { Loop, Guard };
    Kind kind;
    IrLit lit;
};

struct IrClause {
    std::vector<std::pair<size_t, Value>> entry_consts;  // parameter slot must equal value
    std::vector<std::string> fresh;                      // body-only variables, in order
    std::vector<IrStep> steps;                           // loops and guards, nesting order
    std::vector<std::pair<size_t, std::string>> deferred;  // pre-yield: slot equals variable
};

struct IrProc {
    std::string pred;
    std::vector<std::string> params;
    std::vector<IrClause> clauses;
};

struct LoopIR {
    std::vector<IrProc> procs;
    std::map<std::string, size_t> index;  // predicate -> position in procs

    const IrProc* find(const std::string& pred) const {
        auto it = index.find(pred);
        return it == index.end() ? nullptr : &procs[it->second];
    }
};

// ---------------------------------------------------------------------------
// Lowering

inline LoopIR lower(const Program& p) {
    LoopIR ir;

    // Procedures for rule-defined predicates in first-definition order, then
    // the remaining (fact-only or merely referenced) predicates by name.
    std::vector<std::string> order;
    std::set<std::string> placed;
    for (const auto& r : p.rules)
        if (placed.insert(r.head.pred).second) order.push_back(r.head.pred);
    for (const auto& [pred, arity] : p.arity)
        if (placed.insert(pred).second) order.push_back(pred);

    std::map<std::string, std::vector<const Rule*>> defs;
    for (const auto& r : p.rules) defs[r.head.pred].push_back(&r);

    for (const auto& pred : order) {
        IrProc proc;
        proc.pred = pred;
        size_t arity = p.arity.count(pred) ? p.arity.at(pred) : 0;
        const auto& rules = defs[pred];

        // Parameter names: the head variable if every rule agrees on it and it
        // is not already taken by an earlier slot; otherwise argN. Lowercase
        // argN can never collide with a Datalog variable.
        std::set<std::string> taken;
        for (size_t i = 0; i < arity; ++i) {
            std::string name;
            bool usable = !rules.empty();
            for (const Rule* r : rules) {
                const Term& t = r->head.args[i];
                if (!t.is_var()) {
                    usable = false;
                    break;
                }
                if (name.empty())
                    name = t.name;
                else if (name != t.name) {
                    usable = false;
                    break;
                }
            }
            if (!usable || name.empty() || taken.count(name)) name = "arg" + std::to_string(i);
            taken.insert(name);
            proc.params.push_back(name);
        }

        for (const Rule* r : rules) {
            IrClause clause;
            // Rename rule variables: a head variable takes the name of the
            // parameter slot where it first occurs; later occurrences of the
            // same variable become pre-yield equations on their slots.
            std::map<std::string, std::string> rename;
            for (size_t i = 0; i < r->head.args.size(); ++i) {
                const Term& t = r->head.args[i];
                if (t.is_const()) {
                    clause.entry_consts.push_back({i, t.value});
                } else if (auto it = rename.find(t.name); it != rename.end()) {
                    clause.deferred.push_back({i, it->second});
                } else {
                    rename[t.name] = proc.params[i];
                }
            }
            auto ir_arg = [&](const Term& t) {
                if (t.is_const()) return IrArg::constant(t.value);
                auto it = rename.find(t.name);
                if (it != rename.end()) return IrArg::variable(it->second);
                rename[t.name] = t.name;  // body-only: keep its own name
                clause.fresh.push_back(t.name);
                return IrArg::variable(t.name);
            };

            // Loops in body-literal order; remember which variables each loop
            // prefix grounds so guards can be placed as early as possible.
            std::vector<IrStep> loops;
            std::vector<std::set<std::string>> ground_after(1);
            for (const auto& lit : r->body) {
                if (!lit.positive) continue;
                IrLit il{lit.atom.pred, {}};
                std::set<std::string> g = ground_after.back();
                for (const auto& t : lit.atom.args) {
                    IrArg a = ir_arg(t);
                    if (!a.is_const) g.insert(a.var);
                    il.args.push_back(std::move(a));
                }
                loops.push_back(IrStep{IrStep::Kind::Loop, std::move(il)});
                ground_after.push_back(std::move(g));
            }
            std::vector<std::vector<IrStep>> guards_at(loops.size() + 1);
            for (const auto& lit : r->body) {
                if (lit.positive) continue;
                IrLit il{lit.atom.pred, {}};
                std::set<std::string> needed;
                for (const auto& t : lit.atom.args) {
                    IrArg a = ir_arg(t);
                    if (!a.is_const) needed.insert(a.var);
                    il.args.push_back(std::move(a));
                }
                size_t k = loops.size();
                for (size_t i = 0; i < ground_after.size(); ++i) {
                    bool ok = true;
                    for (const auto& v : needed)
                        if (!ground_after[i].count(v)) ok = false;
                    if (ok) {
                        k = i;
                        break;
                    }
                }
                guards_at[k].push_back(IrStep{IrStep::Kind::Guard, std::move(il)});
            }
            for (size_t k = 0; k <= loops.size(); ++k) {
                for (auto& g : guards_at[k]) clause.steps.push_back(std::move(g));
                if (k < loops.size()) clause.steps.push_back(std::move(loops[k]));
            }
            proc.clauses.push_back(std::move(clause));
        }

        ir.index[proc.pred] = ir.procs.size();
        ir.procs.push_back(std::move(proc));
    }
    return ir;
}

// ---------------------------------------------------------------------------
// Printing

inline std::string print_ir_lit(const IrLit& lit) {
    std::string out = lit.pred + "(";
    for (size_t i = 0; i < lit.args.size(); ++i) {
        if (i) out += ", ";
        out += lit.args[i].is_const ? print_value(lit.args[i].value) : lit.args[i].var;
    }
    return out + ")";
}

inline std::string print_ir(const LoopIR& ir) {
    std::string out;
    bool first_proc = true;
    for (const auto& proc : ir.procs) {
        if (!first_proc) out += "\n";
        first_proc = false;
        out += "enumerator " + proc.pred + "(";
        for (size_t i = 0; i < proc.params.size(); ++i) {
            if (i) out += ", ";
            out += proc.params[i];
        }
        out += "):\n";
        if (proc.clauses.empty()) {
            out += "  stored tuples\n";
            continue;
        }
        for (size_t c = 0; c < proc.clauses.size(); ++c) {
            const IrClause& clause = proc.clauses[c];
            out += "  clause " + std::to_string(c + 1) + ":\n";
            std::string pad = "    ";
            for (const auto& [slot, v] : clause.entry_consts)
                out += pad + "require " + proc.params[slot] + " = " + print_value(v) + "\n";
            for (const auto& f : clause.fresh) out += pad + "fresh " + f + "\n";
            for (const auto& step : clause.steps) {
                out += pad +
                       (step.kind == IrStep::Kind::Loop ? "foreach " : "guard \\+ ") +
                       print_ir_lit(step.lit) + ":\n";
                pad += "  ";
            }
            for (const auto& [slot, var] : clause.deferred)
                out += pad + "require " + proc.params[slot] + " = " + var + "\n";
            out += pad + "yield\n";
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Execution

// A binding cell. Cells are only ever bound to ground values; backtracking
// unbinds them through the trail, never by hand.
struct LogicVar {
    std::optional<Value> value;
};
using Cell = std::shared_ptr<LogicVar>;

class Trail {
  public:
    size_t mark() const { return bound_.size(); }
    void bind(const Cell& c, Value v) {
        c->value = std::move(v);
        bound_.push_back(c);
    }
    void undo(size_t mark) {
        while (bound_.size() > mark) {
            bound_.back()->value.reset();
            bound_.pop_back();
        }
    }
    size_t depth() const { return bound_.size(); }

  private:
    std::vector<Cell> bound_;
};

// A call argument: a caller-side cell or a plain constant.
struct CallArg {
    Cell cell;    // null when constant
    Value value;  // used when cell is null

    bool ground() const { return !cell || cell->value.has_value(); }
    const Value& get() const { return cell ? *cell->value : value; }
};

// The answers derived for one predicate so far; `completed` marks tables that
// are known to hold every derivable tuple (safe to drive negation guards).
struct AnswerTable {
    Relation rows;
    bool completed = false;
};

class IrRunner {
  public:
    IrRunner(const LoopIR& ir, const FactStore& store) : ir_(ir), store_(store) {}

    // All solutions of the query, deduplicated, in first-derivation order.
    // The top-down evaluation re-runs until the memo tables stop growing, so
    // recursive programs converge on the full answer set.
    std::vector<Substitution> query(const Atom& query_atom) {
        if (!ir_.find(query_atom.pred)) throw UnknownPredicate(query_atom.pred);

        std::vector<std::string> var_order;
        std::map<std::string, Cell> cells;
        std::vector<CallArg> args;
        for (const auto& t : query_atom.args) {
            if (t.is_const()) {
                args.push_back(CallArg{nullptr, t.value});
                continue;
            }
            auto it = cells.find(t.name);
            if (it == cells.end()) {
                it = cells.emplace(t.name, make_cell()).first;
                if (!t.is_anon()) var_order.push_back(t.name);
            }
            args.push_back(CallArg{it->second, Value{}});
        }

        while (true) {
            size_t before = total_answers();
            std::vector<Substitution> pass;
            std::set<Tuple> pass_seen;
            std::vector<Signature> path;
            started_.clear();
            size_t m = trail_.mark();
            call_pred(query_atom.pred, args, path, [&] {
                Substitution s;
                Tuple key;
                for (const auto& v : var_order) {
                    s.emplace(v, *cells.at(v)->value);
                    key.push_back(*cells.at(v)->value);
                }
                if (pass_seen.insert(key).second) pass.push_back(std::move(s));
            });
            trail_.undo(m);
            if (total_answers() == before) return pass;
        }
    }

    size_t trail_depth() const { return trail_.depth(); }
    bool all_cells_unbound() const {
        for (const auto& c : cells_)
            if (c->value.has_value()) return false;
        return true;
    }

  private:
    // A call pattern: each slot is the ground value, or for an unbound slot
    // the index of the first slot sharing its cell. Aliased free slots
    // (p(Z, Z)) must not collide with independent ones (p(X, Y)): a descent
    // only records answers matching its own pattern, so two patterns may only
    // share a memo entry when they constrain their answers identically.
    using SigSlot = std::variant<Value, size_t>;
    using Signature = std::pair<std::string, std::vector<SigSlot>>;

    Cell make_cell() {
        cells_.push_back(std::make_shared<LogicVar>());
        return cells_.back();
    }

    size_t total_answers() const {
        size_t n = 0;
        for (const auto& [p, t] : tables_) n += t.rows.size();
        return n;
    }

    Signature signature(const std::string& pred, const std::vector<CallArg>& args) const {
        std::vector<SigSlot> pat;
        pat.reserve(args.size());
        for (size_t i = 0; i < args.size(); ++i) {
            if (args[i].ground()) {
                pat.push_back(args[i].get());
                continue;
            }
            size_t group = i;
            for (size_t j = 0; j < i; ++j)
                if (!args[j].ground() && args[j].cell == args[i].cell) {
                    group = j;
                    break;
                }
            pat.push_back(group);
        }
        return {pred, std::move(pat)};
    }

    bool unify(const CallArg& a, const Value& v) {
        if (!a.cell) return a.value == v;
        if (a.cell->value) return *a.cell->value == v;
        trail_.bind(a.cell, v);
        return true;
    }

    bool unify_row(const std::vector<CallArg>& args, const Tuple& row) {
        if (args.size() != row.size()) return false;
        for (size_t i = 0; i < row.size(); ++i)
            if (!unify(args[i], row[i])) return false;
        return true;
    }

    // Yield every tuple of `rel` (as counted at entry) that unifies with args.
    // Rows are copied out first: recursive answers may grow the vector.
    void scan(const Relation& rel, const std::vector<CallArg>& args,
              const std::function<void()>& on_solution) {
        size_t n = rel.size();
        for (size_t i = 0; i < n; ++i) {
            Tuple row = rel.rows()[i];
            size_t m = trail_.mark();
            if (unify_row(args, row)) on_solution();
            trail_.undo(m);
        }
    }

    void call_pred(const std::string& pred, const std::vector<CallArg>& args,
                   std::vector<Signature>& path, const std::function<void()>& on_solution) {
        const IrProc* proc = ir_.find(pred);
        if (!proc) throw UnknownPredicate(pred);
        AnswerTable& table = tables_[pred];

        Signature sig = signature(pred, args);
        bool pruned = std::find(path.begin(), path.end(), sig) != path.end();
        // Each signature is descended at most once per fixpoint pass; every
        // other occurrence (an ancestor, or a sibling subtree repeating the
        // call) reads the memo table instead. Answers such a read misses are
        // found on a later pass, since passes repeat until nothing grows.
        if (table.completed || pruned || !started_.insert(sig).second) {
            scan(table.rows, args, on_solution);
            return;
        }

        // Record every solution in the memo table as it is produced.
        auto record = [&] {
            Tuple t;
            t.reserve(args.size());
            for (const auto& a : args) t.push_back(a.get());
            table.rows.insert(std::move(t));
            on_solution();
        };

        path.push_back(std::move(sig));
        auto sit = store_.relations().find(pred);
        if (sit != store_.relations().end()) scan(sit->second, args, record);
        for (const IrClause& clause : proc->clauses) {
            size_t m = trail_.mark();
            run_clause(*proc, clause, args, path, record);
            trail_.undo(m);
        }
        path.pop_back();
    }

    void run_clause(const IrProc& proc, const IrClause& clause,
                    const std::vector<CallArg>& args, std::vector<Signature>& path,
                    const std::function<void()>& yield) {
        // Parameter names alias the caller's argument slots; body-only
        // variables get fresh unbound cells for this activation.
        std::map<std::string, Cell> locals;
        for (size_t i = 0; i < proc.params.size(); ++i)
            locals.emplace(proc.params[i], as_cell(args[i]));
        for (const auto& f : clause.fresh) locals.emplace(f, make_cell());

        size_t m = trail_.mark();
        bool ok = true;
        for (const auto& [slot, v] : clause.entry_consts)
            if (!unify(args[slot], v)) {
                ok = false;
                break;
            }
        if (ok) run_steps(clause, 0, args, locals, path, yield);
        trail_.undo(m);
    }

    // Constants passed by the caller surface inside the clause as cells that
    // are born bound; they are not trailed and are not logic variables.
    Cell as_cell(const CallArg& a) {
        if (a.cell) return a.cell;
        Cell c = std::make_shared<LogicVar>();
        c->value = a.value;
        return c;
    }

    void run_steps(const IrClause& clause, size_t step_index,
                   const std::vector<CallArg>& args, std::map<std::string, Cell>& locals,
                   std::vector<Signature>& path, const std::function<void()>& yield) {
        if (step_index == clause.steps.size()) {
            size_t m = trail_.mark();
            bool ok = true;
            for (const auto& [slot, var] : clause.deferred)
                if (!unify(args[slot], *locals.at(var)->value)) {
                    ok = false;
                    break;
                }
            if (ok) yield();
            trail_.undo(m);
            return;
        }
        const IrStep& step = clause.steps[step_index];
        if (step.kind == IrStep::Kind::Guard) {
            if (guard_holds(step.lit, locals))
                run_steps(clause, step_index + 1, args, locals, path, yield);
            return;
        }
        std::vector<CallArg> call_args;
        call_args.reserve(step.lit.args.size());
        for (const auto& a : step.lit.args)
            call_args.push_back(a.is_const ? CallArg{nullptr, a.value}
                                           : CallArg{locals.at(a.var), Value{}});
        call_pred(step.lit.pred, call_args, path,
                  [&] { run_steps(clause, step_index + 1, args, locals, path, yield); });
    }

    // Negation guard: materialize the guarded predicate to a completed table
    // (well-founded because admitted programs are stratified), then test the
    // ground tuple for absence.
    bool guard_holds(const IrLit& lit, const std::map<std::string, Cell>& locals) {
        materialize(lit.pred);
        Tuple t;
        t.reserve(lit.args.size());
        for (const auto& a : lit.args)
            t.push_back(a.is_const ? a.value : *locals.at(a.var)->value);
        return !tables_[lit.pred].rows.contains(t);
    }

    void materialize(const std::string& pred) {
        AnswerTable& table = tables_[pred];
        if (table.completed) return;
        const IrProc* proc = ir_.find(pred);
        if (!proc) throw UnknownPredicate(pred);
        std::vector<CallArg> args;
        for (size_t i = 0; i < proc->params.size(); ++i)
            args.push_back(CallArg{make_cell(), Value{}});
        // This runs in the middle of an enclosing pass; its own passes need a
        // clean once-per-pass set, and the enclosing one continues afterwards.
        std::set<Signature> enclosing = std::move(started_);
        size_t outer = trail_.mark();
        while (true) {
            size_t before = total_answers();
            std::vector<Signature> path;
            started_.clear();
            call_pred(pred, args, path, [] {});
            trail_.undo(outer);
            if (total_answers() == before) break;
        }
        started_ = std::move(enclosing);
        table.completed = true;
    }

    const LoopIR& ir_;
    const FactStore& store_;
    std::map<std::string, AnswerTable> tables_;
    std::set<Signature> started_;  // signatures descended in the current pass
    Trail trail_;
    std::vector<Cell> cells_;
};

// Convenience front door: run `query` against the lowered program over the
// given store and hand back the full deduplicated solution list.
inline std::vector<Substitution> run_ir(const LoopIR& ir, const FactStore& store,
                                        const Atom& query) {
    IrRunner runner(ir, store);
    return runner.query(query);
}

}  // namespace codl
