#pragma once

// Bottom-up evaluation of safe, stratified programs and conjunctive goal
// answering. The model is computed semi-naively per stratum; goals are
// answered by a resumable nested-loop join over per-predicate insertion
// order, so solution streams are deterministic.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "codl/ast.hpp"
#include "codl/checks.hpp"

namespace codl {

using Tuple = std::vector<Value>;

struct TupleHash {
    size_t operator()(const Tuple& t) const {
        size_t h = t.size();
        for (const auto& v : t) {
            size_t e = v.index() == 0 ? std::hash<int64_t>{}(std::get<int64_t>(v))
                                      : std::hash<std::string>{}(std::get<std::string>(v));
            h ^= e + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        }
        return h;
    }
};

// A set of ground tuples that remembers insertion order.
class Relation {
  public:
    bool insert(Tuple t) {
        if (!index_.insert(t).second) return false;
        rows_.push_back(std::move(t));
        return true;
    }
    bool erase(const Tuple& t) {
        if (index_.erase(t) == 0) return false;
        for (auto it = rows_.begin(); it != rows_.end(); ++it)
            if (*it == t) {
                rows_.erase(it);
                break;
            }
        return true;
    }
    bool contains(const Tuple& t) const { return index_.count(t) != 0; }
    size_t size() const { return rows_.size(); }
    bool empty() const { return rows_.empty(); }
    const std::vector<Tuple>& rows() const { return rows_; }

  private:
    std::vector<Tuple> rows_;
    std::unordered_set<Tuple, TupleHash> index_;
};

// Extensional facts, per predicate, in insertion order.
class FactStore {
  public:
    bool insert(const std::string& pred, Tuple t) { return rels_[pred].insert(std::move(t)); }
    bool erase(const std::string& pred, const Tuple& t) {
        auto it = rels_.find(pred);
        return it != rels_.end() && it->second.erase(t);
    }
    bool contains(const std::string& pred, const Tuple& t) const {
        auto it = rels_.find(pred);
        return it != rels_.end() && it->second.contains(t);
    }
    const std::map<std::string, Relation>& relations() const { return rels_; }
    size_t total() const {
        size_t n = 0;
        for (const auto& [p, r] : rels_) n += r.size();
        return n;
    }

  private:
    std::map<std::string, Relation> rels_;
};

// The computed model: every stored fact plus everything the rules derive.
// The nullary predicate True holds in every model.
class Model {
  public:
    Model() { rels_[std::string(kTruePredicate)].insert(Tuple{}); }

    Relation& rel(const std::string& pred) { return rels_[pred]; }
    const Relation& rel(const std::string& pred) const {
        auto it = rels_.find(pred);
        return it == rels_.end() ? empty_ : it->second;
    }
    bool holds(const std::string& pred, const Tuple& t) const { return rel(pred).contains(t); }
    bool holds(const Atom& ground_atom) const {
        Tuple t;
        t.reserve(ground_atom.args.size());
        for (const auto& a : ground_atom.args) t.push_back(a.value);
        return holds(ground_atom.pred, t);
    }
    const std::map<std::string, Relation>& relations() const { return rels_; }
    size_t total() const {
        size_t n = 0;
        for (const auto& [p, r] : rels_) n += r.size();
        return n;
    }
    bool same_tuples(const Model& other) const {
        auto tuples = [](const Model& m) {
            std::set<std::pair<std::string, Tuple>> s;
            for (const auto& [p, r] : m.rels_)
                for (const auto& row : r.rows()) s.insert({p, row});
            return s;
        };
        return tuples(*this) == tuples(other);
    }

  private:
    std::map<std::string, Relation> rels_;
    inline static const Relation empty_{};
};

using Bindings = std::map<std::string, Value>;

// A substitution maps each named goal variable to a value. Anonymous
// variables never appear in the domain.
using Substitution = std::map<std::string, Value>;

inline std::string print_substitution(const Substitution& s, const std::vector<std::string>& order) {
    if (order.empty()) return "{}";
    std::string out = "{";
    bool first = true;
    for (const auto& v : order) {
        auto it = s.find(v);
        if (it == s.end()) continue;
        if (!first) out += ", ";
        first = false;
        out += v + " = " + print_value(it->second);
    }
    out += "}";
    return out;
}

namespace detail {

// Try to match an atom's argument pattern against a ground row, extending b.
inline bool match(const Atom& atom, const Tuple& row, Bindings& b) {
    if (atom.args.size() != row.size()) return false;
    for (size_t i = 0; i < row.size(); ++i) {
        const Term& t = atom.args[i];
        if (t.is_const()) {
            if (t.value != row[i]) return false;
        } else {
            auto [it, inserted] = b.try_emplace(t.name, row[i]);
            if (!inserted && it->second != row[i]) return false;
        }
    }
    return true;
}

inline Tuple instantiate(const Atom& atom, const Bindings& b) {
    Tuple t;
    t.reserve(atom.args.size());
    for (const auto& a : atom.args)
        t.push_back(a.is_const() ? a.value : b.at(a.name));
    return t;
}

// Split a literal sequence into positive loops (kept in order) and negated
// guards, each attached to the earliest loop prefix that binds its variables.
struct JoinPlan {
    std::vector<const Literal*> loops;
    std::vector<std::vector<const Atom*>> guards;  // guards[k]: check once k loops are bound
};

inline JoinPlan plan_join(const std::vector<Literal>& body) {
    JoinPlan plan;
    for (const auto& lit : body)
        if (lit.positive) plan.loops.push_back(&lit);
    plan.guards.resize(plan.loops.size() + 1);

    std::vector<std::set<std::string>> bound(plan.loops.size() + 1);
    for (size_t k = 0; k < plan.loops.size(); ++k) {
        bound[k + 1] = bound[k];
        for (const auto& t : plan.loops[k]->atom.args)
            if (t.is_var()) bound[k + 1].insert(t.name);
    }
    for (const auto& lit : body) {
        if (lit.positive) continue;
        size_t k = 0;
        for (; k <= plan.loops.size(); ++k) {
            bool ok = true;
            for (const auto& t : lit.atom.args)
                if (t.is_var() && !bound[k].count(t.name)) ok = false;
            if (ok) break;
        }
        // Safety guarantees k <= loops.size(); clamp defensively anyway.
        plan.guards[std::min(k, plan.loops.size())].push_back(&lit.atom);
    }
    return plan;
}

inline bool guards_pass(const std::vector<const Atom*>& guards, const Model& m, const Bindings& b) {
    for (const Atom* g : guards)
        if (m.holds(g->pred, instantiate(*g, b))) return false;
    return true;
}

// Enumerate all bindings satisfying the plan, optionally pinning one loop to
// a delta relation. Invokes sink for each complete binding.
inline void join(const JoinPlan& plan, const Model& m,
                 const Relation* delta, size_t delta_pos,
                 const std::function<void(const Bindings&)>& sink) {
    Bindings root;
    if (!guards_pass(plan.guards[0], m, root)) return;
    std::vector<Bindings> env(plan.loops.size() + 1);
    env[0] = std::move(root);

    std::function<void(size_t)> descend = [&](size_t k) {
        if (k == plan.loops.size()) {
            sink(env[k]);
            return;
        }
        const Atom& atom = plan.loops[k]->atom;
        const Relation& rel = (delta && k == delta_pos) ? *delta : m.rel(atom.pred);
        // Index-based with a row copy: the sink may insert into the very
        // relation being scanned, and growth must not invalidate the walk.
        for (size_t i = 0; i < rel.rows().size(); ++i) {
            Tuple row = rel.rows()[i];
            Bindings b = env[k];
            if (!match(atom, row, b)) continue;
            if (!guards_pass(plan.guards[k + 1], m, b)) continue;
            env[k + 1] = std::move(b);
            descend(k + 1);
        }
    };
    descend(0);
}

}  // namespace detail

// Semi-naive bottom-up fixpoint, one stratum at a time. Negative literals are
// only ever evaluated against relations whose stratum has already completed.
inline Model evaluate(const Program& p, const Stratification& strata, const FactStore& facts) {
    Model m;
    for (const auto& [pred, rel] : facts.relations())
        for (const auto& row : rel.rows()) m.rel(pred).insert(row);

    struct PlannedRule {
        const Rule* rule;
        detail::JoinPlan plan;
        std::vector<size_t> delta_positions;  // loop indices whose predicate is in this stratum
    };

    int max_s = strata.max_stratum();
    for (int s = 0; s <= max_s; ++s) {
        std::vector<PlannedRule> planned;
        for (const auto& rule : p.rules) {
            auto it = strata.stratum.find(rule.head.pred);
            if (it == strata.stratum.end() || it->second != s) continue;
            PlannedRule pr{&rule, detail::plan_join(rule.body), {}};
            for (size_t k = 0; k < pr.plan.loops.size(); ++k) {
                auto ps = strata.stratum.find(pr.plan.loops[k]->atom.pred);
                if (ps != strata.stratum.end() && ps->second == s) pr.delta_positions.push_back(k);
            }
            planned.push_back(std::move(pr));
        }
        if (planned.empty()) continue;

        std::map<std::string, Relation> delta;
        auto emit = [&](const PlannedRule& pr, const Bindings& b,
                        std::map<std::string, Relation>& next) {
            Tuple head = detail::instantiate(pr.rule->head, b);
            if (m.rel(pr.rule->head.pred).insert(head)) next[pr.rule->head.pred].insert(std::move(head));
        };

        // Naive first round over the full model.
        for (const auto& pr : planned)
            detail::join(pr.plan, m, nullptr, 0, [&](const Bindings& b) { emit(pr, b, delta); });

        // Delta rounds until nothing new appears.
        while (true) {
            std::map<std::string, Relation> next;
            for (const auto& pr : planned)
                for (size_t k : pr.delta_positions) {
                    auto dit = delta.find(pr.plan.loops[k]->atom.pred);
                    if (dit == delta.end() || dit->second.empty()) continue;
                    detail::join(pr.plan, m, &dit->second, k,
                                 [&](const Bindings& b) { emit(pr, b, next); });
                }
            bool grew = false;
            for (const auto& [pred, rel] : next)
                if (!rel.empty()) grew = true;
            if (!grew) break;
            delta = std::move(next);
        }
    }
    return m;
}

// A goal whose negated literals use variables never bound positively cannot
// be answered; callers must pre-check or catch this.
struct UnsafeGoal : std::runtime_error {
    std::vector<std::string> variables;
    explicit UnsafeGoal(std::vector<std::string> vars)
        : std::runtime_error(describe(vars)), variables(std::move(vars)) {}

    static std::string describe(const std::vector<std::string>& vars) {
        std::string msg = "unsafe goal: variable";
        if (vars.size() > 1) msg += "s";
        for (size_t i = 0; i < vars.size(); ++i) msg += (i ? ", " : " ") + vars[i];
        msg += " occur";
        if (vars.size() == 1) msg += "s";
        msg += " only under negation";
        return msg;
    }
};

// Empty result means the goal is safe.
inline std::vector<std::string> check_goal_safety(const Goal& g) {
    std::set<std::string> positive;
    for (const auto& lit : g.literals)
        if (lit.positive)
            for (const auto& t : lit.atom.args)
                if (t.is_var()) positive.insert(t.name);
    std::vector<std::string> bad;
    std::set<std::string> seen;
    for (const auto& lit : g.literals)
        if (!lit.positive)
            for (const auto& t : lit.atom.args)
                if (t.is_var() && !positive.count(t.name) && seen.insert(t.name).second)
                    bad.push_back(t.name);
    return bad;
}

// Resumable enumeration of a goal's solutions over one fixed model snapshot.
// Yields each distinct substitution once, in nested-loop order: leftmost
// positive literal outermost, rows in per-predicate insertion order.
class SolutionStream {
  public:
    SolutionStream(std::shared_ptr<const Model> model, Goal goal)
        : model_(std::move(model)), goal_(std::move(goal)) {
        auto bad = check_goal_safety(goal_);
        if (!bad.empty()) throw UnsafeGoal(std::move(bad));
        plan_ = detail::plan_join(goal_.literals);
        vars_ = goal_.vars();
        size_t n = plan_.loops.size();
        pos_.assign(n, 0);
        env_.assign(n + 1, Bindings{});
    }

    // The join plan points into goal_; moving keeps literal storage alive,
    // copying would not.
    SolutionStream(const SolutionStream&) = delete;
    SolutionStream& operator=(const SolutionStream&) = delete;
    SolutionStream(SolutionStream&&) = default;
    SolutionStream& operator=(SolutionStream&&) = default;

    const std::vector<std::string>& variables() const { return vars_; }

    std::optional<Substitution> next() {
        size_t n = plan_.loops.size();
        if (exhausted_) return std::nullopt;
        if (!started_) {
            started_ = true;
            if (!detail::guards_pass(plan_.guards[0], *model_, env_[0])) {
                exhausted_ = true;
                return std::nullopt;
            }
            if (n == 0) {
                exhausted_ = true;
                return Substitution{};
            }
            depth_ = 0;
        } else {
            depth_ = n - 1;
            ++pos_[depth_];
        }
        while (true) {
            if (depth_ == n) {
                Substitution s = project(env_[n]);
                if (seen_.insert(key_of(s)).second) return s;
                depth_ = n - 1;
                ++pos_[depth_];
                continue;
            }
            const Atom& atom = plan_.loops[depth_]->atom;
            const auto& rows = model_->rel(atom.pred).rows();
            bool descended = false;
            while (pos_[depth_] < rows.size()) {
                Bindings b = env_[depth_];
                if (detail::match(atom, rows[pos_[depth_]], b) &&
                    detail::guards_pass(plan_.guards[depth_ + 1], *model_, b)) {
                    env_[depth_ + 1] = std::move(b);
                    ++depth_;
                    if (depth_ < n) pos_[depth_] = 0;
                    descended = true;
                    break;
                }
                ++pos_[depth_];
            }
            if (descended) continue;
            if (depth_ == 0) {
                exhausted_ = true;
                return std::nullopt;
            }
            --depth_;
            ++pos_[depth_];
        }
    }

    std::vector<Substitution> drain() {
        std::vector<Substitution> all;
        while (auto s = next()) all.push_back(std::move(*s));
        return all;
    }

  private:
    Substitution project(const Bindings& b) const {
        Substitution s;
        for (const auto& v : vars_) s.emplace(v, b.at(v));
        return s;
    }
    Tuple key_of(const Substitution& s) const {
        Tuple t;
        t.reserve(vars_.size());
        for (const auto& v : vars_) t.push_back(s.at(v));
        return t;
    }

    std::shared_ptr<const Model> model_;
    Goal goal_;
    detail::JoinPlan plan_;
    std::vector<std::string> vars_;
    std::vector<size_t> pos_;
    std::vector<Bindings> env_;
    size_t depth_ = 0;
    bool started_ = false;
    bool exhausted_ = false;
    std::unordered_set<Tuple, TupleHash> seen_;
};

inline SolutionStream enumerate(std::shared_ptr<const Model> m, Goal g) {
    return SolutionStream(std::move(m), std::move(g));
}

// Caller keeps the model alive for the stream's lifetime.
inline SolutionStream enumerate(const Model& m, Goal g) {
    return SolutionStream(std::shared_ptr<const Model>(&m, [](const Model*) {}), std::move(g));
}

inline std::optional<Substitution> solve(const Model& m, Goal g) {
    return enumerate(m, std::move(g)).next();
}

inline std::vector<Substitution> all_solutions(const Model& m, Goal g) {
    return enumerate(m, std::move(g)).drain();
}

}  // namespace codl
