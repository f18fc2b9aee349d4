#pragma once

// Adaptation constructs layered on the context: behavioural variations
// (ordered goal-guarded cases), context-dependent parameters (a stack of
// cases resolved innermost-first at each use), goal iteration, and the
// failure signal raised when no case applies.

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "codl/ast.hpp"
#include "codl/context.hpp"
#include "codl/engine.hpp"

namespace codl {

// Raised when every case's goal is unsatisfiable in the current context.
class InconsistentContext : public std::runtime_error {
  public:
    InconsistentContext(std::vector<Goal> failed, uint64_t at_epoch)
        : std::runtime_error("Context inconsistency detected"),
          failed_goals(std::move(failed)),
          epoch(at_epoch) {}

    std::vector<Goal> failed_goals;
    uint64_t epoch;
};

template <typename T>
struct Case {
    Goal goal;
    std::function<T(const Substitution&)> body;
};

template <typename T>
Case<T> when(Goal goal, std::function<T(const Substitution&)> body) {
    return Case<T>{std::move(goal), std::move(body)};
}

// An ordered, non-empty list of cases; dispatch runs the first whose goal
// has a solution. Values are immutable; operator+ concatenates case lists,
// left operand first.
template <typename T>
class BehaviouralVariation {
  public:
    explicit BehaviouralVariation(std::vector<Case<T>> cases) : cases_(std::move(cases)) {
        if (cases_.empty())
            throw std::logic_error("a behavioural variation needs at least one case");
    }
    BehaviouralVariation(std::initializer_list<Case<T>> cases)
        : BehaviouralVariation(std::vector<Case<T>>(cases)) {}

    const std::vector<Case<T>>& cases() const { return cases_; }

    friend BehaviouralVariation operator+(const BehaviouralVariation& a,
                                          const BehaviouralVariation& b) {
        std::vector<Case<T>> all = a.cases_;
        all.insert(all.end(), b.cases_.begin(), b.cases_.end());
        return BehaviouralVariation(std::move(all));
    }

  private:
    std::vector<Case<T>> cases_;
};

// A context-dependent binding: a stack of cases, innermost (most recently
// declared) last. with_case returns the extended parameter, leaving this one
// usable as the restored outer binding.
template <typename T>
class Parameter {
  public:
    explicit Parameter(Case<T> outermost) : stack_{std::move(outermost)} {}
    explicit Parameter(std::vector<Case<T>> stack) : stack_(std::move(stack)) {
        if (stack_.empty()) throw std::logic_error("a parameter needs at least one case");
    }

    Parameter with_case(Case<T> inner) const {
        std::vector<Case<T>> s = stack_;
        s.push_back(std::move(inner));
        return Parameter(std::move(s));
    }

    const std::vector<Case<T>>& stack() const { return stack_; }

  private:
    std::vector<Case<T>> stack_;
};

namespace detail {

template <typename T, typename Iter>
T first_applicable(Iter begin, Iter end, const Context& c) {
    auto model = c.model();
    for (Iter it = begin; it != end; ++it) {
        auto s = SolutionStream(model, it->goal).next();
        if (s) return it->body(*s);
    }
    std::vector<Goal> failed;
    for (Iter it = begin; it != end; ++it) failed.push_back(it->goal);
    throw InconsistentContext(std::move(failed), c.epoch());
}

}  // namespace detail

// Runs the first case (in list order) whose goal holds, binding its first
// solution; raises InconsistentContext when none does.
template <typename T>
T dispatch(const BehaviouralVariation<T>& bv, const Context& c) {
    return detail::first_applicable<T>(bv.cases().begin(), bv.cases().end(), c);
}

// Resolves a parameter at its use site: goals are solved now, against the
// current context, probing the innermost case first.
template <typename T>
T resolve(const Parameter<T>& p, const Context& c) {
    return detail::first_applicable<T>(p.stack().rbegin(), p.stack().rend(), c);
}

// Runs body once per solution, over the model as of the call. Zero solutions
// means zero invocations, not a failure.
template <typename F>
void for_each(const Context& c, Goal g, F&& body) {
    SolutionStream stream = c.enumerate(std::move(g));
    while (auto s = stream.next()) body(*s);
}

}  // namespace codl
