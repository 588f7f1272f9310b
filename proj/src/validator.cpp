#include "planinfer/validator.hpp"

#include <algorithm>
#include <mutex>
#include <variant>

namespace planinfer {

std::string_view to_string(FailureReason reason) {
  switch (reason) {
    case FailureReason::UnknownAction: return "UnknownAction";
    case FailureReason::PreconditionUnsatisfied: return "PreconditionUnsatisfied";
    case FailureReason::MutexConflict: return "MutexConflict";
    case FailureReason::GoalUnsatisfied: return "GoalUnsatisfied";
  }
  return "?";
}

std::string_view to_string(UnknownActionPolicy policy) {
  return policy == UnknownActionPolicy::Strict ? "strict" : "ignore";
}

namespace {

bool intersects(const std::vector<pddl::AtomId>& a, const std::vector<pddl::AtomId>& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      return true;
    }
  }
  return false;
}

bool interferes(const pddl::GroundedAction& a, const pddl::GroundedAction& b) {
  return intersects(a.deletes, b.adds) || intersects(a.deletes, b.pre_positive) ||
         intersects(a.adds, b.pre_negative);
}

std::string missing_precondition(const pddl::World& world, const pddl::State& state,
                                 const pddl::GroundedAction& action) {
  for (auto id : action.pre_positive) {
    if (!state.contains(id)) return world.atom_string(id);
  }
  for (auto id : action.pre_negative) {
    if (state.contains(id)) return "not " + world.atom_string(id);
  }
  return {};
}

ValidationResult fail(std::size_t step, FailureReason reason, std::string detail) {
  return {ValidationFailure{step, reason, std::move(detail)}};
}

ValidationResult run(const pddl::World& world,
                     const std::vector<std::vector<const pddl::Grounding*>>& steps,
                     UnknownActionPolicy policy) {
  pddl::State state = world.initial_state();
  std::vector<const pddl::GroundedAction*> actions;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const std::size_t step = i + 1;
    actions.clear();
    for (const pddl::Grounding* g : steps[i]) {
      if (const auto* unknown = std::get_if<pddl::UnknownAction>(g)) {
        if (policy == UnknownActionPolicy::Strict) {
          return fail(step, FailureReason::UnknownAction,
                      unknown->predicate.to_string() + ": " + unknown->reason);
        }
        continue;
      }
      actions.push_back(&std::get<pddl::GroundedAction>(*g));
    }
    for (const auto* a : actions) {
      if (!pddl::applicable(state, *a)) {
        return fail(step, FailureReason::PreconditionUnsatisfied,
                    a->predicate.to_string() + " requires " + missing_precondition(world, state, *a));
      }
    }
    for (std::size_t x = 0; x < actions.size(); ++x) {
      for (std::size_t y = x + 1; y < actions.size(); ++y) {
        if (mutex(*actions[x], *actions[y])) {
          return fail(step, FailureReason::MutexConflict,
                      actions[x]->predicate.to_string() + " vs " + actions[y]->predicate.to_string());
        }
      }
    }
    state = pddl::apply(state, std::span<const pddl::GroundedAction* const>(actions));
  }
  if (auto goal = world.unsatisfied_goal(state)) {
    return fail(steps.size(), FailureReason::GoalUnsatisfied, "goal " + *goal + " does not hold");
  }
  return {};
}

}  // namespace

bool mutex(const pddl::GroundedAction& a, const pddl::GroundedAction& b) {
  if (&a == &b || a == b) return !a.deletes.empty() || interferes(a, a);
  return interferes(a, b) || interferes(b, a);
}

ValidationResult validate(const pddl::World& world, const SteppedPlan& plan,
                          UnknownActionPolicy policy) {
  std::vector<std::vector<pddl::Grounding>> grounded(plan.size());
  std::vector<std::vector<const pddl::Grounding*>> steps(plan.size());
  for (std::size_t i = 0; i < plan.size(); ++i) {
    for (const auto& pred : plan[i]) grounded[i].push_back(world.ground(pred));
    for (const auto& g : grounded[i]) steps[i].push_back(&g);
  }
  return run(world, steps, policy);
}

ValidationResult validate(const pddl::Domain& domain, const pddl::Problem& problem,
                          const SteppedPlan& plan, UnknownActionPolicy policy) {
  return validate(pddl::World(domain, problem), plan, policy);
}

double prior_log_weight(bool valid, double alpha) { return valid ? alpha : 0.0; }

double prior_log_weight(const ValidationResult& result, double alpha) {
  return prior_log_weight(result.valid(), alpha);
}

CompiledValidator::CompiledValidator(std::shared_ptr<const pddl::World> world,
                                     std::span<const GroundedPredicate> predicates,
                                     UnknownActionPolicy policy)
    : world_(std::move(world)), policy_(policy) {
  groundings_.reserve(predicates.size());
  for (const auto& p : predicates) groundings_.push_back(world_->ground(p));
}

ValidationResult CompiledValidator::validate(const IdPlan& plan) const {
  std::vector<std::vector<const pddl::Grounding*>> steps(plan.size());
  for (std::size_t i = 0; i < plan.size(); ++i) {
    steps[i].reserve(plan[i].size());
    for (PredicateId id : plan[i]) steps[i].push_back(&groundings_.at(id));
  }
  return run(*world_, steps, policy_);
}

std::optional<bool> ValidationMemo::find(const IdPlan& plan) const {
  std::shared_lock lock(mutex_);
  auto it = table_.find(plan);
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

void ValidationMemo::insert(const IdPlan& plan, bool valid) {
  std::unique_lock lock(mutex_);
  if (table_.size() >= capacity_) return;
  table_.emplace(plan, valid);
}

std::size_t ValidationMemo::size() const {
  std::shared_lock lock(mutex_);
  return table_.size();
}

}  // namespace planinfer
