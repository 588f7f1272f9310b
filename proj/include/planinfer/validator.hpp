#pragma once

// Stepped parallel plan validation (the role VAL plays for the inference
// prior). Steps are simulated from the initial state; actions inside a step
// must be applicable in the pre-step state and pairwise non-mutex, and the
// goal must hold after the last step.

#include <cstddef>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>

#include "planinfer/pddl.hpp"
#include "planinfer/plan_types.hpp"

namespace planinfer {

enum class UnknownActionPolicy { Strict, Ignore };

enum class FailureReason { UnknownAction, PreconditionUnsatisfied, MutexConflict, GoalUnsatisfied };

std::string_view to_string(FailureReason reason);
std::string_view to_string(UnknownActionPolicy policy);

struct ValidationFailure {
  // 1-based step; for GoalUnsatisfied this is the number of steps (0 for an
  // empty plan).
  std::size_t step = 0;
  FailureReason reason = FailureReason::GoalUnsatisfied;
  std::string detail;

  bool operator==(const ValidationFailure&) const = default;
};

struct ValidationResult {
  std::optional<ValidationFailure> failure;

  bool valid() const { return !failure.has_value(); }

  bool operator==(const ValidationResult&) const = default;
};

// Graphplan-style interference: one action deletes what the other adds or
// requires, or adds what the other requires to be false. An action with
// deletes is mutex with itself.
bool mutex(const pddl::GroundedAction& a, const pddl::GroundedAction& b);

ValidationResult validate(const pddl::World& world, const SteppedPlan& plan,
                          UnknownActionPolicy policy = UnknownActionPolicy::Strict);

ValidationResult validate(const pddl::Domain& domain, const pddl::Problem& problem,
                          const SteppedPlan& plan,
                          UnknownActionPolicy policy = UnknownActionPolicy::Strict);

// Log of the unnormalized plan prior: alpha for a valid plan, 0 otherwise.
double prior_log_weight(const ValidationResult& result, double alpha);
double prior_log_weight(bool valid, double alpha);

// Validator over a fixed predicate list, grounded once. Plans refer to the
// predicates by index.
class CompiledValidator {
 public:
  CompiledValidator(std::shared_ptr<const pddl::World> world,
                    std::span<const GroundedPredicate> predicates, UnknownActionPolicy policy);

  ValidationResult validate(const IdPlan& plan) const;

  const pddl::World& world() const { return *world_; }
  const pddl::Grounding& grounding(PredicateId id) const { return groundings_.at(id); }

 private:
  std::shared_ptr<const pddl::World> world_;
  std::vector<pddl::Grounding> groundings_;
  UnknownActionPolicy policy_;
};

// Validity keyed by canonical IdPlan. Safe for concurrent readers and
// writers; stops inserting once `capacity` entries are stored.
class ValidationMemo {
 public:
  explicit ValidationMemo(std::size_t capacity = std::size_t{1} << 20) : capacity_(capacity) {}

  std::optional<bool> find(const IdPlan& plan) const;
  void insert(const IdPlan& plan, bool valid);
  std::size_t size() const;

 private:
  std::size_t capacity_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<IdPlan, bool, IdPlanHash> table_;
};

}  // namespace planinfer
