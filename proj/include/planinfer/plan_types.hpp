#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "planinfer/pddl.hpp"

namespace planinfer {

using pddl::GroundedPredicate;

// Ordered steps of parallel actions, each step a non-empty set.
using SteppedPlan = std::vector<std::vector<GroundedPredicate>>;

// Index of a predicate in a PredicateUniverse.
using PredicateId = std::uint32_t;

// A SteppedPlan over universe ids. Canonical form: no empty steps, ids sorted
// within each step.
using IdPlan = std::vector<std::vector<PredicateId>>;

struct IdPlanHash {
  std::size_t operator()(const IdPlan& plan) const noexcept {
    std::size_t h = 0x9e3779b97f4a7c15ull;
    for (const auto& step : plan) {
      h = (h ^ 0xff51afd7ed558ccdull) * 0x100000001b3ull;
      for (PredicateId id : step) h = (h ^ (id + 1)) * 0x100000001b3ull;
    }
    return h;
  }
};

}  // namespace planinfer
