#pragma once

// Fixture loading and brute-force oracles shared by the unit tests and the
// acceptance runner. The oracles deliberately avoid the library's own
// mutex, ranking and likelihood code.

#include <memory>
#include <string>
#include <vector>

#include "planinfer/io.hpp"
#include "planinfer/pddl.hpp"
#include "planinfer/validator.hpp"

namespace planinfer::testing {

std::string fixture_path(const std::string& name);
std::string read_fixture(const std::string& name);

std::shared_ptr<const pddl::World> load_world(const std::string& domain_file,
                                              const std::string& problem_file);
std::shared_ptr<const pddl::World> rescue_world();
SteppedPlan rescue_plan();

GroundedPredicate P(const std::string& name, std::vector<std::string> args);

// Each action is split into a start event (preconditions checked, deletes
// applied) and an end event (adds applied). A step passes iff every
// interleaving of its 2k events that keeps each start before its end is
// executable and ends in one common state, the state of the joint update.
// Unknown actions follow `policy` exactly as the validator's contract says.
bool interleaving_oracle(const pddl::World& world, const SteppedPlan& plan,
                         UnknownActionPolicy policy = UnknownActionPolicy::Strict);

// Dense rank of each value: one plus the number of distinct smaller values.
std::vector<int> dense_rank_oracle(const std::vector<int>& values);

// All rank functions {1..n}^n mapped through dense_rank_oracle, deduplicated.
std::vector<std::vector<int>> weak_orderings_oracle(std::size_t n);

}  // namespace planinfer::testing
