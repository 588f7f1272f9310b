#include "support.hpp"

#include <algorithm>
#include <functional>
#include <optional>
#include <set>
#include <variant>

#ifndef PLANINFER_FIXTURE_DIR
#error "PLANINFER_FIXTURE_DIR must be defined"
#endif

namespace planinfer::testing {

std::string fixture_path(const std::string& name) { return std::string(PLANINFER_FIXTURE_DIR) + "/" + name; }

std::string read_fixture(const std::string& name) { return io::read_file(fixture_path(name)); }

std::shared_ptr<const pddl::World> load_world(const std::string& domain_file,
                                              const std::string& problem_file) {
  const pddl::Domain domain = pddl::parse_domain(read_fixture(domain_file));
  pddl::Problem problem = pddl::parse_problem(read_fixture(problem_file), domain);
  return std::make_shared<const pddl::World>(domain, std::move(problem));
}

std::shared_ptr<const pddl::World> rescue_world() {
  static const auto world = load_world("rescue.domain.pddl", "rescue.problem.pddl");
  return world;
}

SteppedPlan rescue_plan() {
  return io::plan_from_json(io::parse_json(read_fixture("rescue.plan.json"), "rescue.plan.json"));
}

GroundedPredicate P(const std::string& name, std::vector<std::string> args) {
  return GroundedPredicate::make(name, std::move(args));
}

namespace {

struct Event {
  const pddl::GroundedAction* action;
  bool start;
};

// Runs every admissible event order; returns the common final state or
// nothing when some order fails or two orders disagree.
std::optional<pddl::State> all_interleavings(const pddl::State& from,
                                             const std::vector<const pddl::GroundedAction*>& actions) {
  const std::size_t k = actions.size();
  std::optional<pddl::State> result;
  bool ok = true;
  std::vector<int> phase(k, 0);  // 0 not started, 1 started, 2 ended
  std::function<void(const pddl::State&, std::size_t)> walk = [&](const pddl::State& s, std::size_t done) {
    if (!ok) return;
    if (done == 2 * k) {
      if (!result) {
        result = s;
      } else if (!(*result == s)) {
        ok = false;
      }
      return;
    }
    for (std::size_t i = 0; i < k && ok; ++i) {
      const pddl::GroundedAction& a = *actions[i];
      if (phase[i] == 0) {
        for (auto id : a.pre_positive) {
          if (!s.contains(id)) ok = false;
        }
        for (auto id : a.pre_negative) {
          if (s.contains(id)) ok = false;
        }
        if (!ok) return;
        pddl::State next = s;
        for (auto id : a.deletes) next.erase(id);
        phase[i] = 1;
        walk(next, done + 1);
        phase[i] = 0;
      } else if (phase[i] == 1) {
        pddl::State next = s;
        for (auto id : a.adds) next.insert(id);
        phase[i] = 2;
        walk(next, done + 1);
        phase[i] = 1;
      }
    }
  };
  walk(from, 0);
  if (!ok) return std::nullopt;
  return result;
}

}  // namespace

bool interleaving_oracle(const pddl::World& world, const SteppedPlan& plan, UnknownActionPolicy policy) {
  pddl::State state = world.initial_state();
  for (const auto& step : plan) {
    std::vector<pddl::GroundedAction> known;
    for (const auto& p : step) {
      pddl::Grounding g = world.ground(p);
      if (std::holds_alternative<pddl::UnknownAction>(g)) {
        if (policy == UnknownActionPolicy::Strict) return false;
        continue;
      }
      known.push_back(std::get<pddl::GroundedAction>(std::move(g)));
    }
    std::vector<const pddl::GroundedAction*> ptrs;
    for (const auto& a : known) ptrs.push_back(&a);
    auto next = all_interleavings(state, ptrs);
    if (!next) return false;
    // Joint update: all deletes, then all adds.
    pddl::State joint = state;
    for (const auto& a : known) {
      for (auto id : a.deletes) joint.erase(id);
    }
    for (const auto& a : known) {
      for (auto id : a.adds) joint.insert(id);
    }
    if (!(joint == *next)) return false;
    state = joint;
  }
  return world.goal_holds(state);
}

std::vector<int> dense_rank_oracle(const std::vector<int>& values) {
  std::vector<int> out;
  for (int v : values) {
    std::set<int> smaller;
    for (int w : values) {
      if (w < v) smaller.insert(w);
    }
    out.push_back(static_cast<int>(smaller.size()) + 1);
  }
  return out;
}

std::vector<std::vector<int>> weak_orderings_oracle(std::size_t n) {
  std::set<std::vector<int>> seen;
  std::vector<int> f(n, 1);
  for (;;) {
    seen.insert(dense_rank_oracle(f));
    std::size_t i = n;
    while (i > 0 && f[i - 1] == static_cast<int>(n)) f[--i] = 1;
    if (i == 0) break;
    ++f[i - 1];
  }
  return {seen.begin(), seen.end()};
}

}  // namespace planinfer::testing
