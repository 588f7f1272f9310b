#pragma once

// Generative model of planning dialog. A latent plan (ordered tuple of sets of
// grounded predicates) emits utterances: each mention picks a plan step with
// probability proportional to the step's size, emits a predicate from that
// step (or, with probability 1 - w_p, uniformly from every predicate mentioned
// in the session), and the utterance reports only the relative order of the
// picked steps, which is corrupted with a flat weight.
//
// All probabilities are in log space. Slot indices are 0-based in the API;
// observed relative ranks are 1-based dense ranks as they appear in dialog.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <limits>
#include <optional>
#include <ranges>
#include <span>
#include <unordered_map>
#include <vector>

#include "planinfer/errors.hpp"
#include "planinfer/plan_types.hpp"
#include "planinfer/validator.hpp"

namespace planinfer {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)) without overflow.
inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

double log_sum_exp(std::span<const double> values);

struct Utterance {
  struct Mention {
    GroundedPredicate predicate;
    int rank;  // 1-based group position
  };

  // Ordered groups; predicates within a group are said to happen in parallel.
  std::vector<std::vector<GroundedPredicate>> groups;

  std::vector<Mention> flattened() const;

  bool operator==(const Utterance&) const = default;
};

struct Session {
  std::vector<Utterance> utterances;

  // Throws EmptySession, or SchemaError for an empty utterance or group.
  void check() const;

  bool operator==(const Session&) const = default;
};

// Distinct predicates, in order of first mention when built from a session.
class PredicateUniverse {
 public:
  PredicateUniverse() = default;
  // Throws UniverseMismatch on duplicates.
  explicit PredicateUniverse(std::vector<GroundedPredicate> predicates);

  static PredicateUniverse from_session(const Session& session);

  std::size_t size() const { return predicates_.size(); }
  bool empty() const { return predicates_.empty(); }
  const GroundedPredicate& operator[](PredicateId id) const { return predicates_.at(id); }
  std::optional<PredicateId> find(const GroundedPredicate& predicate) const;
  bool contains(const GroundedPredicate& predicate) const { return find(predicate).has_value(); }
  const std::vector<GroundedPredicate>& predicates() const { return predicates_; }

  SteppedPlan to_stepped(const IdPlan& plan) const;
  // Canonical IdPlan; empty steps dropped. Throws UniverseMismatch.
  IdPlan to_ids(const SteppedPlan& plan) const;

 private:
  std::vector<GroundedPredicate> predicates_;
  std::unordered_map<GroundedPredicate, PredicateId> index_;
};

// One utterance restated over universe ids, flattened in group order.
struct Observation {
  std::vector<PredicateId> predicates;
  std::vector<int> ranks;

  std::size_t size() const { return predicates.size(); }
};

using ObservedSession = std::vector<Observation>;

ObservedSession observe(const Session& session, const PredicateUniverse& universe);

struct Hyperparams {
  double alpha = 10.0;
  double beta = 5.0;
  double w_p = 0.8;

  void check() const;
};

// Fixed-capacity plan: `slot_count` ordered slots holding disjoint, possibly
// empty sets of predicate ids; each id is placed at most once.
class StepPlan {
 public:
  StepPlan() = default;
  StepPlan(std::size_t slot_count, std::size_t universe_size);

  // Steps of `plan` go to slots 0..k-1.
  static StepPlan from_ids(const IdPlan& plan, std::size_t slot_count, std::size_t universe_size);

  std::size_t slot_count() const { return slots_.size(); }
  std::size_t universe_size() const { return where_.size(); }
  std::size_t placed_count() const { return placed_; }
  std::size_t nonempty_slot_count() const { return nonempty_; }

  std::span<const PredicateId> slot(std::size_t j) const { return slots_.at(j); }
  std::size_t slot_size(std::size_t j) const { return slots_[j].size(); }
  std::optional<std::size_t> slot_of(PredicateId id) const;
  bool is_placed(PredicateId id) const { return where_.at(id) >= 0; }
  bool in_slot(PredicateId id, std::size_t j) const {
    return where_[id] == static_cast<std::int32_t>(j);
  }

  void place(PredicateId id, std::size_t slot);
  void remove(PredicateId id);
  void move_to(PredicateId id, std::size_t slot);
  void swap_slots(std::size_t i, std::size_t j);

  // Non-empty slots in order, ids sorted within each step.
  IdPlan compact() const;

  bool invariants_hold() const;

  bool operator==(const StepPlan& other) const;

 private:
  std::vector<std::vector<PredicateId>> slots_;
  std::vector<std::int32_t> where_;
  std::size_t placed_ = 0;
  std::size_t nonempty_ = 0;
};

// Per utterance, the 0-based slot picked by each mention.
using StepAssignment = std::vector<std::vector<std::size_t>>;

// Dense ranking: smallest distinct value -> 1, ties share a rank.
template <typename Range>
  requires std::integral<std::ranges::range_value_t<Range>>
std::vector<int> relative_order(const Range& values) {
  using T = std::ranges::range_value_t<Range>;
  std::vector<T> distinct(std::ranges::begin(values), std::ranges::end(values));
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<int> ranks;
  for (const T& v : values) {
    ranks.push_back(static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), v) -
                                     distinct.begin()) + 1);
  }
  return ranks;
}

// Number of weak orderings of n items (Fubini numbers): 1, 1, 3, 13, 75, ...
std::uint64_t weak_ordering_count(std::size_t n);

// log |slot| / placed; -inf for an empty slot. Throws EmptyPlan.
double step_pick_logprob(const StepPlan& plan, std::size_t slot);

// beta when `observed` equals relative_order(slots), else 0. Throws LengthMismatch.
double order_log_weight(std::span<const int> observed, std::span<const std::size_t> slots,
                        double beta);

// log(e^beta - 1 + W(n)), the normalizer of the order weights for n mentions.
double order_log_normalizer(std::size_t n, double beta);

// log(w_p [id in slot]/|slot| + (1 - w_p)/universe_size).
double emission_logprob(const StepPlan& plan, std::size_t universe_size, std::size_t slot,
                        PredicateId id, double w_p);

// Unnormalized log p(plan, s, p, s'): prior + step picks + emissions + order
// weights. -inf when an assignment points at an empty slot.
double joint_log_posterior(const StepPlan& plan, const StepAssignment& assignments,
                           const ObservedSession& session, std::size_t universe_size,
                           const Hyperparams& hp, bool plan_valid);
double joint_log_posterior(const StepPlan& plan, const StepAssignment& assignments,
                           const ObservedSession& session, std::size_t universe_size,
                           const Hyperparams& hp, const ValidationResult& validation);

// log sum over s_t of p(s_t, p_t, s'_t | plan) for one utterance, computed in
// O(n K) by splitting the order weight into a flat part and the consistent
// part. With `normalized` the order normalizer is included.
double utterance_log_likelihood(const IdPlan& plan, const Observation& observation,
                                std::size_t universe_size, const Hyperparams& hp,
                                bool normalized = false);

// Unnormalized log p(plan | session) with the assignments summed out.
double marginal_log_posterior(const IdPlan& plan, const ObservedSession& session,
                              std::size_t universe_size, const Hyperparams& hp, bool plan_valid);

}  // namespace planinfer
