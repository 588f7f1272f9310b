#include "planinfer/model.hpp"

#include <numeric>
#include <string>

namespace planinfer {

double log_sum_exp(std::span<const double> values) {
  double max = kNegInf;
  for (double v : values) max = std::max(max, v);
  if (max == kNegInf) return kNegInf;
  if (max == std::numeric_limits<double>::infinity()) return max;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - max);
  return max + std::log(sum);
}

// ---------------------------------------------------------------------------
// Sessions and universes
// ---------------------------------------------------------------------------

std::vector<Utterance::Mention> Utterance::flattened() const {
  std::vector<Mention> out;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (const auto& p : groups[g]) out.push_back({p, static_cast<int>(g + 1)});
  }
  return out;
}

void Session::check() const {
  if (utterances.empty()) throw EmptySession();
  for (std::size_t t = 0; t < utterances.size(); ++t) {
    if (utterances[t].groups.empty()) {
      throw SchemaError("utterance " + std::to_string(t + 1) + " has no groups");
    }
    for (const auto& g : utterances[t].groups) {
      if (g.empty()) throw SchemaError("utterance " + std::to_string(t + 1) + " has an empty group");
    }
  }
}

PredicateUniverse::PredicateUniverse(std::vector<GroundedPredicate> predicates)
    : predicates_(std::move(predicates)) {
  for (std::size_t i = 0; i < predicates_.size(); ++i) {
    if (!index_.emplace(predicates_[i], static_cast<PredicateId>(i)).second) {
      throw UniverseMismatch("duplicate predicate " + predicates_[i].to_string());
    }
  }
}

PredicateUniverse PredicateUniverse::from_session(const Session& session) {
  std::vector<GroundedPredicate> seen;
  std::unordered_map<GroundedPredicate, bool> known;
  for (const auto& u : session.utterances) {
    for (const auto& g : u.groups) {
      for (const auto& p : g) {
        if (known.emplace(p, true).second) seen.push_back(p);
      }
    }
  }
  return PredicateUniverse(std::move(seen));
}

std::optional<PredicateId> PredicateUniverse::find(const GroundedPredicate& predicate) const {
  auto it = index_.find(predicate);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

SteppedPlan PredicateUniverse::to_stepped(const IdPlan& plan) const {
  SteppedPlan out;
  for (const auto& step : plan) {
    auto& s = out.emplace_back();
    for (PredicateId id : step) s.push_back(predicates_.at(id));
  }
  return out;
}

IdPlan PredicateUniverse::to_ids(const SteppedPlan& plan) const {
  IdPlan out;
  for (const auto& step : plan) {
    if (step.empty()) continue;
    auto& s = out.emplace_back();
    for (const auto& p : step) {
      auto id = find(p);
      if (!id) throw UniverseMismatch(p.to_string() + " is not in the predicate universe");
      s.push_back(*id);
    }
    std::sort(s.begin(), s.end());
  }
  return out;
}

ObservedSession observe(const Session& session, const PredicateUniverse& universe) {
  ObservedSession out;
  out.reserve(session.utterances.size());
  for (const auto& u : session.utterances) {
    Observation obs;
    for (const auto& m : u.flattened()) {
      auto id = universe.find(m.predicate);
      if (!id) throw UniverseMismatch(m.predicate.to_string() + " is not in the predicate universe");
      obs.predicates.push_back(*id);
      obs.ranks.push_back(m.rank);
    }
    out.push_back(std::move(obs));
  }
  return out;
}

void Hyperparams::check() const {
  if (!(alpha >= 0.0)) throw Error("alpha must be non-negative");
  if (!(beta >= 0.0)) throw Error("beta must be non-negative");
  if (!(w_p >= 0.0 && w_p <= 1.0)) throw Error("w_p must lie in [0, 1]");
}

// ---------------------------------------------------------------------------
// StepPlan
// ---------------------------------------------------------------------------

StepPlan::StepPlan(std::size_t slot_count, std::size_t universe_size)
    : slots_(slot_count), where_(universe_size, -1) {}

StepPlan StepPlan::from_ids(const IdPlan& plan, std::size_t slot_count, std::size_t universe_size) {
  if (plan.size() > slot_count) throw Error("plan has more steps than slots");
  StepPlan out(slot_count, universe_size);
  for (std::size_t j = 0; j < plan.size(); ++j) {
    for (PredicateId id : plan[j]) out.place(id, j);
  }
  return out;
}

std::optional<std::size_t> StepPlan::slot_of(PredicateId id) const {
  const auto w = where_.at(id);
  if (w < 0) return std::nullopt;
  return static_cast<std::size_t>(w);
}

void StepPlan::place(PredicateId id, std::size_t slot) {
  if (where_.at(id) >= 0) throw Error("predicate already placed");
  auto& s = slots_.at(slot);
  if (s.empty()) ++nonempty_;
  s.push_back(id);
  where_[id] = static_cast<std::int32_t>(slot);
  ++placed_;
}

void StepPlan::remove(PredicateId id) {
  const auto w = where_.at(id);
  if (w < 0) throw Error("predicate not placed");
  auto& s = slots_[static_cast<std::size_t>(w)];
  auto it = std::find(s.begin(), s.end(), id);
  *it = s.back();
  s.pop_back();
  if (s.empty()) --nonempty_;
  where_[id] = -1;
  --placed_;
}

void StepPlan::move_to(PredicateId id, std::size_t slot) {
  remove(id);
  place(id, slot);
}

void StepPlan::swap_slots(std::size_t i, std::size_t j) {
  if (i == j) return;
  std::swap(slots_.at(i), slots_.at(j));
  for (PredicateId id : slots_[i]) where_[id] = static_cast<std::int32_t>(i);
  for (PredicateId id : slots_[j]) where_[id] = static_cast<std::int32_t>(j);
}

IdPlan StepPlan::compact() const {
  IdPlan out;
  out.reserve(nonempty_);
  for (const auto& s : slots_) {
    if (s.empty()) continue;
    out.push_back(s);
    std::sort(out.back().begin(), out.back().end());
  }
  return out;
}

bool StepPlan::invariants_hold() const {
  std::size_t placed = 0;
  std::size_t nonempty = 0;
  std::vector<int> seen(where_.size(), 0);
  for (std::size_t j = 0; j < slots_.size(); ++j) {
    if (!slots_[j].empty()) ++nonempty;
    for (PredicateId id : slots_[j]) {
      if (id >= where_.size() || seen[id]++ || where_[id] != static_cast<std::int32_t>(j)) return false;
      ++placed;
    }
  }
  for (std::size_t id = 0; id < where_.size(); ++id) {
    if (where_[id] >= 0 && !seen[id]) return false;
  }
  return placed == placed_ && nonempty == nonempty_;
}

bool StepPlan::operator==(const StepPlan& other) const {
  if (slots_.size() != other.slots_.size() || where_ != other.where_) return false;
  return placed_ == other.placed_ && nonempty_ == other.nonempty_;
}

// ---------------------------------------------------------------------------
// Likelihood terms
// ---------------------------------------------------------------------------

std::uint64_t weak_ordering_count(std::size_t n) {
  // a(n) = sum_k C(n,k) a(n-k)
  std::vector<std::uint64_t> a(n + 1, 0);
  a[0] = 1;
  for (std::size_t m = 1; m <= n; ++m) {
    std::uint64_t binom = 1;
    for (std::size_t k = 1; k <= m; ++k) {
      binom = binom * (m - k + 1) / k;
      a[m] += binom * a[m - k];
    }
  }
  return a[n];
}

double step_pick_logprob(const StepPlan& plan, std::size_t slot) {
  if (plan.placed_count() == 0) throw EmptyPlan();
  const std::size_t size = plan.slot_size(slot);
  if (size == 0) return kNegInf;
  return std::log(static_cast<double>(size) / static_cast<double>(plan.placed_count()));
}

double order_log_weight(std::span<const int> observed, std::span<const std::size_t> slots,
                        double beta) {
  if (observed.size() != slots.size()) {
    throw LengthMismatch("observed order has " + std::to_string(observed.size()) +
                         " entries, assignment has " + std::to_string(slots.size()));
  }
  const auto ranks = relative_order(slots);
  return std::equal(ranks.begin(), ranks.end(), observed.begin()) ? beta : 0.0;
}

double order_log_normalizer(std::size_t n, double beta) {
  // log(e^beta + (W - 1)), stable for large beta.
  const double rest = static_cast<double>(weak_ordering_count(n)) - 1.0;
  return beta + std::log1p(rest * std::exp(-beta));
}

double emission_logprob(const StepPlan& plan, std::size_t universe_size, std::size_t slot,
                        PredicateId id, double w_p) {
  const std::size_t size = plan.slot_size(slot);
  const double correct = (size > 0 && plan.in_slot(id, slot)) ? w_p / static_cast<double>(size) : 0.0;
  return std::log(correct + (1.0 - w_p) / static_cast<double>(universe_size));
}

double joint_log_posterior(const StepPlan& plan, const StepAssignment& assignments,
                           const ObservedSession& session, std::size_t universe_size,
                           const Hyperparams& hp, bool plan_valid) {
  if (assignments.size() != session.size()) {
    throw LengthMismatch("assignment covers " + std::to_string(assignments.size()) +
                         " utterances, session has " + std::to_string(session.size()));
  }
  if (plan.placed_count() == 0) return kNegInf;
  double total = prior_log_weight(plan_valid, hp.alpha);
  for (std::size_t t = 0; t < session.size(); ++t) {
    const Observation& obs = session[t];
    const auto& s = assignments[t];
    if (s.size() != obs.size()) throw LengthMismatch("assignment length differs from utterance");
    for (std::size_t n = 0; n < obs.size(); ++n) {
      if (s[n] >= plan.slot_count() || plan.slot_size(s[n]) == 0) return kNegInf;
      total += step_pick_logprob(plan, s[n]) +
               emission_logprob(plan, universe_size, s[n], obs.predicates[n], hp.w_p);
    }
    total += order_log_weight(obs.ranks, s, hp.beta);
  }
  return total;
}

double joint_log_posterior(const StepPlan& plan, const StepAssignment& assignments,
                           const ObservedSession& session, std::size_t universe_size,
                           const Hyperparams& hp, const ValidationResult& validation) {
  return joint_log_posterior(plan, assignments, session, universe_size, hp, validation.valid());
}

double utterance_log_likelihood(const IdPlan& plan, const Observation& obs,
                                std::size_t universe_size, const Hyperparams& hp, bool normalized) {
  const std::size_t steps = plan.size();
  std::size_t placed = 0;
  for (const auto& s : plan) placed += s.size();
  if (placed == 0 || obs.size() == 0) return obs.size() == 0 ? 0.0 : kNegInf;

  std::vector<std::int64_t> step_of(universe_size, -1);
  for (std::size_t k = 0; k < steps; ++k) {
    for (PredicateId id : plan[k]) step_of.at(id) = static_cast<std::int64_t>(k);
  }
  const double noise = (1.0 - hp.w_p) / static_cast<double>(universe_size);

  // weight[n][k] = log p(s=k | plan) + log p(p_n | plan, s=k)
  std::vector<std::vector<double>> weight(obs.size(), std::vector<double>(steps));
  double independent = 0.0;
  for (std::size_t n = 0; n < obs.size(); ++n) {
    for (std::size_t k = 0; k < steps; ++k) {
      const double size = static_cast<double>(plan[k].size());
      const double correct = step_of[obs.predicates[n]] == static_cast<std::int64_t>(k) ? hp.w_p / size : 0.0;
      weight[n][k] = std::log(size / static_cast<double>(placed)) + std::log(correct + noise);
    }
    independent += log_sum_exp(weight[n]);
  }

  // Assignments whose dense ranking equals the observed ranks: groups go to
  // strictly increasing steps.
  const int groups = *std::max_element(obs.ranks.begin(), obs.ranks.end());
  double consistent = kNegInf;
  if (static_cast<std::size_t>(groups) <= steps) {
    std::vector<std::vector<double>> group_weight(groups, std::vector<double>(steps, 0.0));
    for (std::size_t n = 0; n < obs.size(); ++n) {
      for (std::size_t k = 0; k < steps; ++k) group_weight[obs.ranks[n] - 1][k] += weight[n][k];
    }
    std::vector<double> prev = group_weight[0];
    for (int g = 1; g < groups; ++g) {
      std::vector<double> cur(steps, kNegInf);
      double prefix = kNegInf;
      for (std::size_t k = 0; k < steps; ++k) {
        cur[k] = prefix + group_weight[g][k];
        prefix = log_add(prefix, prev[k]);
      }
      prev = std::move(cur);
    }
    consistent = log_sum_exp(prev);
  }
  double result = independent;
  if (hp.beta > 0.0 && consistent != kNegInf) {
    result = log_add(independent, std::log(std::expm1(hp.beta)) + consistent);
  }
  if (normalized) result -= order_log_normalizer(obs.size(), hp.beta);
  return result;
}

double marginal_log_posterior(const IdPlan& plan, const ObservedSession& session,
                              std::size_t universe_size, const Hyperparams& hp, bool plan_valid) {
  double total = prior_log_weight(plan_valid, hp.alpha);
  for (const auto& obs : session) {
    total += utterance_log_likelihood(plan, obs, universe_size, hp);
    if (total == kNegInf) break;
  }
  return total;
}

}  // namespace planinfer
