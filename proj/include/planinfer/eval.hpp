#pragma once

// Plan accuracy metrics and a brute-force posterior for small universes.

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "planinfer/model.hpp"

namespace planinfer {

struct Metrics {
  double pct_inferred = 0.0;
  double pct_noise_rej = 0.0;
  double pct_seq = 0.0;
  double overall = 0.0;
  // Share of true predicates that were inferred. Diagnostic only; not part of
  // the overall score.
  double recall = 0.0;
};

// (pct_inferred, pct_noise_rej). `inferred` precision against `truth`, and the
// share of mentioned-but-not-true predicates left out of `inferred`.
std::pair<double, double> task_allocation(const SteppedPlan& inferred, const SteppedPlan& truth,
                                          const PredicateUniverse& mentioned);

// Pairs of common predicates whose before/same/after relation agrees.
double sequence_accuracy(const SteppedPlan& inferred, const SteppedPlan& truth);

double recall(const SteppedPlan& inferred, const SteppedPlan& truth);

Metrics evaluate(const SteppedPlan& inferred, const SteppedPlan& truth,
                 const PredicateUniverse& mentioned);

// Field-wise mean; zeroes for an empty list.
Metrics mean(std::span<const Metrics> metrics);

// Every ordered set partition of every subset of {0..universe_size-1}, the
// empty plan first. Deterministic order.
std::vector<IdPlan> enumerate_plans(std::size_t universe_size);

struct PlanProbability {
  IdPlan plan;
  double probability = 0.0;
};

using ValidityTest = std::function<bool(const IdPlan&)>;

// Normalized posterior over enumerate_plans(|universe|), with the assignments
// summed by brute force. An empty `validity` means an uninformative prior.
// Throws TooLarge when |universe| > 4 or an utterance has more than 3 mentions.
std::vector<PlanProbability> exact_posterior(const Session& session, const PredicateUniverse& universe,
                                             const Hyperparams& hp, const ValidityTest& validity = {});

// 0.5 * sum |p - q| over the union of supports.
double total_variation(std::span<const PlanProbability> p, std::span<const PlanProbability> q);

// Empirical distribution of a list of plans, ordered by first appearance.
std::vector<PlanProbability> empirical_distribution(std::span<const IdPlan> plans);

}  // namespace planinfer
