#pragma once

// Forward sampling of planning sessions from the generative model, with the
// latent draws kept as ground truth.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "planinfer/model.hpp"
#include "planinfer/sampler.hpp"

namespace planinfer {

// Every dense-rank vector of length n, in lexicographic order. 1 <= n <= 4.
std::vector<std::vector<int>> enumerate_weak_orderings(std::size_t n);

struct SimConfig {
  std::size_t utterance_count = 30;
  double mean_length = 3.0;  // of the truncated distribution
  std::size_t max_length = 4;
  Hyperparams hyperparams;
  std::uint64_t seed = 0;

  void check() const;
};

// Truncated geometric P(n) proportional to r^(n-1) on 1..max_length, with r
// chosen so the mean is mean_length. Index 0 is unused and zero.
std::vector<double> length_distribution(const SimConfig& config);

// Latent draws of one utterance, aligned with its flattened mentions.
struct UtteranceLatents {
  std::vector<std::size_t> steps;  // 0-based plan step per mention
  std::vector<bool> from_step;     // emitted by the step branch of the mixture
  bool order_kept = true;          // observed order equals the order of `steps`
};

struct GroundTruth {
  SteppedPlan plan;
  PredicateUniverse universe;
  std::vector<UtteranceLatents> latents;
};

struct SimulatedSession {
  Session session;
  GroundTruth truth;
};

// Throws UniverseMismatch when the plan mentions a predicate outside
// `universe`, EmptyPlan for an empty plan, EmptySession for T = 0.
//
// A predicate emitted twice into the same group is kept once; the latents
// describe the mentions that survive.
SimulatedSession generate_session(const SteppedPlan& true_plan, const PredicateUniverse& universe,
                                  const SimConfig& config);

// Predicates built from the plan's own vocabulary: every predicate name with
// every argument value seen in each position for that name, minus the plan's
// predicates. Sorted.
std::vector<GroundedPredicate> distractor_pool(const SteppedPlan& plan);

// Plan predicates (step order) followed by `count` distractors drawn without
// replacement. Throws Error when the pool is too small.
PredicateUniverse universe_with_distractors(const SteppedPlan& plan, std::size_t count, Rng& rng);

}  // namespace planinfer
