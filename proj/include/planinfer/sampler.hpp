#pragma once

// Metropolis-Hastings within Gibbs over (plan, step assignments).
//
// The plan lives in a StepPlan with as many slots as there are predicates in
// the universe, so several slot layouts encode the same compacted plan. The
// chain therefore targets p(compact(plan), s | data) / C(S, K), where K is the
// number of non-empty slots; the plan marginal of the chain is then exactly the
// model posterior over compacted plans.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "planinfer/model.hpp"
#include "planinfer/validator.hpp"

namespace planinfer {

using Rng = std::mt19937_64;

struct SamplerConfig {
  std::size_t gibbs_steps = 3000;
  std::size_t mh_steps_per_gibbs = 400;
  std::size_t thin = 20;
  double burn_in_fraction = 0.5;
  std::uint64_t seed = 0;
  UnknownActionPolicy unknown_action_policy = UnknownActionPolicy::Strict;
  std::size_t chains = 1;
  // Sum the assignments out of the MH acceptance ratio instead of holding
  // them fixed. Both kernels leave the same plan marginal invariant.
  bool collapse_assignments = true;

  void check() const;
};

// Unnormalized plan prior: exp(alpha) for valid plans, 1 otherwise. The
// default-constructed prior is uninformative.
class PlanPrior {
 public:
  using Validity = std::function<bool(const IdPlan&)>;

  PlanPrior() = default;
  PlanPrior(Validity validity, double alpha, std::shared_ptr<ValidationMemo> memo = nullptr);
  PlanPrior(std::shared_ptr<const CompiledValidator> validator, double alpha,
            std::shared_ptr<ValidationMemo> memo = nullptr);

  bool informative() const { return static_cast<bool>(validity_) && alpha_ > 0.0; }
  double alpha() const { return alpha_; }

  // Always false for a prior without a validity test.
  bool is_valid(const IdPlan& plan) const;
  double log_weight(const IdPlan& plan) const;

 private:
  Validity validity_;
  double alpha_ = 0.0;
  std::shared_ptr<ValidationMemo> memo_;
};

enum class MoveKind { ShiftLeft, ShiftRight, Remove, Insert, SwapSlots, NoOp };

const char* to_string(MoveKind kind);

struct Move {
  MoveKind kind = MoveKind::NoOp;
  std::optional<PredicateId> subject;
  // Current slot of the subject (Insert: target slot); first slot of a swap.
  std::size_t slot = 0;
  std::size_t other_slot = 0;
};

struct Proposal {
  Move move;
  // log Q(plan | plan') - log Q(plan' | plan)
  double log_q_ratio = 0.0;
};

// With probability 1/2 a predicate move (pick a predicate uniformly; shift it
// left, right, or remove it if placed, else insert it into a uniform slot),
// otherwise a swap of two distinct uniformly chosen slots.
Proposal propose(const StepPlan& plan, Rng& rng);

// Applies `move` and returns the move that undoes it.
Move apply_move(StepPlan& plan, const Move& move);

// -log C(slot_count, nonempty): uniform spread over the layouts of one plan.
double layout_log_weight(std::size_t slot_count, std::size_t nonempty);

struct SamplerContext {
  const ObservedSession* session = nullptr;
  std::size_t universe_size = 0;
  Hyperparams hyperparams;
  const PlanPrior* prior = nullptr;
  bool collapsed = false;
};

// Log of the chain's target density at (plan, assignments).
double chain_log_target(const StepPlan& plan, const StepAssignment& assignments,
                        const SamplerContext& ctx);

// Log target of the plan with the assignments summed out: prior, utterance
// likelihoods without the order normalizer, layout weight.
double collapsed_log_target(const StepPlan& plan, const SamplerContext& ctx);

// One MH update of the plan. With ctx.collapsed the assignments are ignored
// and collapsed_log_target is used, otherwise they are held fixed. Returns
// whether the proposal was accepted.
bool mh_step(StepPlan& plan, const StepAssignment& assignments, const SamplerContext& ctx,
             Rng& rng);

// Draws every s_t exactly from p(s_t | plan, p_t, s'_t) in O(n K) per
// utterance, K the number of non-empty slots. Throws EmptyPlan.
StepAssignment resample_assignments(const StepPlan& plan, const SamplerContext& ctx, Rng& rng);

struct ChainStart {
  PredicateUniverse universe;
  StepPlan plan;
  StepAssignment assignments;
};

// Universe in first-mention order, every predicate alone in its own slot in
// that order, assignments drawn from their conditionals. Throws EmptySession.
ChainStart initialize(const Session& session, const Hyperparams& hp, Rng& rng);

struct PlanSample {
  IdPlan plan;
  double log_posterior = 0.0;  // assignments summed out, unnormalized
};

struct PredicateMarginal {
  double absent = 0.0;
  std::vector<double> at_step;  // at_step[r]: probability of being in step r + 1
};

struct Diagnostics {
  double acceptance_rate = 0.0;
  std::size_t proposals = 0;
  std::size_t retained = 0;
  std::size_t chains = 1;
};

struct PosteriorSummary {
  PredicateUniverse universe;
  std::vector<PlanSample> samples;
  IdPlan map_plan;
  double map_log_posterior = kNegInf;
  bool map_valid = false;
  std::vector<PredicateMarginal> marginals;
  Diagnostics diagnostics;
};

// Runs the sampler under a caller-supplied prior over `universe`.
PosteriorSummary infer(const Session& session, const PredicateUniverse& universe,
                       const PlanPrior& prior, const Hyperparams& hp, const SamplerConfig& config);

// Without a world the prior is uninformative (alpha treated as 0).
PosteriorSummary infer(const Session& session, std::shared_ptr<const pddl::World> world,
                       const Hyperparams& hp, const SamplerConfig& config,
                       std::shared_ptr<ValidationMemo> memo = nullptr);

}  // namespace planinfer
