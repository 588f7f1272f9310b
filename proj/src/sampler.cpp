#include "planinfer/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>
#include <unordered_map>

namespace planinfer {

void SamplerConfig::check() const {
  if (gibbs_steps < 1) throw Error("gibbs_steps must be at least 1");
  if (thin < 1) throw Error("thin must be at least 1");
  if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) {
    throw Error("burn_in_fraction must lie in [0, 1)");
  }
  if (chains < 1) throw Error("chains must be at least 1");
}

// ---------------------------------------------------------------------------
// Prior
// ---------------------------------------------------------------------------

PlanPrior::PlanPrior(Validity validity, double alpha, std::shared_ptr<ValidationMemo> memo)
    : validity_(std::move(validity)), alpha_(alpha), memo_(std::move(memo)) {
  if (!(alpha >= 0.0)) throw Error("alpha must be non-negative");
}

PlanPrior::PlanPrior(std::shared_ptr<const CompiledValidator> validator, double alpha,
                     std::shared_ptr<ValidationMemo> memo)
    : PlanPrior([v = std::move(validator)](const IdPlan& plan) { return v->validate(plan).valid(); },
                alpha, std::move(memo)) {}

bool PlanPrior::is_valid(const IdPlan& plan) const {
  if (!validity_) return false;
  if (memo_) {
    if (auto hit = memo_->find(plan)) return *hit;
  }
  const bool valid = validity_(plan);
  if (memo_) memo_->insert(plan, valid);
  return valid;
}

double PlanPrior::log_weight(const IdPlan& plan) const {
  if (!informative()) return 0.0;
  return prior_log_weight(is_valid(plan), alpha_);
}

// ---------------------------------------------------------------------------
// Proposals
// ---------------------------------------------------------------------------

const char* to_string(MoveKind kind) {
  switch (kind) {
    case MoveKind::ShiftLeft: return "ShiftLeft";
    case MoveKind::ShiftRight: return "ShiftRight";
    case MoveKind::Remove: return "Remove";
    case MoveKind::Insert: return "Insert";
    case MoveKind::SwapSlots: return "SwapSlots";
    case MoveKind::NoOp: return "NoOp";
  }
  return "?";
}

namespace {

std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

std::size_t sample_log_categorical(const std::vector<double>& log_weights, Rng& rng) {
  double max = kNegInf;
  for (double w : log_weights) max = std::max(max, w);
  if (max == kNegInf) throw Error("no support for categorical draw");
  double total = 0.0;
  std::vector<double> cumulative(log_weights.size());
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    total += std::exp(log_weights[i] - max);
    cumulative[i] = total;
  }
  const double u = uniform01(rng) * total;
  for (std::size_t i = 0; i < cumulative.size(); ++i) {
    if (u < cumulative[i]) return i;
  }
  // Rounding at the top end: last index with positive weight.
  for (std::size_t i = log_weights.size(); i-- > 0;) {
    if (log_weights[i] != kNegInf) return i;
  }
  return log_weights.size() - 1;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

Proposal propose(const StepPlan& plan, Rng& rng) {
  const std::size_t slots = plan.slot_count();
  const std::size_t universe = plan.universe_size();
  Proposal p;
  if (uniform_index(rng, 2) == 0) {
    if (universe == 0) return p;
    const auto u = static_cast<PredicateId>(uniform_index(rng, universe));
    if (auto k = plan.slot_of(u)) {
      switch (uniform_index(rng, 3)) {
        case 0:
          if (*k > 0) p.move = {MoveKind::ShiftLeft, u, *k, 0};
          break;
        case 1:
          if (*k + 1 < slots) p.move = {MoveKind::ShiftRight, u, *k, 0};
          break;
        default:
          p.move = {MoveKind::Remove, u, *k, 0};
          p.log_q_ratio = std::log(3.0) - std::log(static_cast<double>(slots));
          break;
      }
    } else {
      p.move = {MoveKind::Insert, u, uniform_index(rng, slots), 0};
      p.log_q_ratio = std::log(static_cast<double>(slots)) - std::log(3.0);
    }
  } else if (slots >= 2) {
    const std::size_t i = uniform_index(rng, slots);
    std::size_t j = uniform_index(rng, slots - 1);
    if (j >= i) ++j;
    p.move = {MoveKind::SwapSlots, std::nullopt, i, j};
  }
  return p;
}

Move apply_move(StepPlan& plan, const Move& move) {
  switch (move.kind) {
    case MoveKind::ShiftLeft:
      plan.move_to(*move.subject, move.slot - 1);
      return {MoveKind::ShiftRight, move.subject, move.slot - 1, 0};
    case MoveKind::ShiftRight:
      plan.move_to(*move.subject, move.slot + 1);
      return {MoveKind::ShiftLeft, move.subject, move.slot + 1, 0};
    case MoveKind::Remove:
      plan.remove(*move.subject);
      return {MoveKind::Insert, move.subject, move.slot, 0};
    case MoveKind::Insert:
      plan.place(*move.subject, move.slot);
      return {MoveKind::Remove, move.subject, move.slot, 0};
    case MoveKind::SwapSlots:
      plan.swap_slots(move.slot, move.other_slot);
      return move;
    case MoveKind::NoOp:
      return move;
  }
  return move;
}

double layout_log_weight(std::size_t slot_count, std::size_t nonempty) {
  const double s = static_cast<double>(slot_count);
  const double k = static_cast<double>(nonempty);
  return -(std::lgamma(s + 1.0) - std::lgamma(k + 1.0) - std::lgamma(s - k + 1.0));
}

// ---------------------------------------------------------------------------
// Chain
// ---------------------------------------------------------------------------

namespace {

// Utterance likelihoods with the assignments summed out, in linear space.
// Per utterance the sum over s splits into the independent product
// prod_n sum_k w_n(k) plus (e^beta - 1) times the sum over order-consistent
// assignments, which a forward pass over groups and slots computes.
class CollapsedLikelihood {
 public:
  CollapsedLikelihood(const ObservedSession& session, std::size_t universe_size, const Hyperparams& hp)
      : session_(&session),
        w_p_(hp.w_p),
        noise_((1.0 - hp.w_p) / static_cast<double>(universe_size)),
        boost_(std::expm1(hp.beta)) {}

  double log_likelihood(const StepPlan& plan) {
    const std::size_t S = plan.slot_count();
    const double placed = static_cast<double>(plan.placed_count());
    if (placed == 0.0) return kNegInf;
    base_.resize(S);
    for (std::size_t k = 0; k < S; ++k) base_[k] = static_cast<double>(plan.slot_size(k)) * noise_ / placed;
    const double hit = w_p_ / placed;
    double total = 0.0;
    for (const Observation& obs : *session_) {
      double independent = 1.0;
      for (PredicateId p : obs.predicates) {
        independent *= (plan.is_placed(p) ? hit : 0.0) + noise_;
      }
      double consistent = 0.0;
      if (boost_ > 0.0) {
        const auto groups = static_cast<std::size_t>(*std::max_element(obs.ranks.begin(), obs.ranks.end()));
        group_.assign(groups * S, 1.0);
        for (std::size_t n = 0; n < obs.size(); ++n) {
          double* row = &group_[(obs.ranks[n] - 1) * S];
          const auto slot = plan.slot_of(obs.predicates[n]);
          for (std::size_t k = 0; k < S; ++k) row[k] *= base_[k] + (slot && *slot == k ? hit : 0.0);
        }
        for (std::size_t g = 1; g < groups; ++g) {
          const double* prev = &group_[(g - 1) * S];
          double* row = &group_[g * S];
          double prefix = 0.0;
          for (std::size_t k = 0; k < S; ++k) {
            const double here = row[k];
            row[k] = prefix * here;
            prefix += prev[k];
          }
        }
        const double* last = &group_[(groups - 1) * S];
        for (std::size_t k = 0; k < S; ++k) consistent += last[k];
      }
      total += std::log(independent + boost_ * consistent);
    }
    return total;
  }

 private:
  const ObservedSession* session_;
  double w_p_;
  double noise_;
  double boost_;
  std::vector<double> base_;
  std::vector<double> group_;
};

// Holds one chain's mutable state and the cached log target (without the
// order weights, which do not depend on the plan).
class Chain {
 public:
  Chain(StepPlan plan, StepAssignment assignments, const SamplerContext& ctx)
      : plan_(std::move(plan)),
        assignments_(std::move(assignments)),
        ctx_(ctx),
        collapsed_(*ctx.session, ctx.universe_size, ctx.hyperparams) {
    flatten();
    current_ = evaluate();
  }

  const StepPlan& plan() const { return plan_; }
  const StepAssignment& assignments() const { return assignments_; }

  bool mh_step(Rng& rng) {
    const Proposal proposal = propose(plan_, rng);
    const double u = uniform01(rng);
    if (proposal.move.kind == MoveKind::NoOp) return true;
    const Move undo = apply_move(plan_, proposal.move);
    const double proposed = evaluate();
    if (proposed != kNegInf &&
        (current_ == kNegInf || std::log(u) < proposed - current_ + proposal.log_q_ratio)) {
      current_ = proposed;
      return true;
    }
    apply_move(plan_, undo);
    return false;
  }

  void resample(Rng& rng) {
    assignments_ = resample_assignments(plan_, ctx_, rng);
    flatten();
    current_ = evaluate();
  }

 private:
  void flatten() {
    flat_predicates_.clear();
    flat_slots_.clear();
    for (std::size_t t = 0; t < assignments_.size(); ++t) {
      const auto& obs = (*ctx_.session)[t];
      for (std::size_t n = 0; n < obs.size(); ++n) {
        flat_predicates_.push_back(obs.predicates[n]);
        flat_slots_.push_back(assignments_[t][n]);
      }
    }
    picks_.assign(plan_.slot_count(), 0);
    for (std::size_t s : flat_slots_) ++picks_[s];
  }

  double evaluate() {
    double total = ctx_.collapsed ? collapsed_.log_likelihood(plan_) : fixed_assignment_terms();
    if (total == kNegInf) return total;
    if (ctx_.prior && ctx_.prior->informative()) total += ctx_.prior->log_weight(plan_.compact());
    return total + layout_log_weight(plan_.slot_count(), plan_.nonempty_slot_count());
  }

  // Step picks + emissions under the current assignments.
  double fixed_assignment_terms() {
    const std::size_t placed = plan_.placed_count();
    if (placed == 0) return kNegInf;
    hits_.assign(plan_.slot_count(), 0);
    for (std::size_t i = 0; i < flat_slots_.size(); ++i) {
      if (plan_.in_slot(flat_predicates_[i], flat_slots_[i])) ++hits_[flat_slots_[i]];
    }
    const double w_p = ctx_.hyperparams.w_p;
    const double noise = (1.0 - w_p) / static_cast<double>(ctx_.universe_size);
    const double log_noise = std::log(noise);
    const double log_placed = std::log(static_cast<double>(placed));
    double total = 0.0;
    for (std::size_t k = 0; k < picks_.size(); ++k) {
      if (picks_[k] == 0) continue;
      const std::size_t size = plan_.slot_size(k);
      if (size == 0) return kNegInf;
      const double n = static_cast<double>(picks_[k]);
      const double h = static_cast<double>(hits_[k]);
      total += n * (std::log(static_cast<double>(size)) - log_placed);
      total += h * std::log(w_p / static_cast<double>(size) + noise);
      if (n > h) total += (n - h) * log_noise;
    }
    return total;
  }

  StepPlan plan_;
  StepAssignment assignments_;
  SamplerContext ctx_;
  CollapsedLikelihood collapsed_;
  std::vector<PredicateId> flat_predicates_;
  std::vector<std::size_t> flat_slots_;
  std::vector<std::size_t> picks_;
  std::vector<std::size_t> hits_;
  double current_ = kNegInf;
};

}  // namespace

double chain_log_target(const StepPlan& plan, const StepAssignment& assignments,
                        const SamplerContext& ctx) {
  const bool valid = ctx.prior && ctx.prior->informative() && ctx.prior->is_valid(plan.compact());
  Hyperparams hp = ctx.hyperparams;
  if (!ctx.prior || !ctx.prior->informative()) hp.alpha = 0.0;
  const double joint = joint_log_posterior(plan, assignments, *ctx.session, ctx.universe_size, hp, valid);
  if (joint == kNegInf) return joint;
  return joint + layout_log_weight(plan.slot_count(), plan.nonempty_slot_count());
}

double collapsed_log_target(const StepPlan& plan, const SamplerContext& ctx) {
  CollapsedLikelihood likelihood(*ctx.session, ctx.universe_size, ctx.hyperparams);
  double total = likelihood.log_likelihood(plan);
  if (total == kNegInf) return total;
  if (ctx.prior && ctx.prior->informative()) total += ctx.prior->log_weight(plan.compact());
  return total + layout_log_weight(plan.slot_count(), plan.nonempty_slot_count());
}

bool mh_step(StepPlan& plan, const StepAssignment& assignments, const SamplerContext& ctx, Rng& rng) {
  Chain chain(plan, assignments, ctx);
  const bool accepted = chain.mh_step(rng);
  plan = chain.plan();
  return accepted;
}

StepAssignment resample_assignments(const StepPlan& plan, const SamplerContext& ctx, Rng& rng) {
  if (plan.placed_count() == 0) throw EmptyPlan();
  const ObservedSession& session = *ctx.session;
  const Hyperparams& hp = ctx.hyperparams;

  std::vector<std::size_t> slots;
  for (std::size_t k = 0; k < plan.slot_count(); ++k) {
    if (plan.slot_size(k) > 0) slots.push_back(k);
  }
  const std::size_t K = slots.size();
  const double log_boost = hp.beta > 0.0 ? std::log(std::expm1(hp.beta)) : kNegInf;

  // p(s | ...) is proportional to prod_n w_n(s_n) * (1 + (e^beta - 1) [f(s) = s']),
  // a mixture of the independent product and the product restricted to
  // assignments that reproduce the observed order. Both parts are sampled
  // exactly; the restricted part by forward filtering over groups.
  StepAssignment out(session.size());
  std::vector<double> buffer;
  for (std::size_t t = 0; t < session.size(); ++t) {
    const Observation& obs = session[t];
    const std::size_t n_obs = obs.size();
    std::vector<std::vector<double>> w(n_obs, std::vector<double>(K));
    double independent = 0.0;
    for (std::size_t n = 0; n < n_obs; ++n) {
      for (std::size_t j = 0; j < K; ++j) {
        w[n][j] = step_pick_logprob(plan, slots[j]) +
                  emission_logprob(plan, ctx.universe_size, slots[j], obs.predicates[n], hp.w_p);
      }
      independent += log_sum_exp(w[n]);
    }

    const auto groups = static_cast<std::size_t>(*std::max_element(obs.ranks.begin(), obs.ranks.end()));
    std::vector<std::vector<double>> forward;
    double consistent = kNegInf;
    if (groups <= K && log_boost != kNegInf) {
      forward.assign(groups, std::vector<double>(K, 0.0));
      for (std::size_t n = 0; n < n_obs; ++n) {
        for (std::size_t j = 0; j < K; ++j) forward[obs.ranks[n] - 1][j] += w[n][j];
      }
      for (std::size_t g = 1; g < groups; ++g) {
        double prefix = kNegInf;
        for (std::size_t j = 0; j < K; ++j) {
          const double here = forward[g][j];
          forward[g][j] = prefix + here;
          prefix = log_add(prefix, forward[g - 1][j]);
        }
      }
      consistent = log_sum_exp(forward[groups - 1]);
    }

    out[t].resize(n_obs);
    const double restricted = log_boost + consistent;
    const double pick_restricted = restricted == kNegInf
                                       ? 0.0
                                       : std::exp(restricted - log_add(independent, restricted));
    if (uniform01(rng) < pick_restricted) {
      std::vector<std::size_t> chosen(groups);
      std::size_t limit = K;
      for (std::size_t g = groups; g-- > 0;) {
        buffer.assign(forward[g].begin(), forward[g].begin() + static_cast<std::ptrdiff_t>(limit));
        chosen[g] = sample_log_categorical(buffer, rng);
        limit = chosen[g];
      }
      for (std::size_t n = 0; n < n_obs; ++n) out[t][n] = slots[chosen[obs.ranks[n] - 1]];
    } else {
      for (std::size_t n = 0; n < n_obs; ++n) out[t][n] = slots[sample_log_categorical(w[n], rng)];
    }
  }
  return out;
}

ChainStart initialize(const Session& session, const Hyperparams& hp, Rng& rng) {
  session.check();
  ChainStart start;
  start.universe = PredicateUniverse::from_session(session);
  const std::size_t U = start.universe.size();
  start.plan = StepPlan(U, U);
  for (PredicateId id = 0; id < U; ++id) start.plan.place(id, id);
  const ObservedSession observed = observe(session, start.universe);
  const SamplerContext ctx{&observed, U, hp, nullptr};
  start.assignments = resample_assignments(start.plan, ctx, rng);
  return start;
}

// ---------------------------------------------------------------------------
// Inference driver
// ---------------------------------------------------------------------------

namespace {

struct ChainResult {
  std::vector<IdPlan> retained;
  std::size_t accepted = 0;
  std::size_t proposals = 0;
};

ChainResult run_chain(const Session& session, const ObservedSession& observed, std::size_t universe_size,
                      const PlanPrior& prior, const Hyperparams& hp, const SamplerConfig& config,
                      std::uint64_t seed) {
  Rng rng(seed);
  ChainStart start = initialize(session, hp, rng);
  const SamplerContext ctx{&observed, universe_size, hp, &prior, config.collapse_assignments};
  Chain chain(std::move(start.plan), std::move(start.assignments), ctx);

  ChainResult result;
  const auto burn = static_cast<std::size_t>(std::floor(config.burn_in_fraction *
                                                        static_cast<double>(config.gibbs_steps)));
  for (std::size_t sweep = 0; sweep < config.gibbs_steps; ++sweep) {
    for (std::size_t m = 1; m <= config.mh_steps_per_gibbs; ++m) {
      result.accepted += chain.mh_step(rng) ? 1 : 0;
      ++result.proposals;
      if (sweep >= burn && m % config.thin == 0) result.retained.push_back(chain.plan().compact());
    }
    chain.resample(rng);
  }
  return result;
}

}  // namespace

PosteriorSummary infer(const Session& session, const PredicateUniverse& universe,
                       const PlanPrior& prior, const Hyperparams& hp, const SamplerConfig& config) {
  session.check();
  hp.check();
  config.check();
  const PredicateUniverse first_mention = PredicateUniverse::from_session(session);
  if (first_mention.predicates() != universe.predicates()) {
    throw UniverseMismatch("universe must list the session's predicates in first-mention order");
  }
  const ObservedSession observed = observe(session, universe);

  std::vector<ChainResult> results(config.chains);
  auto chain_seed = [&](std::size_t c) { return c == 0 ? config.seed : splitmix64(config.seed + c); };
  if (config.chains == 1) {
    results[0] = run_chain(session, observed, universe.size(), prior, hp, config, chain_seed(0));
  } else {
    std::vector<std::thread> workers;
    for (std::size_t c = 0; c < config.chains; ++c) {
      workers.emplace_back([&, c] {
        results[c] = run_chain(session, observed, universe.size(), prior, hp, config, chain_seed(c));
      });
    }
    for (auto& w : workers) w.join();
  }

  PosteriorSummary summary;
  summary.universe = universe;
  summary.marginals.assign(universe.size(), {});
  std::unordered_map<IdPlan, std::pair<double, bool>, IdPlanHash> scored;
  std::size_t accepted = 0;
  std::size_t proposals = 0;
  std::size_t max_steps = 0;
  for (auto& r : results) {
    accepted += r.accepted;
    proposals += r.proposals;
    for (auto& plan : r.retained) {
      auto it = scored.find(plan);
      if (it == scored.end()) {
        const bool valid = prior.informative() && prior.is_valid(plan);
        const double lp = marginal_log_posterior(plan, observed, universe.size(), hp, valid);
        it = scored.emplace(plan, std::make_pair(lp, valid)).first;
      }
      const auto [lp, valid] = it->second;
      if (summary.samples.empty() || lp > summary.map_log_posterior) {
        summary.map_plan = plan;
        summary.map_log_posterior = lp;
        summary.map_valid = valid;
      }
      max_steps = std::max(max_steps, plan.size());
      summary.samples.push_back({std::move(plan), lp});
    }
  }

  for (auto& m : summary.marginals) m.at_step.assign(max_steps, 0.0);
  const double weight = summary.samples.empty() ? 0.0 : 1.0 / static_cast<double>(summary.samples.size());
  for (const auto& s : summary.samples) {
    std::vector<bool> placed(universe.size(), false);
    for (std::size_t r = 0; r < s.plan.size(); ++r) {
      for (PredicateId id : s.plan[r]) {
        summary.marginals[id].at_step[r] += weight;
        placed[id] = true;
      }
    }
    for (std::size_t id = 0; id < universe.size(); ++id) {
      if (!placed[id]) summary.marginals[id].absent += weight;
    }
  }

  summary.diagnostics.proposals = proposals;
  summary.diagnostics.retained = summary.samples.size();
  summary.diagnostics.chains = config.chains;
  summary.diagnostics.acceptance_rate =
      proposals ? static_cast<double>(accepted) / static_cast<double>(proposals) : 0.0;
  return summary;
}

PosteriorSummary infer(const Session& session, std::shared_ptr<const pddl::World> world,
                       const Hyperparams& hp, const SamplerConfig& config,
                       std::shared_ptr<ValidationMemo> memo) {
  session.check();
  const PredicateUniverse universe = PredicateUniverse::from_session(session);
  PlanPrior prior;
  if (world) {
    auto validator = std::make_shared<const CompiledValidator>(
        std::move(world), universe.predicates(), config.unknown_action_policy);
    prior = PlanPrior(std::move(validator), hp.alpha,
                      memo ? std::move(memo) : std::make_shared<ValidationMemo>());
  }
  return infer(session, universe, prior, hp, config);
}

}  // namespace planinfer
