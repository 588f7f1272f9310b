#include "planinfer/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>

namespace planinfer {

std::vector<std::vector<int>> enumerate_weak_orderings(std::size_t n) {
  if (n < 1 || n > 4) throw Error("weak orderings are enumerated for 1 <= n <= 4");
  std::vector<std::vector<int>> out;
  std::vector<int> ranks(n, 1);
  for (;;) {
    // Keep vectors whose values cover 1..max exactly.
    const int top = *std::max_element(ranks.begin(), ranks.end());
    bool dense = true;
    for (int r = 1; r <= top && dense; ++r) {
      dense = std::find(ranks.begin(), ranks.end(), r) != ranks.end();
    }
    if (dense) out.push_back(ranks);
    std::size_t i = n;
    while (i > 0 && ranks[i - 1] == static_cast<int>(n)) ranks[--i] = 1;
    if (i == 0) break;
    ++ranks[i - 1];
  }
  return out;
}

void SimConfig::check() const {
  if (utterance_count == 0) throw EmptySession();
  if (max_length < 1 || max_length > 4) throw Error("max_length must lie in [1, 4]");
  if (!(mean_length >= 1.0 && mean_length <= static_cast<double>(max_length))) {
    throw Error("mean_length must lie in [1, max_length]");
  }
  hyperparams.check();
}

namespace {

// P(n) proportional to ratio^(n-1) on 1..max_length.
std::vector<double> geometric_weights(double ratio, std::size_t max_length) {
  std::vector<double> probs(max_length + 1, 0.0);
  double total = 0.0;
  double w = 1.0;
  for (std::size_t n = 1; n <= max_length; ++n, w *= ratio) {
    probs[n] = w;
    total += w;
  }
  for (double& q : probs) q /= total;
  return probs;
}

double mean_of(const std::vector<double>& probs) {
  double m = 0.0;
  for (std::size_t n = 1; n < probs.size(); ++n) m += static_cast<double>(n) * probs[n];
  return m;
}

}  // namespace

std::vector<double> length_distribution(const SimConfig& config) {
  config.check();
  const std::size_t top = config.max_length;
  std::vector<double> probs(top + 1, 0.0);
  if (top == 1 || config.mean_length <= 1.0) {
    probs[1] = 1.0;
    return probs;
  }
  if (config.mean_length >= static_cast<double>(top)) {
    probs[top] = 1.0;
    return probs;
  }
  // The truncated mean grows monotonically with the ratio; bisect on log(ratio).
  double lo = -50.0;
  double hi = 50.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mean_of(geometric_weights(std::exp(mid), top)) < config.mean_length) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return geometric_weights(std::exp(0.5 * (lo + hi)), top);
}

SimulatedSession generate_session(const SteppedPlan& true_plan, const PredicateUniverse& universe,
                                  const SimConfig& config) {
  config.check();
  std::vector<std::vector<PredicateId>> steps;
  for (const auto& step : true_plan) {
    if (step.empty()) continue;
    auto& ids = steps.emplace_back();
    for (const auto& p : step) {
      auto id = universe.find(p);
      if (!id) throw UniverseMismatch(p.to_string() + " is not in the universe");
      ids.push_back(*id);
    }
  }
  if (steps.empty()) throw EmptyPlan();

  const Hyperparams& hp = config.hyperparams;
  Rng rng(config.seed);
  const std::vector<double> lengths = length_distribution(config);
  std::discrete_distribution<std::size_t> draw_length(lengths.begin(), lengths.end());
  std::vector<double> step_sizes;
  for (const auto& s : steps) step_sizes.push_back(static_cast<double>(s.size()));
  std::discrete_distribution<std::size_t> draw_step(step_sizes.begin(), step_sizes.end());
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<std::vector<std::vector<int>>> orderings(config.max_length + 1);
  for (std::size_t n = 1; n <= config.max_length; ++n) orderings[n] = enumerate_weak_orderings(n);

  SimulatedSession out;
  out.truth.plan = true_plan;
  out.truth.universe = universe;
  for (std::size_t t = 0; t < config.utterance_count; ++t) {
    const std::size_t n = draw_length(rng);
    std::vector<std::size_t> s(n);
    std::vector<PredicateId> p(n);
    std::vector<bool> from_step(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = draw_step(rng);
      from_step[i] = unit(rng) < hp.w_p;
      if (from_step[i]) {
        const auto& step = steps[s[i]];
        p[i] = step[std::uniform_int_distribution<std::size_t>(0, step.size() - 1)(rng)];
      } else {
        p[i] = static_cast<PredicateId>(
            std::uniform_int_distribution<std::size_t>(0, universe.size() - 1)(rng));
      }
    }

    const std::vector<int> truth_order = relative_order(s);
    std::vector<int> observed = truth_order;
    const auto& all = orderings[n];
    const double keep = std::exp(hp.beta - order_log_normalizer(n, hp.beta));
    if (all.size() > 1 && unit(rng) >= keep) {
      std::size_t pick = std::uniform_int_distribution<std::size_t>(0, all.size() - 2)(rng);
      const auto self = std::find(all.begin(), all.end(), truth_order) - all.begin();
      if (static_cast<std::ptrdiff_t>(pick) >= self) ++pick;
      observed = all[pick];
    }

    const int groups = *std::max_element(observed.begin(), observed.end());
    Utterance utterance;
    utterance.groups.resize(static_cast<std::size_t>(groups));
    UtteranceLatents latents;
    latents.order_kept = observed == truth_order;
    for (int g = 1; g <= groups; ++g) {
      std::set<PredicateId> seen;
      for (std::size_t i = 0; i < n; ++i) {
        if (observed[i] != g || !seen.insert(p[i]).second) continue;
        utterance.groups[static_cast<std::size_t>(g - 1)].push_back(universe[p[i]]);
        latents.steps.push_back(s[i]);
        latents.from_step.push_back(from_step[i]);
      }
    }
    out.session.utterances.push_back(std::move(utterance));
    out.truth.latents.push_back(std::move(latents));
  }
  return out;
}

std::vector<GroundedPredicate> distractor_pool(const SteppedPlan& plan) {
  std::set<GroundedPredicate> in_plan;
  std::map<std::pair<std::string, std::size_t>, std::vector<std::set<std::string>>> values;
  for (const auto& step : plan) {
    for (const auto& p : step) {
      in_plan.insert(p);
      auto& columns = values[{p.name, p.args.size()}];
      columns.resize(p.args.size());
      for (std::size_t i = 0; i < p.args.size(); ++i) columns[i].insert(p.args[i]);
    }
  }
  std::vector<GroundedPredicate> pool;
  for (const auto& [key, columns] : values) {
    std::vector<std::string> args(key.second);
    auto fill = [&](auto&& self, std::size_t i) -> void {
      if (i == columns.size()) {
        GroundedPredicate candidate{key.first, args};
        if (!in_plan.contains(candidate)) pool.push_back(std::move(candidate));
        return;
      }
      for (const auto& v : columns[i]) {
        args[i] = v;
        self(self, i + 1);
      }
    };
    fill(fill, 0);
  }
  std::sort(pool.begin(), pool.end());
  return pool;
}

PredicateUniverse universe_with_distractors(const SteppedPlan& plan, std::size_t count, Rng& rng) {
  std::vector<GroundedPredicate> predicates;
  for (const auto& step : plan) predicates.insert(predicates.end(), step.begin(), step.end());
  std::vector<GroundedPredicate> pool = distractor_pool(plan);
  if (count > pool.size()) {
    throw Error("only " + std::to_string(pool.size()) + " distractors can be built from the plan");
  }
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(i, pool.size() - 1)(rng);
    std::swap(pool[i], pool[j]);
    predicates.push_back(pool[i]);
  }
  return PredicateUniverse(std::move(predicates));
}

}  // namespace planinfer
