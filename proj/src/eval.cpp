#include "planinfer/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>
#include <unordered_set>

namespace planinfer {

namespace {

using Steps = std::unordered_map<GroundedPredicate, std::size_t>;

Steps step_index(const SteppedPlan& plan) {
  Steps out;
  for (std::size_t r = 0; r < plan.size(); ++r) {
    for (const auto& p : plan[r]) out.emplace(p, r);
  }
  return out;
}

int sign(std::size_t a, std::size_t b) { return a < b ? -1 : (a > b ? 1 : 0); }

}  // namespace

std::pair<double, double> task_allocation(const SteppedPlan& inferred, const SteppedPlan& truth,
                                          const PredicateUniverse& mentioned) {
  const Steps in = step_index(inferred);
  const Steps tr = step_index(truth);

  double pct_inferred = 0.0;
  if (in.empty()) {
    pct_inferred = tr.empty() ? 100.0 : 0.0;
  } else {
    std::size_t hits = 0;
    for (const auto& [p, r] : in) hits += tr.contains(p) ? 1 : 0;
    pct_inferred = 100.0 * static_cast<double>(hits) / static_cast<double>(in.size());
  }

  std::size_t extraneous = 0;
  std::size_t rejected = 0;
  for (const auto& p : mentioned.predicates()) {
    if (tr.contains(p)) continue;
    ++extraneous;
    rejected += in.contains(p) ? 0 : 1;
  }
  const double pct_noise_rej =
      extraneous == 0 ? 100.0 : 100.0 * static_cast<double>(rejected) / static_cast<double>(extraneous);
  return {pct_inferred, pct_noise_rej};
}

double sequence_accuracy(const SteppedPlan& inferred, const SteppedPlan& truth) {
  const Steps in = step_index(inferred);
  const Steps tr = step_index(truth);
  std::vector<std::pair<std::size_t, std::size_t>> common;
  for (const auto& [p, r] : in) {
    if (auto it = tr.find(p); it != tr.end()) common.emplace_back(r, it->second);
  }
  if (common.size() < 2) return 100.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < common.size(); ++i) {
    for (std::size_t j = i + 1; j < common.size(); ++j) {
      ++total;
      if (sign(common[i].first, common[j].first) == sign(common[i].second, common[j].second)) ++correct;
    }
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(total);
}

double recall(const SteppedPlan& inferred, const SteppedPlan& truth) {
  const Steps in = step_index(inferred);
  const Steps tr = step_index(truth);
  if (tr.empty()) return 100.0;
  std::size_t hits = 0;
  for (const auto& [p, r] : tr) hits += in.contains(p) ? 1 : 0;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(tr.size());
}

Metrics evaluate(const SteppedPlan& inferred, const SteppedPlan& truth,
                 const PredicateUniverse& mentioned) {
  Metrics m;
  std::tie(m.pct_inferred, m.pct_noise_rej) = task_allocation(inferred, truth, mentioned);
  m.pct_seq = sequence_accuracy(inferred, truth);
  m.overall = (m.pct_inferred + m.pct_noise_rej + m.pct_seq) / 3.0;
  m.recall = recall(inferred, truth);
  return m;
}

Metrics mean(std::span<const Metrics> metrics) {
  Metrics out;
  if (metrics.empty()) return out;
  for (const auto& m : metrics) {
    out.pct_inferred += m.pct_inferred;
    out.pct_noise_rej += m.pct_noise_rej;
    out.pct_seq += m.pct_seq;
    out.overall += m.overall;
    out.recall += m.recall;
  }
  const double n = static_cast<double>(metrics.size());
  out.pct_inferred /= n;
  out.pct_noise_rej /= n;
  out.pct_seq /= n;
  out.overall /= n;
  out.recall /= n;
  return out;
}

std::vector<IdPlan> enumerate_plans(std::size_t universe_size) {
  // Assign each item a value in {0 (absent), 1..k}; keep assignments whose
  // used step labels are exactly 1..k for some k.
  std::vector<IdPlan> plans;
  std::vector<std::size_t> label(universe_size, 0);
  for (;;) {
    const std::size_t k = universe_size ? *std::max_element(label.begin(), label.end()) : 0;
    IdPlan plan(k);
    for (std::size_t i = 0; i < universe_size; ++i) {
      if (label[i]) plan[label[i] - 1].push_back(static_cast<PredicateId>(i));
    }
    if (std::none_of(plan.begin(), plan.end(), [](const auto& s) { return s.empty(); })) {
      plans.push_back(std::move(plan));
    }
    std::size_t i = universe_size;
    while (i > 0 && label[i - 1] == universe_size) label[--i] = 0;
    if (i == 0) break;
    ++label[i - 1];
  }
  std::stable_sort(plans.begin(), plans.end(),
                   [](const IdPlan& a, const IdPlan& b) { return a.size() < b.size(); });
  return plans;
}

std::vector<PlanProbability> exact_posterior(const Session& session, const PredicateUniverse& universe,
                                             const Hyperparams& hp, const ValidityTest& validity) {
  session.check();
  hp.check();
  if (universe.size() > 4) throw TooLarge("exact posterior needs at most 4 predicates");
  const ObservedSession observed = observe(session, universe);
  for (const auto& obs : observed) {
    if (obs.size() > 3) throw TooLarge("exact posterior needs at most 3 mentions per utterance");
  }
  const double U = static_cast<double>(universe.size());
  const double e_beta = std::exp(hp.beta);

  std::vector<PlanProbability> out;
  std::vector<double> log_weights;
  for (IdPlan& plan : enumerate_plans(universe.size())) {
    std::vector<std::size_t> step_of(universe.size(), plan.size());
    std::size_t placed = 0;
    for (std::size_t r = 0; r < plan.size(); ++r) {
      for (PredicateId id : plan[r]) step_of[id] = r;
      placed += plan[r].size();
    }
    double lw = 0.0;
    if (validity && validity(plan)) lw += hp.alpha;
    for (const auto& obs : observed) {
      if (placed == 0) {
        lw = kNegInf;
        break;
      }
      const std::size_t n = obs.size();
      const std::size_t K = plan.size();
      std::size_t W = 0;
      {
        // Number of weak orderings of n items, by brute force over rank vectors.
        std::vector<int> r(n, 1);
        for (;;) {
          std::vector<int> sorted(r);
          std::sort(sorted.begin(), sorted.end());
          sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
          if (sorted.back() == static_cast<int>(sorted.size())) ++W;
          std::size_t i = n;
          while (i > 0 && r[i - 1] == static_cast<int>(n)) r[--i] = 1;
          if (i == 0) break;
          ++r[i - 1];
        }
      }
      double total = 0.0;
      std::vector<std::size_t> s(n, 0);
      for (;;) {
        double prob = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double size = static_cast<double>(plan[s[i]].size());
          const double in_step = step_of[obs.predicates[i]] == s[i] ? 1.0 : 0.0;
          prob *= size / static_cast<double>(placed);
          prob *= hp.w_p * in_step / size + (1.0 - hp.w_p) / U;
        }
        bool match = true;
        for (std::size_t i = 0; i < n && match; ++i) {
          for (std::size_t j = 0; j < n && match; ++j) {
            match = sign(s[i], s[j]) == (obs.ranks[i] < obs.ranks[j] ? -1 : (obs.ranks[i] > obs.ranks[j] ? 1 : 0));
          }
        }
        prob *= (match ? e_beta : 1.0) / (e_beta - 1.0 + static_cast<double>(W));
        total += prob;
        std::size_t i = n;
        while (i > 0 && s[i - 1] + 1 == K) s[--i] = 0;
        if (i == 0) break;
        ++s[i - 1];
      }
      lw += std::log(total);
    }
    log_weights.push_back(lw);
    out.push_back({std::move(plan), 0.0});
  }
  const double z = log_sum_exp(log_weights);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].probability = std::exp(log_weights[i] - z);
  return out;
}

double total_variation(std::span<const PlanProbability> p, std::span<const PlanProbability> q) {
  std::map<IdPlan, double> diff;
  for (const auto& x : p) diff[x.plan] += x.probability;
  for (const auto& x : q) diff[x.plan] -= x.probability;
  double tv = 0.0;
  for (const auto& [plan, d] : diff) tv += std::abs(d);
  return 0.5 * tv;
}

std::vector<PlanProbability> empirical_distribution(std::span<const IdPlan> plans) {
  std::vector<PlanProbability> out;
  std::unordered_map<IdPlan, std::size_t, IdPlanHash> index;
  for (const auto& plan : plans) {
    auto [it, fresh] = index.emplace(plan, out.size());
    if (fresh) out.push_back({plan, 0.0});
    out[it->second].probability += 1.0;
  }
  for (auto& x : out) x.probability /= static_cast<double>(plans.size());
  return out;
}

}  // namespace planinfer
