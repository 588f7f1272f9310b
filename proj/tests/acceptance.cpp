// Acceptance runner: one PASS/FAIL line per criterion, tolerances fixed here.
// Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <string>

#include "planinfer/eval.hpp"
#include "planinfer/io.hpp"
#include "planinfer/sampler.hpp"
#include "planinfer/simulator.hpp"
#include "support.hpp"

using namespace planinfer;
using planinfer::testing::load_world;
using planinfer::testing::rescue_plan;

namespace {

// Criterion 1
constexpr int kExactConfigs = 24;
constexpr std::size_t kExactGibbs = 2400;  // 1200 kept sweeps x 20 = 24000 samples
constexpr std::size_t kExactMh = 100;
constexpr std::size_t kExactThin = 5;
constexpr double kExactTv = 0.05;
// Criterion 4 and 5
constexpr int kSeeds = 10;
constexpr std::size_t kUtterances = 30;
constexpr std::size_t kDistractors = 4;
constexpr double kOverallFloor = 75.0;
constexpr double kApproxSeq = 5.0;   // |PDDL-1 - PDDL-2| on mean %Seq
constexpr double kSeqDeficit = 5.0;  // PDDL minus no-PDDL on mean %Seq
// Criterion 6
constexpr int kMoves = 1000000;
constexpr int kReachPairs = 100;
constexpr double kFlatTv = 0.05;
constexpr double kNormTol = 1e-9;
constexpr double kSumTol = 1e-12;

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(double v, int digits = 2) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

GroundedPredicate parse_pred(const std::string& text) {
  std::istringstream in(text);
  std::string name;
  in >> name;
  std::vector<std::string> args;
  for (std::string a; in >> a;) args.push_back(a);
  return GroundedPredicate::make(name, args);
}

SteppedPlan plan_of(std::initializer_list<std::initializer_list<const char*>> steps) {
  SteppedPlan out;
  for (const auto& s : steps) {
    auto& step = out.emplace_back();
    for (const char* p : s) step.push_back(parse_pred(p));
  }
  return out;
}

// ---------------------------------------------------------------------------

void criterion_exact_posterior() {
  const auto world = load_world("rescue.domain.pddl", "mini.problem.pddl");
  const std::vector<GroundedPredicate> pool = {parse_pred("inspect rr a"), parse_pred("assess rm a"),
                                               parse_pred("inspect br a"), parse_pred("fix mech b")};
  Rng rng(2024);
  double worst = 0.0;
  int passed = 0;
  for (int c = 0; c < kExactConfigs; ++c) {
    const std::size_t T = 2 + static_cast<std::size_t>(c % 3);
    const double alpha = (c / 3) % 2 == 0 ? 0.0 : 10.0;
    // The first two pool entries form the only valid plans, keep them in.
    std::vector<GroundedPredicate> preds = {pool[0], pool[1], pool[2 + rng() % 2]};
    Session session;
    for (;;) {
      session.utterances.clear();
      for (std::size_t t = 0; t < T; ++t) {
        Utterance u;
        const std::size_t n = 1 + rng() % 3;
        std::vector<int> ranks(n);
        for (auto& r : ranks) r = 1 + static_cast<int>(rng() % n);
        ranks = relative_order(ranks);
        const int groups = *std::max_element(ranks.begin(), ranks.end());
        u.groups.resize(static_cast<std::size_t>(groups));
        for (std::size_t i = 0; i < n; ++i) {
          auto& g = u.groups[static_cast<std::size_t>(ranks[i] - 1)];
          const auto& p = preds[rng() % 3];
          if (std::find(g.begin(), g.end(), p) == g.end()) g.push_back(p);
        }
        session.utterances.push_back(u);
      }
      if (PredicateUniverse::from_session(session).size() == 3) break;
    }
    const PredicateUniverse universe = PredicateUniverse::from_session(session);
    const Hyperparams hp{alpha, 5.0, 0.8};
    auto validator = std::make_shared<const CompiledValidator>(world, universe.predicates(),
                                                               UnknownActionPolicy::Strict);
    const ValidityTest validity = [validator](const IdPlan& p) { return validator->validate(p).valid(); };
    const auto exact = exact_posterior(session, universe, hp, validity);

    SamplerConfig config;
    config.gibbs_steps = kExactGibbs;
    config.mh_steps_per_gibbs = kExactMh;
    config.thin = kExactThin;
    config.seed = 100 + static_cast<std::uint64_t>(c);
    const auto summary = infer(session, universe, PlanPrior(validity, alpha), hp, config);
    std::vector<IdPlan> plans;
    for (const auto& s : summary.samples) plans.push_back(s.plan);
    const double tv = total_variation(exact, empirical_distribution(plans));
    worst = std::max(worst, tv);
    if (tv < kExactTv && plans.size() >= 20000) ++passed;
  }
  report(1, passed == kExactConfigs,
         std::to_string(passed) + "/" + std::to_string(kExactConfigs) + " configs within TV " + fmt(kExactTv) +
             ", worst TV " + fmt(worst, 4));
}

// ---------------------------------------------------------------------------

void criterion_validator_oracle() {
  const auto world = planinfer::testing::rescue_world();
  const SteppedPlan base = rescue_plan();
  std::vector<SteppedPlan> corpus;
  // valid
  corpus.push_back(base);
  {
    SteppedPlan p = base;
    p.push_back({parse_pred("inspect rr a")});
    corpus.push_back(p);
  }
  corpus.push_back(plan_of({{"inspect rr a", "inspect br c"},
                            {"inspect rr b", "inspect br d", "assess rm a", "assess bm c"},
                            {"inspect rr e", "inspect br g", "fix mech b"},
                            {"inspect rr f", "inspect br h", "assess rm e", "assess bm g", "fix mech d"},
                            {"fix mech f"},
                            {"fix mech h"}}));
  corpus.push_back(plan_of({{"inspect rr a"}, {"inspect rr b"}, {"inspect rr c"}, {"inspect rr d"},
                            {"inspect rr e"}, {"inspect rr f"}, {"inspect rr g"}, {"inspect rr h"},
                            {"assess rm a", "assess bm c", "fix mech b"},
                            {"assess rm e", "assess bm g", "fix mech d"},
                            {"fix mech f"},
                            {"fix mech h"}}));
  // precondition failures
  corpus.push_back(plan_of({{"assess rm a"}}));
  corpus.push_back(plan_of({{"inspect rr a", "assess rm a"}}));  // same-step dependency
  corpus.push_back(plan_of({{"inspect rr b"}, {"fix mech a"}}));  // no valve in a
  corpus.push_back(plan_of({{"inspect rr a"}, {"assess rm b"}}));  // no patient in b
  {
    SteppedPlan p = base;
    std::swap(p[0], p[1]);
    corpus.push_back(p);
  }
  {
    SteppedPlan p = base;
    p.insert(p.begin(), {parse_pred("fix mech h")});
    corpus.push_back(p);
  }
  // mutex failures
  corpus.push_back(plan_of({{"inspect rr a", "inspect rr b"}}));
  corpus.push_back(plan_of({{"inspect rr a", "inspect br b", "inspect rr c"}}));
  corpus.push_back(plan_of({{"inspect rr a", "inspect br b"}, {"fix mech b", "fix mech b"}}));
  corpus.push_back(plan_of({{"inspect rr a", "inspect br c"}, {"assess rm a", "assess rm c"}}));
  {
    SteppedPlan p = base;
    p[2].push_back(parse_pred("inspect rr a"));  // rr twice in step 3
    corpus.push_back(p);
  }
  {
    SteppedPlan p = base;
    p[4].push_back(parse_pred("assess bm a"));  // bm twice in step 5
    corpus.push_back(p);
  }
  corpus.push_back(plan_of({{"inspect rr b", "inspect br d"}, {"fix mech b", "fix mech d"}}));
  // goal failures
  corpus.push_back(SteppedPlan{});
  {
    SteppedPlan p = base;
    p.pop_back();
    corpus.push_back(p);
  }
  {
    SteppedPlan p = base;
    p[3].erase(p[3].begin() + 2);  // assess rm e never happens
    corpus.push_back(p);
  }
  corpus.push_back(plan_of({{"inspect rr a", "inspect br b"}, {"assess rm a", "fix mech b"}}));
  // unknown actions
  {
    SteppedPlan p = base;
    p[0].push_back(parse_pred("sendto rr a"));
    corpus.push_back(p);
  }
  corpus.push_back(plan_of({{"inspect rm a"}}));

  std::map<std::string, int> kinds;
  int agree = 0;
  for (const auto& plan : corpus) {
    const auto r = validate(*world, plan, UnknownActionPolicy::Strict);
    ++kinds[r.valid() ? std::string("valid") : std::string(to_string(r.failure->reason))];
    if (r.valid() == planinfer::testing::interleaving_oracle(*world, plan)) ++agree;
  }
  std::string mix;
  for (const auto& [k, n] : kinds) mix += " " + k + "=" + std::to_string(n);
  const bool covered = kinds.size() >= 5;
  report(2, agree == static_cast<int>(corpus.size()) && corpus.size() >= 20 && covered,
         std::to_string(agree) + "/" + std::to_string(corpus.size()) + " plans agree with the oracle;" + mix);
}

// ---------------------------------------------------------------------------

void criterion_micro_examples() {
  bool ok = true;
  std::string detail;
  auto check = [&](bool cond, const char* what) {
    if (!cond) {
      ok = false;
      detail += std::string(" failed:") + what;
    }
  };
  check(relative_order(std::vector<int>{2, 4}) == std::vector<int>{1, 2}, "f(2,4)");
  check(relative_order(std::vector<int>{5, 7, 2}) == std::vector<int>{2, 3, 1}, "f(5,7,2)");
  const StepPlan six = StepPlan::from_ids({{0, 1}, {2}, {3, 4, 5}}, 3, 6);
  check(step_pick_logprob(six, 0) == std::log(2.0 / 6.0), "pick 2/6");
  const double alpha = 10.0;
  check(prior_log_weight(true, alpha) - prior_log_weight(false, alpha) == alpha, "prior gap");
  const ObservedSession obs = {Observation{{0, 2}, {1, 2}}};
  const StepAssignment s = {{0, 1}};
  const Hyperparams hp{alpha, 5.0, 0.8};
  check(joint_log_posterior(six, s, obs, 6, hp, true) - joint_log_posterior(six, s, obs, 6, hp, false) == alpha,
        "joint gap");
  report(3, ok, ok ? "f(2,4)=(1,2), f(5,7,2)=(2,3,1), pick=2/6, prior gap=alpha, exact" : detail);
}

// ---------------------------------------------------------------------------

struct RunSet {
  std::vector<Metrics> pddl, pddl1, pddl2, none;
};

RunSet run_recovery() {
  const auto world = planinfer::testing::rescue_world();
  const auto world1 = load_world("rescue.domain.pddl", "rescue_pddl1.problem.pddl");
  const auto world2 = load_world("rescue_pddl2.domain.pddl", "rescue.problem.pddl");
  const SteppedPlan plan = rescue_plan();
  RunSet out;
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng pick(static_cast<std::uint64_t>(seed) ^ 0x5bd1e995u);
    const PredicateUniverse universe = universe_with_distractors(plan, kDistractors, pick);
    SimConfig sim;
    sim.utterance_count = kUtterances;
    sim.seed = static_cast<std::uint64_t>(seed);
    const auto session = generate_session(plan, universe, sim).session;
    const PredicateUniverse mentioned = PredicateUniverse::from_session(session);
    SamplerConfig config;
    config.seed = static_cast<std::uint64_t>(seed);
    const Hyperparams hp;
    auto score = [&](std::shared_ptr<const pddl::World> w) {
      const auto summary = infer(session, std::move(w), hp, config);
      return evaluate(summary.universe.to_stepped(summary.map_plan), plan, mentioned);
    };
    out.pddl.push_back(score(world));
    out.pddl1.push_back(score(world1));
    out.pddl2.push_back(score(world2));
    out.none.push_back(score(nullptr));
    std::printf("  seed %d overall: pddl %s  pddl-1 %s  pddl-2 %s  none %s\n", seed,
                fmt(out.pddl.back().overall).c_str(), fmt(out.pddl1.back().overall).c_str(),
                fmt(out.pddl2.back().overall).c_str(), fmt(out.none.back().overall).c_str());
    std::fflush(stdout);
  }
  return out;
}

void criterion_recovery(const RunSet& runs) {
  const Metrics a = mean(runs.pddl);
  const Metrics n = mean(runs.none);
  report(4, a.overall >= kOverallFloor && a.overall >= n.overall,
         "mean overall PDDL " + fmt(a.overall) + " (inferred " + fmt(a.pct_inferred) + ", noise rejection " +
             fmt(a.pct_noise_rej) + ", seq " + fmt(a.pct_seq) + "), no-PDDL " + fmt(n.overall) + ", floor " +
             fmt(kOverallFloor));
}

void criterion_degraded(const RunSet& runs) {
  const double full = mean(runs.pddl).pct_seq;
  const double one = mean(runs.pddl1).pct_seq;
  const double two = mean(runs.pddl2).pct_seq;
  const double none = mean(runs.none).pct_seq;
  const bool order = full >= one && full >= two;
  const bool close = std::abs(one - two) <= kApproxSeq;
  const bool above = one > none && two > none;
  const bool deficit = full - none >= kSeqDeficit;
  std::string detail = "mean %Seq PDDL " + fmt(full) + ", PDDL-1 " + fmt(one) + ", PDDL-2 " + fmt(two) +
                       ", no-PDDL " + fmt(none) + ";";
  detail += std::string(" PDDL>=degraded ") + (order ? "yes" : "no");
  detail += std::string(", |PDDL-1 - PDDL-2|<=") + fmt(kApproxSeq, 0) + " " + (close ? "yes" : "no");
  detail += std::string(", degraded>no-PDDL ") + (above ? "yes" : "no");
  detail += std::string(", deficit>=") + fmt(kSeqDeficit, 0) + " " + (deficit ? "yes" : "no");
  report(5, order && close && above && deficit, detail);
}

// ---------------------------------------------------------------------------

using Layout = std::vector<int>;

Layout layout_of(const StepPlan& plan) {
  Layout out;
  for (PredicateId id = 0; id < plan.universe_size(); ++id) {
    const auto k = plan.slot_of(id);
    out.push_back(k ? static_cast<int>(*k) : -1);
  }
  return out;
}

StepPlan from_layout(const Layout& l) {
  StepPlan plan(l.size(), l.size());
  for (PredicateId id = 0; id < l.size(); ++id) {
    if (l[id] >= 0) plan.place(id, static_cast<std::size_t>(l[id]));
  }
  return plan;
}

void criterion_properties() {
  std::vector<std::string> failed;
  Rng rng(77);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // emission sums to one over the universe
  {
    bool ok = true;
    const StepPlan plan = StepPlan::from_ids({{0, 3}, {5}, {1, 2, 7}}, 9, 9);
    for (double w : {0.0, 0.5, 0.8, 1.0}) {
      for (std::size_t j = 0; j < 3; ++j) {
        double total = 0.0;
        for (PredicateId i = 0; i < 9; ++i) total += std::exp(emission_logprob(plan, 9, j, i, w));
        ok = ok && std::abs(total - 1.0) < kSumTol;
      }
    }
    if (!ok) failed.push_back("emission");
  }
  // order mixture sums to one over weak orderings
  {
    bool ok = true;
    for (std::size_t n = 1; n <= 4; ++n) {
      for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::size_t> s(n);
        for (auto& v : s) v = rng() % 4;
        double total = 0.0;
        for (const auto& o : planinfer::testing::weak_orderings_oracle(n)) {
          total += std::exp(order_log_weight(o, s, 5.0) - order_log_normalizer(n, 5.0));
        }
        ok = ok && std::abs(total - 1.0) < kSumTol;
      }
    }
    if (!ok) failed.push_back("order mixture");
  }
  // relative order idempotent and order preserving
  {
    bool ok = true;
    for (int trial = 0; trial < 2000; ++trial) {
      std::vector<int> s(1 + rng() % 6);
      for (int& v : s) v = static_cast<int>(rng() % 9);
      const auto f = relative_order(s);
      ok = ok && relative_order(f) == f && f == planinfer::testing::dense_rank_oracle(s);
      for (std::size_t i = 0; i < s.size(); ++i) {
        for (std::size_t j = 0; j < s.size(); ++j) ok = ok && ((s[i] < s[j]) == (f[i] < f[j]));
      }
    }
    if (!ok) failed.push_back("relative order");
  }
  // invariants under a million accepted moves (flat target: every non-trivial proposal)
  {
    StepPlan plan(8, 8);
    bool ok = true;
    int accepted = 0;
    while (accepted < kMoves) {
      const Proposal p = propose(plan, rng);
      if (p.move.kind == MoveKind::NoOp) continue;
      apply_move(plan, p.move);
      ++accepted;
      if (accepted % 997 == 0) ok = ok && plan.invariants_hold();
    }
    if (!(ok && plan.invariants_hold())) failed.push_back("invariants");
  }
  // reachability between random layouts
  {
    int reached = 0;
    const std::size_t U = 4;
    for (int pair = 0; pair < kReachPairs; ++pair) {
      Layout from(U), to(U);
      for (auto& v : from) v = static_cast<int>(rng() % (U + 1)) - 1;
      for (auto& v : to) v = static_cast<int>(rng() % (U + 1)) - 1;
      std::set<Layout> seen = {from};
      std::queue<Layout> frontier;
      frontier.push(from);
      while (!frontier.empty() && !seen.count(to)) {
        StepPlan plan = from_layout(frontier.front());
        frontier.pop();
        std::vector<Move> moves;
        for (PredicateId u = 0; u < U; ++u) {
          if (auto k = plan.slot_of(u)) {
            if (*k > 0) moves.push_back({MoveKind::ShiftLeft, u, *k, 0});
            if (*k + 1 < U) moves.push_back({MoveKind::ShiftRight, u, *k, 0});
            moves.push_back({MoveKind::Remove, u, *k, 0});
          } else {
            for (std::size_t j = 0; j < U; ++j) moves.push_back({MoveKind::Insert, u, j, 0});
          }
        }
        for (std::size_t i = 0; i < U; ++i) {
          for (std::size_t j = i + 1; j < U; ++j) moves.push_back({MoveKind::SwapSlots, std::nullopt, i, j});
        }
        for (const Move& m : moves) {
          const Move undo = apply_move(plan, m);
          if (seen.insert(layout_of(plan)).second) frontier.push(layout_of(plan));
          apply_move(plan, undo);
        }
      }
      reached += seen.count(to) ? 1 : 0;
    }
    if (reached != kReachPairs) failed.push_back("reachability");
  }
  // determinism under a fixed seed
  {
    const SteppedPlan plan = rescue_plan();
    Rng pick(3);
    const auto universe = universe_with_distractors(plan, 4, pick);
    SimConfig sim;
    sim.seed = 5;
    const auto a = generate_session(plan, universe, sim).session;
    const auto b = generate_session(plan, universe, sim).session;
    SamplerConfig config;
    config.gibbs_steps = 100;
    config.mh_steps_per_gibbs = 100;
    config.seed = 8;
    const auto world = planinfer::testing::rescue_world();
    const auto x = io::summary_to_json(infer(a, world, Hyperparams{}, config), 1000).dump();
    const auto y = io::summary_to_json(infer(b, world, Hyperparams{}, config), 1000).dump();
    if (!(a == b && x == y)) failed.push_back("determinism");
  }
  // exact posterior normalization
  {
    bool ok = true;
    const std::vector<GroundedPredicate> pool = {parse_pred("a"), parse_pred("b"), parse_pred("c")};
    for (int trial = 0; trial < 20; ++trial) {
      Session s;
      for (int t = 0; t < 3; ++t) {
        Utterance u;
        u.groups.emplace_back();
        for (std::size_t i = 0, n = 1 + rng() % 3; i < n; ++i) {
          const auto& p = pool[rng() % 3];
          if (std::find(u.groups[0].begin(), u.groups[0].end(), p) == u.groups[0].end()) u.groups[0].push_back(p);
        }
        s.utterances.push_back(u);
      }
      double total = 0.0;
      for (const auto& p : exact_posterior(s, PredicateUniverse::from_session(s), Hyperparams{0.0, 5.0, 0.8})) {
        total += p.probability;
      }
      ok = ok && std::abs(total - 1.0) < kNormTol;
    }
    if (!ok) failed.push_back("exact normalization");
  }
  // flat target: the proposal with its Hastings terms keeps layouts uniform
  {
    const std::size_t U = 3;
    StepPlan plan(U, U);
    std::map<Layout, double> counts;
    const int steps = 1000000;
    for (int i = 0; i < steps; ++i) {
      const Proposal p = propose(plan, rng);
      if (std::log(unit(rng)) < p.log_q_ratio) apply_move(plan, p.move);
      counts[layout_of(plan)] += 1.0;
    }
    const double states = std::pow(static_cast<double>(U + 1), static_cast<double>(U));
    double tv = 0.0;
    for (const auto& [l, c] : counts) tv += std::abs(c / steps - 1.0 / states);
    tv += (states - static_cast<double>(counts.size())) / states;
    if (!(0.5 * tv < kFlatTv)) failed.push_back("flat target");
  }

  std::string detail = "8 property checks";
  if (!failed.empty()) {
    detail += ", failed:";
    for (const auto& f : failed) detail += " " + f;
  }
  report(6, failed.empty(), detail);
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  criterion_exact_posterior();
  criterion_validator_oracle();
  criterion_micro_examples();
  const RunSet runs = run_recovery();
  criterion_recovery(runs);
  criterion_degraded(runs);
  criterion_properties();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%d of 6 criteria failed (%s s)\n", failures, fmt(secs, 0).c_str());
  return failures;
}
