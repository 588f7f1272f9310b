#include <doctest.h>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace planinfer;
using planinfer::testing::P;

namespace {

// ({A1,A2},{A3},{A4,A5,A6}) over ids 0..5
StepPlan six() { return StepPlan::from_ids({{0, 1}, {2}, {3, 4, 5}}, 6, 6); }

Session one_utterance(std::vector<std::vector<GroundedPredicate>> groups) {
  return Session{{Utterance{std::move(groups)}}};
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("relative order examples") {
  CHECK(relative_order(std::vector<int>{2, 4}) == std::vector<int>{1, 2});
  CHECK(relative_order(std::vector<int>{5, 7, 2}) == std::vector<int>{2, 3, 1});
  CHECK(relative_order(std::vector<int>{3, 3, 1}) == std::vector<int>{2, 2, 1});
}

TEST_CASE("relative order properties") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<int> s(1 + rng() % 6);
    for (int& v : s) v = 1 + static_cast<int>(rng() % 8);
    const auto f = relative_order(s);
    CHECK(f == planinfer::testing::dense_rank_oracle(s));
    CHECK(relative_order(f) == f);
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (std::size_t j = 0; j < s.size(); ++j) {
        CHECK((s[i] < s[j]) == (f[i] < f[j]));
        CHECK((s[i] == s[j]) == (f[i] == f[j]));
      }
    }
  }
}

TEST_CASE("weak ordering counts") {
  CHECK(weak_ordering_count(1) == 1);
  CHECK(weak_ordering_count(2) == 3);
  CHECK(weak_ordering_count(3) == 13);
  CHECK(weak_ordering_count(4) == 75);
  for (std::size_t n = 1; n <= 5; ++n) {
    CHECK(weak_ordering_count(n) == planinfer::testing::weak_orderings_oracle(n).size());
  }
}

TEST_CASE("step pick") {
  const StepPlan plan = six();
  CHECK(step_pick_logprob(plan, 0) == doctest::Approx(std::log(2.0 / 6.0)));
  CHECK(std::exp(step_pick_logprob(plan, 0)) == doctest::Approx(2.0 / 6.0).epsilon(1e-15));
  CHECK(step_pick_logprob(plan, 4) == kNegInf);
  CHECK(step_pick_logprob(StepPlan::from_ids({{0, 1}}, 2, 2), 0) == 0.0);
  CHECK_THROWS_AS(step_pick_logprob(StepPlan(3, 3), 0), EmptyPlan);
}

TEST_CASE("step pick sums to one") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    StepPlan plan(6, 6);
    for (PredicateId id = 0; id < 6; ++id) {
      if (rng() % 3) plan.place(id, rng() % 6);
    }
    if (plan.placed_count() == 0) continue;
    double total = 0.0;
    for (std::size_t k = 0; k < 6; ++k) {
      if (plan.slot_size(k)) total += std::exp(step_pick_logprob(plan, k));
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("order weight") {
  const std::vector<std::size_t> s = {2, 4};
  CHECK(order_log_weight(std::vector<int>{1, 2}, s, 5.0) == 5.0);
  CHECK(order_log_weight(std::vector<int>{2, 1}, s, 5.0) == 0.0);
  CHECK_THROWS_AS(order_log_weight(std::vector<int>{1}, s, 5.0), LengthMismatch);
  CHECK(std::exp(order_log_normalizer(3, 5.0)) == doctest::Approx(std::exp(5.0) + 12.0).epsilon(1e-12));
}

TEST_CASE("order weights normalize over weak orderings") {
  std::mt19937_64 rng(2);
  for (std::size_t n = 1; n <= 4; ++n) {
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<std::size_t> s(n);
      for (auto& v : s) v = rng() % 5;
      double total = 0.0;
      for (const auto& o : planinfer::testing::weak_orderings_oracle(n)) {
        total += std::exp(order_log_weight(o, s, 5.0) - order_log_normalizer(n, 5.0));
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("emission") {
  const StepPlan plan = six();
  CHECK(std::exp(emission_logprob(plan, 6, 0, 0, 0.8)) == doctest::Approx(0.8 / 2 + 0.2 / 6).epsilon(1e-14));
  CHECK(std::exp(emission_logprob(plan, 6, 0, 2, 0.8)) == doctest::Approx(0.2 / 6).epsilon(1e-14));
  for (PredicateId i = 0; i < 6; ++i) {
    CHECK(std::exp(emission_logprob(plan, 6, 2, i, 0.0)) == doctest::Approx(1.0 / 6).epsilon(1e-14));
  }
}

TEST_CASE("emission sums to one over the universe") {
  const StepPlan plan = StepPlan::from_ids({{0, 3}, {5}, {1, 2, 7}}, 9, 9);
  for (double w : {0.0, 0.3, 0.8, 1.0}) {
    for (std::size_t j = 0; j < 3; ++j) {
      double total = 0.0;
      for (PredicateId i = 0; i < 9; ++i) total += std::exp(emission_logprob(plan, 9, j, i, w));
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("joint log posterior") {
  const Session session = one_utterance({{P("x", {})}});
  const PredicateUniverse u = PredicateUniverse::from_session(session);
  const ObservedSession obs = observe(session, u);
  const StepPlan plan = StepPlan::from_ids({{0}}, 1, 1);
  const Hyperparams hp;
  const StepAssignment s = {{0}};
  CHECK(joint_log_posterior(plan, s, obs, 1, hp, true) == doctest::Approx(hp.alpha + hp.beta));
  CHECK(joint_log_posterior(plan, s, obs, 1, hp, true) - joint_log_posterior(plan, s, obs, 1, hp, false) ==
        hp.alpha);
  Hyperparams flat = hp;
  flat.alpha = 0.0;
  CHECK(joint_log_posterior(plan, s, obs, 1, flat, true) == joint_log_posterior(plan, s, obs, 1, flat, false));

  const StepPlan wide = StepPlan::from_ids({{0}}, 3, 1);
  CHECK(joint_log_posterior(wide, {{2}}, obs, 1, hp, true) == kNegInf);
  ValidationResult ok;
  CHECK(joint_log_posterior(plan, s, obs, 1, hp, ok) == joint_log_posterior(plan, s, obs, 1, hp, true));
}

TEST_CASE("utterance likelihood matches brute force") {
  std::mt19937_64 rng(17);
  const Hyperparams hp{10.0, 5.0, 0.8};
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t U = 2 + rng() % 4;
    StepPlan plan(U, U);
    for (PredicateId id = 0; id < U; ++id) {
      if (rng() % 4) plan.place(id, rng() % U);
    }
    if (plan.placed_count() == 0) continue;
    Observation obs;
    const std::size_t n = 1 + rng() % 3;
    for (std::size_t i = 0; i < n; ++i) {
      obs.predicates.push_back(static_cast<PredicateId>(rng() % U));
      obs.ranks.push_back(1 + static_cast<int>(rng() % 2));
    }
    obs.ranks = relative_order(obs.ranks);
    const IdPlan compact = plan.compact();
    const StepPlan dense = StepPlan::from_ids(compact, compact.size(), U);
    double total = 0.0;
    std::vector<std::size_t> s(n, 0);
    for (;;) {
      double lw = order_log_weight(obs.ranks, s, hp.beta);
      for (std::size_t i = 0; i < n; ++i) {
        lw += step_pick_logprob(dense, s[i]) + emission_logprob(dense, U, s[i], obs.predicates[i], hp.w_p);
      }
      total += std::exp(lw);
      std::size_t i = n;
      while (i > 0 && s[i - 1] + 1 == compact.size()) s[--i] = 0;
      if (i == 0) break;
      ++s[i - 1];
    }
    CHECK(utterance_log_likelihood(compact, obs, U, hp) == doctest::Approx(std::log(total)).epsilon(1e-10));
    CHECK(utterance_log_likelihood(compact, obs, U, hp, true) ==
          doctest::Approx(std::log(total) - order_log_normalizer(n, hp.beta)).epsilon(1e-10));
  }
}

TEST_CASE("marginal log posterior adds the prior") {
  const Session session = one_utterance({{P("x", {}), P("y", {})}});
  const PredicateUniverse u = PredicateUniverse::from_session(session);
  const ObservedSession obs = observe(session, u);
  const Hyperparams hp;
  const IdPlan plan = {{0, 1}};
  CHECK(marginal_log_posterior(plan, obs, 2, hp, true) - marginal_log_posterior(plan, obs, 2, hp, false) ==
        doctest::Approx(hp.alpha));
  CHECK(marginal_log_posterior({}, obs, 2, hp, false) == kNegInf);
}

TEST_CASE("universe and session") {
  const Session session{{Utterance{{{P("b", {}), P("a", {})}, {P("b", {})}}}, Utterance{{{P("c", {})}}}}};
  const auto u = PredicateUniverse::from_session(session);
  REQUIRE(u.size() == 3);
  CHECK(u[0] == P("b", {}));
  CHECK(u[1] == P("a", {}));
  CHECK(u[2] == P("c", {}));
  CHECK_THROWS_AS(PredicateUniverse({P("a", {}), P("a", {})}), UniverseMismatch);
  CHECK_THROWS_AS(u.to_ids({{P("z", {})}}), UniverseMismatch);
  CHECK(u.to_ids({{P("c", {}), P("b", {})}, {}, {P("a", {})}}) == IdPlan{{0, 2}, {1}});

  const auto flat = session.utterances[0].flattened();
  REQUIRE(flat.size() == 3);
  CHECK(flat[2].rank == 2);

  const auto obs = observe(session, u);
  CHECK(obs[0].predicates == std::vector<PredicateId>{0, 1, 0});
  CHECK(obs[0].ranks == std::vector<int>{1, 1, 2});

  CHECK_THROWS_AS(Session{}.check(), EmptySession);
  CHECK_THROWS_AS((Session{{Utterance{}}}.check()), SchemaError);
  CHECK_THROWS_AS((Session{{Utterance{{{}}}}}.check()), SchemaError);
}

TEST_CASE("step plan bookkeeping") {
  StepPlan plan(4, 3);
  plan.place(0, 1);
  plan.place(2, 1);
  plan.place(1, 3);
  CHECK(plan.placed_count() == 3);
  CHECK(plan.nonempty_slot_count() == 2);
  CHECK(plan.compact() == IdPlan{{0, 2}, {1}});
  plan.swap_slots(1, 3);
  CHECK(plan.compact() == IdPlan{{1}, {0, 2}});
  plan.move_to(1, 3);
  CHECK(plan.nonempty_slot_count() == 1);
  plan.remove(0);
  CHECK_FALSE(plan.is_placed(0));
  CHECK(plan.invariants_hold());
  CHECK_THROWS(plan.place(2, 0));
  CHECK(StepPlan::from_ids({{1}, {0, 2}}, 4, 3).compact() == IdPlan{{1}, {0, 2}});
}

TEST_CASE("hyperparameter checks") {
  CHECK_NOTHROW(Hyperparams{}.check());
  CHECK_THROWS((Hyperparams{-1.0, 5.0, 0.8}.check()));
  CHECK_THROWS((Hyperparams{10.0, 5.0, 1.5}.check()));
}

}  // TEST_SUITE
