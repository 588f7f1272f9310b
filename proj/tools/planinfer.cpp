// planinfer: validate stepped plans, infer a team's plan from a tagged
// planning session, simulate sessions, and score inferred plans.
//
// Exit codes: 0 success, 1 input error, 2 invalid plan (validate only).
// PLANINFER_SEED sets the default --seed.

#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "planinfer/eval.hpp"
#include "planinfer/io.hpp"
#include "planinfer/pddl.hpp"
#include "planinfer/sampler.hpp"
#include "planinfer/simulator.hpp"
#include "planinfer/validator.hpp"

namespace {

using namespace planinfer;
using io::json;

std::uint64_t default_seed() {
  const char* env = std::getenv("PLANINFER_SEED");
  if (!env || !*env) return 0;
  try {
    std::size_t used = 0;
    const auto v = std::stoull(env, &used, 10);
    if (used != std::string(env).size()) throw std::invalid_argument(env);
    return v;
  } catch (const std::exception&) {
    throw Error(std::string("PLANINFER_SEED is not an unsigned integer: ") + env);
  }
}

std::shared_ptr<const pddl::World> load_world(const std::string& domain_path,
                                              const std::string& problem_path) {
  const pddl::Domain domain = pddl::parse_domain(io::read_file(domain_path));
  pddl::Problem problem = pddl::parse_problem(io::read_file(problem_path), domain);
  return std::make_shared<const pddl::World>(domain, std::move(problem));
}

void emit(const json& doc, const std::string& out) {
  const std::string text = doc.dump(2) + "\n";
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    io::write_file_atomic(out, text);
  }
}

struct PddlArgs {
  std::string domain;
  std::string problem;
  bool no_pddl = false;

  void add(CLI::App* cmd) {
    cmd->add_option("--domain", domain, "PDDL domain file");
    cmd->add_option("--problem", problem, "PDDL problem file");
    cmd->add_flag("--no-pddl", no_pddl, "Use an uninformative plan prior");
  }

  // Null when running without PDDL.
  std::shared_ptr<const pddl::World> world() const {
    const bool given = !domain.empty() || !problem.empty();
    if (no_pddl && given) throw Error("--no-pddl excludes --domain and --problem");
    if (no_pddl) return nullptr;
    if (domain.empty() || problem.empty()) {
      throw Error("--domain and --problem are required unless --no-pddl is given");
    }
    return load_world(domain, problem);
  }
};

struct HyperArgs {
  Hyperparams hp;

  void add(CLI::App* cmd) {
    cmd->add_option("--alpha", hp.alpha, "Log prior bonus of valid plans")->capture_default_str();
    cmd->add_option("--beta", hp.beta, "Log weight of a correctly reported order")->capture_default_str();
    cmd->add_option("--wp", hp.w_p, "Probability a mention comes from its step")->capture_default_str();
  }
};

int run_validate(const std::string& domain, const std::string& problem, const std::string& plan_path,
                 bool ignore_unknown) {
  const auto world = load_world(domain, problem);
  const SteppedPlan plan = io::plan_from_json(io::parse_json(io::read_file(plan_path), plan_path));
  const auto policy = ignore_unknown ? UnknownActionPolicy::Ignore : UnknownActionPolicy::Strict;
  const ValidationResult result = validate(*world, plan, policy);
  std::cout << io::validation_to_json(result).dump(2) << "\n";
  return result.valid() ? 0 : 2;
}

int main_impl(int argc, char** argv) {
  CLI::App app{"Infer a team's final plan from a tagged planning session"};
  app.require_subcommand(1);
  const std::uint64_t seed_default = default_seed();

  // validate
  auto* validate_cmd = app.add_subcommand("validate", "Check a stepped plan against a PDDL domain and problem");
  std::string v_domain, v_problem, v_plan;
  bool v_ignore = false;
  validate_cmd->add_option("DOMAIN", v_domain)->required();
  validate_cmd->add_option("PROBLEM", v_problem)->required();
  validate_cmd->add_option("PLAN", v_plan)->required();
  auto* strict_flag = validate_cmd->add_flag("--strict-actions", "Unknown actions invalidate the plan (default)");
  auto* ignore_flag = validate_cmd->add_flag("--ignore-unknown", v_ignore, "Skip predicates that are not actions");
  strict_flag->excludes(ignore_flag);

  // infer
  auto* infer_cmd = app.add_subcommand("infer", "Sample the posterior over plans for a session");
  std::string i_session, i_out, i_map;
  PddlArgs i_pddl;
  HyperArgs i_hyper;
  SamplerConfig sc;
  sc.seed = seed_default;
  std::size_t i_max_samples = 100;
  bool i_ignore = false;
  bool i_fixed = false;
  infer_cmd->add_option("SESSION", i_session)->required();
  i_pddl.add(infer_cmd);
  i_hyper.add(infer_cmd);
  infer_cmd->add_option("--gibbs", sc.gibbs_steps, "Gibbs sweeps")->capture_default_str();
  infer_cmd->add_option("--mh", sc.mh_steps_per_gibbs, "MH steps per sweep")->capture_default_str();
  infer_cmd->add_option("--thin", sc.thin, "Keep every thin-th MH state")->capture_default_str();
  infer_cmd->add_option("--burn-in", sc.burn_in_fraction, "Fraction of sweeps discarded")->capture_default_str();
  infer_cmd->add_option("--seed", sc.seed, "Random seed (default: PLANINFER_SEED or 0)");
  infer_cmd->add_option("--chains", sc.chains, "Independent chains, merged")->capture_default_str();
  infer_cmd->add_option("--max-samples", i_max_samples, "Samples listed in the output")->capture_default_str();
  infer_cmd->add_option("--predicate-map", i_map, "JSON map from dialog shorthand to actions");
  infer_cmd->add_flag("--ignore-unknown", i_ignore, "Skip predicates that are not actions when validating");
  infer_cmd->add_flag("--fixed-assignments", i_fixed, "MH ratio with step assignments held fixed");
  infer_cmd->add_option("--out", i_out, "Output file (default: stdout)");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic session from a plan");
  std::string s_plan, s_session_out, s_truth_out;
  SimConfig sim;
  sim.seed = seed_default;
  HyperArgs s_hyper;
  std::size_t s_distractors = 0;
  sim_cmd->add_option("PLAN", s_plan)->required();
  sim_cmd->add_option("--utterances", sim.utterance_count, "Utterances T")->capture_default_str();
  sim_cmd->add_option("--mean-len", sim.mean_length, "Mean of the length distribution")->capture_default_str();
  sim_cmd->add_option("--max-len", sim.max_length, "Longest utterance (<= 4)")->capture_default_str();
  sim_cmd->add_option("--distractors", s_distractors, "Off-plan predicates added to the universe")
      ->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "Random seed (default: PLANINFER_SEED or 0)");
  s_hyper.add(sim_cmd);
  sim_cmd->add_option("--out-session", s_session_out, "Session file (default: stdout)");
  sim_cmd->add_option("--out-truth", s_truth_out, "Ground-truth file");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Score an inferred plan against the truth");
  std::string e_inferred, e_truth, e_session, e_out, e_score = "map";
  eval_cmd->add_option("INFERRED", e_inferred, "Posterior summary or plan JSON")->required();
  eval_cmd->add_option("TRUTH", e_truth, "Ground-truth or plan JSON")->required();
  eval_cmd->add_option("SESSION", e_session)->required();
  eval_cmd->add_option("--score", e_score, "map or mean-over-samples")
      ->check(CLI::IsMember({"map", "mean-over-samples"}))
      ->capture_default_str();
  eval_cmd->add_option("--out", e_out, "Output file (default: stdout)");

  // exact
  auto* exact_cmd = app.add_subcommand("exact", "Exact posterior for a session over at most 4 predicates");
  std::string x_session, x_out;
  PddlArgs x_pddl;
  HyperArgs x_hyper;
  bool x_ignore = false;
  exact_cmd->add_option("SESSION", x_session)->required();
  x_pddl.add(exact_cmd);
  x_hyper.add(exact_cmd);
  exact_cmd->add_flag("--ignore-unknown", x_ignore, "Skip predicates that are not actions when validating");
  exact_cmd->add_option("--out", x_out, "Output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*validate_cmd) return run_validate(v_domain, v_problem, v_plan, v_ignore);

  if (*infer_cmd) {
    sc.collapse_assignments = !i_fixed;
    sc.unknown_action_policy = i_ignore ? UnknownActionPolicy::Ignore : UnknownActionPolicy::Strict;
    auto world = i_pddl.world();
    Session session = io::session_from_json(io::parse_json(io::read_file(i_session), i_session));
    if (!i_map.empty()) {
      if (!world) throw Error("--predicate-map needs --domain and --problem");
      session = io::apply_predicate_map(session, io::parse_json(io::read_file(i_map), i_map), *world);
    }
    i_hyper.hp.check();
    const PosteriorSummary summary = infer(session, world, i_hyper.hp, sc);
    emit(io::summary_to_json(summary, i_max_samples), i_out);
    return 0;
  }

  if (*sim_cmd) {
    sim.hyperparams = s_hyper.hp;
    sim.check();
    const SteppedPlan plan = io::plan_from_json(io::parse_json(io::read_file(s_plan), s_plan));
    Rng pick(sim.seed ^ 0x5bd1e995u);
    const PredicateUniverse universe = universe_with_distractors(plan, s_distractors, pick);
    const SimulatedSession out = generate_session(plan, universe, sim);
    emit(io::session_to_json(out.session), s_session_out);
    if (!s_truth_out.empty()) emit(io::truth_to_json(out.truth), s_truth_out);
    return 0;
  }

  if (*eval_cmd) {
    const json inferred = io::parse_json(io::read_file(e_inferred), e_inferred);
    const json truth_doc = io::parse_json(io::read_file(e_truth), e_truth);
    const SteppedPlan truth = truth_doc.contains("plan") ? io::truth_from_json(truth_doc).plan
                                                         : io::plan_from_json(truth_doc);
    if (truth.empty()) throw SchemaError("truth plan is empty");
    const Session session = io::session_from_json(io::parse_json(io::read_file(e_session), e_session));
    const PredicateUniverse mentioned = PredicateUniverse::from_session(session);

    Metrics m;
    if (e_score == "map" || !inferred.contains("samples")) {
      const SteppedPlan plan = inferred.contains("map_plan") ? io::plan_from_json(inferred.at("map_plan"))
                                                             : io::plan_from_json(inferred);
      m = evaluate(plan, truth, mentioned);
    } else {
      std::vector<Metrics> all;
      for (const auto& s : inferred.at("samples")) {
        all.push_back(evaluate(io::plan_from_json(s.at("plan")), truth, mentioned));
      }
      if (all.empty()) throw SchemaError("posterior summary lists no samples");
      m = mean(all);
    }
    emit(io::metrics_to_json(m), e_out);
    std::cerr << "diagnostic (not part of overall): recall " << m.recall << "\n";
    return 0;
  }

  if (*exact_cmd) {
    auto world = x_pddl.world();
    const Session session = io::session_from_json(io::parse_json(io::read_file(x_session), x_session));
    const PredicateUniverse universe = PredicateUniverse::from_session(session);
    ValidityTest validity;
    if (world) {
      auto validator = std::make_shared<const CompiledValidator>(
          world, universe.predicates(),
          x_ignore ? UnknownActionPolicy::Ignore : UnknownActionPolicy::Strict);
      validity = [validator](const IdPlan& plan) { return validator->validate(plan).valid(); };
    }
    json plans = json::array();
    for (const auto& p : exact_posterior(session, universe, x_hyper.hp, validity)) {
      plans.push_back({{"plan", io::plan_to_json(universe.to_stepped(p.plan))},
                       {"probability", p.probability}});
    }
    emit({{"plans", plans}}, x_out);
    return 0;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return main_impl(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "planinfer: " << e.what() << "\n";
    return 1;
  }
}
