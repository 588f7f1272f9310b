#include "planinfer/io.hpp"

#include <fstream>
#include <sstream>

namespace planinfer::io {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(what + ": " + e.what());
  }
}

namespace {

const json& member(const json& j, const char* key, const char* what) {
  if (!j.is_object() || !j.contains(key)) {
    throw SchemaError(std::string(what) + " needs a \"" + key + "\" member");
  }
  return j.at(key);
}

const json& array(const json& j, const char* what) {
  if (!j.is_array()) throw SchemaError(std::string(what) + " must be an array");
  return j;
}

}  // namespace

json to_json(const GroundedPredicate& p) {
  json j = json::array({p.name});
  for (const auto& a : p.args) j.push_back(a);
  return j;
}

GroundedPredicate predicate_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw SchemaError("predicate must be a non-empty array of strings");
  std::vector<std::string> parts;
  for (const auto& x : j) {
    if (!x.is_string()) throw SchemaError("predicate must be a non-empty array of strings");
    const auto s = x.get<std::string>();
    if (!pddl::is_identifier(s)) throw SchemaError("bad identifier \"" + s + "\" in predicate");
    parts.push_back(s);
  }
  return GroundedPredicate::make(parts.front(), {parts.begin() + 1, parts.end()});
}

json plan_to_json(const SteppedPlan& plan) {
  json steps = json::array();
  for (const auto& step : plan) {
    json s = json::array();
    for (const auto& p : step) s.push_back(to_json(p));
    steps.push_back(std::move(s));
  }
  return {{"steps", std::move(steps)}};
}

SteppedPlan plan_from_json(const json& j) {
  SteppedPlan plan;
  for (const auto& step : array(member(j, "steps", "plan"), "plan steps")) {
    auto& out = plan.emplace_back();
    for (const auto& p : array(step, "plan step")) out.push_back(predicate_from_json(p));
    if (out.empty()) throw SchemaError("plan step " + std::to_string(plan.size()) + " is empty");
  }
  return plan;
}

json session_to_json(const Session& session) {
  json utterances = json::array();
  for (const auto& u : session.utterances) {
    json groups = json::array();
    for (const auto& g : u.groups) {
      json group = json::array();
      for (const auto& p : g) group.push_back(to_json(p));
      groups.push_back(std::move(group));
    }
    utterances.push_back(std::move(groups));
  }
  return {{"utterances", std::move(utterances)}};
}

Session session_from_json(const json& j) {
  Session session;
  for (const auto& u : array(member(j, "utterances", "session"), "utterances")) {
    auto& utterance = session.utterances.emplace_back();
    for (const auto& g : array(u, "utterance")) {
      auto& group = utterance.groups.emplace_back();
      for (const auto& p : array(g, "group")) group.push_back(predicate_from_json(p));
    }
  }
  session.check();
  return session;
}

json truth_to_json(const GroundTruth& truth) {
  json universe = json::array();
  for (const auto& p : truth.universe.predicates()) universe.push_back(to_json(p));
  json latents = json::array();
  for (const auto& l : truth.latents) {
    json steps = json::array();
    for (std::size_t s : l.steps) steps.push_back(s + 1);
    json from_step = json::array();
    for (bool b : l.from_step) from_step.push_back(b);
    latents.push_back({{"steps", steps}, {"from_step", from_step}, {"order_kept", l.order_kept}});
  }
  return {{"plan", plan_to_json(truth.plan)}, {"universe", universe}, {"latents", latents}};
}

GroundTruth truth_from_json(const json& j) {
  GroundTruth truth;
  truth.plan = plan_from_json(member(j, "plan", "truth"));
  if (j.contains("universe")) {
    std::vector<GroundedPredicate> predicates;
    for (const auto& p : array(j.at("universe"), "universe")) predicates.push_back(predicate_from_json(p));
    try {
      truth.universe = PredicateUniverse(std::move(predicates));
    } catch (const UniverseMismatch& e) {
      throw SchemaError(e.what());
    }
  }
  if (j.contains("latents")) {
    for (const auto& l : array(j.at("latents"), "latents")) {
      auto& out = truth.latents.emplace_back();
      try {
        for (const auto& s : l.at("steps")) {
          const auto step = s.get<std::size_t>();
          if (step == 0) throw SchemaError("latent steps are 1-based");
          out.steps.push_back(step - 1);
        }
        for (const auto& b : l.at("from_step")) out.from_step.push_back(b.get<bool>());
        out.order_kept = l.at("order_kept").get<bool>();
      } catch (const json::exception& e) {
        throw SchemaError(std::string("latents: ") + e.what());
      }
    }
  }
  return truth;
}

json summary_to_json(const PosteriorSummary& summary, std::size_t max_samples) {
  json samples = json::array();
  for (std::size_t i = 0; i < summary.samples.size() && i < max_samples; ++i) {
    samples.push_back({{"plan", plan_to_json(summary.universe.to_stepped(summary.samples[i].plan))},
                       {"log_posterior", summary.samples[i].log_posterior}});
  }
  json marginals = json::array();
  for (std::size_t id = 0; id < summary.marginals.size(); ++id) {
    marginals.push_back({{"predicate", to_json(summary.universe[static_cast<PredicateId>(id)])},
                         {"absent", summary.marginals[id].absent},
                         {"at_step", summary.marginals[id].at_step}});
  }
  const auto& d = summary.diagnostics;
  return {{"map_plan", plan_to_json(summary.universe.to_stepped(summary.map_plan))},
          {"map_log_posterior", summary.map_log_posterior},
          {"map_valid", summary.map_valid},
          {"samples", samples},
          {"marginals", marginals},
          {"diagnostics",
           {{"acceptance_rate", d.acceptance_rate},
            {"retained", d.retained},
            {"proposals", d.proposals},
            {"chains", d.chains}}}};
}

json metrics_to_json(const Metrics& m) {
  return {{"pct_inferred", m.pct_inferred},
          {"pct_noise_rej", m.pct_noise_rej},
          {"pct_seq", m.pct_seq},
          {"overall", m.overall}};
}

Metrics metrics_from_json(const json& j) {
  Metrics m;
  try {
    m.pct_inferred = j.at("pct_inferred").get<double>();
    m.pct_noise_rej = j.at("pct_noise_rej").get<double>();
    m.pct_seq = j.at("pct_seq").get<double>();
    m.overall = j.at("overall").get<double>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("metrics: ") + e.what());
  }
  return m;
}

json validation_to_json(const ValidationResult& result) {
  if (result.valid()) return {{"valid", true}};
  const auto& f = *result.failure;
  return {{"valid", false},
          {"step", f.step},
          {"reason", std::string(to_string(f.reason))},
          {"detail", f.detail}};
}

Session apply_predicate_map(const Session& session, const json& map, const pddl::World& world) {
  if (!map.is_object()) throw SchemaError("predicate map must be an object");
  const pddl::Domain& domain = world.domain();
  auto rename = [&](const GroundedPredicate& p) {
    auto it = map.find(p.name);
    if (it == map.end()) return p;
    for (const auto& entry : array(*it, "predicate map entry list")) {
      const auto& types = array(member(entry, "arg_types", "predicate map entry"), "arg_types");
      const auto& action = member(entry, "action", "predicate map entry");
      if (!action.is_string()) throw SchemaError("predicate map action must be a string");
      if (types.size() != p.args.size()) continue;
      bool match = true;
      for (std::size_t i = 0; i < p.args.size() && match; ++i) {
        const auto type = world.object_type(p.args[i]);
        match = type && types[i].is_string() &&
                domain.is_subtype(*type, pddl::to_lower(types[i].get<std::string>()));
      }
      if (match) return GroundedPredicate::make(action.get<std::string>(), p.args);
    }
    return p;
  };
  Session out = session;
  for (auto& u : out.utterances) {
    for (auto& g : u.groups) {
      for (auto& p : g) p = rename(p);
    }
  }
  return out;
}

}  // namespace planinfer::io
