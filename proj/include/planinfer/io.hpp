#pragma once

// JSON documents and file helpers shared by the command-line tool and tests.
//
//   predicate  ["name", "arg1", ...]            lowercase strings
//   plan       {"steps": [[predicate, ...], ...]}
//   session    {"utterances": [[[predicate, ...], ...], ...]}   utterance = groups
//   truth      {"plan": plan, "universe": [predicate, ...], "latents": [...]}
//   metrics    {"pct_inferred", "pct_noise_rej", "pct_seq", "overall"}

#include <cstddef>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "planinfer/eval.hpp"
#include "planinfer/model.hpp"
#include "planinfer/sampler.hpp"
#include "planinfer/simulator.hpp"
#include "planinfer/validator.hpp"

namespace planinfer::io {

using nlohmann::json;

// Throws Error when the file cannot be read.
std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

json parse_json(const std::string& text, const std::string& what);

// All readers throw SchemaError on malformed documents.
json to_json(const GroundedPredicate& p);
GroundedPredicate predicate_from_json(const json& j);

json plan_to_json(const SteppedPlan& plan);
SteppedPlan plan_from_json(const json& j);

json session_to_json(const Session& session);
Session session_from_json(const json& j);

json truth_to_json(const GroundTruth& truth);
GroundTruth truth_from_json(const json& j);

// At most `max_samples` samples are listed (all retained ones count toward
// the marginals and diagnostics).
json summary_to_json(const PosteriorSummary& summary, std::size_t max_samples);

json metrics_to_json(const Metrics& m);
Metrics metrics_from_json(const json& j);

json validation_to_json(const ValidationResult& result);

// Renames dialog shorthand to domain actions. The map has the form
//   {"st": [{"arg_types": ["robot", "room"], "action": "inspect"}, ...]}
// and an entry applies when every argument's object type is a subtype of the
// listed type. Predicates without a matching entry are left unchanged.
Session apply_predicate_map(const Session& session, const json& map, const pddl::World& world);

}  // namespace planinfer::io
