#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvx/coevolution.hpp"
#include "mvx/constraint_lang.hpp"
#include "mvx/core_model.hpp"
#include "mvx/delta.hpp"
#include "mvx/multiverse.hpp"
#include "mvx/type_system.hpp"

namespace mvx::io {

using json = nlohmann::json;

// Parses a file as JSON; errors name the file.
json load_json_file(const std::filesystem::path& path);

// --- artifact payload formats (strict: unknown keys rejected) -------------

json to_json(const Metamodel& mm);
Metamodel metamodel_from_json(const json& j, const std::string& context);

json to_json(const ModelInstance& m);
ModelInstance model_from_json(const json& j, const std::string& context);

// Sniffs the artifact kind: JSON with "classes" parses as a metamodel, JSON
// with "objects" as a model, anything else is an opaque blob.
Artifact parse_artifact(const std::string& bytes, const std::string& file_name,
                        const std::string& context);

std::string artifact_to_bytes(const Artifact& artifact);

// --- deltas, hints, links, decisions ---------------------------------------

json to_json(const Delta& d);
Delta delta_from_json(const json& j, const std::string& context);

DiffHints hints_from_json(const json& j, const std::string& context);

json links_to_json(const std::vector<CrossLink>& links);
std::vector<CrossLink> links_from_json(const json& j, const std::string& context);

json to_json(const DecisionFile& d);
DecisionFile decisions_from_json(const json& j, const std::string& context);

// --- graph manifest ---------------------------------------------------------

struct GraphManifest {
  std::string name;
  struct SliceEntry {
    std::string version;
    std::map<std::string, std::string> artifacts; // name -> relative path
  };
  std::vector<SliceEntry> slices;
  struct TransitionEntry {
    std::string from;
    std::string to;
    std::string rationale;
    std::map<std::string, std::string> delta_refs; // artifact -> delta file
  };
  std::vector<TransitionEntry> transitions;
};

json to_json(const GraphManifest& g);
GraphManifest graph_from_json(const json& j, const std::string& context);

// --- report serializations (the --json shapes) ------------------------------

json to_json(const ConformanceReport& r);
json to_json(const ConsistencyResult& r);
json to_json(const ClosednessReport& r);
json to_json(const TriggerReport& r);
json to_json(const MigrationPlan& p);
json to_json(const EvalResult& r);
json to_json(const TypeReport& r);
json to_json(const Feature& f);

} // namespace mvx::io
