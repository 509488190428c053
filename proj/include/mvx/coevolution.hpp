#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mvx/core_model.hpp"
#include "mvx/delta.hpp"
#include "mvx/multiverse.hpp"

namespace mvx {

// Typed inter-multiverse relations. conformance and use carry built-in
// evaluators; implementation, refinement and binding are representable but
// declared-only: consistency queries over them raise "no evaluator".
struct LinkType {
  std::string name;
  bool has_evaluator = false;
};

const std::vector<LinkType>& link_type_registry();
const LinkType* find_link_type(std::string_view name);

struct CrossLink {
  std::string id;
  std::string type;
  ArtifactRef source; // the a of L(a, b)
  ArtifactRef target; // the b
  std::vector<std::string> uses; // use-link payload: "Class" or "Class.feature"

  bool operator==(const CrossLink&) const = default;
};

// id nonempty, type registered, endpoints in different multiverses
void validate_link(const CrossLink& link);

using MultiverseMap = std::map<std::string, Multiverse>;

struct LinkResult {
  std::string id;
  bool holds = true;
  std::vector<std::string> violations;
};

struct ConsistencyResult {
  bool holds = true;
  std::vector<LinkResult> per_link; // link id order
};

// The consistency predicate over two slices: every link of the given type
// from s1 into s2's multiverse must satisfy its semantic constraint, with
// the target resolved at s2's version (so the same link set can be
// evaluated against a hypothetical target slice). Vacuously true over an
// empty link set.
ConsistencyResult consistency(const MultiverseMap& universe, const SliceKey& s1,
                              const SliceKey& s2, const std::string& link_type,
                              const std::vector<CrossLink>& links);

struct TriggerCause {
  std::string artifact;
  std::string op;
  ImpactClass impact = ImpactClass::non_breaking;
  std::vector<std::string> affected_objects;
};

struct TriggerReport {
  std::vector<std::string> link_ids;
  SliceKey s1;
  SliceKey s2;
  SliceKey s2_prime;
  std::vector<std::string> path; // s2.version .. s2'.version
  bool consistent_before = false;
  bool consistent_after = false;
  bool triggered = false;
  std::vector<TriggerCause> causes;
};

// The trigger condition: co-evolution is needed iff consistency held before
// the transition and fails after it. The transition may be transitive; it
// must be a unique directed path in s2's multiverse. Causes come from
// classifying the delta composed along the path (recorded deltas on the
// transitions when present, structural diffs otherwise) against the source
// slice's instance data.
TriggerReport detect_trigger(const MultiverseMap& universe, const std::string& link_type,
                             const std::vector<CrossLink>& links, const SliceKey& s1,
                             const SliceKey& s2, const std::string& s2_prime_version);

enum class DecisionKind { select_links, default_value };

std::string_view to_string(DecisionKind k);

struct DecisionRequest {
  DecisionKind kind = DecisionKind::select_links;
  std::string class_name;
  std::string object_id; // empty for class-level requests
  std::string feature;
  std::vector<std::string> candidates; // source-feature order
  int min_keep = 0;
  int max_keep = kUnbounded;
  std::string constraint;  // e.g. "select <= 2"
  std::string value_type;  // for default_value requests
};

struct AutoStep {
  std::string op;
  std::vector<std::string> affected_objects;
  std::string resolution;
};

struct MigrationPlan {
  std::vector<AutoStep> auto_steps;
  std::vector<DecisionRequest> required_decisions;
};

struct Decision {
  DecisionKind kind = DecisionKind::select_links;
  std::string object_id;
  std::string class_name;
  std::string feature;
  std::vector<std::string> keep;
  std::optional<PrimitiveValue> value;
};

struct DecisionFile {
  std::vector<Decision> decisions;
};

struct Migration {
  ModelInstance migrated;
  // old object id -> new object id; total on surviving objects, identity on
  // objects untouched by any op
  std::map<std::string, std::string> correspondence;
};

// Classifies every op against the instance data and lists the decisions a
// migration would need: one select request per object over a narrowed or
// merged bound, one default-value request per feature that gains mandatory
// values. Requires a model conforming to the delta's source metamodel.
MigrationPlan plan_migration(const ModelInstance& m, const Metamodel& from_mm, const Delta& d);

// Executes the delta on the model. Decisions must answer the plan's
// requests exactly: merges concatenate surviving links in source-feature
// order, keep-sets filter them, renames rewrite slot keys, deletions drop
// slots and dangling links, defaults populate lower-bound copies. The
// result must conform to the evolved metamodel.
Migration migrate(const ModelInstance& m, const Metamodel& from_mm, const Delta& d,
                  const DecisionFile& decisions = {});

// Slices stay immutable: rebinding after a migration mints new links whose
// source advanced to the migrated slice and whose target follows the
// transition, with ids suffixed by the new version.
std::vector<CrossLink> rebind_links(const std::vector<CrossLink>& links, const SliceKey& old_source,
                                    const SliceKey& new_source,
                                    const std::string& new_target_version);

// C_L(s1', s2'): consistency after the co-evolution, over the rebound links.
ConsistencyResult restore_consistency_check(const MultiverseMap& universe, const SliceKey& s1_prime,
                                            const SliceKey& s2_prime, const std::string& link_type,
                                            const std::vector<CrossLink>& rebound_links);

} // namespace mvx
