#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mvx/core_model.hpp"
#include "mvx/delta.hpp"

namespace mvx {

struct CrossLink;

enum class ArtifactKind { metamodel, model, blob };

std::string_view to_string(ArtifactKind k);

// Payloads are shared immutable values so slices and composites stay cheap
// to copy.
struct Artifact {
  ArtifactKind kind = ArtifactKind::blob;
  std::shared_ptr<const Metamodel> metamodel;
  std::shared_ptr<const ModelInstance> model;
  std::shared_ptr<const std::string> blob;
  std::string file_name;               // basename inside the slice directory
  std::filesystem::path source_path;   // where the bytes live, when stored

  static Artifact of(Metamodel mm, std::string file = "");
  static Artifact of(ModelInstance m, std::string file = "");
  static Artifact of_blob(std::string bytes, std::string file = "");
};

bool payload_equal(const Artifact& a, const Artifact& b);

// (multiverse, version, artifact) coordinate of a link endpoint.
struct ArtifactRef {
  std::string multiverse;
  std::string version;
  std::string artifact;

  bool operator==(const ArtifactRef&) const = default;
  auto operator<=>(const ArtifactRef&) const = default;
  std::string to_string() const { return multiverse + "@" + version + ":" + artifact; }
};

struct SliceKey {
  std::string multiverse;
  std::string version;

  bool operator==(const SliceKey&) const = default;
  auto operator<=>(const SliceKey&) const = default;
  std::string to_string() const { return multiverse + "@" + version; }
};

struct InternalRef {
  std::string source_artifact;
  std::string target_artifact;
  std::string ref_kind;

  bool operator==(const InternalRef&) const = default;
};

// An immutable snapshot of a design state: named artifacts plus the
// references between them.
struct Slice {
  std::string version;
  std::map<std::string, Artifact> artifacts;
  std::vector<InternalRef> internal_refs;
};

struct DesignTransition {
  std::string from;
  std::string to;
  std::string rationale;
  // artifact name -> repo-relative delta file, for transitions that carry
  // a recorded semantic delta
  std::map<std::string, std::string> delta_refs;
  // the recorded deltas themselves, loaded alongside the graph
  std::map<std::string, Delta> deltas;

  bool operator==(const DesignTransition&) const = default;

  // the evolution links of this transition: recorded deltas for changed
  // artifacts, identity correspondences otherwise
  std::vector<EvolutionLink> evolution_links(const Slice& from_slice,
                                             const Slice& to_slice) const;
};

// The version DAG of one artifact family: nodes are slices, edges are
// design transitions.
struct Multiverse {
  std::string name;
  std::map<std::string, Slice> slices;
  std::vector<DesignTransition> transitions;

  const Slice* find_slice(std::string_view version) const;
  std::vector<std::string> parents(const std::string& version) const;
  std::vector<std::string> children(const std::string& version) const;

  // Kahn order with lexicographic tie-break; throws on a cycle.
  std::vector<std::string> topological_order() const;
};

// Adds a fresh slice with one transition per parent; acyclicity is preserved
// by construction. Throws on a duplicate version or unknown parent.
Multiverse add_slice(Multiverse mv, const std::string& version,
                     std::map<std::string, Artifact> artifacts,
                     const std::vector<std::string>& parents, const std::string& rationale = "",
                     std::map<std::string, Delta> recorded_deltas = {},
                     std::vector<InternalRef> internal_refs = {});

// Lowest common ancestor under transition edges (ancestry is reflexive).
// With merge slices the deepest common ancestor wins; ties break to the
// lexicographically smallest label. Throws when no common ancestor exists.
std::string lca(const Multiverse& mv, const std::string& a, const std::string& b);

// Minimal spanning subtree of the version DAG containing the explicit
// labels: the union, over all pairs, of the directed paths from the pair's
// LCA down to each member. Returned in topological order. Ambiguous merge
// ancestry (several deepest ancestors, or several directed paths) is an
// error naming the candidates.
std::vector<std::string> partial_multiverse(const Multiverse& mv,
                                            const std::vector<std::string>& explicit_labels);

// A workspace combining at most one slice per multiverse.
struct CompositeSlice {
  std::vector<SliceKey> members;
  std::map<std::string, std::string> selected_version; // multiverse -> version
  std::map<std::string, Artifact> index;               // "multiverse:artifact" -> payload

  const Artifact* find(const std::string& multiverse, const std::string& artifact) const;
};

CompositeSlice compose(const std::vector<std::pair<const Multiverse*, std::string>>& selection);

struct ClosednessReport {
  bool closed = true;
  std::vector<std::string> unresolved; // link ids whose target slice is outside
};

// A composite is syntactically closed when every cross-link whose source
// slice is a member also has its (declared) target slice inside.
ClosednessReport check_closed(const CompositeSlice& c, const std::vector<CrossLink>& links);

} // namespace mvx
