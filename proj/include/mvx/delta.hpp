#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mvx/core_model.hpp"

namespace mvx {

// Operation-based semantic delta vocabulary. Ops carry post-rename class
// names, so a canonical delta applies in order: class ops (delete, rename,
// add) before feature ops (delete, rename, merge, multiplicity, type, add).
namespace ops {

struct AddClass {
  MetaClass def;
  bool operator==(const AddClass&) const = default;
};

struct DeleteClass {
  std::string name;
  bool operator==(const DeleteClass&) const = default;
};

struct RenameClass {
  std::string from;
  std::string to;
  bool operator==(const RenameClass&) const = default;
};

struct AddFeature {
  std::string class_name;
  Feature feature;
  std::optional<PrimitiveValue> default_value;
  bool operator==(const AddFeature&) const = default;
};

struct DeleteFeature {
  std::string class_name;
  std::string feature;
  bool operator==(const DeleteFeature&) const = default;
};

struct RenameFeature {
  std::string class_name;
  std::string from;
  std::string to;
  bool operator==(const RenameFeature&) const = default;
};

struct ChangeMultiplicity {
  std::string class_name;
  std::string feature;
  int lower = 0;
  int upper = 1;
  bool operator==(const ChangeMultiplicity&) const = default;
};

struct ChangeFeatureType {
  std::string class_name;
  std::string feature;
  std::string new_type;
  bool operator==(const ChangeFeatureType&) const = default;
};

struct MergeFeatures {
  std::string class_name;
  std::vector<std::string> sources; // declaration order; at least two
  Feature target;
  bool operator==(const MergeFeatures&) const = default;
};

} // namespace ops

using DeltaOp =
    std::variant<ops::AddClass, ops::DeleteClass, ops::RenameClass, ops::AddFeature,
                 ops::DeleteFeature, ops::RenameFeature, ops::ChangeMultiplicity,
                 ops::ChangeFeatureType, ops::MergeFeatures>;

std::string op_name(const DeltaOp& op);
std::string describe(const DeltaOp& op);

struct Delta {
  std::string from_version;
  std::string to_version;
  std::vector<DeltaOp> ops;

  bool empty() const { return ops.empty(); }
  bool operator==(const Delta&) const = default;
};

// The payload of an evolution link: a recorded delta, or an identity
// correspondence when the artifact did not change.
struct EvolutionLink {
  std::string artifact_name;
  std::optional<Delta> delta; // nullopt = identity correspondence

  bool is_identity() const { return !delta.has_value(); }
};

enum class ImpactClass { non_breaking, breaking_resolvable, breaking_unresolvable };

std::string_view to_string(ImpactClass c);

struct DiffHints {
  // "Old" -> "New" for classes, "Class.old" -> "new" (or "Class.new") for
  // features
  std::map<std::string, std::string> renames;
  struct Merge {
    std::string class_name;
    std::vector<std::string> sources;
    std::string target;
    bool operator==(const Merge&) const = default;
  };
  std::vector<Merge> merges;

  bool empty() const { return renames.empty() && merges.empty(); }
};

// Name-based structural diff; hints turn delete/add pairs into renames and
// merges. Postcondition: apply_delta(a, result) is structurally equal to b.
Delta diff_metamodel(const Metamodel& a, const Metamodel& b, const DiffHints& hints = {});

// Applies ops in order, checking each op's precondition (named class or
// feature exists, fresh names are fresh); the result must satisfy the
// metamodel invariants. Errors carry the failing op index.
Metamodel apply_delta(const Metamodel& a, const Delta& d);

// One op with its precondition checks but without the final invariant
// validation; intermediate states of a longer delta may dangle until later
// ops repair them.
Metamodel apply_single_op(const Metamodel& a, const DeltaOp& op, size_t index = 0);

// Impact of one op on instance data. `instances` sharpens the conditional
// cases (multiplicity narrowing, feature merges); without it they are
// conservatively unresolvable. `context` is the metamodel the op applies to.
ImpactClass classify(const Metamodel& context, const DeltaOp& op,
                     const ModelInstance* instances = nullptr);

// Concatenation of deltas along a transition path.
Delta compose_deltas(const std::vector<Delta>& chain);

} // namespace mvx
