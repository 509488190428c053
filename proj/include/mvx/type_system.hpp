#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mvx/core_model.hpp"

namespace mvx {

// A class name, optionally pinned to one version of the scope: `C` or
// `C@(v)`.
struct TypeRef {
  std::string class_name;
  std::optional<std::string> version;

  bool operator==(const TypeRef&) const = default;
  std::string to_string() const {
    return version ? class_name + "@(" + *version + ")" : class_name;
  }
};

// One class seen across a partial multiverse: the features usable
// generically (identical signature in every scope version) versus the
// version-specific remainder.
struct MultiverseType {
  std::string class_name;
  bool stable = false;
  std::vector<Feature> generic_features;
  std::map<std::string, std::vector<Feature>> per_version;
};

struct TypeReport {
  std::vector<std::string> scope; // version labels, scope order
  std::map<std::string, MultiverseType> entries;
  std::map<std::string, std::vector<std::string>> absent; // class -> versions missing it
  // the scoped metamodels, kept for feature resolution and subtype walks
  std::map<std::string, std::shared_ptr<const Metamodel>> metamodels;

  bool in_scope(const std::string& version) const;
  bool present_everywhere(const std::string& class_name) const;
};

// Computes stable/evolving classes over an ordered set of metamodel
// versions. A class is stable when it exists in every scope version with an
// identical flattened signature and identical supertype list.
TypeReport compute_type_report(
    const std::vector<std::pair<std::string, std::shared_ptr<const Metamodel>>>& scope);

// Subtype relation over the multiverse lattice: reflexive; C@(v) <: C;
// C@(v) <: D@(v) when C specializes D in v; generic C <: generic D when C
// specializes D in every scope version. Distinct versions are never
// related. Throws on references that do not resolve in the report.
bool is_subtype(const TypeRef& t1, const TypeRef& t2, const TypeReport& report);

struct FeatureResolution {
  enum class Status { ok, needs_version_specialization, unknown_feature, unknown_type };
  Status status = Status::ok;
  Feature feature;                            // valid when status == ok
  std::vector<std::string> offering_versions; // for needs_version_specialization
  std::string message;
};

// Resolves a feature against a type reference: on a generic type only the
// generic features resolve (anything version-specific demands a `C@(v)`
// specialization); on a versioned type the version's flattened signature
// applies.
FeatureResolution resolve_feature(const TypeRef& type_ref, const std::string& feature_name,
                                  const TypeReport& report);

// Human-readable table: class | stable | generic features | per-version.
std::string type_report_table(const TypeReport& report);

} // namespace mvx
