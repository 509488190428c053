#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mvx {

// Sentinel for an unbounded upper multiplicity; serialized as -1, printed as *.
inline constexpr int kUnbounded = -1;

enum class FeatureKind { attribute, reference };

// true for the three primitive type names: string, int, bool
bool is_primitive_type(std::string_view name);

std::string multiplicity_to_string(int lower, int upper);

// A typed slot of a meta-class. valueType names a primitive for attributes
// and a class of the same metamodel for references.
struct Feature {
  std::string name;
  FeatureKind kind = FeatureKind::attribute;
  std::string value_type = "string";
  int lower = 0;
  int upper = 1;
  bool containment = false;

  bool multi_valued() const { return upper != 1; }
  bool operator==(const Feature&) const = default;
};

struct MetaClass {
  std::string name;
  bool abstract = false;
  std::vector<std::string> supertypes;
  std::vector<Feature> features;

  const Feature* own_feature(std::string_view feature_name) const;
  bool operator==(const MetaClass&) const = default;
};

struct Metamodel {
  std::string name;
  std::vector<MetaClass> classes;

  const MetaClass* find_class(std::string_view class_name) const;
};

// Enforces the structural invariants: unique class names, resolvable
// supertype and reference targets, acyclic inheritance, unique flattened
// feature names, and well-formed multiplicities. Throws Error on failure.
void validate_metamodel(const Metamodel& mm);

// Inherited features first (depth-first over the supertype list, each class
// contributing once), own features appended last.
std::vector<Feature> effective_features(const Metamodel& mm, const std::string& class_name);

// Reflexive-transitive specialization test. Unknown names are not subclasses.
bool is_subclass_of(const Metamodel& mm, std::string_view cls, std::string_view ancestor);

// Equality modulo declaration order of classes and features.
bool structurally_equal(const Metamodel& a, const Metamodel& b);

using PrimitiveValue = std::variant<std::string, std::int64_t, bool>;

std::string primitive_type_name(const PrimitiveValue& v);
std::string primitive_to_string(const PrimitiveValue& v);

struct ModelObject {
  std::string id;
  std::string class_name;
  std::map<std::string, std::vector<PrimitiveValue>> attribute_values;
  std::map<std::string, std::vector<std::string>> links;

  bool operator==(const ModelObject&) const = default;
};

struct ModelInstance {
  std::string conforms_to_multiverse;
  std::string conforms_to_version;
  std::vector<std::string> roots;
  std::vector<ModelObject> objects;

  const ModelObject* find_object(std::string_view id) const;
};

// Metamodel-independent invariants: unique object ids, every root id and
// link target resolves. Throws Error on failure.
void validate_model(const ModelInstance& m);

bool structurally_equal(const ModelInstance& a, const ModelInstance& b);

enum class ViolationKind {
  unknown_class,
  unknown_feature,
  multiplicity_lower,
  multiplicity_upper,
  type_mismatch,
  containment_violation,
  abstract_instantiation,
};

std::string_view to_string(ViolationKind k);

struct Violation {
  std::string object_id;
  ViolationKind kind;
  std::string detail;
  bool operator==(const Violation&) const = default;
};

struct ConformanceReport {
  bool holds = true;
  std::vector<Violation> violations;
};

// The conformance relation between a model and a metamodel. Total over any
// pair of inputs; violations are data, not errors. The violation list is
// deterministic: ordered by object id, then by generation order within an
// object (class-level first, then features alphabetically).
ConformanceReport check_conformance(const ModelInstance& m, const Metamodel& mm);

// All objects whose class equals class_name or transitively specializes it,
// in id order. Throws on an unknown class.
std::vector<const ModelObject*> extent(const ModelInstance& m, const Metamodel& mm,
                                       const std::string& class_name);

} // namespace mvx
