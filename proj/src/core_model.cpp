#include "mvx/core_model.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "mvx/error.hpp"

namespace mvx {

bool is_primitive_type(std::string_view name) {
  return name == "string" || name == "int" || name == "bool";
}

std::string multiplicity_to_string(int lower, int upper) {
  std::string up = upper == kUnbounded ? "*" : std::to_string(upper);
  return "[" + std::to_string(lower) + ".." + up + "]";
}

const Feature* MetaClass::own_feature(std::string_view feature_name) const {
  for (const Feature& f : features)
    if (f.name == feature_name) return &f;
  return nullptr;
}

const MetaClass* Metamodel::find_class(std::string_view class_name) const {
  for (const MetaClass& c : classes)
    if (c.name == class_name) return &c;
  return nullptr;
}

namespace {

// Post-order walk over the supertype graph; each class contributes its own
// features once, ancestors before descendants.
void collect_features(const Metamodel& mm, const MetaClass& cls,
                      std::set<std::string>& visited, std::vector<Feature>& out) {
  if (!visited.insert(cls.name).second) return;
  for (const std::string& super : cls.supertypes) {
    const MetaClass* sc = mm.find_class(super);
    if (sc) collect_features(mm, *sc, visited, out);
  }
  out.insert(out.end(), cls.features.begin(), cls.features.end());
}

bool inheritance_has_cycle(const Metamodel& mm, const std::string& start) {
  std::vector<std::string> stack{start};
  std::set<std::string> on_path;
  // iterative DFS with explicit color marks
  std::set<std::string> done;
  struct Frame {
    const MetaClass* cls;
    size_t next = 0;
  };
  const MetaClass* sc = mm.find_class(start);
  if (!sc) return false;
  std::vector<Frame> frames{{sc, 0}};
  on_path.insert(start);
  while (!frames.empty()) {
    Frame& top = frames.back();
    if (top.next < top.cls->supertypes.size()) {
      const std::string& super = top.cls->supertypes[top.next++];
      if (on_path.count(super)) return true;
      if (done.count(super)) continue;
      const MetaClass* next = mm.find_class(super);
      if (!next) continue;
      on_path.insert(super);
      frames.push_back({next, 0});
    } else {
      on_path.erase(top.cls->name);
      done.insert(top.cls->name);
      frames.pop_back();
    }
  }
  return false;
}

} // namespace

void validate_metamodel(const Metamodel& mm) {
  std::set<std::string> names;
  for (const MetaClass& c : mm.classes) {
    if (c.name.empty())
      throw Error(ErrorKind::parse, "metamodel '" + mm.name + "': empty class name");
    if (is_primitive_type(c.name))
      throw Error(ErrorKind::parse, "metamodel '" + mm.name + "': class name '" + c.name +
                                        "' collides with a primitive type");
    if (!names.insert(c.name).second)
      throw Error(ErrorKind::parse,
                  "metamodel '" + mm.name + "': duplicate class '" + c.name + "'");
  }
  for (const MetaClass& c : mm.classes) {
    for (const std::string& super : c.supertypes)
      if (!mm.find_class(super))
        throw Error(ErrorKind::parse, "metamodel '" + mm.name + "': class '" + c.name +
                                          "' has unknown supertype '" + super + "'");
    for (const Feature& f : c.features) {
      if (f.name.empty())
        throw Error(ErrorKind::parse,
                    "metamodel '" + mm.name + "': class '" + c.name + "' has an unnamed feature");
      if (f.lower < 0)
        throw Error(ErrorKind::parse, "metamodel '" + mm.name + "': feature '" + c.name + "." +
                                          f.name + "' has negative lower bound");
      if (f.upper != kUnbounded && f.upper < 1)
        throw Error(ErrorKind::parse, "metamodel '" + mm.name + "': feature '" + c.name + "." +
                                          f.name + "' upper bound must be positive or *");
      if (f.upper != kUnbounded && f.lower > f.upper)
        throw Error(ErrorKind::parse, "metamodel '" + mm.name + "': feature '" + c.name + "." +
                                          f.name + "' has lower > upper");
      if (f.kind == FeatureKind::attribute) {
        if (!is_primitive_type(f.value_type))
          throw Error(ErrorKind::parse, "metamodel '" + mm.name + "': attribute '" + c.name + "." +
                                            f.name + "' has non-primitive type '" + f.value_type +
                                            "'");
        if (f.containment)
          throw Error(ErrorKind::parse, "metamodel '" + mm.name + "': attribute '" + c.name + "." +
                                            f.name + "' cannot be a containment");
      } else {
        if (!mm.find_class(f.value_type))
          throw Error(ErrorKind::parse, "metamodel '" + mm.name + "': reference '" + c.name + "." +
                                            f.name + "' targets unknown class '" + f.value_type +
                                            "'");
      }
    }
  }
  for (const MetaClass& c : mm.classes)
    if (inheritance_has_cycle(mm, c.name))
      throw Error(ErrorKind::parse, "metamodel '" + mm.name +
                                        "': inheritance cycle through class '" + c.name + "'");
  for (const MetaClass& c : mm.classes) {
    std::set<std::string> feature_names;
    for (const Feature& f : effective_features(mm, c.name))
      if (!feature_names.insert(f.name).second)
        throw Error(ErrorKind::parse, "metamodel '" + mm.name + "': class '" + c.name +
                                          "' inherits duplicate feature '" + f.name + "'");
  }
}

std::vector<Feature> effective_features(const Metamodel& mm, const std::string& class_name) {
  const MetaClass* cls = mm.find_class(class_name);
  if (!cls)
    throw Error(ErrorKind::not_found,
                "unknown class '" + class_name + "' in metamodel '" + mm.name + "'");
  std::vector<Feature> out;
  std::set<std::string> visited;
  collect_features(mm, *cls, visited, out);
  return out;
}

bool is_subclass_of(const Metamodel& mm, std::string_view cls, std::string_view ancestor) {
  if (cls == ancestor) return mm.find_class(cls) != nullptr;
  const MetaClass* c = mm.find_class(cls);
  if (!c) return false;
  for (const std::string& super : c->supertypes)
    if (is_subclass_of(mm, super, ancestor)) return true;
  return false;
}

namespace {

bool class_equal_modulo_order(const MetaClass& a, const MetaClass& b) {
  if (a.name != b.name || a.abstract != b.abstract || a.supertypes != b.supertypes) return false;
  if (a.features.size() != b.features.size()) return false;
  auto sorted = [](const std::vector<Feature>& fs) {
    std::vector<Feature> s = fs;
    std::sort(s.begin(), s.end(),
              [](const Feature& x, const Feature& y) { return x.name < y.name; });
    return s;
  };
  return sorted(a.features) == sorted(b.features);
}

} // namespace

bool structurally_equal(const Metamodel& a, const Metamodel& b) {
  if (a.name != b.name || a.classes.size() != b.classes.size()) return false;
  for (const MetaClass& ca : a.classes) {
    const MetaClass* cb = b.find_class(ca.name);
    if (!cb || !class_equal_modulo_order(ca, *cb)) return false;
  }
  return true;
}

std::string primitive_type_name(const PrimitiveValue& v) {
  switch (v.index()) {
    case 0: return "string";
    case 1: return "int";
    default: return "bool";
  }
}

std::string primitive_to_string(const PrimitiveValue& v) {
  if (std::holds_alternative<std::string>(v)) return std::get<std::string>(v);
  if (std::holds_alternative<std::int64_t>(v)) return std::to_string(std::get<std::int64_t>(v));
  return std::get<bool>(v) ? "true" : "false";
}

const ModelObject* ModelInstance::find_object(std::string_view id) const {
  for (const ModelObject& o : objects)
    if (o.id == id) return &o;
  return nullptr;
}

void validate_model(const ModelInstance& m) {
  std::set<std::string> ids;
  for (const ModelObject& o : m.objects) {
    if (o.id.empty()) throw Error(ErrorKind::parse, "model object with empty id");
    if (!ids.insert(o.id).second)
      throw Error(ErrorKind::parse, "duplicate object id '" + o.id + "'");
  }
  for (const std::string& r : m.roots)
    if (!ids.count(r)) throw Error(ErrorKind::parse, "root id '" + r + "' does not exist");
  for (const ModelObject& o : m.objects)
    for (const auto& [feature, targets] : o.links)
      for (const std::string& t : targets)
        if (!ids.count(t))
          throw Error(ErrorKind::parse, "object '" + o.id + "' feature '" + feature +
                                            "' links to unknown id '" + t + "'");
}

bool structurally_equal(const ModelInstance& a, const ModelInstance& b) {
  if (a.conforms_to_multiverse != b.conforms_to_multiverse ||
      a.conforms_to_version != b.conforms_to_version || a.roots != b.roots ||
      a.objects.size() != b.objects.size())
    return false;
  for (const ModelObject& oa : a.objects) {
    const ModelObject* ob = b.find_object(oa.id);
    if (!ob || !(oa == *ob)) return false;
  }
  return true;
}

std::string_view to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::unknown_class: return "unknown_class";
    case ViolationKind::unknown_feature: return "unknown_feature";
    case ViolationKind::multiplicity_lower: return "multiplicity_lower";
    case ViolationKind::multiplicity_upper: return "multiplicity_upper";
    case ViolationKind::type_mismatch: return "type_mismatch";
    case ViolationKind::containment_violation: return "containment_violation";
    case ViolationKind::abstract_instantiation: return "abstract_instantiation";
  }
  return "?";
}

ConformanceReport check_conformance(const ModelInstance& m, const Metamodel& mm) {
  ConformanceReport report;
  auto add = [&](const std::string& object_id, ViolationKind kind, std::string detail) {
    report.violations.push_back({object_id, kind, std::move(detail)});
  };

  std::vector<const ModelObject*> order;
  order.reserve(m.objects.size());
  for (const ModelObject& o : m.objects) order.push_back(&o);
  std::sort(order.begin(), order.end(),
            [](const ModelObject* a, const ModelObject* b) { return a->id < b->id; });

  for (const ModelObject* obj : order) {
    const MetaClass* cls = mm.find_class(obj->class_name);
    if (!cls) {
      add(obj->id, ViolationKind::unknown_class,
          "class '" + obj->class_name + "' not in metamodel '" + mm.name + "'");
      continue;
    }
    if (cls->abstract)
      add(obj->id, ViolationKind::abstract_instantiation,
          "class '" + obj->class_name + "' is abstract");

    std::map<std::string, Feature> flattened;
    for (const Feature& f : effective_features(mm, obj->class_name)) flattened[f.name] = f;

    // slot names used by the object, alphabetically (maps are ordered)
    for (const auto& [name, values] : obj->attribute_values) {
      auto it = flattened.find(name);
      if (it == flattened.end()) {
        add(obj->id, ViolationKind::unknown_feature,
            "feature '" + name + "' not defined for class '" + obj->class_name + "'");
        continue;
      }
      if (it->second.kind != FeatureKind::attribute) {
        add(obj->id, ViolationKind::type_mismatch,
            "feature '" + name + "' is a reference but attribute values were given");
        continue;
      }
      for (const PrimitiveValue& v : values)
        if (primitive_type_name(v) != it->second.value_type)
          add(obj->id, ViolationKind::type_mismatch,
              "feature '" + name + "': expected " + it->second.value_type + ", got " +
                  primitive_type_name(v) + " (" + primitive_to_string(v) + ")");
    }
    for (const auto& [name, targets] : obj->links) {
      auto it = flattened.find(name);
      if (it == flattened.end()) {
        if (!obj->attribute_values.count(name))
          add(obj->id, ViolationKind::unknown_feature,
              "feature '" + name + "' not defined for class '" + obj->class_name + "'");
        continue;
      }
      if (it->second.kind != FeatureKind::reference) {
        add(obj->id, ViolationKind::type_mismatch,
            "feature '" + name + "' is an attribute but links were given");
        continue;
      }
      for (const std::string& target : targets) {
        const ModelObject* to = m.find_object(target);
        if (!to) {
          add(obj->id, ViolationKind::type_mismatch,
              "feature '" + name + "': link target '" + target + "' does not exist");
        } else if (!is_subclass_of(mm, to->class_name, it->second.value_type)) {
          add(obj->id, ViolationKind::type_mismatch,
              "feature '" + name + "': target '" + target + "' of class '" + to->class_name +
                  "' is not a " + it->second.value_type);
        }
      }
    }
    // multiplicity over every flattened feature, absent slots count as zero
    for (const auto& [name, feature] : flattened) {
      size_t count = 0;
      if (auto it = obj->attribute_values.find(name); it != obj->attribute_values.end())
        count += it->second.size();
      if (auto it = obj->links.find(name); it != obj->links.end()) count += it->second.size();
      if (count < static_cast<size_t>(feature.lower))
        add(obj->id, ViolationKind::multiplicity_lower,
            "feature '" + name + "': count " + std::to_string(count) + " below lower bound " +
                std::to_string(feature.lower));
      if (feature.upper != kUnbounded && count > static_cast<size_t>(feature.upper))
        add(obj->id, ViolationKind::multiplicity_upper,
            "feature '" + name + "': count " + std::to_string(count) + " exceeds upper bound " +
                std::to_string(feature.upper));
    }
  }

  // containment: every target contained at most once, roots uncontained
  std::map<std::string, int> contained_count;
  for (const ModelObject* obj : order) {
    const MetaClass* cls = mm.find_class(obj->class_name);
    if (!cls) continue;
    std::map<std::string, Feature> flattened;
    for (const Feature& f : effective_features(mm, obj->class_name)) flattened[f.name] = f;
    for (const auto& [name, targets] : obj->links) {
      auto it = flattened.find(name);
      if (it == flattened.end() || !it->second.containment) continue;
      for (const std::string& t : targets) contained_count[t] += 1;
    }
  }
  for (const auto& [id, count] : contained_count) {
    if (count > 1)
      add(id, ViolationKind::containment_violation,
          "object contained by " + std::to_string(count) + " containers");
    if (std::find(m.roots.begin(), m.roots.end(), id) != m.roots.end())
      add(id, ViolationKind::containment_violation, "root object must not be contained");
  }

  std::stable_sort(report.violations.begin(), report.violations.end(),
                   [](const Violation& a, const Violation& b) { return a.object_id < b.object_id; });
  report.holds = report.violations.empty();
  return report;
}

std::vector<const ModelObject*> extent(const ModelInstance& m, const Metamodel& mm,
                                       const std::string& class_name) {
  if (!mm.find_class(class_name))
    throw Error(ErrorKind::not_found,
                "unknown class '" + class_name + "' in metamodel '" + mm.name + "'");
  std::vector<const ModelObject*> out;
  for (const ModelObject& o : m.objects)
    if (is_subclass_of(mm, o.class_name, class_name)) out.push_back(&o);
  std::sort(out.begin(), out.end(),
            [](const ModelObject* a, const ModelObject* b) { return a->id < b->id; });
  return out;
}

} // namespace mvx
