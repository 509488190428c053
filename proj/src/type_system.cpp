#include "mvx/type_system.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "mvx/error.hpp"

namespace mvx {

bool TypeReport::in_scope(const std::string& version) const {
  return std::find(scope.begin(), scope.end(), version) != scope.end();
}

bool TypeReport::present_everywhere(const std::string& class_name) const {
  auto it = absent.find(class_name);
  return it == absent.end() || it->second.empty();
}

namespace {

std::vector<Feature> sorted_by_name(std::vector<Feature> fs) {
  std::sort(fs.begin(), fs.end(),
            [](const Feature& a, const Feature& b) { return a.name < b.name; });
  return fs;
}

std::string feature_to_string(const Feature& f) {
  return f.name + ": " + f.value_type + multiplicity_to_string(f.lower, f.upper);
}

} // namespace

TypeReport compute_type_report(
    const std::vector<std::pair<std::string, std::shared_ptr<const Metamodel>>>& scope) {
  if (scope.empty())
    throw Error(ErrorKind::usage, "type report needs a nonempty scope");
  TypeReport report;
  std::set<std::string> seen_versions;
  for (const auto& [version, mm] : scope) {
    if (!mm)
      throw Error(ErrorKind::not_found, "scope version '" + version + "' has no metamodel");
    if (!seen_versions.insert(version).second)
      throw Error(ErrorKind::usage, "scope lists version '" + version + "' twice");
    report.scope.push_back(version);
    report.metamodels[version] = mm;
  }

  std::set<std::string> class_names;
  for (const auto& [version, mm] : scope)
    for (const MetaClass& c : mm->classes) class_names.insert(c.name);

  for (const std::string& name : class_names) {
    MultiverseType entry;
    entry.class_name = name;

    std::map<std::string, std::vector<Feature>> flattened; // version -> signature
    std::vector<std::string> missing;
    for (const auto& [version, mm] : scope) {
      if (mm->find_class(name))
        flattened[version] = sorted_by_name(effective_features(*mm, name));
      else
        missing.push_back(version);
    }
    if (!missing.empty()) report.absent[name] = missing;

    bool everywhere = missing.empty();
    if (everywhere) {
      // intersection of the flattened signatures, full field equality
      std::vector<Feature> generic = flattened[report.scope.front()];
      for (const auto& [version, features] : flattened) {
        std::erase_if(generic, [&](const Feature& f) {
          return std::find(features.begin(), features.end(), f) == features.end();
        });
      }
      entry.generic_features = generic;
    }
    for (const auto& [version, features] : flattened) {
      std::vector<Feature> specific;
      for (const Feature& f : features)
        if (std::find(entry.generic_features.begin(), entry.generic_features.end(), f) ==
            entry.generic_features.end())
          specific.push_back(f);
      entry.per_version[version] = specific;
    }

    bool same_supers = true;
    if (everywhere) {
      const std::vector<std::string>& first =
          scope.front().second->find_class(name)->supertypes;
      for (const auto& [version, mm] : scope)
        if (mm->find_class(name)->supertypes != first) same_supers = false;
    }
    bool all_specific_empty = true;
    for (const auto& [version, specific] : entry.per_version)
      if (!specific.empty()) all_specific_empty = false;
    entry.stable = everywhere && same_supers && all_specific_empty;

    report.entries[name] = std::move(entry);
  }
  return report;
}

namespace {

[[noreturn]] void unknown_ref(const TypeRef& t, const TypeReport& report) {
  std::string scope;
  for (size_t i = 0; i < report.scope.size(); ++i) scope += (i ? "," : "") + report.scope[i];
  throw Error(ErrorKind::not_found,
              "unknown type reference '" + t.to_string() + "' over scope {" + scope + "}");
}

// validates that t names a usable type in the report
void require_resolvable(const TypeRef& t, const TypeReport& report) {
  auto it = report.entries.find(t.class_name);
  if (it == report.entries.end()) unknown_ref(t, report);
  if (t.version) {
    if (!report.in_scope(*t.version)) unknown_ref(t, report);
    const auto& mm = report.metamodels.at(*t.version);
    if (!mm->find_class(t.class_name)) unknown_ref(t, report);
  } else {
    // classes absent from part of the scope have no generic type
    if (!report.present_everywhere(t.class_name)) unknown_ref(t, report);
  }
}

} // namespace

bool is_subtype(const TypeRef& t1, const TypeRef& t2, const TypeReport& report) {
  require_resolvable(t1, report);
  require_resolvable(t2, report);
  if (t1 == t2) return true;
  if (t1.version && t2.version) {
    if (*t1.version != *t2.version) return false;
    return is_subclass_of(*report.metamodels.at(*t1.version), t1.class_name, t2.class_name);
  }
  if (t1.version && !t2.version)
    return is_subclass_of(*report.metamodels.at(*t1.version), t1.class_name, t2.class_name);
  if (!t1.version && t2.version) return false;
  for (const auto& [version, mm] : report.metamodels)
    if (!is_subclass_of(*mm, t1.class_name, t2.class_name)) return false;
  return true;
}

FeatureResolution resolve_feature(const TypeRef& type_ref, const std::string& feature_name,
                                  const TypeReport& report) {
  FeatureResolution result;
  auto entry_it = report.entries.find(type_ref.class_name);
  if (entry_it == report.entries.end() ||
      (type_ref.version &&
       (!report.in_scope(*type_ref.version) ||
        !report.metamodels.at(*type_ref.version)->find_class(type_ref.class_name))) ||
      (!type_ref.version && !report.present_everywhere(type_ref.class_name))) {
    result.status = FeatureResolution::Status::unknown_type;
    result.message = "unknown type reference '" + type_ref.to_string() + "'";
    return result;
  }
  const MultiverseType& entry = entry_it->second;

  auto offering = [&]() {
    std::vector<std::string> versions;
    for (const std::string& v : report.scope) {
      const auto& mm = report.metamodels.at(v);
      if (!mm->find_class(type_ref.class_name)) continue;
      for (const Feature& f : effective_features(*mm, type_ref.class_name))
        if (f.name == feature_name) versions.push_back(v);
    }
    return versions;
  };

  if (!type_ref.version) {
    for (const Feature& f : entry.generic_features)
      if (f.name == feature_name) {
        result.feature = f;
        return result;
      }
    std::vector<std::string> versions = offering();
    if (versions.empty()) {
      result.status = FeatureResolution::Status::unknown_feature;
      result.message = "unknown feature '" + feature_name + "' on '" + type_ref.class_name +
                       "' anywhere in scope";
    } else {
      result.status = FeatureResolution::Status::needs_version_specialization;
      result.offering_versions = versions;
      std::string vs;
      for (size_t i = 0; i < versions.size(); ++i) vs += (i ? "," : "") + versions[i];
      result.message = "feature '" + feature_name + "' on '" + type_ref.class_name +
                       "' needs a version specialization; offered by {" + vs + "}";
    }
    return result;
  }

  const auto& mm = report.metamodels.at(*type_ref.version);
  for (const Feature& f : effective_features(*mm, type_ref.class_name))
    if (f.name == feature_name) {
      result.feature = f;
      return result;
    }
  std::vector<std::string> versions = offering();
  if (versions.empty()) {
    result.status = FeatureResolution::Status::unknown_feature;
    result.message = "unknown feature '" + feature_name + "' on '" + type_ref.class_name +
                     "' anywhere in scope";
  } else {
    result.status = FeatureResolution::Status::needs_version_specialization;
    result.offering_versions = versions;
    std::string vs;
    for (size_t i = 0; i < versions.size(); ++i) vs += (i ? "," : "") + versions[i];
    result.message = "feature '" + feature_name + "' absent from '" + type_ref.to_string() +
                     "'; offered by {" + vs + "}";
  }
  return result;
}

std::string type_report_table(const TypeReport& report) {
  std::ostringstream out;
  out << "scope:";
  for (const std::string& v : report.scope) out << " " << v;
  out << "\n";
  for (const auto& [name, entry] : report.entries) {
    out << name << " | " << (entry.stable ? "stable" : "evolving") << " | generic:";
    if (entry.generic_features.empty() && !report.present_everywhere(name)) out << " (none)";
    for (const Feature& f : entry.generic_features) out << " " << feature_to_string(f);
    bool any_specific = false;
    for (const auto& [version, features] : entry.per_version)
      if (!features.empty()) any_specific = true;
    if (any_specific) {
      out << " |";
      for (const auto& [version, features] : entry.per_version) {
        if (features.empty()) continue;
        out << " " << version << ":{";
        for (size_t i = 0; i < features.size(); ++i)
          out << (i ? ", " : "") << feature_to_string(features[i]);
        out << "}";
      }
    }
    if (auto it = report.absent.find(name); it != report.absent.end()) {
      out << " | absent in:";
      for (const std::string& v : it->second) out << " " << v;
    }
    out << "\n";
  }
  return out.str();
}

} // namespace mvx
