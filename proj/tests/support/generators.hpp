#pragma once

// Seeded random generators for the property suites: structurally valid
// metamodels, models conforming to them, deltas applicable to them (with
// the hints describing their renames and merges), and complete decision
// files answering a migration plan.

#include <algorithm>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvx/coevolution.hpp"
#include "mvx/core_model.hpp"
#include "mvx/delta.hpp"

namespace gen {

struct Rng {
  std::mt19937 engine;
  explicit Rng(unsigned seed) : engine(seed) {}

  int below(int n) { return std::uniform_int_distribution<int>(0, n - 1)(engine); }
  bool chance(double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(engine) < p; }
  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[below(static_cast<int>(v.size()))];
  }
};

struct NameSource {
  int next_class = 0;
  int next_feature = 0;
  std::string class_name() { return "C" + std::to_string(next_class++); }
  std::string fresh_class() { return "N" + std::to_string(next_class++); }
  std::string feature_name() { return "f" + std::to_string(next_feature++); }

  // deltas stacked onto one another need disjoint fresh-name ranges
  static int reserve_block() {
    static int next = 2000;
    int block = next;
    next += 500;
    return block;
  }
};

inline mvx::PrimitiveValue random_value(Rng& rng, const std::string& type) {
  if (type == "int") return static_cast<std::int64_t>(rng.below(100));
  if (type == "bool") return rng.chance(0.5);
  static const std::vector<std::string> words = {"alpha", "beta", "gamma", "delta", "omega"};
  return rng.pick(words);
}

inline mvx::Feature random_attribute(Rng& rng, NameSource& names) {
  mvx::Feature f;
  f.name = names.feature_name();
  f.kind = mvx::FeatureKind::attribute;
  static const std::vector<std::string> types = {"string", "int", "bool"};
  f.value_type = rng.pick(types);
  switch (rng.below(4)) {
    case 0: f.lower = 0, f.upper = 1; break;
    case 1: f.lower = 1, f.upper = 1; break;
    case 2: f.lower = 0, f.upper = 3; break;
    default: f.lower = 0, f.upper = mvx::kUnbounded; break;
  }
  return f;
}

// generated references always have lower == 0 so a conforming model is
// always constructible
inline mvx::Feature random_reference(Rng& rng, NameSource& names,
                                     const std::vector<std::string>& classes) {
  mvx::Feature f;
  f.name = names.feature_name();
  f.kind = mvx::FeatureKind::reference;
  f.value_type = rng.pick(classes);
  f.containment = rng.chance(0.4);
  switch (rng.below(3)) {
    case 0: f.lower = 0, f.upper = 1; break;
    case 1: f.lower = 0, f.upper = 3; break;
    default: f.lower = 0, f.upper = mvx::kUnbounded; break;
  }
  return f;
}

inline mvx::Metamodel random_metamodel(Rng& rng, int max_classes = 8) {
  NameSource names;
  mvx::Metamodel mm;
  mm.name = "G" + std::to_string(rng.below(1000));
  int count = 1 + rng.below(max_classes);
  std::vector<std::string> existing;
  for (int i = 0; i < count; ++i) {
    mvx::MetaClass cls;
    cls.name = names.class_name();
    cls.abstract = !existing.empty() && rng.chance(0.15);
    if (!existing.empty() && rng.chance(0.4)) cls.supertypes.push_back(rng.pick(existing));
    existing.push_back(cls.name);
    mm.classes.push_back(std::move(cls));
  }
  for (mvx::MetaClass& cls : mm.classes) {
    int features = rng.below(4);
    for (int i = 0; i < features; ++i) {
      if (rng.chance(0.6))
        cls.features.push_back(random_attribute(rng, names));
      else
        cls.features.push_back(random_reference(rng, names, existing));
    }
  }
  mvx::validate_metamodel(mm);
  return mm;
}

inline mvx::ModelInstance random_conforming_model(Rng& rng, const mvx::Metamodel& mm,
                                                  int max_objects = 30) {
  mvx::ModelInstance m;
  m.conforms_to_multiverse = "MM";
  m.conforms_to_version = "1.0";
  std::vector<std::string> concrete;
  for (const mvx::MetaClass& cls : mm.classes)
    if (!cls.abstract) concrete.push_back(cls.name);
  if (concrete.empty()) return m;

  int count = rng.below(max_objects + 1);
  for (int i = 0; i < count; ++i) {
    mvx::ModelObject obj;
    obj.id = "o" + std::to_string(i);
    obj.class_name = rng.pick(concrete);
    for (const mvx::Feature& f : mvx::effective_features(mm, obj.class_name)) {
      if (f.kind != mvx::FeatureKind::attribute) continue;
      int cap = f.upper == mvx::kUnbounded ? f.lower + 2 : std::min(f.upper, f.lower + 2);
      int n = f.lower + (cap > f.lower ? rng.below(cap - f.lower + 1) : 0);
      for (int k = 0; k < n; ++k)
        obj.attribute_values[f.name].push_back(random_value(rng, f.value_type));
      if (obj.attribute_values[f.name].empty()) obj.attribute_values.erase(f.name);
    }
    m.objects.push_back(std::move(obj));
  }

  std::set<std::string> contained;
  for (mvx::ModelObject& obj : m.objects) {
    for (const mvx::Feature& f : mvx::effective_features(mm, obj.class_name)) {
      if (f.kind != mvx::FeatureKind::reference) continue;
      std::vector<std::string> candidates;
      for (const mvx::ModelObject& other : m.objects) {
        if (!mvx::is_subclass_of(mm, other.class_name, f.value_type)) continue;
        if (f.containment && (contained.count(other.id) || other.id == obj.id)) continue;
        candidates.push_back(other.id);
      }
      if (candidates.empty()) continue;
      int cap = f.upper == mvx::kUnbounded ? 3 : std::min(f.upper, 3);
      cap = std::min<int>(cap, static_cast<int>(candidates.size()));
      int n = cap > 0 ? rng.below(cap + 1) : 0;
      std::shuffle(candidates.begin(), candidates.end(), rng.engine);
      for (int k = 0; k < n; ++k) {
        obj.links[f.name].push_back(candidates[k]);
        if (f.containment) contained.insert(candidates[k]);
      }
      if (obj.links.count(f.name) && obj.links[f.name].empty()) obj.links.erase(f.name);
    }
  }
  for (const mvx::ModelObject& obj : m.objects)
    if (!contained.count(obj.id)) m.roots.push_back(obj.id);

  mvx::validate_model(m);
  if (!mvx::check_conformance(m, mm).holds)
    throw std::logic_error("generator produced a nonconforming model");
  return m;
}

inline mvx::Delta random_non_breaking_delta(Rng& rng, const mvx::Metamodel& mm) {
  NameSource names;
  names.next_class = names.next_feature = NameSource::reserve_block();
  std::vector<std::string> classes;
  for (const mvx::MetaClass& cls : mm.classes) classes.push_back(cls.name);

  mvx::Delta delta;
  int count = 1 + rng.below(3);
  for (int i = 0; i < count; ++i) {
    if (rng.chance(0.5) || classes.empty()) {
      mvx::MetaClass cls;
      cls.name = names.fresh_class();
      if (!classes.empty() && rng.chance(0.5)) cls.supertypes.push_back(rng.pick(classes));
      int features = rng.below(3);
      for (int k = 0; k < features; ++k) {
        mvx::Feature f = random_attribute(rng, names);
        f.lower = 0;
        cls.features.push_back(std::move(f));
      }
      classes.push_back(cls.name);
      delta.ops.push_back(mvx::ops::AddClass{std::move(cls)});
    } else {
      mvx::ops::AddFeature op;
      op.class_name = rng.pick(classes);
      if (op.class_name.rfind("N", 0) == 0) continue; // only touch original classes
      op.feature = rng.chance(0.7) ? random_attribute(rng, names)
                                   : random_reference(rng, names, classes);
      op.feature.lower = 0;
      delta.ops.push_back(std::move(op));
    }
  }
  return delta;
}

struct GeneratedDelta {
  mvx::Delta delta;
  mvx::DiffHints hints;
};

namespace detail {

inline bool class_referenced(const mvx::Metamodel& mm, const std::string& name) {
  for (const mvx::MetaClass& cls : mm.classes) {
    if (cls.name == name) continue;
    for (const std::string& super : cls.supertypes)
      if (super == name) return true;
    for (const mvx::Feature& f : cls.features)
      if (f.kind == mvx::FeatureKind::reference && f.value_type == name) return true;
  }
  return false;
}

inline bool instances_linked(const mvx::ModelInstance& m, const std::string& class_name) {
  for (const mvx::ModelObject& obj : m.objects)
    for (const auto& [feature, targets] : obj.links)
      for (const std::string& t : targets) {
        const mvx::ModelObject* target = m.find_object(t);
        if (target && target->class_name == class_name) return true;
      }
  return false;
}

struct SlotStats {
  size_t min_count = SIZE_MAX;
  size_t max_count = 0;
  bool any = false;
};

inline SlotStats slot_stats(const mvx::ModelInstance& m, const mvx::Metamodel& mm,
                            const std::string& class_name, const std::string& feature) {
  SlotStats stats;
  for (const mvx::ModelObject& obj : m.objects) {
    if (!mvx::is_subclass_of(mm, obj.class_name, class_name)) continue;
    size_t n = 0;
    if (auto it = obj.attribute_values.find(feature); it != obj.attribute_values.end())
      n += it->second.size();
    if (auto it = obj.links.find(feature); it != obj.links.end()) n += it->second.size();
    stats.min_count = std::min(stats.min_count, n);
    stats.max_count = std::max(stats.max_count, n);
    stats.any = true;
  }
  if (!stats.any) stats.min_count = 0;
  return stats;
}

} // namespace detail

// A delta applicable to mm whose decision requests (if any) are always
// satisfiable against `instances`; hints describe its renames and merges.
inline GeneratedDelta random_delta(Rng& rng, const mvx::Metamodel& mm,
                                   const mvx::ModelInstance* instances, int max_ops = 5) {
  NameSource names;
  names.next_class = names.next_feature = NameSource::reserve_block();
  GeneratedDelta out;
  mvx::Metamodel wm = mm;
  std::set<std::string> touched_classes;
  std::set<std::string> touched_features; // "class|feature"
  std::set<std::string> hinted_classes;   // referenced by rename/merge hints

  auto touch = [&](const std::string& cls, const std::string& feature) {
    touched_features.insert(cls + "|" + feature);
  };
  auto is_touched = [&](const std::string& cls, const std::string& feature) {
    return touched_classes.count(cls) || touched_features.count(cls + "|" + feature);
  };

  int target_ops = 1 + rng.below(max_ops);
  int attempts = 0;
  while (static_cast<int>(out.delta.ops.size()) < target_ops && attempts++ < 60) {
    int choice = rng.below(10);
    std::optional<mvx::DeltaOp> op;

    if (choice == 0) { // AddClass
      mvx::MetaClass cls;
      cls.name = names.fresh_class();
      int features = rng.below(2);
      for (int k = 0; k < features; ++k) {
        mvx::Feature f = random_attribute(rng, names);
        f.lower = 0;
        cls.features.push_back(std::move(f));
      }
      op = mvx::ops::AddClass{std::move(cls)};
    } else if (choice == 1) { // AddFeature
      std::vector<std::string> classes;
      for (const mvx::MetaClass& cls : wm.classes)
        if (!touched_classes.count(cls.name)) classes.push_back(cls.name);
      if (classes.empty()) continue;
      mvx::ops::AddFeature add;
      add.class_name = rng.pick(classes);
      add.feature = random_attribute(rng, names);
      int mode = rng.below(3);
      if (mode == 0) {
        add.feature.lower = 0;
      } else {
        add.feature.lower = 1;
        if (add.feature.upper != mvx::kUnbounded && add.feature.upper < 1) add.feature.upper = 1;
        if (mode == 1) add.default_value = random_value(rng, add.feature.value_type);
        // mode == 2 leaves the default to a decision
      }
      touch(add.class_name, add.feature.name);
      op = std::move(add);
    } else if (choice == 2) { // DeleteFeature
      std::vector<std::pair<std::string, std::string>> candidates;
      for (const mvx::MetaClass& cls : wm.classes)
        for (const mvx::Feature& f : cls.features)
          if (!is_touched(cls.name, f.name)) candidates.push_back({cls.name, f.name});
      if (candidates.empty()) continue;
      auto [cls, feature] = rng.pick(candidates);
      touch(cls, feature);
      op = mvx::ops::DeleteFeature{cls, feature};
    } else if (choice == 3) { // RenameFeature
      std::vector<std::pair<std::string, std::string>> candidates;
      for (const mvx::MetaClass& cls : wm.classes) {
        if (cls.name.rfind("N", 0) == 0) continue; // hints need both-sided classes
        for (const mvx::Feature& f : cls.features)
          if (!is_touched(cls.name, f.name)) candidates.push_back({cls.name, f.name});
      }
      if (candidates.empty()) continue;
      auto [cls, feature] = rng.pick(candidates);
      std::string to = names.feature_name();
      touch(cls, feature);
      touch(cls, to);
      hinted_classes.insert(cls);
      out.hints.renames[cls + "." + feature] = to;
      op = mvx::ops::RenameFeature{cls, feature, to};
    } else if (choice == 4) { // RenameClass
      std::vector<std::string> candidates;
      for (const mvx::MetaClass& cls : wm.classes)
        if (!touched_classes.count(cls.name) && cls.name.rfind("N", 0) != 0)
          candidates.push_back(cls.name);
      if (candidates.empty()) continue;
      std::string from = rng.pick(candidates);
      std::string to = names.fresh_class();
      touched_classes.insert(from);
      touched_classes.insert(to);
      out.hints.renames[from] = to;
      op = mvx::ops::RenameClass{from, to};
    } else if (choice == 5) { // DeleteClass
      std::vector<std::string> candidates;
      for (const mvx::MetaClass& cls : wm.classes) {
        if (touched_classes.count(cls.name) || hinted_classes.count(cls.name)) continue;
        if (detail::class_referenced(wm, cls.name)) continue;
        if (instances && detail::instances_linked(*instances, cls.name)) continue;
        candidates.push_back(cls.name);
      }
      if (candidates.empty()) continue;
      std::string victim = rng.pick(candidates);
      touched_classes.insert(victim);
      op = mvx::ops::DeleteClass{victim};
    } else if (choice == 6 || choice == 7) { // ChangeMultiplicity
      std::vector<std::pair<std::string, mvx::Feature>> candidates;
      for (const mvx::MetaClass& cls : wm.classes)
        for (const mvx::Feature& f : cls.features)
          if (!is_touched(cls.name, f.name)) candidates.push_back({cls.name, f});
      if (candidates.empty()) continue;
      auto [cls, feature] = rng.pick(candidates);
      detail::SlotStats stats{0, 0, false};
      if (instances && mm.find_class(cls))
        stats = detail::slot_stats(*instances, mm, cls, feature.name);
      mvx::ops::ChangeMultiplicity change;
      change.class_name = cls;
      change.feature = feature.name;
      int mode = rng.below(3);
      if (mode == 0) { // widen
        change.lower = 0;
        change.upper = mvx::kUnbounded;
        if (feature.lower == 0 && feature.upper == mvx::kUnbounded) continue;
      } else if (mode == 1) { // narrow but satisfied by every instance
        change.lower = 0;
        change.upper = std::max<size_t>(stats.max_count, 1);
        if (change.upper == feature.upper && change.lower == feature.lower) continue;
      } else { // narrow below the observed maximum: forces decisions
        if (feature.kind != mvx::FeatureKind::reference) continue;
        if (!instances || stats.max_count < 2) continue;
        change.lower = 0;
        change.upper = static_cast<int>(stats.max_count) - 1;
      }
      touch(cls, feature.name);
      op = std::move(change);
    } else if (choice == 8) { // ChangeFeatureType
      std::vector<std::pair<std::string, mvx::Feature>> candidates;
      for (const mvx::MetaClass& cls : wm.classes)
        for (const mvx::Feature& f : cls.features)
          if (!is_touched(cls.name, f.name)) candidates.push_back({cls.name, f});
      if (candidates.empty()) continue;
      auto [cls, feature] = rng.pick(candidates);
      mvx::ops::ChangeFeatureType change;
      change.class_name = cls;
      change.feature = feature.name;
      if (feature.kind == mvx::FeatureKind::reference) {
        const mvx::MetaClass* target = wm.find_class(feature.value_type);
        if (!target || target->supertypes.empty()) continue;
        change.new_type = target->supertypes.front(); // widen to the supertype
      } else {
        static const std::vector<std::string> types = {"string", "int", "bool"};
        change.new_type = rng.pick(types);
        if (change.new_type == feature.value_type) continue;
      }
      touch(cls, feature.name);
      op = std::move(change);
    } else { // MergeFeatures
      std::vector<std::string> classes;
      for (const mvx::MetaClass& cls : wm.classes) classes.push_back(cls.name);
      std::optional<mvx::ops::MergeFeatures> merge;
      for (const mvx::MetaClass& cls : wm.classes) {
        if (touched_classes.count(cls.name)) continue;
        if (cls.name.rfind("N", 0) == 0) continue; // hints need both-sided classes
        std::vector<mvx::Feature> refs;
        for (const mvx::Feature& f : cls.features)
          if (f.kind == mvx::FeatureKind::reference && !is_touched(cls.name, f.name))
            refs.push_back(f);
        if (refs.size() < 2) continue;
        // a target type every source specializes
        std::vector<std::string> common;
        for (const mvx::MetaClass& candidate : wm.classes) {
          bool ok = true;
          for (const mvx::Feature& f : refs)
            if (!mvx::is_subclass_of(wm, f.value_type, candidate.name)) ok = false;
          if (ok) common.push_back(candidate.name);
        }
        if (common.empty()) continue;
        mvx::ops::MergeFeatures candidate_op;
        candidate_op.class_name = cls.name;
        for (const mvx::Feature& f : refs) candidate_op.sources.push_back(f.name);
        candidate_op.target.name = names.feature_name();
        candidate_op.target.kind = mvx::FeatureKind::reference;
        candidate_op.target.value_type = rng.pick(common);
        bool all_containment = true;
        for (const mvx::Feature& f : refs) all_containment = all_containment && f.containment;
        candidate_op.target.containment = all_containment;
        candidate_op.target.lower = 0;
        size_t combined_max = 0;
        if (instances && mm.find_class(cls.name)) {
          for (const mvx::ModelObject& obj : instances->objects) {
            if (!mvx::is_subclass_of(mm, obj.class_name, cls.name)) continue;
            size_t n = 0;
            for (const std::string& s : candidate_op.sources)
              if (auto it = obj.links.find(s); it != obj.links.end()) n += it->second.size();
            combined_max = std::max(combined_max, n);
          }
        }
        if (rng.chance(0.5) && combined_max >= 2)
          candidate_op.target.upper = static_cast<int>(combined_max) - 1; // forces decisions
        else
          candidate_op.target.upper = mvx::kUnbounded;
        merge = std::move(candidate_op);
        break;
      }
      if (!merge) continue;
      touched_classes.insert(merge->class_name);
      out.hints.merges.push_back({merge->class_name, merge->sources, merge->target.name});
      op = std::move(*merge);
    }

    if (!op) continue;
    try {
      wm = mvx::apply_single_op(wm, *op, out.delta.ops.size());
    } catch (const mvx::Error&) {
      continue; // precondition did not hold; try a different op
    }
    out.delta.ops.push_back(std::move(*op));
  }

  if (out.delta.ops.empty()) {
    mvx::MetaClass cls;
    cls.name = names.fresh_class();
    out.delta.ops.push_back(mvx::ops::AddClass{std::move(cls)});
  }
  mvx::validate_metamodel(mvx::apply_delta(mm, out.delta));
  return out;
}

// First-k-candidates answers for every request; throws when a request is
// unsatisfiable (the delta generator avoids producing those).
inline mvx::DecisionFile synthesize_decisions(const mvx::MigrationPlan& plan, Rng& rng) {
  mvx::DecisionFile decisions;
  for (const mvx::DecisionRequest& request : plan.required_decisions) {
    mvx::Decision d;
    d.kind = request.kind;
    d.feature = request.feature;
    if (request.kind == mvx::DecisionKind::select_links) {
      d.object_id = request.object_id;
      int available = static_cast<int>(request.candidates.size());
      if (available < request.min_keep)
        throw std::logic_error("unsatisfiable select request generated");
      int keep = request.max_keep == mvx::kUnbounded ? available
                                                     : std::min(available, request.max_keep);
      d.keep.assign(request.candidates.begin(), request.candidates.begin() + keep);
    } else {
      d.class_name = request.class_name;
      if (!mvx::is_primitive_type(request.value_type))
        throw std::logic_error("reference default request generated");
      d.value = random_value(rng, request.value_type);
    }
    decisions.decisions.push_back(std::move(d));
  }
  return decisions;
}

} // namespace gen
