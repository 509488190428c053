#include "mvx/delta.hpp"

#include <algorithm>
#include <set>

#include "mvx/error.hpp"

namespace mvx {

namespace {

template <class... Ts> struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts> overloaded(Ts...) -> overloaded<Ts...>;

std::string feature_signature(const Feature& f) {
  std::string kind = f.kind == FeatureKind::attribute ? "attr" : "ref";
  return f.name + ": " + f.value_type + multiplicity_to_string(f.lower, f.upper) +
         (f.containment ? " containment" : "") + " (" + kind + ")";
}

} // namespace

std::string op_name(const DeltaOp& op) {
  return std::visit(
      overloaded{[](const ops::AddClass&) { return std::string("AddClass"); },
                 [](const ops::DeleteClass&) { return std::string("DeleteClass"); },
                 [](const ops::RenameClass&) { return std::string("RenameClass"); },
                 [](const ops::AddFeature&) { return std::string("AddFeature"); },
                 [](const ops::DeleteFeature&) { return std::string("DeleteFeature"); },
                 [](const ops::RenameFeature&) { return std::string("RenameFeature"); },
                 [](const ops::ChangeMultiplicity&) { return std::string("ChangeMultiplicity"); },
                 [](const ops::ChangeFeatureType&) { return std::string("ChangeFeatureType"); },
                 [](const ops::MergeFeatures&) { return std::string("MergeFeatures"); }},
      op);
}

std::string describe(const DeltaOp& op) {
  return std::visit(
      overloaded{
          [](const ops::AddClass& o) { return "AddClass " + o.def.name; },
          [](const ops::DeleteClass& o) { return "DeleteClass " + o.name; },
          [](const ops::RenameClass& o) { return "RenameClass " + o.from + " -> " + o.to; },
          [](const ops::AddFeature& o) {
            return "AddFeature " + o.class_name + "." + feature_signature(o.feature) +
                   (o.default_value ? " default " + primitive_to_string(*o.default_value) : "");
          },
          [](const ops::DeleteFeature& o) { return "DeleteFeature " + o.class_name + "." + o.feature; },
          [](const ops::RenameFeature& o) {
            return "RenameFeature " + o.class_name + "." + o.from + " -> " + o.to;
          },
          [](const ops::ChangeMultiplicity& o) {
            return "ChangeMultiplicity " + o.class_name + "." + o.feature + " -> " +
                   multiplicity_to_string(o.lower, o.upper);
          },
          [](const ops::ChangeFeatureType& o) {
            return "ChangeFeatureType " + o.class_name + "." + o.feature + " -> " + o.new_type;
          },
          [](const ops::MergeFeatures& o) {
            std::string sources;
            for (size_t i = 0; i < o.sources.size(); ++i)
              sources += (i ? ", " : "") + o.sources[i];
            return "MergeFeatures " + o.class_name + ".{" + sources + "} -> " +
                   feature_signature(o.target);
          }},
      op);
}

std::string_view to_string(ImpactClass c) {
  switch (c) {
    case ImpactClass::non_breaking: return "non_breaking";
    case ImpactClass::breaking_resolvable: return "breaking_resolvable";
    case ImpactClass::breaking_unresolvable: return "breaking_unresolvable";
  }
  return "?";
}

namespace {

[[noreturn]] void op_error(size_t index, const DeltaOp& op, const std::string& why) {
  throw Error(ErrorKind::precondition,
              "op " + std::to_string(index) + " (" + op_name(op) + "): " + why);
}

MetaClass* find_mutable(Metamodel& mm, const std::string& name) {
  for (MetaClass& c : mm.classes)
    if (c.name == name) return &c;
  return nullptr;
}

std::set<std::string> flattened_names(const Metamodel& mm, const std::string& class_name) {
  std::set<std::string> names;
  for (const Feature& f : effective_features(mm, class_name)) names.insert(f.name);
  return names;
}

void check_merge_target(const Metamodel& mm, const ops::MergeFeatures& o,
                        const std::vector<Feature>& source_features, size_t index,
                        const DeltaOp& op) {
  if (o.sources.size() < 2) op_error(index, op, "needs at least two source features");
  FeatureKind kind = source_features.front().kind;
  for (const Feature& f : source_features)
    if (f.kind != kind) op_error(index, op, "source features mix attributes and references");
  if (o.target.kind != kind)
    op_error(index, op, "target feature kind differs from the source features");
  for (const Feature& f : source_features) {
    bool ok = kind == FeatureKind::attribute
                  ? f.value_type == o.target.value_type
                  : is_subclass_of(mm, f.value_type, o.target.value_type);
    if (!ok)
      op_error(index, op, "target type '" + o.target.value_type +
                              "' is not a common supertype of source '" + f.name + "' (" +
                              f.value_type + ")");
  }
}

void apply_op(Metamodel& mm, const DeltaOp& op, size_t index) {
  std::visit(
      overloaded{
          [&](const ops::AddClass& o) {
            if (mm.find_class(o.def.name))
              op_error(index, op, "class '" + o.def.name + "' already exists");
            mm.classes.push_back(o.def);
          },
          [&](const ops::DeleteClass& o) {
            if (!mm.find_class(o.name)) op_error(index, op, "unknown class '" + o.name + "'");
            std::erase_if(mm.classes, [&](const MetaClass& c) { return c.name == o.name; });
          },
          [&](const ops::RenameClass& o) {
            if (!mm.find_class(o.from)) op_error(index, op, "unknown class '" + o.from + "'");
            if (mm.find_class(o.to)) op_error(index, op, "class '" + o.to + "' already exists");
            for (MetaClass& c : mm.classes) {
              if (c.name == o.from) c.name = o.to;
              for (std::string& super : c.supertypes)
                if (super == o.from) super = o.to;
              for (Feature& f : c.features)
                if (f.kind == FeatureKind::reference && f.value_type == o.from)
                  f.value_type = o.to;
            }
          },
          [&](const ops::AddFeature& o) {
            MetaClass* cls = find_mutable(mm, o.class_name);
            if (!cls) op_error(index, op, "unknown class '" + o.class_name + "'");
            if (flattened_names(mm, o.class_name).count(o.feature.name))
              op_error(index, op, "feature '" + o.feature.name + "' already exists on '" +
                                      o.class_name + "'");
            cls->features.push_back(o.feature);
          },
          [&](const ops::DeleteFeature& o) {
            MetaClass* cls = find_mutable(mm, o.class_name);
            if (!cls) op_error(index, op, "unknown class '" + o.class_name + "'");
            if (!cls->own_feature(o.feature))
              op_error(index, op,
                       "class '" + o.class_name + "' has no own feature '" + o.feature + "'");
            std::erase_if(cls->features, [&](const Feature& f) { return f.name == o.feature; });
          },
          [&](const ops::RenameFeature& o) {
            MetaClass* cls = find_mutable(mm, o.class_name);
            if (!cls) op_error(index, op, "unknown class '" + o.class_name + "'");
            if (!cls->own_feature(o.from))
              op_error(index, op,
                       "class '" + o.class_name + "' has no own feature '" + o.from + "'");
            if (flattened_names(mm, o.class_name).count(o.to))
              op_error(index, op, "feature '" + o.to + "' already exists on '" + o.class_name + "'");
            for (Feature& f : cls->features)
              if (f.name == o.from) f.name = o.to;
          },
          [&](const ops::ChangeMultiplicity& o) {
            MetaClass* cls = find_mutable(mm, o.class_name);
            if (!cls) op_error(index, op, "unknown class '" + o.class_name + "'");
            Feature* target = nullptr;
            for (Feature& f : cls->features)
              if (f.name == o.feature) target = &f;
            if (!target)
              op_error(index, op,
                       "class '" + o.class_name + "' has no own feature '" + o.feature + "'");
            if (o.lower < 0 || (o.upper != kUnbounded && (o.upper < 1 || o.lower > o.upper)))
              op_error(index, op, "bad bounds " + multiplicity_to_string(o.lower, o.upper));
            target->lower = o.lower;
            target->upper = o.upper;
          },
          [&](const ops::ChangeFeatureType& o) {
            MetaClass* cls = find_mutable(mm, o.class_name);
            if (!cls) op_error(index, op, "unknown class '" + o.class_name + "'");
            Feature* target = nullptr;
            for (Feature& f : cls->features)
              if (f.name == o.feature) target = &f;
            if (!target)
              op_error(index, op,
                       "class '" + o.class_name + "' has no own feature '" + o.feature + "'");
            target->value_type = o.new_type;
            target->kind =
                is_primitive_type(o.new_type) ? FeatureKind::attribute : FeatureKind::reference;
            if (target->kind == FeatureKind::attribute) target->containment = false;
          },
          [&](const ops::MergeFeatures& o) {
            MetaClass* cls = find_mutable(mm, o.class_name);
            if (!cls) op_error(index, op, "unknown class '" + o.class_name + "'");
            std::vector<Feature> sources;
            for (const std::string& s : o.sources) {
              const Feature* f = cls->own_feature(s);
              if (!f)
                op_error(index, op, "class '" + o.class_name + "' has no own feature '" + s + "'");
              sources.push_back(*f);
            }
            std::set<std::string> remaining = flattened_names(mm, o.class_name);
            for (const std::string& s : o.sources) remaining.erase(s);
            if (remaining.count(o.target.name))
              op_error(index, op,
                       "feature '" + o.target.name + "' already exists on '" + o.class_name + "'");
            check_merge_target(mm, o, sources, index, op);
            std::erase_if(cls->features, [&](const Feature& f) {
              return std::find(o.sources.begin(), o.sources.end(), f.name) != o.sources.end();
            });
            cls->features.push_back(o.target);
          }},
      op);
}

} // namespace

Metamodel apply_delta(const Metamodel& a, const Delta& d) {
  Metamodel result = a;
  for (size_t i = 0; i < d.ops.size(); ++i) apply_op(result, d.ops[i], i);
  try {
    validate_metamodel(result);
  } catch (const Error& e) {
    throw Error(ErrorKind::precondition,
                std::string("delta produces an invalid metamodel: ") + e.what());
  }
  return result;
}

Metamodel apply_single_op(const Metamodel& a, const DeltaOp& op, size_t index) {
  Metamodel result = a;
  apply_op(result, op, index);
  return result;
}

// ---------------------------------------------------------------------------
// diff

namespace {

[[noreturn]] void hint_error(const std::string& why) {
  throw Error(ErrorKind::precondition, "inconsistent hints: " + why);
}

struct ClassPair {
  const MetaClass* a = nullptr;
  const MetaClass* b = nullptr;
};

// Orders pending renames so every rename's target name is free when it
// applies; bails out on cycles (e.g. swapped names).
template <typename Rename>
std::vector<Rename> schedule_renames(std::vector<Rename> pending, std::set<std::string> occupied,
                                     const std::string& what) {
  std::vector<Rename> ordered;
  while (!pending.empty()) {
    size_t picked = pending.size();
    for (size_t i = 0; i < pending.size(); ++i) {
      if (!occupied.count(pending[i].to)) {
        picked = i;
        break;
      }
    }
    if (picked == pending.size())
      hint_error("cannot schedule " + what + " renames (cyclic or colliding targets)");
    occupied.erase(pending[picked].from);
    occupied.insert(pending[picked].to);
    ordered.push_back(pending[picked]);
    pending.erase(pending.begin() + picked);
  }
  return ordered;
}

bool feature_equal_mapped(const Feature& fa, const Feature& fb,
                          const std::map<std::string, std::string>& class_map) {
  if (fa.kind != fb.kind || fa.lower != fb.lower || fa.upper != fb.upper ||
      fa.containment != fb.containment)
    return false;
  if (fa.kind == FeatureKind::attribute) return fa.value_type == fb.value_type;
  auto it = class_map.find(fa.value_type);
  const std::string& mapped = it == class_map.end() ? fa.value_type : it->second;
  return mapped == fb.value_type;
}

} // namespace

Delta diff_metamodel(const Metamodel& a, const Metamodel& b, const DiffHints& hints) {
  Delta delta;

  // split rename hints into class renames and per-class feature renames
  std::map<std::string, std::string> class_renames;      // a name -> b name
  std::map<std::string, std::map<std::string, std::string>> feature_renames; // hint class -> old -> new
  for (const auto& [key, value] : hints.renames) {
    auto dot = key.find('.');
    if (dot == std::string::npos) {
      if (key == value) hint_error("rename maps '" + key + "' to itself");
      class_renames[key] = value;
    } else {
      std::string cls = key.substr(0, dot);
      std::string old_name = key.substr(dot + 1);
      std::string new_name = value;
      if (auto vdot = value.find('.'); vdot != std::string::npos) {
        if (value.substr(0, vdot) != cls)
          hint_error("feature rename '" + key + "' -> '" + value + "' crosses classes");
        new_name = value.substr(vdot + 1);
      }
      if (old_name == new_name) hint_error("rename maps '" + key + "' to itself");
      feature_renames[cls][old_name] = new_name;
    }
  }

  for (const auto& [from, to] : class_renames) {
    if (!a.find_class(from)) hint_error("rename source class '" + from + "' absent");
    if (!b.find_class(to)) hint_error("rename target class '" + to + "' absent");
  }
  std::set<std::string> renamed_over; // b names claimed by a rename
  for (const auto& [from, to] : class_renames) renamed_over.insert(to);

  // name map a -> b (identity unless renamed), and the matched pairs;
  // a b-side name claimed by a rename never identity-matches, so deleting a
  // class and reusing its name through a rename stays expressible
  std::map<std::string, std::string> class_map;
  std::map<std::string, ClassPair> pairs; // keyed by b-side name
  std::set<std::string> matched_b;
  for (const MetaClass& ca : a.classes) {
    std::string b_name;
    if (auto it = class_renames.find(ca.name); it != class_renames.end())
      b_name = it->second;
    else if (b.find_class(ca.name) && !renamed_over.count(ca.name))
      b_name = ca.name;
    else
      continue;
    if (matched_b.count(b_name))
      hint_error("two classes map onto '" + b_name + "'");
    class_map[ca.name] = b_name;
    pairs[b_name] = {&ca, b.find_class(b_name)};
    matched_b.insert(b_name);
  }

  std::vector<ops::DeleteClass> class_deletes;
  std::vector<ops::RenameClass> class_rename_ops;
  std::vector<ops::AddClass> class_adds;

  for (const MetaClass& ca : a.classes)
    if (!class_map.count(ca.name)) class_deletes.push_back({ca.name});
  for (const MetaClass& cb : b.classes)
    if (!matched_b.count(cb.name)) class_adds.push_back({cb});
  for (const auto& [from, to] : class_renames) class_rename_ops.push_back({from, to});

  // pairs whose class-level signature changed are replaced wholesale
  std::set<std::string> replaced;
  for (auto& [b_name, pair] : pairs) {
    std::vector<std::string> mapped_supers;
    for (const std::string& super : pair.a->supertypes) {
      auto it = class_map.find(super);
      mapped_supers.push_back(it == class_map.end() ? super : it->second);
    }
    if (pair.a->abstract != pair.b->abstract || mapped_supers != pair.b->supertypes) {
      if (class_renames.count(pair.a->name))
        hint_error("renamed class '" + pair.a->name + "' also changed supertypes or abstractness");
      replaced.insert(b_name);
      class_deletes.push_back({pair.a->name});
      class_adds.push_back({*pair.b});
    }
  }
  for (const std::string& name : replaced) pairs.erase(name);

  std::sort(class_deletes.begin(), class_deletes.end(),
            [](const auto& x, const auto& y) { return x.name < y.name; });
  std::sort(class_adds.begin(), class_adds.end(),
            [](const auto& x, const auto& y) { return x.def.name < y.def.name; });
  {
    std::set<std::string> occupied;
    for (const MetaClass& ca : a.classes) occupied.insert(ca.name);
    for (const auto& d : class_deletes) occupied.erase(d.name);
    class_rename_ops = schedule_renames(class_rename_ops, occupied, "class");
  }

  // per-pair feature diff
  std::vector<ops::DeleteFeature> f_deletes;
  std::vector<ops::RenameFeature> f_renames;
  std::vector<ops::MergeFeatures> f_merges;
  std::vector<ops::ChangeMultiplicity> f_mults;
  std::vector<ops::ChangeFeatureType> f_types;
  std::vector<ops::AddFeature> f_adds;

  auto pair_for_hint_class = [&](const std::string& name) -> ClassPair* {
    for (auto& [b_name, pair] : pairs)
      if (pair.a->name == name || pair.b->name == name) return &pair;
    return nullptr;
  };

  for (const auto& entry : feature_renames)
    if (!pair_for_hint_class(entry.first))
      hint_error("feature renames reference class '" + entry.first +
                 "', which is not an evolved class of both versions");

  // consume merge hints first so their features are excluded from matching
  std::map<std::string, std::set<std::string>> merged_sources; // a-class -> features
  std::map<std::string, std::set<std::string>> merged_targets; // b-class -> features
  for (const DiffHints::Merge& merge : hints.merges) {
    ClassPair* pair = pair_for_hint_class(merge.class_name);
    if (!pair) hint_error("merge class '" + merge.class_name + "' is not a matched class");
    if (merge.sources.size() < 2) hint_error("merge needs at least two sources");
    for (const std::string& s : merge.sources) {
      if (!pair->a->own_feature(s))
        hint_error("merge source '" + merge.class_name + "." + s + "' absent");
      if (pair->b->own_feature(s))
        hint_error("merge source '" + merge.class_name + "." + s + "' still present");
      if (!merged_sources[pair->a->name].insert(s).second)
        hint_error("merge source '" + merge.class_name + "." + s + "' used twice");
    }
    const Feature* target = pair->b->own_feature(merge.target);
    if (!target) hint_error("merge target '" + merge.class_name + "." + merge.target + "' absent");
    if (pair->a->own_feature(merge.target))
      hint_error("merge target '" + merge.class_name + "." + merge.target + "' already existed");
    if (!merged_targets[pair->b->name].insert(merge.target).second)
      hint_error("merge target '" + merge.class_name + "." + merge.target + "' used twice");
    ops::MergeFeatures op{pair->b->name, merge.sources, *target};
    // the target type must generalize every source, checked against b
    std::vector<Feature> source_features;
    for (const std::string& s : merge.sources) {
      Feature f = *pair->a->own_feature(s);
      if (f.kind == FeatureKind::reference)
        if (auto it = class_map.find(f.value_type); it != class_map.end())
          f.value_type = it->second;
      source_features.push_back(f);
    }
    try {
      check_merge_target(b, op, source_features, 0, DeltaOp(op));
    } catch (const Error& e) {
      hint_error(std::string("merge target incompatible: ") + e.what());
    }
    f_merges.push_back(std::move(op));
  }

  for (auto& [b_name, pair] : pairs) {
    const std::map<std::string, std::string>* renames = nullptr;
    if (auto it = feature_renames.find(pair.a->name); it != feature_renames.end())
      renames = &it->second;
    else if (auto it2 = feature_renames.find(pair.b->name); it2 != feature_renames.end())
      renames = &it2->second;

    std::map<std::string, std::string> feature_map; // a feature -> b feature
    std::set<std::string> feature_renamed_over;     // b names claimed by renames
    if (renames) {
      for (const auto& [from, to] : *renames) {
        if (!pair.a->own_feature(from))
          hint_error("rename source feature '" + pair.a->name + "." + from + "' absent");
        if (!pair.b->own_feature(to))
          hint_error("rename target feature '" + b_name + "." + to + "' absent");
        if (merged_sources[pair.a->name].count(from) || merged_targets[b_name].count(to))
          hint_error("feature '" + from + "' takes part in both a rename and a merge");
        if (!feature_renamed_over.insert(to).second)
          hint_error("two features rename onto '" + b_name + "." + to + "'");
        feature_map[from] = to;
        f_renames.push_back({b_name, from, to});
      }
    }
    for (const Feature& fa : pair.a->features) {
      if (merged_sources[pair.a->name].count(fa.name)) continue;
      if (feature_map.count(fa.name)) continue;
      if (pair.b->own_feature(fa.name) && !feature_renamed_over.count(fa.name))
        feature_map[fa.name] = fa.name;
    }

    std::set<std::string> matched_b_features;
    for (const auto& [fa_name, fb_name] : feature_map) matched_b_features.insert(fb_name);

    for (const Feature& fa : pair.a->features) {
      if (merged_sources[pair.a->name].count(fa.name)) continue;
      auto it = feature_map.find(fa.name);
      if (it == feature_map.end()) {
        f_deletes.push_back({b_name, fa.name});
        continue;
      }
      const Feature& fb = *pair.b->own_feature(it->second);
      if (feature_equal_mapped(fa, fb, class_map)) continue;
      Feature fa_renamed = fa;
      fa_renamed.name = fb.name;
      // single-facet changes map onto dedicated ops, anything else is
      // replaced
      Feature bounds_only = fa_renamed;
      bounds_only.lower = fb.lower;
      bounds_only.upper = fb.upper;
      Feature type_only = fa_renamed;
      type_only.value_type = fb.value_type;
      type_only.kind =
          is_primitive_type(fb.value_type) ? FeatureKind::attribute : FeatureKind::reference;
      if (type_only.kind == FeatureKind::attribute) type_only.containment = false;
      if (feature_equal_mapped(bounds_only, fb, class_map)) {
        f_mults.push_back({b_name, fb.name, fb.lower, fb.upper});
      } else if (feature_equal_mapped(type_only, fb, class_map)) {
        f_types.push_back({b_name, fb.name, fb.value_type});
      } else {
        if (fb.name != fa.name)
          hint_error("renamed feature '" + pair.a->name + "." + fa.name +
                     "' also changed more than one signature facet");
        f_deletes.push_back({b_name, fa.name});
        f_adds.push_back({b_name, fb, std::nullopt});
      }
    }
    for (const Feature& fb : pair.b->features) {
      if (merged_targets[b_name].count(fb.name)) continue;
      if (!matched_b_features.count(fb.name)) f_adds.push_back({b_name, fb, std::nullopt});
    }

    {
      std::vector<ops::RenameFeature> mine;
      std::erase_if(f_renames, [&](const ops::RenameFeature& r) {
        if (r.class_name != b_name) return false;
        mine.push_back(r);
        return true;
      });
      std::set<std::string> occupied;
      for (const Feature& fa : pair.a->features) occupied.insert(fa.name);
      for (const auto& d : f_deletes)
        if (d.class_name == b_name) occupied.erase(d.feature);
      for (const auto& r : schedule_renames(mine, occupied, "feature"))
        f_renames.push_back(r);
    }
  }

  auto by_class_feature = [](const auto& x, const auto& y) {
    return std::tie(x.class_name, x.feature) < std::tie(y.class_name, y.feature);
  };
  std::sort(f_deletes.begin(), f_deletes.end(), by_class_feature);
  std::sort(f_merges.begin(), f_merges.end(), [](const auto& x, const auto& y) {
    return std::tie(x.class_name, x.target.name) < std::tie(y.class_name, y.target.name);
  });
  std::sort(f_mults.begin(), f_mults.end(), by_class_feature);
  std::sort(f_types.begin(), f_types.end(), by_class_feature);
  std::sort(f_adds.begin(), f_adds.end(), [](const auto& x, const auto& y) {
    return std::tie(x.class_name, x.feature.name) < std::tie(y.class_name, y.feature.name);
  });

  for (auto& op : class_deletes) delta.ops.push_back(op);
  for (auto& op : class_rename_ops) delta.ops.push_back(op);
  for (auto& op : class_adds) delta.ops.push_back(op);
  for (auto& op : f_deletes) delta.ops.push_back(op);
  for (auto& op : f_renames) delta.ops.push_back(op);
  for (auto& op : f_merges) delta.ops.push_back(op);
  for (auto& op : f_mults) delta.ops.push_back(op);
  for (auto& op : f_types) delta.ops.push_back(op);
  for (auto& op : f_adds) delta.ops.push_back(op);
  return delta;
}

// ---------------------------------------------------------------------------
// impact classification

namespace {

bool widens(const Feature& old_feature, int new_lower, int new_upper) {
  bool lower_ok = new_lower <= old_feature.lower;
  bool upper_ok = new_upper == kUnbounded ||
                  (old_feature.upper != kUnbounded && new_upper >= old_feature.upper);
  return lower_ok && upper_ok;
}

size_t slot_count(const ModelObject& obj, const std::string& feature) {
  size_t n = 0;
  if (auto it = obj.attribute_values.find(feature); it != obj.attribute_values.end())
    n += it->second.size();
  if (auto it = obj.links.find(feature); it != obj.links.end()) n += it->second.size();
  return n;
}

bool within(size_t count, int lower, int upper) {
  if (count < static_cast<size_t>(lower)) return false;
  return upper == kUnbounded || count <= static_cast<size_t>(upper);
}

std::optional<Feature> effective_feature(const Metamodel& mm, const std::string& class_name,
                                         const std::string& feature) {
  for (const Feature& f : effective_features(mm, class_name))
    if (f.name == feature) return f;
  return std::nullopt;
}

} // namespace

ImpactClass classify(const Metamodel& context, const DeltaOp& op, const ModelInstance* instances) {
  return std::visit(
      overloaded{
          [&](const ops::AddClass&) { return ImpactClass::non_breaking; },
          [&](const ops::DeleteClass&) { return ImpactClass::breaking_resolvable; },
          [&](const ops::RenameClass&) { return ImpactClass::breaking_resolvable; },
          [&](const ops::AddFeature& o) {
            if (o.feature.lower == 0) return ImpactClass::non_breaking;
            return o.default_value ? ImpactClass::breaking_resolvable
                                   : ImpactClass::breaking_unresolvable;
          },
          [&](const ops::DeleteFeature&) { return ImpactClass::breaking_resolvable; },
          [&](const ops::RenameFeature&) { return ImpactClass::breaking_resolvable; },
          [&](const ops::ChangeMultiplicity& o) {
            std::optional<Feature> f = effective_feature(context, o.class_name, o.feature);
            if (!f)
              throw Error(ErrorKind::not_found, "classify: unknown feature '" + o.class_name +
                                                    "." + o.feature + "'");
            if (widens(*f, o.lower, o.upper)) return ImpactClass::breaking_resolvable;
            if (!instances) return ImpactClass::breaking_unresolvable;
            for (const ModelObject* obj : extent(*instances, context, o.class_name))
              if (!within(slot_count(*obj, o.feature), o.lower, o.upper))
                return ImpactClass::breaking_unresolvable;
            return ImpactClass::breaking_resolvable;
          },
          [&](const ops::ChangeFeatureType& o) {
            std::optional<Feature> f = effective_feature(context, o.class_name, o.feature);
            if (!f)
              throw Error(ErrorKind::not_found, "classify: unknown feature '" + o.class_name +
                                                    "." + o.feature + "'");
            if (f->kind == FeatureKind::reference && !is_primitive_type(o.new_type) &&
                is_subclass_of(context, f->value_type, o.new_type))
              return ImpactClass::breaking_resolvable;
            if (f->kind == FeatureKind::attribute && f->value_type == o.new_type)
              return ImpactClass::breaking_resolvable;
            return ImpactClass::breaking_unresolvable;
          },
          [&](const ops::MergeFeatures& o) {
            if (!instances) return ImpactClass::breaking_unresolvable;
            for (const ModelObject* obj : extent(*instances, context, o.class_name)) {
              size_t combined = 0;
              for (const std::string& s : o.sources) combined += slot_count(*obj, s);
              if (!within(combined, o.target.lower, o.target.upper))
                return ImpactClass::breaking_unresolvable;
            }
            return ImpactClass::breaking_resolvable;
          }},
      op);
}

Delta compose_deltas(const std::vector<Delta>& chain) {
  Delta out;
  if (chain.empty()) return out;
  out.from_version = chain.front().from_version;
  out.to_version = chain.back().to_version;
  for (const Delta& d : chain)
    out.ops.insert(out.ops.end(), d.ops.begin(), d.ops.end());
  return out;
}

} // namespace mvx
