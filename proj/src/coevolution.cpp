#include "mvx/coevolution.hpp"

#include <algorithm>
#include <set>

#include "mvx/error.hpp"

namespace mvx {

const std::vector<LinkType>& link_type_registry() {
  static const std::vector<LinkType> registry = {
      {"conformance", true}, {"use", true},       {"implementation", false},
      {"refinement", false}, {"binding", false},
  };
  return registry;
}

const LinkType* find_link_type(std::string_view name) {
  for (const LinkType& t : link_type_registry())
    if (t.name == name) return &t;
  return nullptr;
}

void validate_link(const CrossLink& link) {
  if (link.id.empty()) throw Error(ErrorKind::usage, "cross-link with empty id");
  if (!find_link_type(link.type))
    throw Error(ErrorKind::usage, "link '" + link.id + "': unknown link type '" + link.type + "'");
  if (link.source.multiverse == link.target.multiverse)
    throw Error(ErrorKind::usage, "link '" + link.id +
                                      "': source and target must live in different multiverses");
}

std::string_view to_string(DecisionKind k) {
  return k == DecisionKind::select_links ? "select_links" : "default_value";
}

// ---------------------------------------------------------------------------
// consistency

namespace {

const Slice& require_slice(const MultiverseMap& universe, const SliceKey& key) {
  auto it = universe.find(key.multiverse);
  if (it == universe.end())
    throw Error(ErrorKind::not_found, "unknown multiverse '" + key.multiverse + "'");
  const Slice* slice = it->second.find_slice(key.version);
  if (!slice)
    throw Error(ErrorKind::not_found,
                "multiverse '" + key.multiverse + "': unknown slice '" + key.version + "'");
  return *slice;
}

// The exported-signature surface of an artifact: a metamodel directly, or
// the metamodel-like "exports" descriptor sitting next to a blob.
const Metamodel* signature_surface(const Slice& slice, const std::string& artifact,
                                   std::string& problem) {
  auto it = slice.artifacts.find(artifact);
  if (it == slice.artifacts.end()) {
    problem = "artifact '" + artifact + "' absent from slice " + slice.version;
    return nullptr;
  }
  if (it->second.kind == ArtifactKind::metamodel) return it->second.metamodel.get();
  if (it->second.kind == ArtifactKind::blob) {
    auto exports = slice.artifacts.find("exports");
    if (exports != slice.artifacts.end() && exports->second.kind == ArtifactKind::metamodel)
      return exports->second.metamodel.get();
    problem = "blob '" + artifact + "' has no adjacent exports descriptor";
    return nullptr;
  }
  problem = "artifact '" + artifact + "' is a model, not a signature surface";
  return nullptr;
}

struct UsedElement {
  std::string class_name;
  std::string feature; // empty for class-level uses
};

UsedElement parse_used(const std::string& name) {
  auto dot = name.find('.');
  if (dot == std::string::npos) return {name, ""};
  return {name.substr(0, dot), name.substr(dot + 1)};
}

std::optional<Feature> flattened_feature(const Metamodel& mm, const std::string& class_name,
                                         const std::string& feature) {
  if (!mm.find_class(class_name)) return std::nullopt;
  for (const Feature& f : effective_features(mm, class_name))
    if (f.name == feature) return f;
  return std::nullopt;
}

LinkResult evaluate_conformance(const MultiverseMap& universe, const CrossLink& link,
                                const Slice& source_slice, const Slice& eval_slice) {
  (void)universe;
  LinkResult result;
  result.id = link.id;
  auto src = source_slice.artifacts.find(link.source.artifact);
  if (src == source_slice.artifacts.end())
    throw Error(ErrorKind::not_found, "link '" + link.id + "': dangling artifact reference " +
                                          link.source.to_string());
  if (src->second.kind != ArtifactKind::model)
    throw Error(ErrorKind::precondition,
                "link '" + link.id + "': conformance source must be a model");
  auto tgt = eval_slice.artifacts.find(link.target.artifact);
  if (tgt == eval_slice.artifacts.end()) {
    result.holds = false;
    result.violations.push_back("target artifact '" + link.target.artifact +
                                "' absent from slice " + eval_slice.version);
    return result;
  }
  if (tgt->second.kind != ArtifactKind::metamodel) {
    result.holds = false;
    result.violations.push_back("target artifact '" + link.target.artifact +
                                "' is not a metamodel");
    return result;
  }
  ConformanceReport report = check_conformance(*src->second.model, *tgt->second.metamodel);
  result.holds = report.holds;
  for (const Violation& v : report.violations)
    result.violations.push_back(v.object_id + ": " + std::string(to_string(v.kind)) + " (" +
                                v.detail + ")");
  return result;
}

LinkResult evaluate_use(const MultiverseMap& universe, const CrossLink& link,
                        const Slice& source_slice, const Slice& eval_slice) {
  LinkResult result;
  result.id = link.id;
  if (!source_slice.artifacts.count(link.source.artifact))
    throw Error(ErrorKind::not_found, "link '" + link.id + "': dangling artifact reference " +
                                          link.source.to_string());
  // baseline = the declared target version; its surface pins the expected
  // signatures
  const Slice& declared = require_slice(universe, {link.target.multiverse, link.target.version});
  std::string problem;
  const Metamodel* baseline = signature_surface(declared, link.target.artifact, problem);
  if (!baseline)
    throw Error(ErrorKind::precondition,
                "link '" + link.id + "': " + problem + " (declared target)");
  const Metamodel* current = signature_surface(eval_slice, link.target.artifact, problem);
  if (!current) {
    result.holds = false;
    result.violations.push_back(problem);
    return result;
  }
  for (const std::string& name : link.uses) {
    UsedElement used = parse_used(name);
    if (used.feature.empty()) {
      if (!baseline->find_class(used.class_name))
        result.violations.push_back("export '" + name + "' not present at declared target");
      else if (!current->find_class(used.class_name))
        result.violations.push_back("export '" + name + "' missing");
      continue;
    }
    std::optional<Feature> before = flattened_feature(*baseline, used.class_name, used.feature);
    if (!before) {
      result.violations.push_back("export '" + name + "' not present at declared target");
      continue;
    }
    std::optional<Feature> after = flattened_feature(*current, used.class_name, used.feature);
    if (!after) {
      result.violations.push_back("export '" + name + "' missing");
      continue;
    }
    if (before->value_type != after->value_type || before->lower != after->lower ||
        before->upper != after->upper)
      result.violations.push_back(
          "export '" + name + "' signature changed: was " + before->value_type +
          multiplicity_to_string(before->lower, before->upper) + ", now " + after->value_type +
          multiplicity_to_string(after->lower, after->upper));
  }
  result.holds = result.violations.empty();
  return result;
}

} // namespace

ConsistencyResult consistency(const MultiverseMap& universe, const SliceKey& s1,
                              const SliceKey& s2, const std::string& link_type,
                              const std::vector<CrossLink>& links) {
  const LinkType* type = find_link_type(link_type);
  if (!type) throw Error(ErrorKind::not_found, "unknown link type '" + link_type + "'");
  if (!type->has_evaluator)
    throw Error(ErrorKind::no_evaluator, "link type '" + link_type + "' has no evaluator");

  const Slice& source_slice = require_slice(universe, s1);
  const Slice& eval_slice = require_slice(universe, s2);

  std::vector<const CrossLink*> relevant;
  for (const CrossLink& link : links) {
    if (link.type != link_type) continue;
    if (link.source.multiverse != s1.multiverse || link.source.version != s1.version) continue;
    if (link.target.multiverse != s2.multiverse) continue;
    relevant.push_back(&link);
  }
  std::sort(relevant.begin(), relevant.end(),
            [](const CrossLink* a, const CrossLink* b) { return a->id < b->id; });

  ConsistencyResult result;
  for (const CrossLink* link : relevant) {
    LinkResult lr = link_type == "conformance"
                        ? evaluate_conformance(universe, *link, source_slice, eval_slice)
                        : evaluate_use(universe, *link, source_slice, eval_slice);
    if (!lr.holds) result.holds = false;
    result.per_link.push_back(std::move(lr));
  }
  return result;
}

// ---------------------------------------------------------------------------
// trigger detection

namespace {

// all directed paths from -> to, at most two collected
void collect_paths(const Multiverse& mv, const std::string& from, const std::string& to,
                   std::vector<std::string>& path, std::vector<std::vector<std::string>>& out) {
  path.push_back(from);
  if (from == to) {
    out.push_back(path);
  } else {
    for (const std::string& child : mv.children(from))
      if (out.size() < 2) collect_paths(mv, child, to, path, out);
  }
  path.pop_back();
}

const DesignTransition* find_transition(const Multiverse& mv, const std::string& from,
                                        const std::string& to) {
  for (const DesignTransition& t : mv.transitions)
    if (t.from == from && t.to == to) return &t;
  return nullptr;
}

// Delta of one artifact along a transition path: recorded deltas where the
// transitions carry them, structural diffs otherwise, identity when the
// payload is unchanged.
Delta composed_delta_along(const Multiverse& mv, const std::vector<std::string>& path,
                           const std::string& artifact) {
  std::vector<Delta> chain;
  for (size_t i = 0; i + 1 < path.size(); ++i) {
    const std::string& from = path[i];
    const std::string& to = path[i + 1];
    const DesignTransition* transition = find_transition(mv, from, to);
    if (transition) {
      if (auto it = transition->deltas.find(artifact); it != transition->deltas.end()) {
        chain.push_back(it->second);
        continue;
      }
    }
    const Slice* a = mv.find_slice(from);
    const Slice* b = mv.find_slice(to);
    if (!a || !b) continue;
    auto ita = a->artifacts.find(artifact);
    auto itb = b->artifacts.find(artifact);
    if (ita == a->artifacts.end() || itb == b->artifacts.end()) continue;
    if (ita->second.kind != ArtifactKind::metamodel ||
        itb->second.kind != ArtifactKind::metamodel)
      continue;
    if (payload_equal(ita->second, itb->second)) continue;
    Delta d = diff_metamodel(*ita->second.metamodel, *itb->second.metamodel);
    d.from_version = from;
    d.to_version = to;
    chain.push_back(std::move(d));
  }
  Delta composed = compose_deltas(chain);
  composed.from_version = path.front();
  composed.to_version = path.back();
  return composed;
}

bool op_touches_uses(const DeltaOp& op, const std::vector<std::string>& uses) {
  auto touches = [&](const std::string& cls, const std::string& feature) {
    for (const std::string& name : uses) {
      UsedElement used = parse_used(name);
      if (used.class_name != cls) continue;
      if (feature.empty() || used.feature.empty() || used.feature == feature) return true;
    }
    return false;
  };
  if (const auto* o = std::get_if<ops::DeleteClass>(&op)) return touches(o->name, "");
  if (const auto* o = std::get_if<ops::RenameClass>(&op)) return touches(o->from, "");
  if (const auto* o = std::get_if<ops::DeleteFeature>(&op)) return touches(o->class_name, o->feature);
  if (const auto* o = std::get_if<ops::RenameFeature>(&op)) return touches(o->class_name, o->from);
  if (const auto* o = std::get_if<ops::ChangeMultiplicity>(&op))
    return touches(o->class_name, o->feature);
  if (const auto* o = std::get_if<ops::ChangeFeatureType>(&op))
    return touches(o->class_name, o->feature);
  if (const auto* o = std::get_if<ops::MergeFeatures>(&op)) {
    for (const std::string& s : o->sources)
      if (touches(o->class_name, s)) return true;
    return false;
  }
  return false; // additions never invalidate a use
}

std::string op_class_name(const DeltaOp& op) {
  if (const auto* o = std::get_if<ops::AddFeature>(&op)) return o->class_name;
  if (const auto* o = std::get_if<ops::DeleteFeature>(&op)) return o->class_name;
  if (const auto* o = std::get_if<ops::RenameFeature>(&op)) return o->class_name;
  if (const auto* o = std::get_if<ops::ChangeMultiplicity>(&op)) return o->class_name;
  if (const auto* o = std::get_if<ops::ChangeFeatureType>(&op)) return o->class_name;
  if (const auto* o = std::get_if<ops::MergeFeatures>(&op)) return o->class_name;
  if (const auto* o = std::get_if<ops::DeleteClass>(&op)) return o->name;
  if (const auto* o = std::get_if<ops::RenameClass>(&op)) return o->from;
  return "";
}

} // namespace

TriggerReport detect_trigger(const MultiverseMap& universe, const std::string& link_type,
                             const std::vector<CrossLink>& links, const SliceKey& s1,
                             const SliceKey& s2, const std::string& s2_prime_version) {
  auto mv_it = universe.find(s2.multiverse);
  if (mv_it == universe.end())
    throw Error(ErrorKind::not_found, "unknown multiverse '" + s2.multiverse + "'");
  const Multiverse& mv2 = mv_it->second;
  for (const std::string& v : {s2.version, s2_prime_version})
    if (!mv2.find_slice(v))
      throw Error(ErrorKind::not_found,
                  "multiverse '" + mv2.name + "': unknown slice '" + v + "'");

  std::vector<std::string> scratch;
  std::vector<std::vector<std::string>> paths;
  collect_paths(mv2, s2.version, s2_prime_version, scratch, paths);
  if (paths.empty())
    throw Error(ErrorKind::precondition, "no directed transition path " + s2.version + " -> " +
                                             s2_prime_version + " in multiverse '" + mv2.name +
                                             "'");
  if (paths.size() > 1)
    throw Error(ErrorKind::precondition, "multiple transition paths " + s2.version + " -> " +
                                             s2_prime_version + " in multiverse '" + mv2.name +
                                             "'; pin a path");

  TriggerReport report;
  report.s1 = s1;
  report.s2 = s2;
  report.s2_prime = {s2.multiverse, s2_prime_version};
  report.path = paths.front();

  ConsistencyResult before = consistency(universe, s1, s2, link_type, links);
  ConsistencyResult after =
      consistency(universe, s1, report.s2_prime, link_type, links);
  report.consistent_before = before.holds;
  report.consistent_after = after.holds;
  report.triggered = before.holds && !after.holds;
  for (const LinkResult& lr : before.per_link) report.link_ids.push_back(lr.id);

  // causes: the composed delta per target artifact, classified against the
  // source slice's instances
  const Slice& source_slice = require_slice(universe, s1);
  std::set<std::string> seen_ops;
  for (const CrossLink& link : links) {
    if (link.type != link_type) continue;
    if (link.source.multiverse != s1.multiverse || link.source.version != s1.version) continue;
    if (link.target.multiverse != s2.multiverse) continue;

    std::string surface = link.target.artifact;
    const Slice& base = *mv2.find_slice(s2.version);
    if (auto it = base.artifacts.find(surface);
        it != base.artifacts.end() && it->second.kind == ArtifactKind::blob)
      surface = "exports";
    Delta composed = composed_delta_along(mv2, report.path, surface);
    if (composed.empty()) continue;

    const ModelInstance* instances = nullptr;
    if (link_type == "conformance") {
      auto src = source_slice.artifacts.find(link.source.artifact);
      if (src != source_slice.artifacts.end() && src->second.kind == ArtifactKind::model)
        instances = src->second.model.get();
    }

    const Slice& s2_slice = *mv2.find_slice(s2.version);
    auto surface_it = s2_slice.artifacts.find(surface);
    if (surface_it == s2_slice.artifacts.end() ||
        surface_it->second.kind != ArtifactKind::metamodel)
      continue;
    Metamodel state = *surface_it->second.metamodel;
    for (const DeltaOp& op : composed.ops) {
      ImpactClass impact;
      try {
        impact = classify(state, op, instances);
      } catch (const Error&) {
        impact = ImpactClass::breaking_unresolvable;
      }
      bool relevant = link_type == "use" ? op_touches_uses(op, link.uses)
                                         : impact != ImpactClass::non_breaking;
      if (relevant && seen_ops.insert(surface + "|" + describe(op)).second) {
        TriggerCause cause;
        cause.artifact = surface;
        cause.op = describe(op);
        cause.impact = impact;
        if (instances) {
          std::string cls = op_class_name(op);
          if (!cls.empty() && state.find_class(cls))
            for (const ModelObject* obj : extent(*instances, state, cls))
              cause.affected_objects.push_back(obj->id);
        }
        report.causes.push_back(std::move(cause));
      }
      try {
        Delta single;
        single.ops.push_back(op);
        state = apply_delta(state, single);
      } catch (const Error&) {
        break; // composed lazily; stop classifying past a bad op
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// migration

namespace {

std::string select_constraint_text(int lower, int upper) {
  if (upper == kUnbounded) return "select >= " + std::to_string(lower);
  if (lower == 0) return "select <= " + std::to_string(upper);
  return "select >= " + std::to_string(lower) + " and <= " + std::to_string(upper);
}

class MigrationEngine {
public:
  MigrationEngine(const ModelInstance& m, const Metamodel& from_mm, const Delta& d,
                  const DecisionFile* decisions)
      : model_(m), mm_source_(from_mm), mm_(from_mm), delta_(d), decisions_(decisions) {
    if (decisions_) used_.assign(decisions_->decisions.size(), false);
  }

  Migration run() {
    ConformanceReport pre = check_conformance(model_, mm_);
    if (!pre.holds)
      throw Error(ErrorKind::precondition,
                  "input model does not conform to the delta's source metamodel (" +
                      std::to_string(pre.violations.size()) + " violations, first: " +
                      pre.violations.front().object_id + " " +
                      std::string(to_string(pre.violations.front().kind)) + ")");

    for (size_t i = 0; i < delta_.ops.size(); ++i) {
      apply_model_op(delta_.ops[i]);
      mm_ = apply_single_op(mm_, delta_.ops[i], i);
    }

    Migration out;
    out.migrated = model_;
    out.migrated.conforms_to_version = delta_.to_version;
    for (const ModelObject& obj : model_.objects) out.correspondence[obj.id] = obj.id;

    if (decisions_) {
      for (size_t i = 0; i < used_.size(); ++i)
        if (!used_[i])
          throw Error(ErrorKind::precondition,
                      "decision " + std::to_string(i) + " (" +
                          std::string(to_string(decisions_->decisions[i].kind)) +
                          ") does not answer any required decision");
      Metamodel to_mm = apply_delta(mm_source_, delta_);
      ConformanceReport post = check_conformance(out.migrated, to_mm);
      if (!post.holds)
        throw Error(ErrorKind::precondition,
                    "migrated model does not conform to the target metamodel (first violation: " +
                        post.violations.front().object_id + " " +
                        std::string(to_string(post.violations.front().kind)) + " " +
                        post.violations.front().detail + ")");
    }
    return out;
  }

  MigrationPlan take_plan() { return std::move(plan_); }

private:
  std::vector<ModelObject*> hierarchy_objects(const std::string& class_name) {
    std::vector<ModelObject*> out;
    for (ModelObject& obj : model_.objects)
      if (is_subclass_of(mm_, obj.class_name, class_name)) out.push_back(&obj);
    std::sort(out.begin(), out.end(),
              [](const ModelObject* a, const ModelObject* b) { return a->id < b->id; });
    return out;
  }

  const Decision* find_decision(DecisionKind kind, const std::string& object_id,
                                const std::string& class_name, const std::string& feature) {
    if (!decisions_) return nullptr;
    for (size_t i = 0; i < decisions_->decisions.size(); ++i) {
      if (used_[i]) continue;
      const Decision& d = decisions_->decisions[i];
      if (d.kind != kind || d.feature != feature) continue;
      if (kind == DecisionKind::select_links && d.object_id != object_id) continue;
      if (kind == DecisionKind::default_value && d.class_name != class_name) continue;
      used_[i] = true;
      return &d;
    }
    return nullptr;
  }

  std::vector<std::string> require_keep(const DecisionRequest& request) {
    const Decision* decision = find_decision(DecisionKind::select_links, request.object_id,
                                             request.class_name, request.feature);
    if (!decision)
      throw Error(ErrorKind::precondition, "missing decision: select links for object '" +
                                               request.object_id + "' feature '" +
                                               request.feature + "' (" + request.constraint + ")");
    std::map<std::string, int> budget;
    for (const std::string& c : request.candidates) budget[c] += 1;
    for (const std::string& k : decision->keep) {
      auto it = budget.find(k);
      if (it == budget.end() || it->second == 0)
        throw Error(ErrorKind::precondition, "decision for '" + request.object_id + "." +
                                                 request.feature + "' keeps unknown candidate '" +
                                                 k + "'");
      it->second -= 1;
    }
    int n = static_cast<int>(decision->keep.size());
    if (n < request.min_keep || (request.max_keep != kUnbounded && n > request.max_keep))
      throw Error(ErrorKind::precondition,
                  "decision for '" + request.object_id + "." + request.feature + "' keeps " +
                      std::to_string(n) + " items, allowed " +
                      multiplicity_to_string(request.min_keep, request.max_keep));
    return decision->keep;
  }

  PrimitiveValue require_default(const DecisionRequest& request) {
    const Decision* decision =
        find_decision(DecisionKind::default_value, "", request.class_name, request.feature);
    if (!decision || !decision->value)
      throw Error(ErrorKind::precondition, "missing decision: default value for '" +
                                               request.class_name + "." + request.feature + "'");
    if (is_primitive_type(request.value_type) &&
        primitive_type_name(*decision->value) != request.value_type)
      throw Error(ErrorKind::precondition, "decision default for '" + request.class_name + "." +
                                               request.feature + "' must be " +
                                               request.value_type);
    return *decision->value;
  }

  // keep is a token multiset; references filter by id, attributes by
  // rendered value
  template <typename T>
  static std::vector<T> filter_keep(const std::vector<T>& values,
                                    const std::vector<std::string>& keep,
                                    const std::function<std::string(const T&)>& token) {
    std::map<std::string, int> budget;
    for (const std::string& k : keep) budget[k] += 1;
    std::vector<T> out;
    for (const T& v : values) {
      auto it = budget.find(token(v));
      if (it != budget.end() && it->second > 0) {
        out.push_back(v);
        it->second -= 1;
      }
    }
    return out;
  }

  void note_auto(const DeltaOp& op, std::vector<std::string> affected, std::string resolution) {
    plan_.auto_steps.push_back({describe(op), std::move(affected), std::move(resolution)});
  }

  void fill_default(ModelObject& obj, const Feature& feature, const PrimitiveValue& value,
                    size_t old_count) {
    size_t target = old_count;
    if (target < static_cast<size_t>(feature.lower)) target = feature.lower;
    if (feature.upper != kUnbounded && target > static_cast<size_t>(feature.upper))
      target = feature.upper;
    obj.attribute_values.erase(feature.name);
    obj.links.erase(feature.name);
    if (target == 0) return;
    if (feature.kind == FeatureKind::attribute) {
      obj.attribute_values[feature.name].assign(target, value);
    } else {
      obj.links[feature.name].assign(target, primitive_to_string(value));
    }
  }

  void apply_model_op(const DeltaOp& op);

  void op_delete_class(const ops::DeleteClass& o, const DeltaOp& op);
  void op_rename_class(const ops::RenameClass& o, const DeltaOp& op);
  void op_add_feature(const ops::AddFeature& o, const DeltaOp& op);
  void op_delete_feature(const ops::DeleteFeature& o, const DeltaOp& op);
  void op_rename_feature(const ops::RenameFeature& o, const DeltaOp& op);
  void op_change_multiplicity(const ops::ChangeMultiplicity& o, const DeltaOp& op);
  void op_change_type(const ops::ChangeFeatureType& o, const DeltaOp& op);
  void op_merge(const ops::MergeFeatures& o, const DeltaOp& op);

  ModelInstance model_;
  const Metamodel mm_source_;
  Metamodel mm_;
  const Delta& delta_;
  const DecisionFile* decisions_;
  std::vector<bool> used_;
  MigrationPlan plan_;
};

void MigrationEngine::apply_model_op(const DeltaOp& op) {
  if (std::holds_alternative<ops::AddClass>(op)) {
    note_auto(op, {}, "metamodel-only change");
    return;
  }
  if (const auto* o = std::get_if<ops::DeleteClass>(&op)) return op_delete_class(*o, op);
  if (const auto* o = std::get_if<ops::RenameClass>(&op)) return op_rename_class(*o, op);
  if (const auto* o = std::get_if<ops::AddFeature>(&op)) return op_add_feature(*o, op);
  if (const auto* o = std::get_if<ops::DeleteFeature>(&op)) return op_delete_feature(*o, op);
  if (const auto* o = std::get_if<ops::RenameFeature>(&op)) return op_rename_feature(*o, op);
  if (const auto* o = std::get_if<ops::ChangeMultiplicity>(&op))
    return op_change_multiplicity(*o, op);
  if (const auto* o = std::get_if<ops::ChangeFeatureType>(&op)) return op_change_type(*o, op);
  if (const auto* o = std::get_if<ops::MergeFeatures>(&op)) return op_merge(*o, op);
}

void MigrationEngine::op_delete_class(const ops::DeleteClass& o, const DeltaOp& op) {
  std::set<std::string> removed;
  for (const ModelObject& obj : model_.objects)
    if (obj.class_name == o.name) removed.insert(obj.id);
  std::erase_if(model_.objects, [&](const ModelObject& obj) { return removed.count(obj.id) > 0; });
  std::erase_if(model_.roots, [&](const std::string& id) { return removed.count(id) > 0; });
  for (ModelObject& obj : model_.objects)
    for (auto& [feature, targets] : obj.links)
      std::erase_if(targets, [&](const std::string& id) { return removed.count(id) > 0; });
  note_auto(op, {removed.begin(), removed.end()},
            "removed instances and dangling links to them");
}

void MigrationEngine::op_rename_class(const ops::RenameClass& o, const DeltaOp& op) {
  std::vector<std::string> affected;
  for (ModelObject& obj : model_.objects)
    if (obj.class_name == o.from) {
      obj.class_name = o.to;
      affected.push_back(obj.id);
    }
  std::sort(affected.begin(), affected.end());
  note_auto(op, std::move(affected), "rewrote instance class names");
}

void MigrationEngine::op_add_feature(const ops::AddFeature& o, const DeltaOp& op) {
  if (o.feature.lower == 0) {
    note_auto(op, {}, "optional feature, nothing to populate");
    return;
  }
  std::vector<ModelObject*> objects = hierarchy_objects(o.class_name);
  std::optional<PrimitiveValue> value = o.default_value;
  if (!value) {
    DecisionRequest request;
    request.kind = DecisionKind::default_value;
    request.class_name = o.class_name;
    request.feature = o.feature.name;
    request.value_type = o.feature.value_type;
    request.constraint = "provide a default " + o.feature.value_type;
    if (decisions_) {
      value = require_default(request);
    } else {
      plan_.required_decisions.push_back(std::move(request));
      return; // planning: leave slots unfilled
    }
  }
  std::vector<std::string> affected;
  for (ModelObject* obj : objects) {
    fill_default(*obj, o.feature, *value, 0);
    affected.push_back(obj->id);
  }
  note_auto(op, std::move(affected), "populated lower-bound copies of the default value");
}

void MigrationEngine::op_delete_feature(const ops::DeleteFeature& o, const DeltaOp& op) {
  std::vector<std::string> affected;
  for (ModelObject* obj : hierarchy_objects(o.class_name)) {
    if (obj->attribute_values.erase(o.feature) + obj->links.erase(o.feature))
      affected.push_back(obj->id);
  }
  note_auto(op, std::move(affected), "dropped slots");
}

void MigrationEngine::op_rename_feature(const ops::RenameFeature& o, const DeltaOp& op) {
  std::vector<std::string> affected;
  for (ModelObject* obj : hierarchy_objects(o.class_name)) {
    bool touched = false;
    if (auto it = obj->attribute_values.find(o.from); it != obj->attribute_values.end()) {
      obj->attribute_values[o.to] = std::move(it->second);
      obj->attribute_values.erase(o.from);
      touched = true;
    }
    if (auto it = obj->links.find(o.from); it != obj->links.end()) {
      obj->links[o.to] = std::move(it->second);
      obj->links.erase(o.from);
      touched = true;
    }
    if (touched) affected.push_back(obj->id);
  }
  note_auto(op, std::move(affected), "rewrote slot keys");
}

void MigrationEngine::op_change_multiplicity(const ops::ChangeMultiplicity& o, const DeltaOp& op) {
  const MetaClass* cls = mm_.find_class(o.class_name);
  if (!cls) return;
  std::optional<Feature> feature;
  for (const Feature& f : effective_features(mm_, o.class_name))
    if (f.name == o.feature) feature = f;
  if (!feature) return;

  std::vector<std::string> affected;
  for (ModelObject* obj : hierarchy_objects(o.class_name)) {
    bool is_attr = feature->kind == FeatureKind::attribute;
    size_t count = is_attr ? (obj->attribute_values.count(o.feature)
                                  ? obj->attribute_values[o.feature].size()
                                  : 0)
                           : (obj->links.count(o.feature) ? obj->links[o.feature].size() : 0);
    bool over = o.upper != kUnbounded && count > static_cast<size_t>(o.upper);
    bool under = count < static_cast<size_t>(o.lower);
    if (!over && !under) continue;

    DecisionRequest request;
    request.kind = DecisionKind::select_links;
    request.class_name = o.class_name;
    request.object_id = obj->id;
    request.feature = o.feature;
    request.min_keep = o.lower;
    request.max_keep = o.upper;
    request.constraint = select_constraint_text(o.lower, o.upper);
    if (is_attr) {
      for (const PrimitiveValue& v : obj->attribute_values[o.feature])
        request.candidates.push_back(primitive_to_string(v));
    } else {
      request.candidates = obj->links[o.feature];
    }
    if (!decisions_) {
      plan_.required_decisions.push_back(std::move(request));
      continue; // planning: keep everything
    }
    std::vector<std::string> keep = require_keep(request);
    if (is_attr) {
      obj->attribute_values[o.feature] = filter_keep<PrimitiveValue>(
          obj->attribute_values[o.feature], keep,
          [](const PrimitiveValue& v) { return primitive_to_string(v); });
    } else {
      obj->links[o.feature] = filter_keep<std::string>(
          obj->links[o.feature], keep, [](const std::string& s) { return s; });
    }
    affected.push_back(obj->id);
  }
  note_auto(op, std::move(affected), "narrowed slots to the kept selection");
}

void MigrationEngine::op_change_type(const ops::ChangeFeatureType& o, const DeltaOp& op) {
  std::optional<Feature> old_feature;
  for (const Feature& f : effective_features(mm_, o.class_name))
    if (f.name == o.feature) old_feature = f;
  if (!old_feature) return;

  bool new_is_ref = !is_primitive_type(o.new_type);
  if (old_feature->kind == FeatureKind::reference && new_is_ref) {
    if (is_subclass_of(mm_, old_feature->value_type, o.new_type)) {
      note_auto(op, {}, "widened reference type, values stay valid");
      return;
    }
    // narrowing or crossing: keep only targets that conform to the new type
    std::vector<std::string> affected;
    for (ModelObject* obj : hierarchy_objects(o.class_name)) {
      auto it = obj->links.find(o.feature);
      if (it == obj->links.end() || it->second.empty()) continue;
      std::vector<std::string> conforming;
      bool any_bad = false;
      for (const std::string& target : it->second) {
        const ModelObject* t = model_.find_object(target);
        if (t && is_subclass_of(mm_, t->class_name, o.new_type))
          conforming.push_back(target);
        else
          any_bad = true;
      }
      if (!any_bad) continue;
      DecisionRequest request;
      request.kind = DecisionKind::select_links;
      request.class_name = o.class_name;
      request.object_id = obj->id;
      request.feature = o.feature;
      request.candidates = conforming;
      request.min_keep = old_feature->lower;
      request.max_keep = old_feature->upper;
      request.constraint = select_constraint_text(old_feature->lower, old_feature->upper) +
                           " from targets of type " + o.new_type;
      if (!decisions_) {
        plan_.required_decisions.push_back(std::move(request));
        continue;
      }
      it->second = require_keep(request);
      affected.push_back(obj->id);
    }
    note_auto(op, std::move(affected), "kept type-conforming targets");
    return;
  }

  // primitive retype (or kind flip): slots need a fresh value
  Feature new_feature = *old_feature;
  new_feature.value_type = o.new_type;
  new_feature.kind = new_is_ref ? FeatureKind::reference : FeatureKind::attribute;
  if (new_feature.kind == FeatureKind::attribute) new_feature.containment = false;
  if (old_feature->kind == FeatureKind::attribute && !new_is_ref &&
      old_feature->value_type == o.new_type) {
    note_auto(op, {}, "type unchanged");
    return;
  }
  std::vector<ModelObject*> objects = hierarchy_objects(o.class_name);
  bool needed = false;
  for (ModelObject* obj : objects) {
    size_t count = 0;
    if (auto it = obj->attribute_values.find(o.feature); it != obj->attribute_values.end())
      count += it->second.size();
    if (auto it = obj->links.find(o.feature); it != obj->links.end()) count += it->second.size();
    if (count > 0 || new_feature.lower > 0) needed = true;
  }
  if (!needed || objects.empty()) {
    note_auto(op, {}, "no populated slots to convert");
    return;
  }
  DecisionRequest request;
  request.kind = DecisionKind::default_value;
  request.class_name = o.class_name;
  request.feature = o.feature;
  request.value_type = o.new_type;
  request.constraint = "provide a replacement " + o.new_type + " value";
  if (!decisions_) {
    plan_.required_decisions.push_back(std::move(request));
    return;
  }
  PrimitiveValue value = require_default(request);
  std::vector<std::string> affected;
  for (ModelObject* obj : objects) {
    size_t count = 0;
    if (auto it = obj->attribute_values.find(o.feature); it != obj->attribute_values.end())
      count += it->second.size();
    if (auto it = obj->links.find(o.feature); it != obj->links.end()) count += it->second.size();
    fill_default(*obj, new_feature, value, count);
    affected.push_back(obj->id);
  }
  note_auto(op, std::move(affected), "replaced slot values with the decided default");
}

void MigrationEngine::op_merge(const ops::MergeFeatures& o, const DeltaOp& op) {
  bool is_attr = o.target.kind == FeatureKind::attribute;
  std::vector<std::string> affected;
  for (ModelObject* obj : hierarchy_objects(o.class_name)) {
    bool had_slots = false;
    std::vector<std::string> combined_links;
    std::vector<PrimitiveValue> combined_values;
    for (const std::string& source : o.sources) {
      had_slots = had_slots || obj->attribute_values.count(source) || obj->links.count(source);
      if (is_attr) {
        if (auto it = obj->attribute_values.find(source); it != obj->attribute_values.end())
          combined_values.insert(combined_values.end(), it->second.begin(), it->second.end());
      } else {
        if (auto it = obj->links.find(source); it != obj->links.end())
          combined_links.insert(combined_links.end(), it->second.begin(), it->second.end());
      }
    }
    size_t count = is_attr ? combined_values.size() : combined_links.size();
    bool out_of_bounds = count < static_cast<size_t>(o.target.lower) ||
                         (o.target.upper != kUnbounded &&
                          count > static_cast<size_t>(o.target.upper));
    if (out_of_bounds) {
      DecisionRequest request;
      request.kind = DecisionKind::select_links;
      request.class_name = o.class_name;
      request.object_id = obj->id;
      request.feature = o.target.name;
      request.min_keep = o.target.lower;
      request.max_keep = o.target.upper;
      request.constraint = select_constraint_text(o.target.lower, o.target.upper);
      if (is_attr)
        for (const PrimitiveValue& v : combined_values)
          request.candidates.push_back(primitive_to_string(v));
      else
        request.candidates = combined_links;
      if (!decisions_) {
        plan_.required_decisions.push_back(std::move(request));
      } else {
        std::vector<std::string> keep = require_keep(request);
        if (is_attr)
          combined_values = filter_keep<PrimitiveValue>(
              combined_values, keep,
              [](const PrimitiveValue& v) { return primitive_to_string(v); });
        else
          combined_links =
              filter_keep<std::string>(combined_links, keep, [](const std::string& s) { return s; });
      }
    }
    for (const std::string& source : o.sources) {
      obj->attribute_values.erase(source);
      obj->links.erase(source);
    }
    if (is_attr) {
      if (!combined_values.empty()) obj->attribute_values[o.target.name] = combined_values;
    } else {
      if (!combined_links.empty()) obj->links[o.target.name] = combined_links;
    }
    if (had_slots) affected.push_back(obj->id);
  }
  note_auto(op, std::move(affected), "concatenated surviving links in source-feature order");
}

} // namespace

MigrationPlan plan_migration(const ModelInstance& m, const Metamodel& from_mm, const Delta& d) {
  MigrationEngine engine(m, from_mm, d, nullptr);
  engine.run();
  return engine.take_plan();
}

Migration migrate(const ModelInstance& m, const Metamodel& from_mm, const Delta& d,
                  const DecisionFile& decisions) {
  MigrationEngine engine(m, from_mm, d, &decisions);
  return engine.run();
}

std::vector<CrossLink> rebind_links(const std::vector<CrossLink>& links, const SliceKey& old_source,
                                    const SliceKey& new_source,
                                    const std::string& new_target_version) {
  std::vector<CrossLink> out;
  for (const CrossLink& link : links) {
    if (link.source.multiverse != old_source.multiverse ||
        link.source.version != old_source.version)
      continue;
    CrossLink rebound = link;
    rebound.id = link.id + "@" + new_source.version;
    rebound.source.multiverse = new_source.multiverse;
    rebound.source.version = new_source.version;
    rebound.target.version = new_target_version;
    out.push_back(std::move(rebound));
  }
  return out;
}

ConsistencyResult restore_consistency_check(const MultiverseMap& universe, const SliceKey& s1_prime,
                                            const SliceKey& s2_prime, const std::string& link_type,
                                            const std::vector<CrossLink>& rebound_links) {
  return consistency(universe, s1_prime, s2_prime, link_type, rebound_links);
}

} // namespace mvx
