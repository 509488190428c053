#include "mvx/json_io.hpp"

#include <fstream>
#include <set>

#include "mvx/error.hpp"

namespace mvx::io {

namespace {

[[noreturn]] void bad(const std::string& context, const std::string& why) {
  throw Error(ErrorKind::parse, context + ": " + why);
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& context) {
  if (!j.is_object()) bad(context, "expected a JSON object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) bad(context, "unknown key '" + key + "'");
}

std::string require_string(const json& j, const std::string& key, const std::string& context) {
  if (!j.contains(key) || !j.at(key).is_string())
    bad(context, "missing or non-string key '" + key + "'");
  return j.at(key).get<std::string>();
}

int optional_int(const json& j, const std::string& key, int fallback, const std::string& context) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer()) bad(context, "key '" + key + "' must be an integer");
  return j.at(key).get<int>();
}

PrimitiveValue primitive_from_json(const json& j, const std::string& context) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer() || j.is_number_unsigned()) return j.get<std::int64_t>();
  bad(context, "expected a string, integer or boolean value");
}

json primitive_to_json(const PrimitiveValue& v) {
  if (std::holds_alternative<std::string>(v)) return std::get<std::string>(v);
  if (std::holds_alternative<std::int64_t>(v)) return std::get<std::int64_t>(v);
  return std::get<bool>(v);
}

Feature feature_from_json(const json& j, const std::string& context, bool kind_required) {
  check_keys(j, {"name", "kind", "valueType", "lower", "upper", "containment"}, context);
  Feature f;
  f.name = require_string(j, "name", context);
  f.value_type = require_string(j, "valueType", context);
  if (j.contains("kind")) {
    std::string kind = require_string(j, "kind", context);
    if (kind == "attribute") f.kind = FeatureKind::attribute;
    else if (kind == "reference") f.kind = FeatureKind::reference;
    else bad(context, "feature '" + f.name + "': unknown kind '" + kind + "'");
  } else if (kind_required) {
    bad(context, "feature '" + f.name + "': missing key 'kind'");
  } else {
    f.kind = is_primitive_type(f.value_type) ? FeatureKind::attribute : FeatureKind::reference;
  }
  f.lower = optional_int(j, "lower", 0, context);
  f.upper = optional_int(j, "upper", 1, context);
  if (j.contains("containment")) {
    if (!j.at("containment").is_boolean()) bad(context, "'containment' must be a boolean");
    f.containment = j.at("containment").get<bool>();
  }
  return f;
}

} // namespace

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded())
    throw Error(ErrorKind::parse, "'" + path.string() + "' is not valid JSON");
  return j;
}

// --- metamodel --------------------------------------------------------------

json to_json(const Feature& f) {
  return json{{"name", f.name},
              {"kind", f.kind == FeatureKind::attribute ? "attribute" : "reference"},
              {"valueType", f.value_type},
              {"lower", f.lower},
              {"upper", f.upper},
              {"containment", f.containment}};
}

json to_json(const Metamodel& mm) {
  json classes = json::array();
  for (const MetaClass& c : mm.classes) {
    json features = json::array();
    for (const Feature& f : c.features) features.push_back(to_json(f));
    classes.push_back(json{{"name", c.name},
                           {"abstract", c.abstract},
                           {"supertypes", c.supertypes},
                           {"features", features}});
  }
  return json{{"name", mm.name}, {"classes", classes}};
}

Metamodel metamodel_from_json(const json& j, const std::string& context) {
  check_keys(j, {"name", "classes"}, context);
  Metamodel mm;
  mm.name = require_string(j, "name", context);
  if (!j.contains("classes") || !j.at("classes").is_array())
    bad(context, "missing 'classes' array");
  for (const json& jc : j.at("classes")) {
    check_keys(jc, {"name", "abstract", "supertypes", "features"}, context);
    MetaClass c;
    c.name = require_string(jc, "name", context);
    if (jc.contains("abstract")) {
      if (!jc.at("abstract").is_boolean()) bad(context, "'abstract' must be a boolean");
      c.abstract = jc.at("abstract").get<bool>();
    }
    if (jc.contains("supertypes")) {
      if (!jc.at("supertypes").is_array()) bad(context, "'supertypes' must be an array");
      for (const json& s : jc.at("supertypes")) {
        if (!s.is_string()) bad(context, "supertype names must be strings");
        c.supertypes.push_back(s.get<std::string>());
      }
    }
    if (jc.contains("features"))
      for (const json& jf : jc.at("features"))
        c.features.push_back(feature_from_json(jf, context + ", class '" + c.name + "'", true));
    mm.classes.push_back(std::move(c));
  }
  validate_metamodel(mm);
  return mm;
}

// --- model ------------------------------------------------------------------

json to_json(const ModelInstance& m) {
  json objects = json::array();
  for (const ModelObject& o : m.objects) {
    json attrs = json::object();
    for (const auto& [name, values] : o.attribute_values) {
      json arr = json::array();
      for (const PrimitiveValue& v : values) arr.push_back(primitive_to_json(v));
      attrs[name] = arr;
    }
    json links = json::object();
    for (const auto& [name, targets] : o.links) links[name] = targets;
    objects.push_back(json{{"id", o.id},
                           {"className", o.class_name},
                           {"attributeValues", attrs},
                           {"links", links}});
  }
  return json{{"conformsTo",
               json{{"multiverse", m.conforms_to_multiverse}, {"version", m.conforms_to_version}}},
              {"roots", m.roots},
              {"objects", objects}};
}

ModelInstance model_from_json(const json& j, const std::string& context) {
  check_keys(j, {"conformsTo", "roots", "objects"}, context);
  ModelInstance m;
  if (!j.contains("conformsTo")) bad(context, "missing 'conformsTo'");
  const json& ct = j.at("conformsTo");
  check_keys(ct, {"multiverse", "version"}, context + " conformsTo");
  m.conforms_to_multiverse = require_string(ct, "multiverse", context);
  m.conforms_to_version = require_string(ct, "version", context);
  if (j.contains("roots")) {
    if (!j.at("roots").is_array()) bad(context, "'roots' must be an array");
    for (const json& r : j.at("roots")) {
      if (!r.is_string()) bad(context, "root ids must be strings");
      m.roots.push_back(r.get<std::string>());
    }
  }
  if (!j.contains("objects") || !j.at("objects").is_array())
    bad(context, "missing 'objects' array");
  for (const json& jo : j.at("objects")) {
    check_keys(jo, {"id", "className", "attributeValues", "links"}, context);
    ModelObject o;
    o.id = require_string(jo, "id", context);
    o.class_name = require_string(jo, "className", context);
    if (jo.contains("attributeValues")) {
      if (!jo.at("attributeValues").is_object())
        bad(context, "'attributeValues' must be an object");
      for (const auto& [name, value] : jo.at("attributeValues").items()) {
        std::vector<PrimitiveValue>& slot = o.attribute_values[name];
        if (value.is_array())
          for (const json& v : value)
            slot.push_back(primitive_from_json(v, context + " object '" + o.id + "'"));
        else
          slot.push_back(primitive_from_json(value, context + " object '" + o.id + "'"));
      }
    }
    if (jo.contains("links")) {
      if (!jo.at("links").is_object()) bad(context, "'links' must be an object");
      for (const auto& [name, value] : jo.at("links").items()) {
        std::vector<std::string>& slot = o.links[name];
        auto one = [&](const json& v) {
          if (!v.is_string()) bad(context, "link targets must be object-id strings");
          slot.push_back(v.get<std::string>());
        };
        if (value.is_array())
          for (const json& v : value) one(v);
        else
          one(value);
      }
    }
    m.objects.push_back(std::move(o));
  }
  validate_model(m);
  return m;
}

// --- artifact sniffing --------------------------------------------------------

Artifact parse_artifact(const std::string& bytes, const std::string& file_name,
                        const std::string& context) {
  json j = json::parse(bytes, nullptr, false);
  if (j.is_object() && j.contains("classes")) {
    Artifact a = Artifact::of(metamodel_from_json(j, context), file_name);
    return a;
  }
  if (j.is_object() && j.contains("objects")) {
    Artifact a = Artifact::of(model_from_json(j, context), file_name);
    return a;
  }
  return Artifact::of_blob(bytes, file_name);
}

std::string artifact_to_bytes(const Artifact& artifact) {
  switch (artifact.kind) {
    case ArtifactKind::metamodel: return to_json(*artifact.metamodel).dump(2) + "\n";
    case ArtifactKind::model: return to_json(*artifact.model).dump(2) + "\n";
    case ArtifactKind::blob: return *artifact.blob;
  }
  return "";
}

// --- delta --------------------------------------------------------------------

namespace {

json class_to_json(const MetaClass& c) {
  json features = json::array();
  for (const Feature& f : c.features) features.push_back(to_json(f));
  return json{{"name", c.name},
              {"abstract", c.abstract},
              {"supertypes", c.supertypes},
              {"features", features}};
}

MetaClass class_from_json(const json& j, const std::string& context) {
  check_keys(j, {"name", "abstract", "supertypes", "features"}, context);
  MetaClass c;
  c.name = require_string(j, "name", context);
  if (j.contains("abstract")) c.abstract = j.at("abstract").get<bool>();
  if (j.contains("supertypes"))
    for (const json& s : j.at("supertypes")) c.supertypes.push_back(s.get<std::string>());
  if (j.contains("features"))
    for (const json& jf : j.at("features"))
      c.features.push_back(feature_from_json(jf, context, true));
  return c;
}

json merge_target_to_json(const Feature& f) {
  json j{{"name", f.name}, {"valueType", f.value_type}, {"lower", f.lower}, {"upper", f.upper}};
  if (f.kind == FeatureKind::reference) j["containment"] = f.containment;
  return j;
}

json op_to_json(const DeltaOp& op) {
  json j;
  j["op"] = op_name(op);
  if (const auto* o = std::get_if<ops::AddClass>(&op)) {
    j["def"] = class_to_json(o->def);
  } else if (const auto* o = std::get_if<ops::DeleteClass>(&op)) {
    j["class"] = o->name;
  } else if (const auto* o = std::get_if<ops::RenameClass>(&op)) {
    j["from"] = o->from;
    j["to"] = o->to;
  } else if (const auto* o = std::get_if<ops::AddFeature>(&op)) {
    j["class"] = o->class_name;
    j["feature"] = to_json(o->feature);
    if (o->default_value) j["defaultValue"] = primitive_to_json(*o->default_value);
  } else if (const auto* o = std::get_if<ops::DeleteFeature>(&op)) {
    j["class"] = o->class_name;
    j["feature"] = o->feature;
  } else if (const auto* o = std::get_if<ops::RenameFeature>(&op)) {
    j["class"] = o->class_name;
    j["from"] = o->from;
    j["to"] = o->to;
  } else if (const auto* o = std::get_if<ops::ChangeMultiplicity>(&op)) {
    j["class"] = o->class_name;
    j["feature"] = o->feature;
    j["lower"] = o->lower;
    j["upper"] = o->upper;
  } else if (const auto* o = std::get_if<ops::ChangeFeatureType>(&op)) {
    j["class"] = o->class_name;
    j["feature"] = o->feature;
    j["valueType"] = o->new_type;
  } else if (const auto* o = std::get_if<ops::MergeFeatures>(&op)) {
    j["class"] = o->class_name;
    j["sources"] = o->sources;
    j["target"] = merge_target_to_json(o->target);
  }
  return j;
}

DeltaOp op_from_json(const json& j, const std::string& context) {
  std::string name = require_string(j, "op", context);
  if (name == "AddClass") {
    if (!j.contains("def")) bad(context, "AddClass needs 'def'");
    return ops::AddClass{class_from_json(j.at("def"), context)};
  }
  if (name == "DeleteClass") return ops::DeleteClass{require_string(j, "class", context)};
  if (name == "RenameClass")
    return ops::RenameClass{require_string(j, "from", context), require_string(j, "to", context)};
  if (name == "AddFeature") {
    ops::AddFeature op;
    op.class_name = require_string(j, "class", context);
    if (!j.contains("feature") || !j.at("feature").is_object())
      bad(context, "AddFeature needs a 'feature' object");
    op.feature = feature_from_json(j.at("feature"), context, false);
    if (j.contains("defaultValue"))
      op.default_value = primitive_from_json(j.at("defaultValue"), context);
    return op;
  }
  if (name == "DeleteFeature")
    return ops::DeleteFeature{require_string(j, "class", context),
                              require_string(j, "feature", context)};
  if (name == "RenameFeature")
    return ops::RenameFeature{require_string(j, "class", context),
                              require_string(j, "from", context),
                              require_string(j, "to", context)};
  if (name == "ChangeMultiplicity") {
    ops::ChangeMultiplicity op;
    op.class_name = require_string(j, "class", context);
    op.feature = require_string(j, "feature", context);
    op.lower = optional_int(j, "lower", 0, context);
    op.upper = optional_int(j, "upper", 1, context);
    return op;
  }
  if (name == "ChangeFeatureType")
    return ops::ChangeFeatureType{require_string(j, "class", context),
                                  require_string(j, "feature", context),
                                  require_string(j, "valueType", context)};
  if (name == "MergeFeatures") {
    ops::MergeFeatures op;
    op.class_name = require_string(j, "class", context);
    if (!j.contains("sources") || !j.at("sources").is_array())
      bad(context, "MergeFeatures needs a 'sources' array");
    for (const json& s : j.at("sources")) op.sources.push_back(s.get<std::string>());
    if (!j.contains("target") || !j.at("target").is_object())
      bad(context, "MergeFeatures needs a 'target' object");
    op.target = feature_from_json(j.at("target"), context, false);
    return op;
  }
  bad(context, "unknown delta op '" + name + "'");
}

} // namespace

json to_json(const Delta& d) {
  json ops = json::array();
  for (const DeltaOp& op : d.ops) ops.push_back(op_to_json(op));
  return json{{"from", d.from_version}, {"to", d.to_version}, {"ops", ops}};
}

Delta delta_from_json(const json& j, const std::string& context) {
  check_keys(j, {"from", "to", "ops"}, context);
  Delta d;
  d.from_version = require_string(j, "from", context);
  d.to_version = require_string(j, "to", context);
  if (!j.contains("ops") || !j.at("ops").is_array()) bad(context, "missing 'ops' array");
  for (const json& jo : j.at("ops")) d.ops.push_back(op_from_json(jo, context));
  return d;
}

DiffHints hints_from_json(const json& j, const std::string& context) {
  check_keys(j, {"renames", "merges"}, context);
  DiffHints hints;
  if (j.contains("renames")) {
    if (!j.at("renames").is_object()) bad(context, "'renames' must be an object");
    for (const auto& [key, value] : j.at("renames").items()) {
      if (!value.is_string()) bad(context, "rename targets must be strings");
      hints.renames[key] = value.get<std::string>();
    }
  }
  if (j.contains("merges")) {
    if (!j.at("merges").is_array()) bad(context, "'merges' must be an array");
    for (const json& jm : j.at("merges")) {
      check_keys(jm, {"class", "sources", "target"}, context);
      DiffHints::Merge merge;
      merge.class_name = require_string(jm, "class", context);
      if (!jm.contains("sources") || !jm.at("sources").is_array())
        bad(context, "merge needs a 'sources' array");
      for (const json& s : jm.at("sources")) merge.sources.push_back(s.get<std::string>());
      merge.target = require_string(jm, "target", context);
      hints.merges.push_back(std::move(merge));
    }
  }
  return hints;
}

// --- links ----------------------------------------------------------------------

namespace {

json ref_to_json(const ArtifactRef& r) {
  return json{{"multiverse", r.multiverse}, {"version", r.version}, {"artifact", r.artifact}};
}

ArtifactRef ref_from_json(const json& j, const std::string& context) {
  check_keys(j, {"multiverse", "version", "artifact"}, context);
  return ArtifactRef{require_string(j, "multiverse", context),
                     require_string(j, "version", context),
                     require_string(j, "artifact", context)};
}

} // namespace

json links_to_json(const std::vector<CrossLink>& links) {
  json arr = json::array();
  for (const CrossLink& l : links) {
    json payload = json::object();
    if (!l.uses.empty()) payload["uses"] = l.uses;
    arr.push_back(json{{"id", l.id},
                       {"type", l.type},
                       {"source", ref_to_json(l.source)},
                       {"target", ref_to_json(l.target)},
                       {"payload", payload}});
  }
  return json{{"links", arr}};
}

std::vector<CrossLink> links_from_json(const json& j, const std::string& context) {
  check_keys(j, {"links"}, context);
  std::vector<CrossLink> out;
  if (!j.contains("links") || !j.at("links").is_array()) bad(context, "missing 'links' array");
  for (const json& jl : j.at("links")) {
    check_keys(jl, {"id", "type", "source", "target", "payload"}, context);
    CrossLink link;
    link.id = require_string(jl, "id", context);
    link.type = require_string(jl, "type", context);
    if (!jl.contains("source") || !jl.contains("target"))
      bad(context, "link '" + link.id + "' needs 'source' and 'target'");
    link.source = ref_from_json(jl.at("source"), context + " link '" + link.id + "'");
    link.target = ref_from_json(jl.at("target"), context + " link '" + link.id + "'");
    if (jl.contains("payload")) {
      const json& payload = jl.at("payload");
      check_keys(payload, {"uses"}, context + " link '" + link.id + "' payload");
      if (payload.contains("uses"))
        for (const json& u : payload.at("uses")) link.uses.push_back(u.get<std::string>());
    }
    validate_link(link);
    out.push_back(std::move(link));
  }
  return out;
}

// --- decisions --------------------------------------------------------------------

json to_json(const DecisionFile& d) {
  json arr = json::array();
  for (const Decision& dec : d.decisions) {
    json j;
    j["kind"] = std::string(to_string(dec.kind));
    j["feature"] = dec.feature;
    if (dec.kind == DecisionKind::select_links) {
      j["objectId"] = dec.object_id;
      j["keep"] = dec.keep;
    } else {
      j["className"] = dec.class_name;
      if (dec.value) j["value"] = primitive_to_json(*dec.value);
    }
    arr.push_back(std::move(j));
  }
  return json{{"decisions", arr}};
}

DecisionFile decisions_from_json(const json& j, const std::string& context) {
  check_keys(j, {"decisions"}, context);
  DecisionFile file;
  if (!j.contains("decisions")) return file;
  if (!j.at("decisions").is_array()) bad(context, "'decisions' must be an array");
  for (const json& jd : j.at("decisions")) {
    Decision d;
    std::string kind = require_string(jd, "kind", context);
    if (kind == "select_links") {
      check_keys(jd, {"kind", "objectId", "feature", "keep"}, context);
      d.kind = DecisionKind::select_links;
      d.object_id = require_string(jd, "objectId", context);
      d.feature = require_string(jd, "feature", context);
      if (!jd.contains("keep") || !jd.at("keep").is_array())
        bad(context, "select_links decision needs a 'keep' array");
      for (const json& k : jd.at("keep")) d.keep.push_back(k.get<std::string>());
    } else if (kind == "default_value") {
      check_keys(jd, {"kind", "className", "feature", "value"}, context);
      d.kind = DecisionKind::default_value;
      d.class_name = require_string(jd, "className", context);
      d.feature = require_string(jd, "feature", context);
      if (!jd.contains("value")) bad(context, "default_value decision needs 'value'");
      d.value = primitive_from_json(jd.at("value"), context);
    } else {
      bad(context, "unknown decision kind '" + kind + "'");
    }
    file.decisions.push_back(std::move(d));
  }
  return file;
}

// --- graph manifest ------------------------------------------------------------------

json to_json(const GraphManifest& g) {
  json slices = json::array();
  for (const auto& s : g.slices) {
    json artifacts = json::object();
    for (const auto& [name, path] : s.artifacts) artifacts[name] = path;
    slices.push_back(json{{"version", s.version}, {"artifacts", artifacts}});
  }
  json transitions = json::array();
  for (const auto& t : g.transitions) {
    json entry{{"from", t.from}, {"to", t.to}, {"rationale", t.rationale}};
    json refs = json::object();
    for (const auto& [artifact, path] : t.delta_refs) refs[artifact] = path;
    entry["deltaRef"] = refs;
    transitions.push_back(std::move(entry));
  }
  return json{{"name", g.name}, {"slices", slices}, {"transitions", transitions}};
}

GraphManifest graph_from_json(const json& j, const std::string& context) {
  check_keys(j, {"name", "slices", "transitions"}, context);
  GraphManifest g;
  g.name = require_string(j, "name", context);
  if (j.contains("slices")) {
    if (!j.at("slices").is_array()) bad(context, "'slices' must be an array");
    for (const json& js : j.at("slices")) {
      check_keys(js, {"version", "artifacts"}, context);
      GraphManifest::SliceEntry entry;
      entry.version = require_string(js, "version", context);
      if (js.contains("artifacts"))
        for (const auto& [name, path] : js.at("artifacts").items()) {
          if (!path.is_string()) bad(context, "artifact paths must be strings");
          entry.artifacts[name] = path.get<std::string>();
        }
      g.slices.push_back(std::move(entry));
    }
  }
  if (j.contains("transitions")) {
    if (!j.at("transitions").is_array()) bad(context, "'transitions' must be an array");
    for (const json& jt : j.at("transitions")) {
      check_keys(jt, {"from", "to", "rationale", "deltaRef"}, context);
      GraphManifest::TransitionEntry entry;
      entry.from = require_string(jt, "from", context);
      entry.to = require_string(jt, "to", context);
      if (jt.contains("rationale")) entry.rationale = require_string(jt, "rationale", context);
      if (jt.contains("deltaRef")) {
        if (!jt.at("deltaRef").is_object()) bad(context, "'deltaRef' must be an object");
        for (const auto& [artifact, path] : jt.at("deltaRef").items())
          entry.delta_refs[artifact] = path.get<std::string>();
      }
      g.transitions.push_back(std::move(entry));
    }
  }
  return g;
}

// --- reports --------------------------------------------------------------------------

json to_json(const ConformanceReport& r) {
  json violations = json::array();
  for (const Violation& v : r.violations)
    violations.push_back(json{{"objectId", v.object_id},
                              {"kind", std::string(to_string(v.kind))},
                              {"detail", v.detail}});
  return json{{"holds", r.holds}, {"violations", violations}};
}

json to_json(const ConsistencyResult& r) {
  json per_link = json::array();
  for (const LinkResult& l : r.per_link)
    per_link.push_back(json{{"id", l.id}, {"holds", l.holds}, {"violations", l.violations}});
  return json{{"holds", r.holds}, {"perLink", per_link}};
}

json to_json(const ClosednessReport& r) {
  return json{{"closed", r.closed}, {"unresolved", r.unresolved}};
}

json to_json(const TriggerReport& r) {
  json causes = json::array();
  for (const TriggerCause& c : r.causes)
    causes.push_back(json{{"artifact", c.artifact},
                          {"op", c.op},
                          {"impact", std::string(to_string(c.impact))},
                          {"affectedObjects", c.affected_objects}});
  return json{{"links", r.link_ids},
              {"s1", r.s1.to_string()},
              {"s2", r.s2.to_string()},
              {"transition", json{{"from", r.s2.version},
                                  {"to", r.s2_prime.version},
                                  {"path", r.path}}},
              {"consistentBefore", r.consistent_before},
              {"consistentAfter", r.consistent_after},
              {"triggered", r.triggered},
              {"causes", causes}};
}

json to_json(const MigrationPlan& p) {
  json auto_steps = json::array();
  for (const AutoStep& s : p.auto_steps)
    auto_steps.push_back(json{{"op", s.op},
                              {"affectedObjects", s.affected_objects},
                              {"resolution", s.resolution}});
  json decisions = json::array();
  for (const DecisionRequest& d : p.required_decisions) {
    json j{{"kind", std::string(to_string(d.kind))},
           {"className", d.class_name},
           {"feature", d.feature},
           {"constraint", d.constraint}};
    if (d.kind == DecisionKind::select_links) {
      j["objectId"] = d.object_id;
      j["candidates"] = d.candidates;
      j["min"] = d.min_keep;
      j["max"] = d.max_keep;
    } else {
      j["valueType"] = d.value_type;
    }
    decisions.push_back(std::move(j));
  }
  return json{{"autoSteps", auto_steps}, {"requiredDecisions", decisions}};
}

json to_json(const EvalResult& r) {
  return json{{"constraint", r.constraint_name}, {"holds", r.holds}, {"witnesses", r.witnesses}};
}

json to_json(const TypeReport& r) {
  json entries = json::array();
  for (const auto& [name, entry] : r.entries) {
    json generic = json::array();
    for (const Feature& f : entry.generic_features) generic.push_back(to_json(f));
    json per_version = json::object();
    for (const auto& [version, features] : entry.per_version) {
      json arr = json::array();
      for (const Feature& f : features) arr.push_back(to_json(f));
      per_version[version] = arr;
    }
    json je{{"class", name},
            {"stable", entry.stable},
            {"genericFeatures", generic},
            {"perVersion", per_version}};
    if (auto it = r.absent.find(name); it != r.absent.end()) je["absentIn"] = it->second;
    entries.push_back(std::move(je));
  }
  return json{{"scope", r.scope}, {"entries", entries}};
}

} // namespace mvx::io
