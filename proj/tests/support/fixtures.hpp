#pragma once

// The hosting-company service fixture used across the suites: a metamodel
// multiverse MM whose Service class trades its inPorts/outPorts pair for a
// single ports feature, and a model multiverse MyModel holding the
// EventLogger (1 in, 1 out) and Converter (2 in, 1 out) services.

#include <map>
#include <string>
#include <vector>

#include "mvx/coevolution.hpp"
#include "mvx/core_model.hpp"
#include "mvx/delta.hpp"
#include "mvx/multiverse.hpp"

namespace fixtures {

inline mvx::Feature attr(std::string name, std::string type, int lower, int upper) {
  mvx::Feature f;
  f.name = std::move(name);
  f.kind = mvx::FeatureKind::attribute;
  f.value_type = std::move(type);
  f.lower = lower;
  f.upper = upper;
  return f;
}

inline mvx::Feature ref(std::string name, std::string type, int lower, int upper,
                        bool containment = false) {
  mvx::Feature f;
  f.name = std::move(name);
  f.kind = mvx::FeatureKind::reference;
  f.value_type = std::move(type);
  f.lower = lower;
  f.upper = upper;
  f.containment = containment;
  return f;
}

inline mvx::Metamodel service_mm_v1() {
  mvx::Metamodel mm;
  mm.name = "services";
  mm.classes.push_back({"Port", true, {}, {attr("name", "string", 1, 1)}});
  mm.classes.push_back({"InPort", false, {"Port"}, {}});
  mm.classes.push_back({"OutPort", false, {"Port"}, {}});
  mm.classes.push_back({"Service",
                        false,
                        {},
                        {attr("name", "string", 1, 1),
                         ref("inPorts", "InPort", 0, mvx::kUnbounded, true),
                         ref("outPorts", "OutPort", 0, mvx::kUnbounded, true)}});
  mvx::validate_metamodel(mm);
  return mm;
}

inline mvx::Metamodel service_mm_v2() {
  mvx::Metamodel mm;
  mm.name = "services";
  mm.classes.push_back({"Port", true, {}, {attr("name", "string", 1, 1)}});
  mm.classes.push_back({"InPort", false, {"Port"}, {}});
  mm.classes.push_back({"OutPort", false, {"Port"}, {}});
  mm.classes.push_back(
      {"Service", false, {}, {attr("name", "string", 1, 1), ref("ports", "Port", 0, 2, true)}});
  mvx::validate_metamodel(mm);
  return mm;
}

// v2 plus one non-breaking AddClass
inline mvx::Metamodel service_mm_v21() {
  mvx::Metamodel mm = service_mm_v2();
  mm.classes.push_back({"Monitor", false, {}, {attr("label", "string", 0, 1)}});
  mvx::validate_metamodel(mm);
  return mm;
}

inline mvx::ModelObject object(std::string id, std::string class_name) {
  mvx::ModelObject o;
  o.id = std::move(id);
  o.class_name = std::move(class_name);
  return o;
}

// 3 objects: the service, one InPort, one OutPort
inline mvx::ModelInstance event_logger() {
  mvx::ModelInstance m;
  m.conforms_to_multiverse = "MM";
  m.conforms_to_version = "1.0";
  mvx::ModelObject service = object("eventlogger", "Service");
  service.attribute_values["name"] = {std::string("EventLogger")};
  service.links["inPorts"] = {"in1"};
  service.links["outPorts"] = {"out1"};
  mvx::ModelObject in1 = object("in1", "InPort");
  in1.attribute_values["name"] = {std::string("in")};
  mvx::ModelObject out1 = object("out1", "OutPort");
  out1.attribute_values["name"] = {std::string("out")};
  m.objects = {service, in1, out1};
  m.roots = {"eventlogger"};
  mvx::validate_model(m);
  return m;
}

// 4 objects: the service, two InPorts, one OutPort
inline mvx::ModelInstance converter() {
  mvx::ModelInstance m;
  m.conforms_to_multiverse = "MM";
  m.conforms_to_version = "1.0";
  mvx::ModelObject service = object("converter", "Service");
  service.attribute_values["name"] = {std::string("Converter")};
  service.links["inPorts"] = {"in1", "in2"};
  service.links["outPorts"] = {"out1"};
  mvx::ModelObject in1 = object("in1", "InPort");
  in1.attribute_values["name"] = {std::string("left")};
  mvx::ModelObject in2 = object("in2", "InPort");
  in2.attribute_values["name"] = {std::string("right")};
  mvx::ModelObject out1 = object("out1", "OutPort");
  out1.attribute_values["name"] = {std::string("sink")};
  m.objects = {service, in1, in2, out1};
  m.roots = {"converter"};
  mvx::validate_model(m);
  return m;
}

inline mvx::DiffHints merge_hints() {
  mvx::DiffHints hints;
  hints.merges.push_back({"Service", {"inPorts", "outPorts"}, "ports"});
  return hints;
}

inline mvx::Delta service_delta() {
  mvx::Delta d = mvx::diff_metamodel(service_mm_v1(), service_mm_v2(), merge_hints());
  d.from_version = "1.0";
  d.to_version = "2.0";
  return d;
}

// MM multiverse: 1.0 -> 2.0 -> 2.1, with the recorded merge delta on the
// 1.0 -> 2.0 transition
inline mvx::Multiverse metamodel_multiverse() {
  mvx::Multiverse mm_mv;
  mm_mv.name = "MM";
  mm_mv = add_slice(std::move(mm_mv), "1.0",
                    {{"metamodel", mvx::Artifact::of(service_mm_v1(), "metamodel.json")}}, {});
  mm_mv = add_slice(std::move(mm_mv), "2.0",
                    {{"metamodel", mvx::Artifact::of(service_mm_v2(), "metamodel.json")}}, {"1.0"},
                    "merge the port features", {{"metamodel", service_delta()}});
  mvx::Delta identity_step;
  identity_step.from_version = "2.0";
  identity_step.to_version = "2.1";
  identity_step.ops.push_back(mvx::ops::AddClass{
      {"Monitor", false, {}, {attr("label", "string", 0, 1)}}});
  mm_mv = add_slice(std::move(mm_mv), "2.1",
                    {{"metamodel", mvx::Artifact::of(service_mm_v21(), "metamodel.json")}}, {"2.0"},
                    "add monitoring", {{"metamodel", identity_step}});
  return mm_mv;
}

// MyModel multiverse at 7.2 with both service models as separate artifacts
inline mvx::Multiverse model_multiverse() {
  mvx::Multiverse mv;
  mv.name = "MyModel";
  mv = add_slice(std::move(mv), "7.2",
                 {{"EventLogger", mvx::Artifact::of(event_logger(), "eventlogger.json")},
                  {"Converter", mvx::Artifact::of(converter(), "converter.json")}},
                 {});
  return mv;
}

inline mvx::MultiverseMap service_universe() {
  mvx::MultiverseMap universe;
  universe.emplace("MM", metamodel_multiverse());
  universe.emplace("MyModel", model_multiverse());
  return universe;
}

inline std::vector<mvx::CrossLink> conformance_links() {
  mvx::CrossLink chi_logger;
  chi_logger.id = "chi-eventlogger";
  chi_logger.type = "conformance";
  chi_logger.source = {"MyModel", "7.2", "EventLogger"};
  chi_logger.target = {"MM", "1.0", "metamodel"};
  mvx::CrossLink chi_converter;
  chi_converter.id = "chi-converter";
  chi_converter.type = "conformance";
  chi_converter.source = {"MyModel", "7.2", "Converter"};
  chi_converter.target = {"MM", "1.0", "metamodel"};
  return {chi_logger, chi_converter};
}

} // namespace fixtures
