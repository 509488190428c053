#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <memory>

#include "mvx/error.hpp"
#include "mvx/type_system.hpp"
#include "support/fixtures.hpp"
#include "support/generators.hpp"

using namespace mvx;

namespace {

using Scope = std::vector<std::pair<std::string, std::shared_ptr<const Metamodel>>>;

Scope fixture_scope(bool include_v2 = true) {
  Scope scope;
  scope.push_back({"1.0", std::make_shared<const Metamodel>(fixtures::service_mm_v1())});
  if (include_v2)
    scope.push_back({"2.0", std::make_shared<const Metamodel>(fixtures::service_mm_v2())});
  return scope;
}

std::vector<std::string> feature_names(const std::vector<Feature>& fs) {
  std::vector<std::string> names;
  for (const Feature& f : fs) names.push_back(f.name);
  return names;
}

} // namespace

TEST_CASE("type report: Port family stable, Service evolving") {
  TypeReport report = compute_type_report(fixture_scope());

  CHECK(report.entries.at("Port").stable);
  CHECK(report.entries.at("InPort").stable);
  CHECK(report.entries.at("OutPort").stable);

  const MultiverseType& service = report.entries.at("Service");
  CHECK_FALSE(service.stable);
  CHECK(feature_names(service.generic_features) == std::vector<std::string>{"name"});
  CHECK(feature_names(service.per_version.at("1.0")) ==
        std::vector<std::string>{"inPorts", "outPorts"});
  CHECK(feature_names(service.per_version.at("2.0")) == std::vector<std::string>{"ports"});
  CHECK(report.absent.empty());
}

TEST_CASE("singleton scope marks every class stable") {
  TypeReport report = compute_type_report(fixture_scope(false));
  for (const auto& [name, entry] : report.entries) CHECK(entry.stable);
  // intersection with itself: the full flattened signature is generic
  CHECK(feature_names(report.entries.at("Service").generic_features) ==
        std::vector<std::string>{"inPorts", "name", "outPorts"});
}

TEST_CASE("deleted classes show up as absent, not stable") {
  Metamodel v2 = fixtures::service_mm_v2();
  // drop InPort entirely
  std::erase_if(v2.classes, [](const MetaClass& c) { return c.name == "InPort"; });
  validate_metamodel(v2);
  Scope scope;
  scope.push_back({"1.0", std::make_shared<const Metamodel>(fixtures::service_mm_v1())});
  scope.push_back({"2.0", std::make_shared<const Metamodel>(v2)});

  TypeReport report = compute_type_report(scope);
  CHECK_FALSE(report.entries.at("InPort").stable);
  CHECK(report.absent.at("InPort") == std::vector<std::string>{"2.0"});
  // every class of every scope version has an entry
  for (const auto& [version, mm] : scope)
    for (const MetaClass& cls : mm->classes) CHECK(report.entries.count(cls.name));
}

TEST_CASE("supertype list changes defeat stability even with equal signatures") {
  Metamodel v1 = fixtures::service_mm_v1();
  Metamodel v2 = v1;
  // route InPort through a new empty marker class; flattened features are
  // unchanged but the supertype list differs
  v2.classes.push_back({"Marker", true, {"Port"}, {}});
  for (MetaClass& cls : v2.classes)
    if (cls.name == "InPort") cls.supertypes = {"Marker"};
  validate_metamodel(v2);

  Scope scope;
  scope.push_back({"1.0", std::make_shared<const Metamodel>(v1)});
  scope.push_back({"2.0", std::make_shared<const Metamodel>(v2)});
  TypeReport report = compute_type_report(scope);
  CHECK_FALSE(report.entries.at("InPort").stable);
  CHECK(report.entries.at("InPort").per_version.at("1.0").empty());
  CHECK(feature_names(report.entries.at("InPort").generic_features) ==
        std::vector<std::string>{"name"});
}

TEST_CASE("is_subtype: versioned types sit under their generic type") {
  TypeReport report = compute_type_report(fixture_scope());

  CHECK(is_subtype({"Service", "1.0"}, {"Service", {}}, report));
  CHECK(is_subtype({"Service", "2.0"}, {"Service", {}}, report));
  CHECK(is_subtype({"Service", {}}, {"Service", {}}, report));             // reflexive
  CHECK_FALSE(is_subtype({"Service", "1.0"}, {"Service", "2.0"}, report)); // versions unrelated
  CHECK_FALSE(is_subtype({"Service", "2.0"}, {"Service", "1.0"}, report));
  CHECK_FALSE(is_subtype({"Service", {}}, {"Service", "1.0"}, report)); // generic above versions

  CHECK(is_subtype({"InPort", {}}, {"Port", {}}, report)); // per-version supertype walk
  CHECK(is_subtype({"InPort", "1.0"}, {"Port", "1.0"}, report));
  CHECK(is_subtype({"InPort", "1.0"}, {"Port", {}}, report));
  CHECK_FALSE(is_subtype({"Port", {}}, {"InPort", {}}, report));
  CHECK_FALSE(is_subtype({"InPort", "1.0"}, {"Port", "2.0"}, report));

  CHECK_THROWS_AS(is_subtype({"Ghost", {}}, {"Port", {}}, report), Error);
  CHECK_THROWS_AS(is_subtype({"Port", "9.9"}, {"Port", {}}, report), Error);
}

TEST_CASE("is_subtype is a partial order on the fixture lattice") {
  TypeReport report = compute_type_report(fixture_scope());
  std::vector<TypeRef> refs;
  for (const auto& [name, entry] : report.entries) {
    refs.push_back({name, {}});
    for (const std::string& v : report.scope) refs.push_back({name, v});
  }
  for (const TypeRef& a : refs) {
    CHECK(is_subtype(a, a, report)); // reflexive
    for (const TypeRef& b : refs) {
      if (is_subtype(a, b, report) && is_subtype(b, a, report)) CHECK(a == b); // antisymmetric
      for (const TypeRef& c : refs)
        if (is_subtype(a, b, report) && is_subtype(b, c, report))
          CHECK(is_subtype(a, c, report)); // transitive
    }
  }
}

TEST_CASE("resolve_feature: generic features, specializations, unknowns") {
  TypeReport report = compute_type_report(fixture_scope());

  // generic feature resolves on the generic type
  FeatureResolution name = resolve_feature({"Service", {}}, "name", report);
  REQUIRE(name.status == FeatureResolution::Status::ok);
  CHECK(name.feature.value_type == "string");
  CHECK(name.feature.lower == 1);
  CHECK(name.feature.upper == 1);

  // version-specific feature on the generic type demands a specialization
  FeatureResolution in_ports = resolve_feature({"Service", {}}, "inPorts", report);
  REQUIRE(in_ports.status == FeatureResolution::Status::needs_version_specialization);
  CHECK(in_ports.offering_versions == std::vector<std::string>{"1.0"});

  // the specialization resolves it: InPort[0..*]
  FeatureResolution specialized = resolve_feature({"Service", "1.0"}, "inPorts", report);
  REQUIRE(specialized.status == FeatureResolution::Status::ok);
  CHECK(specialized.feature.value_type == "InPort");
  CHECK(specialized.feature.lower == 0);
  CHECK(specialized.feature.upper == kUnbounded);

  FeatureResolution ports = resolve_feature({"Service", "2.0"}, "ports", report);
  REQUIRE(ports.status == FeatureResolution::Status::ok);
  CHECK(ports.feature.upper == 2);

  // absent from the pinned version but offered elsewhere
  FeatureResolution wrong_version = resolve_feature({"Service", "2.0"}, "inPorts", report);
  CHECK(wrong_version.status == FeatureResolution::Status::needs_version_specialization);

  CHECK(resolve_feature({"Service", {}}, "ghost", report).status ==
        FeatureResolution::Status::unknown_feature);
  CHECK(resolve_feature({"Ghost", {}}, "name", report).status ==
        FeatureResolution::Status::unknown_type);
}

TEST_CASE("partially present classes have no generic type") {
  Metamodel v2 = fixtures::service_mm_v2();
  std::erase_if(v2.classes, [](const MetaClass& c) { return c.name == "InPort"; });
  validate_metamodel(v2);
  Scope scope;
  scope.push_back({"1.0", std::make_shared<const Metamodel>(fixtures::service_mm_v1())});
  scope.push_back({"2.0", std::make_shared<const Metamodel>(v2)});
  TypeReport report = compute_type_report(scope);

  CHECK(resolve_feature({"InPort", {}}, "name", report).status ==
        FeatureResolution::Status::unknown_type);
  // the versioned reference still works
  CHECK(resolve_feature({"InPort", "1.0"}, "name", report).status ==
        FeatureResolution::Status::ok);
  CHECK_THROWS_AS(is_subtype({"InPort", {}}, {"Port", {}}, report), Error);
  CHECK(is_subtype({"InPort", "1.0"}, {"Port", {}}, report));
}

TEST_CASE("shrinking the scope never shrinks generic features") {
  gen::Rng rng(31);
  for (int round = 0; round < 40; ++round) {
    Metamodel base = gen::random_metamodel(rng);
    gen::GeneratedDelta d1 = gen::random_delta(rng, base, nullptr);
    Metamodel second = apply_delta(base, d1.delta);
    gen::GeneratedDelta d2 = gen::random_delta(rng, second, nullptr);
    Metamodel third = apply_delta(second, d2.delta);

    Scope full;
    full.push_back({"1", std::make_shared<const Metamodel>(base)});
    full.push_back({"2", std::make_shared<const Metamodel>(second)});
    full.push_back({"3", std::make_shared<const Metamodel>(third)});
    Scope shrunk = {full[0], full[2]};

    TypeReport full_report = compute_type_report(full);
    TypeReport shrunk_report = compute_type_report(shrunk);
    for (const auto& [name, entry] : full_report.entries) {
      if (!shrunk_report.present_everywhere(name)) continue;
      if (!shrunk_report.entries.count(name)) continue;
      const MultiverseType& after = shrunk_report.entries.at(name);
      for (const Feature& f : entry.generic_features) {
        bool still_generic = std::find(after.generic_features.begin(),
                                       after.generic_features.end(),
                                       f) != after.generic_features.end();
        CHECK(still_generic);
      }
    }
  }
}

TEST_CASE("type report rejects bad scopes") {
  CHECK_THROWS_AS(compute_type_report({}), Error);
  Scope twice = fixture_scope(false);
  twice.push_back(twice.front());
  CHECK_THROWS_AS(compute_type_report(twice), Error);
}

TEST_CASE("report table lists every class") {
  TypeReport report = compute_type_report(fixture_scope());
  std::string table = type_report_table(report);
  for (const auto& [name, entry] : report.entries)
    CHECK(table.find(name) != std::string::npos);
  CHECK(table.find("stable") != std::string::npos);
  CHECK(table.find("evolving") != std::string::npos);
}
