#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <memory>

#include "mvx/constraint_lang.hpp"
#include "mvx/error.hpp"
#include "mvx/json_io.hpp"
#include "support/fixtures.hpp"
#include "support/generators.hpp"

using namespace mvx;

namespace {

using Scope = std::vector<std::pair<std::string, std::shared_ptr<const Metamodel>>>;

TypeReport fixture_report(bool include_v2 = true) {
  Scope scope;
  scope.push_back({"1.0", std::make_shared<const Metamodel>(fixtures::service_mm_v1())});
  if (include_v2)
    scope.push_back({"2.0", std::make_shared<const Metamodel>(fixtures::service_mm_v2())});
  return compute_type_report(scope);
}

ConstraintAst parse_one(const std::string& text) {
  std::vector<ConstraintAst> all = parse_constraints(text);
  REQUIRE(all.size() == 1);
  return std::move(all.front());
}

const char* kMaxPorts =
    "constraint maxPorts on MM { forall s : Service@(2.0) | count(s.ports) <= 2 }";

CompositeSlice migrated_composite() {
  // MyModel@8.0 holds both fixture models migrated to MM@2.0
  Delta delta = fixtures::service_delta();
  Metamodel v1 = fixtures::service_mm_v1();
  Migration logger = migrate(fixtures::event_logger(), v1, delta);
  DecisionFile keep;
  keep.decisions.push_back(
      {DecisionKind::select_links, "converter", "", "ports", {"in1", "out1"}, {}});
  Migration conv = migrate(fixtures::converter(), v1, delta, keep);

  MultiverseMap universe = fixtures::service_universe();
  Multiverse& models = universe.at("MyModel");
  models = add_slice(std::move(models), "8.0",
                     {{"EventLogger", Artifact::of(logger.migrated, "eventlogger.json")},
                      {"Converter", Artifact::of(conv.migrated, "converter.json")}},
                     {"7.2"});
  return compose({{&universe.at("MyModel"), "8.0"}, {&universe.at("MM"), "2.0"}});
}

} // namespace

TEST_CASE("parser builds the fixture constraint and round-trips") {
  ConstraintAst ast = parse_one(kMaxPorts);
  CHECK(ast.name == "maxPorts");
  CHECK(ast.multiverse == "MM");
  CHECK(ast.quantifier == Quantifier::forall);
  CHECK(ast.bound_var == "s");
  CHECK(ast.type_ref.class_name == "Service");
  REQUIRE(ast.type_ref.version.has_value());
  CHECK(*ast.type_ref.version == "2.0");
  REQUIRE(ast.body->kind == Pred::Kind::comparison);
  const Comparison& cmp = *ast.body->cmp;
  CHECK(cmp.op == CmpOp::le);
  const auto* nav = std::get_if<NavTerm>(&cmp.lhs);
  REQUIRE(nav);
  CHECK(nav->counted);
  CHECK(nav->path() == "s.ports");

  // oracle: pretty-print round trip
  ConstraintAst again = parse_one(to_text(ast));
  CHECK(to_text(again) == to_text(ast));
}

TEST_CASE("parser accepts literal predicates and boolean structure") {
  ConstraintAst literal = parse_one("constraint empty on MM { forall s : Service | 1 == 1 }");
  CHECK(literal.type_ref.version.has_value() == false);
  CHECK(to_text(parse_one(to_text(literal))) == to_text(literal));

  ConstraintAst boolean = parse_one(
      "constraint b on MM { exists s : Service | not s.name == \"x\" and count(s.ports) >= 1 "
      "or 2 < 3 }");
  CHECK(boolean.quantifier == Quantifier::exists);
  CHECK(to_text(parse_one(to_text(boolean))) == to_text(boolean));

  std::vector<ConstraintAst> two = parse_constraints(
      "constraint a on MM { forall s : Service | 1 == 1 }\n"
      "constraint b on MM { exists s : Service | 2 == 2 }");
  CHECK(two.size() == 2);
}

TEST_CASE("parser reports syntax errors with position") {
  CHECK_THROWS_WITH_AS(parse_constraints("constraint bad on MM { forall }"),
                       doctest::Contains("line 1"), Error);
  CHECK_THROWS_AS(parse_constraints(""), Error);
  CHECK_THROWS_AS(parse_constraints("constraint x on MM { forall s : T | s.f == }"), Error);
  CHECK_THROWS_AS(parse_constraints("constraint x on MM { forall s : T | t.f == 1 }"), Error);
  CHECK_THROWS_AS(parse_constraints("constraint x on MM { forall s : T | s == 1 }"), Error);
}

TEST_CASE("typecheck walks navigation through the type report") {
  TypeReport both = fixture_report();
  TypeReport v1_only = fixture_report(false);

  ConstraintAst max_ports = parse_one(kMaxPorts);
  SUBCASE("versioned navigation resolves in the right version") {
    Scope scope;
    scope.push_back({"2.0", std::make_shared<const Metamodel>(fixtures::service_mm_v2())});
    CHECK(typecheck(max_ports, compute_type_report(scope)).empty());
  }

  ConstraintAst in_ports =
      parse_one("constraint cap on MM { forall s : Service | count(s.inPorts) <= 2 }");
  // generic over the evolving scope: exactly one needs-version-specialization
  std::vector<ConstraintTypeError> errors = typecheck(in_ports, both);
  REQUIRE(errors.size() == 1);
  CHECK(errors[0].kind == "needs-version-specialization");
  CHECK(errors[0].where == "s.inPorts");
  CHECK(errors[0].offering_versions == std::vector<std::string>{"1.0"});

  // over the singleton scope the same text is fine
  CHECK(typecheck(in_ports, v1_only).empty());

  // versioned rewrite typechecks over both scopes
  ConstraintAst rewritten =
      parse_one("constraint cap on MM { forall s : Service@(1.0) | count(s.inPorts) <= 2 }");
  CHECK(typecheck(rewritten, both).empty());
  CHECK(typecheck(rewritten, v1_only).empty());
}

TEST_CASE("typecheck flags misuse of count and multiplicities") {
  TypeReport report = fixture_report(false);

  // count over a single-valued step
  ConstraintAst bad_count =
      parse_one("constraint c on MM { forall s : Service | count(s.name) == 1 }");
  std::vector<ConstraintTypeError> errors = typecheck(bad_count, report);
  REQUIRE(errors.size() == 1);
  CHECK(errors[0].kind == "count-on-single-valued");

  // bare multi-valued navigation
  ConstraintAst bare =
      parse_one("constraint c on MM { forall s : Service | s.inPorts == 1 }");
  errors = typecheck(bare, report);
  REQUIRE(errors.size() == 1);
  CHECK(errors[0].kind == "multi-valued-outside-count");

  // unknown feature anywhere in scope
  ConstraintAst unknown =
      parse_one("constraint c on MM { forall s : Service | s.ghost == 1 }");
  errors = typecheck(unknown, report);
  REQUIRE(errors.size() == 1);
  CHECK(errors[0].kind == "unknown-feature");

  // incompatible comparison operands
  ConstraintAst mismatch =
      parse_one("constraint c on MM { forall s : Service | s.name == 3 }");
  errors = typecheck(mismatch, report);
  REQUIRE(errors.size() == 1);
  CHECK(errors[0].kind == "type-incompatible");

  // string ordering is not defined
  ConstraintAst ordering =
      parse_one("constraint c on MM { forall s : Service | s.name < \"z\" }");
  errors = typecheck(ordering, report);
  REQUIRE(errors.size() == 1);
  CHECK(errors[0].kind == "type-incompatible");

  // unknown root type
  ConstraintAst ghost = parse_one("constraint c on MM { forall g : Ghost | 1 == 1 }");
  errors = typecheck(ghost, report);
  REQUIRE(errors.size() == 1);
  CHECK(errors[0].kind == "unknown-type");
}

TEST_CASE("evaluate the migrated fixture composite") {
  CompositeSlice composite = migrated_composite();

  // oracle: manual count over the migrated models (2 and 2 ports)
  EvalResult ok = evaluate(parse_one(kMaxPorts), composite);
  CHECK(ok.holds);
  CHECK(ok.witnesses.empty());

  EvalResult named = evaluate(
      parse_one("constraint named on MM { forall s : Service@(2.0) | count(s.ports) >= 2 }"),
      composite);
  CHECK(named.holds);

  EvalResult exists_logger = evaluate(
      parse_one(
          "constraint hasLogger on MM { exists s : Service@(2.0) | s.name == \"EventLogger\" }"),
      composite);
  CHECK(exists_logger.holds);
  CHECK(exists_logger.witnesses == std::vector<std::string>{"eventlogger"});
}

TEST_CASE("evaluate flags the pre-decision draft with a witness") {
  // a draft where the converter still carries its 3 ports
  MultiverseMap universe = fixtures::service_universe();
  ModelInstance draft = fixtures::converter();
  for (ModelObject& o : draft.objects) {
    if (o.id != "converter") continue;
    o.links.erase("inPorts");
    o.links.erase("outPorts");
    o.links["ports"] = {"in1", "in2", "out1"};
  }
  draft.conforms_to_version = "2.0";
  Multiverse& models = universe.at("MyModel");
  models = add_slice(std::move(models), "7.9-draft",
                     {{"Converter", Artifact::of(draft, "converter.json")}}, {"7.2"});
  CompositeSlice composite =
      compose({{&universe.at("MyModel"), "7.9-draft"}, {&universe.at("MM"), "2.0"}});

  EvalResult result = evaluate(parse_one(kMaxPorts), composite);
  CHECK_FALSE(result.holds);
  CHECK(result.witnesses == std::vector<std::string>{"converter"});
}

TEST_CASE("exists over an empty extent is false") {
  MultiverseMap universe = fixtures::service_universe();
  ModelInstance empty;
  empty.conforms_to_multiverse = "MM";
  empty.conforms_to_version = "2.0";
  Multiverse& models = universe.at("MyModel");
  models = add_slice(std::move(models), "9.0",
                     {{"Empty", Artifact::of(empty, "empty.json")}}, {"7.2"});
  CompositeSlice composite =
      compose({{&universe.at("MyModel"), "9.0"}, {&universe.at("MM"), "2.0"}});
  EvalResult result = evaluate(
      parse_one("constraint any on MM { exists s : Service@(2.0) | 1 == 1 }"), composite);
  CHECK_FALSE(result.holds);
  CHECK(result.witnesses.empty());
}

TEST_CASE("evaluate rejects composites missing required slices") {
  MultiverseMap universe = fixtures::service_universe();
  CompositeSlice no_metamodel = compose({{&universe.at("MyModel"), "7.2"}});
  CHECK_THROWS_AS(evaluate(parse_one(kMaxPorts), no_metamodel), Error);

  // type errors against the composite's implied scope are preconditions
  CompositeSlice with_v1 =
      compose({{&universe.at("MyModel"), "7.2"}, {&universe.at("MM"), "1.0"}});
  CHECK_THROWS_AS(evaluate(parse_one(kMaxPorts), with_v1), Error);
}

TEST_CASE("forall equals not-exists-not on fixture composites") {
  CompositeSlice composite = migrated_composite();
  std::vector<std::string> predicates = {
      "count(s.ports) <= 2", "count(s.ports) == 0", "s.name == \"EventLogger\"",
      "count(s.ports) >= 1 and s.name != \"x\"", "1 == 2"};
  for (const std::string& pred : predicates) {
    ConstraintAst forall = parse_one(
        "constraint f on MM { forall s : Service@(2.0) | " + pred + " }");
    ConstraintAst not_exists_not = parse_one(
        "constraint g on MM { exists s : Service@(2.0) | not (" + pred + ") }");
    CHECK(evaluate(forall, composite).holds == !evaluate(not_exists_not, composite).holds);
  }
}

TEST_CASE("re-evaluation is byte-deterministic") {
  CompositeSlice composite = migrated_composite();
  ConstraintAst ast = parse_one(kMaxPorts);
  std::string first = io::to_json(evaluate(ast, composite)).dump();
  std::string second = io::to_json(evaluate(ast, composite)).dump();
  CHECK(first == second);
}

TEST_CASE("well-typed constraints never fail feature resolution at runtime") {
  // fuzz: random navigations over the fixture; everything that typechecks
  // against the singleton scope must evaluate without throwing
  MultiverseMap universe = fixtures::service_universe();
  CompositeSlice composite =
      compose({{&universe.at("MyModel"), "7.2"}, {&universe.at("MM"), "1.0"}});
  TypeReport report = fixture_report(false);

  gen::Rng rng(5);
  std::vector<std::string> features = {"name", "inPorts", "outPorts", "ghost"};
  std::vector<std::string> classes = {"Service", "Port", "InPort", "Ghost"};
  int evaluated = 0;
  for (int round = 0; round < 600; ++round) {
    std::string cls = rng.pick(classes);
    std::string feature = rng.pick(features);
    bool use_count = rng.chance(0.5);
    std::string term = use_count ? "count(s." + feature + ")" : "s." + feature;
    std::string literal = use_count ? "1" : "\"x\"";
    std::string op = rng.chance(0.5) ? "==" : "!=";
    std::string text = "constraint fz on MM { forall s : " + cls + " | " + term + " " + op +
                       " " + literal + " }";
    ConstraintAst ast = parse_one(text);
    if (!typecheck(ast, report).empty()) continue;
    ++evaluated;
    CHECK_NOTHROW(evaluate(ast, composite));
  }
  CHECK(evaluated > 50);
}
