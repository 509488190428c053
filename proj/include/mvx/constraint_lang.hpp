#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mvx/multiverse.hpp"
#include "mvx/type_system.hpp"

namespace mvx {

// AST of the hypothesis language:
//   constraint NAME on MULTIVERSE { (forall|exists) x : TYPEREF | PRED }
// where PRED is built from comparisons over navigation chains, count(...),
// and int/string literals, joined by and/or/not.

enum class Quantifier { forall, exists };
enum class CmpOp { lt, le, eq, ne, ge, gt };

std::string_view to_string(CmpOp op);

struct NavTerm {
  std::vector<std::string> steps; // steps[0] is the bound variable
  bool counted = false;

  std::string path() const;
  bool operator==(const NavTerm&) const = default;
};

struct IntTerm {
  std::int64_t value = 0;
  bool operator==(const IntTerm&) const = default;
};

struct StringTerm {
  std::string value;
  bool operator==(const StringTerm&) const = default;
};

using Term = std::variant<NavTerm, IntTerm, StringTerm>;

struct Comparison {
  Term lhs;
  CmpOp op = CmpOp::eq;
  Term rhs;
};

struct Pred;
using PredPtr = std::unique_ptr<Pred>;

struct Pred {
  enum class Kind { comparison, and_op, or_op, not_op };
  Kind kind = Kind::comparison;
  std::optional<Comparison> cmp; // kind == comparison
  PredPtr lhs;                   // and/or/not
  PredPtr rhs;                   // and/or
};

struct ConstraintAst {
  std::string name;
  std::string multiverse;
  Quantifier quantifier = Quantifier::forall;
  std::string bound_var;
  TypeRef type_ref;
  PredPtr body;
};

// Parses one or more constraint blocks; syntax errors carry line and
// column.
std::vector<ConstraintAst> parse_constraints(std::string_view text);

// Canonical textual form; parse(to_text(ast)) reproduces the AST.
std::string to_text(const ConstraintAst& ast);

struct ConstraintTypeError {
  std::string where; // navigation path or operator context
  std::string kind;  // needs-version-specialization, unknown-feature, ...
  std::string message;
  std::vector<std::string> offering_versions;
};

// Static checks against a type report: every navigation step resolves,
// count() applies only to multi-valued steps, bare navigations are
// single-valued, comparisons are type-compatible. Empty result == well
// typed.
std::vector<ConstraintTypeError> typecheck(const ConstraintAst& ast, const TypeReport& report);

struct EvalResult {
  std::string constraint_name;
  bool holds = false;
  std::vector<std::string> witnesses; // counterexamples for forall, witnesses for exists
};

// Evaluates against a composite slice. The quantifier ranges over the
// extent of the type reference's class in the composite's models of the
// constraint's multiverse; navigation over missing slots yields the empty
// list, so evaluation is total on drafts as well as conforming models.
EvalResult evaluate(const ConstraintAst& ast, const CompositeSlice& composite);

} // namespace mvx
