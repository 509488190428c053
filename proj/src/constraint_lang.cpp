#include "mvx/constraint_lang.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "mvx/error.hpp"

namespace mvx {

std::string_view to_string(CmpOp op) {
  switch (op) {
    case CmpOp::lt: return "<";
    case CmpOp::le: return "<=";
    case CmpOp::eq: return "==";
    case CmpOp::ne: return "!=";
    case CmpOp::ge: return ">=";
    case CmpOp::gt: return ">";
  }
  return "?";
}

std::string NavTerm::path() const {
  std::string out;
  for (size_t i = 0; i < steps.size(); ++i) out += (i ? "." : "") + steps[i];
  return out;
}

// ---------------------------------------------------------------------------
// lexer

namespace {

enum class Tok {
  ident,
  integer,
  string,
  lbrace,
  rbrace,
  lparen,
  rparen,
  colon,
  pipe,
  dot,
  at,
  cmp,
  end,
};

struct Token {
  Tok kind = Tok::end;
  std::string text;
  int line = 1;
  int col = 1;
  size_t offset = 0; // raw offset of the token start, for context re-lexing
};

class Lexer {
public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    skip_space();
    Token tok;
    tok.line = line_;
    tok.col = col_;
    tok.offset = pos_;
    if (pos_ >= text_.size()) return tok;
    char c = text_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                                     text_[pos_] == '_'))
        tok.text += advance();
      tok.kind = Tok::ident;
      return tok;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && pos_ + 1 < text_.size() &&
         std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
      tok.text += advance();
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
        tok.text += advance();
      tok.kind = Tok::integer;
      return tok;
    }
    switch (c) {
      case '{': advance(); tok.kind = Tok::lbrace; return tok;
      case '}': advance(); tok.kind = Tok::rbrace; return tok;
      case '(': advance(); tok.kind = Tok::lparen; return tok;
      case ')': advance(); tok.kind = Tok::rparen; return tok;
      case ':': advance(); tok.kind = Tok::colon; return tok;
      case '|': advance(); tok.kind = Tok::pipe; return tok;
      case '.': advance(); tok.kind = Tok::dot; return tok;
      case '@': advance(); tok.kind = Tok::at; return tok;
      case '"': {
        advance();
        while (pos_ < text_.size() && text_[pos_] != '"') {
          if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) advance();
          tok.text += advance();
        }
        if (pos_ >= text_.size()) fail(tok, "unterminated string literal");
        advance();
        tok.kind = Tok::string;
        return tok;
      }
      case '<':
      case '>':
      case '=':
      case '!': {
        tok.text += advance();
        if (pos_ < text_.size() && text_[pos_] == '=') tok.text += advance();
        if (tok.text == "=" || tok.text == "!")
          fail(tok, "unknown operator '" + tok.text + "'");
        tok.kind = Tok::cmp;
        return tok;
      }
      default: break;
    }
    fail(tok, std::string("unexpected character '") + c + "'");
  }

  // Version labels allow dots and dashes that the normal token rules split
  // apart; re-scan from the given token's raw offset in label mode.
  Token relex_as_label(const Token& from) {
    pos_ = from.offset;
    line_ = from.line;
    col_ = from.col;
    Token tok;
    tok.line = line_;
    tok.col = col_;
    tok.offset = pos_;
    auto label_char = [](char c) {
      return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
    };
    while (pos_ < text_.size() && label_char(text_[pos_])) tok.text += advance();
    if (tok.text.empty()) fail(tok, "expected a version label");
    tok.kind = Tok::ident;
    return tok;
  }

  [[noreturn]] static void fail(const Token& at, const std::string& why) {
    throw Error(ErrorKind::parse, "syntax error at line " + std::to_string(at.line) + ", column " +
                                      std::to_string(at.col) + ": " + why);
  }

private:
  char advance() {
    char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '/') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  std::string_view text_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
public:
  explicit Parser(std::string_view text) : lexer_(text) { shift(); }

  std::vector<ConstraintAst> parse_file() {
    std::vector<ConstraintAst> out;
    while (current_.kind != Tok::end) out.push_back(parse_constraint());
    if (out.empty()) Lexer::fail(current_, "expected a constraint block");
    return out;
  }

private:
  void shift() { current_ = lexer_.next(); }

  Token expect(Tok kind, const std::string& what) {
    if (current_.kind != kind) Lexer::fail(current_, "expected " + what);
    Token tok = current_;
    shift();
    return tok;
  }

  Token expect_keyword(const std::string& word) {
    if (current_.kind != Tok::ident || current_.text != word)
      Lexer::fail(current_, "expected '" + word + "'");
    Token tok = current_;
    shift();
    return tok;
  }

  bool at_keyword(const std::string& word) const {
    return current_.kind == Tok::ident && current_.text == word;
  }

  ConstraintAst parse_constraint() {
    expect_keyword("constraint");
    ConstraintAst ast;
    ast.name = expect(Tok::ident, "a constraint name").text;
    expect_keyword("on");
    ast.multiverse = expect(Tok::ident, "a multiverse name").text;
    expect(Tok::lbrace, "'{'");
    if (at_keyword("forall")) {
      ast.quantifier = Quantifier::forall;
      shift();
    } else if (at_keyword("exists")) {
      ast.quantifier = Quantifier::exists;
      shift();
    } else {
      Lexer::fail(current_, "expected 'forall' or 'exists'");
    }
    ast.bound_var = expect(Tok::ident, "a bound variable").text;
    expect(Tok::colon, "':'");
    ast.type_ref.class_name = expect(Tok::ident, "a type name").text;
    if (current_.kind == Tok::at) {
      shift();
      expect(Tok::lparen, "'('");
      ast.type_ref.version = lexer_.relex_as_label(current_).text;
      shift(); // refill the lookahead from past the label
      expect(Tok::rparen, "')'");
    }
    expect(Tok::pipe, "'|'");
    bound_var_ = ast.bound_var;
    ast.body = parse_or();
    expect(Tok::rbrace, "'}'");
    return ast;
  }

  PredPtr parse_or() {
    PredPtr left = parse_and();
    while (at_keyword("or")) {
      shift();
      auto node = std::make_unique<Pred>();
      node->kind = Pred::Kind::or_op;
      node->lhs = std::move(left);
      node->rhs = parse_and();
      left = std::move(node);
    }
    return left;
  }

  PredPtr parse_and() {
    PredPtr left = parse_not();
    while (at_keyword("and")) {
      shift();
      auto node = std::make_unique<Pred>();
      node->kind = Pred::Kind::and_op;
      node->lhs = std::move(left);
      node->rhs = parse_not();
      left = std::move(node);
    }
    return left;
  }

  PredPtr parse_not() {
    if (at_keyword("not")) {
      shift();
      auto node = std::make_unique<Pred>();
      node->kind = Pred::Kind::not_op;
      node->lhs = parse_not();
      return node;
    }
    if (current_.kind == Tok::lparen) {
      shift();
      PredPtr inner = parse_or();
      expect(Tok::rparen, "')'");
      return inner;
    }
    return parse_comparison();
  }

  PredPtr parse_comparison() {
    auto node = std::make_unique<Pred>();
    node->kind = Pred::Kind::comparison;
    Comparison cmp;
    cmp.lhs = parse_term();
    Token op = expect(Tok::cmp, "a comparison operator");
    if (op.text == "<") cmp.op = CmpOp::lt;
    else if (op.text == "<=") cmp.op = CmpOp::le;
    else if (op.text == "==") cmp.op = CmpOp::eq;
    else if (op.text == "!=") cmp.op = CmpOp::ne;
    else if (op.text == ">=") cmp.op = CmpOp::ge;
    else if (op.text == ">") cmp.op = CmpOp::gt;
    else Lexer::fail(op, "unknown comparison operator '" + op.text + "'");
    cmp.rhs = parse_term();
    node->cmp = std::move(cmp);
    return node;
  }

  Term parse_term() {
    if (current_.kind == Tok::integer) {
      IntTerm t{std::stoll(current_.text)};
      shift();
      return t;
    }
    if (current_.kind == Tok::string) {
      StringTerm t{current_.text};
      shift();
      return t;
    }
    if (at_keyword("count")) {
      Token at = current_;
      shift();
      expect(Tok::lparen, "'('");
      NavTerm nav = parse_nav(at);
      nav.counted = true;
      expect(Tok::rparen, "')'");
      return nav;
    }
    if (current_.kind == Tok::ident) return parse_nav(current_);
    Lexer::fail(current_, "expected a term");
  }

  NavTerm parse_nav(const Token& at) {
    NavTerm nav;
    nav.steps.push_back(expect(Tok::ident, "a navigation chain").text);
    while (current_.kind == Tok::dot) {
      shift();
      nav.steps.push_back(expect(Tok::ident, "a feature name").text);
    }
    if (nav.steps.front() != bound_var_)
      Lexer::fail(at, "navigation must start at the bound variable '" + bound_var_ + "'");
    if (nav.steps.size() < 2)
      Lexer::fail(at, "navigation chain needs at least one feature step");
    return nav;
  }

  Lexer lexer_;
  Token current_;
  std::string bound_var_;
};

} // namespace

std::vector<ConstraintAst> parse_constraints(std::string_view text) {
  return Parser(text).parse_file();
}

// ---------------------------------------------------------------------------
// pretty printer

namespace {

std::string term_to_text(const Term& term) {
  if (const auto* nav = std::get_if<NavTerm>(&term))
    return nav->counted ? "count(" + nav->path() + ")" : nav->path();
  if (const auto* i = std::get_if<IntTerm>(&term)) return std::to_string(i->value);
  const auto& s = std::get<StringTerm>(term);
  std::string out = "\"";
  for (char c : s.value) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string pred_to_text(const Pred& p) {
  switch (p.kind) {
    case Pred::Kind::comparison:
      return term_to_text(p.cmp->lhs) + " " + std::string(to_string(p.cmp->op)) + " " +
             term_to_text(p.cmp->rhs);
    case Pred::Kind::and_op:
      return "(" + pred_to_text(*p.lhs) + " and " + pred_to_text(*p.rhs) + ")";
    case Pred::Kind::or_op:
      return "(" + pred_to_text(*p.lhs) + " or " + pred_to_text(*p.rhs) + ")";
    case Pred::Kind::not_op: return "(not " + pred_to_text(*p.lhs) + ")";
  }
  return "";
}

} // namespace

std::string to_text(const ConstraintAst& ast) {
  return "constraint " + ast.name + " on " + ast.multiverse + " { " +
         (ast.quantifier == Quantifier::forall ? "forall" : "exists") + " " + ast.bound_var +
         " : " + ast.type_ref.to_string() + " | " + pred_to_text(*ast.body) + " }";
}

// ---------------------------------------------------------------------------
// typecheck

namespace {

// static type of a term: a primitive name, or "" when unknown/erroneous
struct TermType {
  std::string primitive; // "int" | "string" | "bool", empty on error
};

class Typechecker {
public:
  Typechecker(const ConstraintAst& ast, const TypeReport& report)
      : ast_(ast), report_(report) {}

  std::vector<ConstraintTypeError> run() {
    TypeRef root = ast_.type_ref;
    auto it = report_.entries.find(root.class_name);
    bool resolvable =
        it != report_.entries.end() &&
        (root.version
             ? report_.in_scope(*root.version) &&
                   report_.metamodels.at(*root.version)->find_class(root.class_name) != nullptr
             : report_.present_everywhere(root.class_name));
    if (!resolvable) {
      error(root.to_string(), "unknown-type",
            "type reference '" + root.to_string() + "' does not resolve in scope");
      return std::move(errors_);
    }
    check_pred(*ast_.body);
    return std::move(errors_);
  }

private:
  void error(std::string where, std::string kind, std::string message,
             std::vector<std::string> versions = {}) {
    errors_.push_back({std::move(where), std::move(kind), std::move(message), std::move(versions)});
  }

  void check_pred(const Pred& p) {
    switch (p.kind) {
      case Pred::Kind::comparison: check_comparison(*p.cmp); return;
      case Pred::Kind::not_op: check_pred(*p.lhs); return;
      case Pred::Kind::and_op:
      case Pred::Kind::or_op:
        check_pred(*p.lhs);
        check_pred(*p.rhs);
        return;
    }
  }

  void check_comparison(const Comparison& cmp) {
    TermType lhs = check_term(cmp.lhs);
    TermType rhs = check_term(cmp.rhs);
    if (lhs.primitive.empty() || rhs.primitive.empty()) return; // already reported
    std::string where = term_to_text(cmp.lhs) + " " + std::string(to_string(cmp.op)) + " " +
                        term_to_text(cmp.rhs);
    if (lhs.primitive != rhs.primitive) {
      error(where, "type-incompatible",
            "cannot compare " + lhs.primitive + " with " + rhs.primitive);
      return;
    }
    bool ordering = cmp.op == CmpOp::lt || cmp.op == CmpOp::le || cmp.op == CmpOp::ge ||
                    cmp.op == CmpOp::gt;
    if (ordering && lhs.primitive != "int")
      error(where, "type-incompatible", "ordering comparisons apply to int, not " + lhs.primitive);
  }

  TermType check_term(const Term& term) {
    if (std::holds_alternative<IntTerm>(term)) return {"int"};
    if (std::holds_alternative<StringTerm>(term)) return {"string"};
    return check_nav(std::get<NavTerm>(term));
  }

  TermType check_nav(const NavTerm& nav) {
    TypeRef current = ast_.type_ref;
    std::string path = nav.steps.front();
    for (size_t i = 1; i < nav.steps.size(); ++i) {
      const std::string& step = nav.steps[i];
      path += "." + step;
      FeatureResolution res = resolve_feature(current, step, report_);
      if (res.status == FeatureResolution::Status::needs_version_specialization) {
        error(path, "needs-version-specialization", res.message, res.offering_versions);
        return {};
      }
      if (res.status == FeatureResolution::Status::unknown_feature) {
        error(path, "unknown-feature", res.message);
        return {};
      }
      if (res.status == FeatureResolution::Status::unknown_type) {
        error(path, "unknown-type", res.message);
        return {};
      }
      bool last = i + 1 == nav.steps.size();
      if (!last) {
        if (res.feature.kind != FeatureKind::reference) {
          error(path, "navigation-through-attribute",
                "cannot navigate through attribute '" + step + "'");
          return {};
        }
        if (res.feature.multi_valued()) {
          error(path, "multi-valued-intermediate",
                "intermediate step '" + step + "' must be single-valued");
          return {};
        }
        current = TypeRef{res.feature.value_type, current.version};
        continue;
      }
      if (nav.counted) {
        if (!res.feature.multi_valued()) {
          error(path, "count-on-single-valued",
                "count() applies only to multi-valued steps; '" + step + "' is " +
                    multiplicity_to_string(res.feature.lower, res.feature.upper));
          return {};
        }
        return {"int"};
      }
      if (res.feature.multi_valued()) {
        error(path, "multi-valued-outside-count",
              "multi-valued step '" + step + "' needs count()");
        return {};
      }
      if (res.feature.kind == FeatureKind::reference) {
        error(path, "reference-comparison",
              "navigation ends at reference '" + step + "'; compare attributes instead");
        return {};
      }
      return {res.feature.value_type};
    }
    return {};
  }

  const ConstraintAst& ast_;
  const TypeReport& report_;
  std::vector<ConstraintTypeError> errors_;
};

} // namespace

std::vector<ConstraintTypeError> typecheck(const ConstraintAst& ast, const TypeReport& report) {
  return Typechecker(ast, report).run();
}

// ---------------------------------------------------------------------------
// evaluation

namespace {

// dynamic navigation: flattening, total over missing slots and drafts
std::vector<PrimitiveValue> eval_nav_values(const ModelInstance& model, const ModelObject& obj,
                                            const NavTerm& nav, size_t step_index,
                                            size_t& value_count) {
  const std::string& step = nav.steps[step_index];
  bool last = step_index + 1 == nav.steps.size();
  std::vector<PrimitiveValue> out;
  if (last) {
    if (auto it = obj.attribute_values.find(step); it != obj.attribute_values.end()) {
      value_count += it->second.size();
      out.insert(out.end(), it->second.begin(), it->second.end());
    }
    if (auto it = obj.links.find(step); it != obj.links.end()) value_count += it->second.size();
    return out;
  }
  if (auto it = obj.links.find(step); it != obj.links.end()) {
    for (const std::string& target : it->second) {
      const ModelObject* next = model.find_object(target);
      if (!next) continue;
      std::vector<PrimitiveValue> sub =
          eval_nav_values(model, *next, nav, step_index + 1, value_count);
      out.insert(out.end(), sub.begin(), sub.end());
    }
  }
  return out;
}

struct TermValue {
  bool is_count = false;
  std::int64_t count = 0;
  std::vector<PrimitiveValue> values; // literal or navigation result
};

TermValue eval_term(const ModelInstance& model, const ModelObject& obj, const Term& term) {
  TermValue out;
  if (const auto* i = std::get_if<IntTerm>(&term)) {
    out.values.push_back(PrimitiveValue(i->value));
    return out;
  }
  if (const auto* s = std::get_if<StringTerm>(&term)) {
    out.values.push_back(PrimitiveValue(s->value));
    return out;
  }
  const NavTerm& nav = std::get<NavTerm>(term);
  size_t count = 0;
  std::vector<PrimitiveValue> values = eval_nav_values(model, obj, nav, 1, count);
  if (nav.counted) {
    out.is_count = true;
    out.count = static_cast<std::int64_t>(count);
  } else {
    out.values = std::move(values);
  }
  return out;
}

bool compare_values(const PrimitiveValue& a, CmpOp op, const PrimitiveValue& b) {
  if (a.index() != b.index()) return false;
  int sign;
  if (std::holds_alternative<std::int64_t>(a)) {
    auto x = std::get<std::int64_t>(a), y = std::get<std::int64_t>(b);
    sign = x < y ? -1 : x > y ? 1 : 0;
  } else if (std::holds_alternative<std::string>(a)) {
    sign = std::get<std::string>(a).compare(std::get<std::string>(b));
    sign = sign < 0 ? -1 : sign > 0 ? 1 : 0;
  } else {
    bool x = std::get<bool>(a), y = std::get<bool>(b);
    sign = x == y ? 0 : (!x ? -1 : 1);
  }
  switch (op) {
    case CmpOp::lt: return sign < 0;
    case CmpOp::le: return sign <= 0;
    case CmpOp::eq: return sign == 0;
    case CmpOp::ne: return sign != 0;
    case CmpOp::ge: return sign >= 0;
    case CmpOp::gt: return sign > 0;
  }
  return false;
}

bool eval_comparison(const ModelInstance& model, const ModelObject& obj, const Comparison& cmp) {
  TermValue lhs = eval_term(model, obj, cmp.lhs);
  TermValue rhs = eval_term(model, obj, cmp.rhs);
  if (lhs.is_count || rhs.is_count) {
    auto as_int = [](const TermValue& v, std::int64_t& out) {
      if (v.is_count) {
        out = v.count;
        return true;
      }
      if (v.values.size() == 1 && std::holds_alternative<std::int64_t>(v.values.front())) {
        out = std::get<std::int64_t>(v.values.front());
        return true;
      }
      return false;
    };
    std::int64_t x = 0, y = 0;
    if (!as_int(lhs, x) || !as_int(rhs, y)) return false;
    return compare_values(PrimitiveValue(x), cmp.op, PrimitiveValue(y));
  }
  // bare navigations compare single values; empty or plural yields false
  if (lhs.values.size() != 1 || rhs.values.size() != 1) return false;
  return compare_values(lhs.values.front(), cmp.op, rhs.values.front());
}

bool eval_pred(const ModelInstance& model, const ModelObject& obj, const Pred& p) {
  switch (p.kind) {
    case Pred::Kind::comparison: return eval_comparison(model, obj, *p.cmp);
    case Pred::Kind::and_op: return eval_pred(model, obj, *p.lhs) && eval_pred(model, obj, *p.rhs);
    case Pred::Kind::or_op: return eval_pred(model, obj, *p.lhs) || eval_pred(model, obj, *p.rhs);
    case Pred::Kind::not_op: return !eval_pred(model, obj, *p.lhs);
  }
  return false;
}

} // namespace

EvalResult evaluate(const ConstraintAst& ast, const CompositeSlice& composite) {
  auto version_it = composite.selected_version.find(ast.multiverse);
  if (version_it == composite.selected_version.end())
    throw Error(ErrorKind::not_found,
                "composite lacks a slice of multiverse '" + ast.multiverse + "'");
  const std::string& scope_version = version_it->second;

  // the unique metamodel artifact of the constraint's multiverse
  std::shared_ptr<const Metamodel> mm;
  std::string prefix = ast.multiverse + ":";
  for (const auto& [key, artifact] : composite.index) {
    if (key.rfind(prefix, 0) != 0 || artifact.kind != ArtifactKind::metamodel) continue;
    if (mm)
      throw Error(ErrorKind::precondition, "multiverse '" + ast.multiverse +
                                               "' slice has several metamodel artifacts");
    mm = artifact.metamodel;
  }
  if (!mm)
    throw Error(ErrorKind::not_found,
                "multiverse '" + ast.multiverse + "' slice has no metamodel artifact");

  TypeReport report = compute_type_report({{scope_version, mm}});
  std::vector<ConstraintTypeError> errors = typecheck(ast, report);
  if (!errors.empty()) {
    std::string joined;
    for (const ConstraintTypeError& e : errors) joined += "\n  " + e.kind + " at " + e.where;
    throw Error(ErrorKind::precondition,
                "constraint '" + ast.name + "' does not typecheck against the composite:" + joined);
  }

  // all models of the constraint's multiverse, filtered by version for
  // C@(v) references; artifact-name order keeps evaluation deterministic
  std::vector<std::pair<std::string, const ModelInstance*>> models;
  for (const auto& [key, artifact] : composite.index) {
    if (artifact.kind != ArtifactKind::model) continue;
    const ModelInstance& m = *artifact.model;
    if (m.conforms_to_multiverse != ast.multiverse) continue;
    if (ast.type_ref.version && m.conforms_to_version != *ast.type_ref.version) continue;
    models.push_back({key, artifact.model.get()});
  }

  EvalResult result;
  result.constraint_name = ast.name;
  bool forall = ast.quantifier == Quantifier::forall;
  bool any_witness = false;
  std::vector<std::string> hits;
  for (const auto& [key, model] : models) {
    for (const ModelObject* obj : extent(*model, *mm, ast.type_ref.class_name)) {
      bool satisfied = eval_pred(*model, *obj, *ast.body);
      if (forall && !satisfied) hits.push_back(obj->id);
      if (!forall && satisfied) {
        hits.push_back(obj->id);
        any_witness = true;
      }
    }
  }
  std::sort(hits.begin(), hits.end());
  if (hits.size() > 10) hits.resize(10);
  result.witnesses = std::move(hits);
  result.holds = forall ? result.witnesses.empty() : any_witness;
  return result;
}

} // namespace mvx
