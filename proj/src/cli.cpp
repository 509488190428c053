#include "mvx/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include <CLI11.hpp>

#include "mvx/constraint_lang.hpp"
#include "mvx/error.hpp"
#include "mvx/json_io.hpp"
#include "mvx/repo_store.hpp"
#include "mvx/type_system.hpp"

namespace fs = std::filesystem;

namespace mvx::cli {

namespace {

fs::path repo_root() {
  if (const char* env = std::getenv("MVX_REPO")) return fs::path(env);
  auto found = discover_repository(fs::current_path());
  if (!found)
    throw Error(ErrorKind::not_found,
                "not inside a repository (no .mvx found; run 'mvx init' or set MVX_REPO)");
  return *found;
}

SliceKey parse_slice_ref(const std::string& text) {
  auto at = text.find('@');
  if (at == std::string::npos || at == 0 || at + 1 == text.size())
    throw Error(ErrorKind::usage, "'" + text + "' is not a <multiverse>@<version> reference");
  return {text.substr(0, at), text.substr(at + 1)};
}

ArtifactRef parse_artifact_ref(const std::string& text) {
  auto colon = text.find(':');
  if (colon == std::string::npos || colon + 1 == text.size())
    throw Error(ErrorKind::usage,
                "'" + text + "' is not a <multiverse>@<version>:<artifact> reference");
  SliceKey slice = parse_slice_ref(text.substr(0, colon));
  return {slice.multiverse, slice.version, text.substr(colon + 1)};
}

// "MM:1.0..2.0"
std::tuple<std::string, std::string, std::string> parse_delta_ref(const std::string& text) {
  auto colon = text.find(':');
  auto dots = text.find("..", colon == std::string::npos ? 0 : colon);
  if (colon == std::string::npos || dots == std::string::npos || dots <= colon + 1 ||
      dots + 2 >= text.size())
    throw Error(ErrorKind::usage, "'" + text + "' is not a <multiverse>:<from>..<to> reference");
  return {text.substr(0, colon), text.substr(colon + 1, dots - colon - 1), text.substr(dots + 2)};
}

CompositeSlice compose_from(const Repository& repo, const std::vector<std::string>& refs) {
  std::vector<std::pair<const Multiverse*, std::string>> selection;
  for (const std::string& ref : refs) {
    SliceKey key = parse_slice_ref(ref);
    selection.push_back({&repo.multiverse(key.multiverse), key.version});
  }
  return compose(selection);
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// artifact CLI spec: "name=path" or bare "path" (name = file stem)
std::pair<std::string, fs::path> parse_artifact_arg(const std::string& text) {
  auto eq = text.find('=');
  if (eq != std::string::npos && eq > 0)
    return {text.substr(0, eq), fs::path(text.substr(eq + 1))};
  fs::path path(text);
  std::string name = path.filename().string();
  if (path.extension() == ".json") name = path.stem().string();
  return {name, path};
}

std::vector<std::string> split_commas(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const std::string& item : items) {
    size_t start = 0;
    while (start <= item.size()) {
      size_t comma = item.find(',', start);
      if (comma == std::string::npos) {
        if (start < item.size()) out.push_back(item.substr(start));
        break;
      }
      if (comma > start) out.push_back(item.substr(start, comma - start));
      start = comma + 1;
    }
  }
  return out;
}

struct Ctx {
  bool json = false;
  std::ostream* out = nullptr;
  int exit_code = 0;

  std::ostream& os() { return *out; }
  void emit(const io::json& j) { *out << j.dump(2) << "\n"; }
};

void print_consistency(Ctx& ctx, const std::string& type, const ConsistencyResult& result) {
  ctx.os() << "consistency (" << type << "): " << (result.holds ? "holds" : "violated") << "\n";
  for (const LinkResult& link : result.per_link) {
    ctx.os() << "  link " << link.id << ": " << (link.holds ? "ok" : "violated") << "\n";
    for (const std::string& v : link.violations) ctx.os() << "    " << v << "\n";
  }
}

void print_plan(Ctx& ctx, const MigrationPlan& plan) {
  ctx.os() << "auto steps: " << plan.auto_steps.size() << "\n";
  for (const AutoStep& step : plan.auto_steps) {
    ctx.os() << "  " << step.op << " -- " << step.resolution;
    if (!step.affected_objects.size()) {
      ctx.os() << "\n";
      continue;
    }
    ctx.os() << " [";
    for (size_t i = 0; i < step.affected_objects.size(); ++i)
      ctx.os() << (i ? ", " : "") << step.affected_objects[i];
    ctx.os() << "]\n";
  }
  ctx.os() << "required decisions: " << plan.required_decisions.size() << "\n";
  for (const DecisionRequest& request : plan.required_decisions) {
    if (request.kind == DecisionKind::select_links) {
      ctx.os() << "  select_links object '" << request.object_id << "' feature '"
               << request.feature << "': " << request.constraint << " from "
               << request.candidates.size() << " candidates [";
      for (size_t i = 0; i < request.candidates.size(); ++i)
        ctx.os() << (i ? ", " : "") << request.candidates[i];
      ctx.os() << "]\n";
    } else {
      ctx.os() << "  default_value class '" << request.class_name << "' feature '"
               << request.feature << "': " << request.constraint << "\n";
    }
  }
}

// ---------------------------------------------------------------------------
// subcommand bodies

void cmd_init(Ctx& ctx) {
  fs::path path;
  if (const char* env = std::getenv("MVX_REPO")) path = fs::path(env);
  else path = fs::current_path();
  init_repository(path);
  if (ctx.json) ctx.emit({{"ok", true}, {"root", path.string()}});
  else ctx.os() << "initialized empty repository at " << (path / ".mvx").string() << "\n";
}

void cmd_slice_add(Ctx& ctx, const std::string& mv, const std::string& version,
                   const std::vector<std::string>& artifact_args,
                   const std::vector<std::string>& parents, const std::string& hints_file,
                   const std::string& rationale) {
  Repository repo = load_repository(repo_root());
  std::vector<std::pair<std::string, fs::path>> files;
  for (const std::string& arg : artifact_args) files.push_back(parse_artifact_arg(arg));
  CommitOptions options;
  options.rationale = rationale;
  if (!hints_file.empty())
    options.hints = io::hints_from_json(io::load_json_file(hints_file), hints_file);
  Repository next = commit_slice_files(repo, mv, version, files, parents, options);
  size_t deltas = 0;
  for (const DesignTransition& t : next.multiverse(mv).transitions)
    if (t.to == version) deltas += t.delta_refs.size();
  if (ctx.json) {
    ctx.emit({{"ok", true},
              {"slice", mv + "@" + version},
              {"artifacts", files.size()},
              {"recordedDeltas", deltas}});
  } else {
    ctx.os() << "committed " << mv << "@" << version << " (" << files.size() << " artifact"
             << (files.size() == 1 ? "" : "s") << ")";
    if (deltas) ctx.os() << ", recorded " << deltas << " delta" << (deltas == 1 ? "" : "s");
    ctx.os() << "\n";
  }
}

void cmd_log(Ctx& ctx, const std::string& mv_name) {
  Repository repo = load_repository(repo_root());
  const Multiverse& mv = repo.multiverse(mv_name);
  std::vector<std::string> order = mv.topological_order();
  io::json entries = io::json::array();
  for (const std::string& version : order) {
    std::vector<std::string> parents = mv.parents(version);
    std::vector<std::string> children = mv.children(version);
    if (ctx.json) {
      io::json entry{{"version", version}, {"parents", parents}, {"children", children}};
      io::json artifacts = io::json::array();
      for (const auto& [name, artifact] : mv.slices.at(version).artifacts)
        artifacts.push_back(
            io::json{{"name", name}, {"kind", std::string(to_string(artifact.kind))}});
      entry["artifacts"] = artifacts;
      entries.push_back(std::move(entry));
      continue;
    }
    ctx.os() << "* " << version;
    if (parents.empty()) {
      ctx.os() << "  (root)";
    } else {
      ctx.os() << "  <-";
      for (const std::string& p : parents) ctx.os() << " " << p;
    }
    if (children.size() > 1) ctx.os() << "  [branch point]";
    for (const DesignTransition& t : mv.transitions) {
      if (t.to != version) continue;
      if (!t.rationale.empty()) ctx.os() << "  \"" << t.rationale << "\"";
      break;
    }
    ctx.os() << "\n";
    for (const DesignTransition& t : mv.transitions) {
      if (t.to != version) continue;
      const Slice* from_slice = mv.find_slice(t.from);
      const Slice* to_slice = mv.find_slice(version);
      if (!from_slice || !to_slice) continue;
      for (const EvolutionLink& link : t.evolution_links(*from_slice, *to_slice)) {
        if (link.is_identity()) {
          ctx.os() << "    " << link.artifact_name << ": unchanged\n";
        } else if (link.delta->ops.empty()) {
          ctx.os() << "    " << link.artifact_name << ": changed\n";
        } else {
          ctx.os() << "    " << link.artifact_name << ": " << link.delta->ops.size() << " op"
                   << (link.delta->ops.size() == 1 ? "" : "s") << "\n";
          for (const DeltaOp& op : link.delta->ops) ctx.os() << "      " << describe(op) << "\n";
        }
      }
    }
  }
  if (ctx.json) ctx.emit({{"multiverse", mv_name}, {"slices", entries}});
}

void cmd_diff(Ctx& ctx, const std::string& mv_name, const std::string& v1, const std::string& v2,
              const std::string& hints_file) {
  Repository repo = load_repository(repo_root());
  const Multiverse& mv = repo.multiverse(mv_name);
  const Slice* a = mv.find_slice(v1);
  const Slice* b = mv.find_slice(v2);
  if (!a || !b)
    throw Error(ErrorKind::not_found,
                "multiverse '" + mv_name + "': unknown slice '" + (a ? v2 : v1) + "'");
  DiffHints hints;
  if (!hints_file.empty()) hints = io::hints_from_json(io::load_json_file(hints_file), hints_file);
  auto [name_a, mm_a] = unique_metamodel(*a, mv_name + "@" + v1);
  auto [name_b, mm_b] = unique_metamodel(*b, mv_name + "@" + v2);
  if (name_a != name_b)
    throw Error(ErrorKind::precondition,
                "metamodel artifact is named '" + name_a + "' in " + v1 + " but '" + name_b +
                    "' in " + v2);
  Delta delta = diff_metamodel(*mm_a, *mm_b, hints);
  delta.from_version = v1;
  delta.to_version = v2;
  if (ctx.json) {
    ctx.emit(io::to_json(delta));
    return;
  }
  if (delta.empty()) {
    ctx.os() << "no differences\n";
    return;
  }
  for (const DeltaOp& op : delta.ops) ctx.os() << describe(op) << "\n";
}

void cmd_partial(Ctx& ctx, const std::string& mv_name, const std::vector<std::string>& labels) {
  Repository repo = load_repository(repo_root());
  std::vector<std::string> result = partial_multiverse(repo.multiverse(mv_name), labels);
  if (ctx.json) {
    ctx.emit({{"multiverse", mv_name}, {"labels", result}});
    return;
  }
  for (size_t i = 0; i < result.size(); ++i) ctx.os() << (i ? " " : "") << result[i];
  ctx.os() << "\n";
}

void cmd_link_add(Ctx& ctx, const std::string& id, const std::string& type,
                  const std::string& from, const std::string& to, const std::string& payload_file) {
  Repository repo = load_repository(repo_root());
  CrossLink link;
  link.id = id;
  if (link.id.empty()) {
    size_t n = repo.links.size() + 1;
    auto taken = [&](const std::string& candidate) {
      for (const CrossLink& l : repo.links)
        if (l.id == candidate) return true;
      return false;
    };
    do {
      link.id = "L" + std::to_string(n++);
    } while (taken(link.id));
  }
  link.type = type;
  link.source = parse_artifact_ref(from);
  link.target = parse_artifact_ref(to);
  if (!payload_file.empty()) {
    io::json payload = io::load_json_file(payload_file);
    if (payload.is_array()) {
      for (const io::json& u : payload) link.uses.push_back(u.get<std::string>());
    } else if (payload.is_object() && payload.contains("uses")) {
      for (const io::json& u : payload.at("uses")) link.uses.push_back(u.get<std::string>());
    } else {
      throw Error(ErrorKind::parse,
                  "payload file must be a JSON array of names or {\"uses\": [...]}");
    }
  }
  add_links(repo, {link});
  if (ctx.json) ctx.emit({{"ok", true}, {"id", link.id}});
  else ctx.os() << "registered link " << link.id << " (" << type << ")\n";
}

void cmd_check(Ctx& ctx, const std::vector<std::string>& composite_refs,
               const std::string& type) {
  Repository repo = load_repository(repo_root());
  CompositeSlice composite = compose_from(repo, composite_refs);
  ClosednessReport closedness = check_closed(composite, repo.links);

  std::vector<std::string> types;
  if (!type.empty()) {
    types.push_back(type);
  } else {
    for (const LinkType& t : link_type_registry())
      if (t.has_evaluator) types.push_back(t.name);
  }

  bool all_hold = true;
  io::json json_out{{"closedness", io::to_json(closedness)}};
  if (!ctx.json) {
    ctx.os() << "closedness: " << (closedness.closed ? "closed" : "open") << "\n";
    for (const std::string& id : closedness.unresolved)
      ctx.os() << "  unresolved link " << id << "\n";
  }
  io::json consistency_out = io::json::object();
  for (const std::string& t : types) {
    ConsistencyResult merged;
    for (const SliceKey& s1 : composite.members) {
      for (const SliceKey& s2 : composite.members) {
        if (s1.multiverse == s2.multiverse) continue;
        ConsistencyResult part = consistency(repo.multiverses, s1, s2, t, repo.links);
        if (!part.holds) merged.holds = false;
        for (LinkResult& link : part.per_link) merged.per_link.push_back(std::move(link));
      }
    }
    std::sort(merged.per_link.begin(), merged.per_link.end(),
              [](const LinkResult& a, const LinkResult& b) { return a.id < b.id; });
    if (!merged.holds) all_hold = false;
    if (ctx.json) consistency_out[t] = io::to_json(merged);
    else print_consistency(ctx, t, merged);
  }
  if (ctx.json) {
    json_out["consistency"] = consistency_out;
    ctx.emit(json_out);
  }
  if (!closedness.closed || !all_hold) ctx.exit_code = 1;
}

void cmd_triggers(Ctx& ctx, const std::string& link_type, const std::string& after_ref) {
  Repository repo = load_repository(repo_root());
  SliceKey after = parse_slice_ref(after_ref);
  repo.multiverse(after.multiverse); // must exist

  std::set<std::pair<SliceKey, SliceKey>> endpoints;
  for (const CrossLink& link : repo.links) {
    if (link.type != link_type) continue;
    if (link.target.multiverse != after.multiverse) continue;
    if (link.target.version == after.version) continue;
    endpoints.insert({{link.source.multiverse, link.source.version},
                      {link.target.multiverse, link.target.version}});
  }

  bool any_triggered = false;
  io::json reports = io::json::array();
  for (const auto& [s1, s2] : endpoints) {
    TriggerReport report;
    try {
      report = detect_trigger(repo.multiverses, link_type, repo.links, s1, s2, after.version);
    } catch (const Error& e) {
      if (!ctx.json)
        ctx.os() << "skipped " << s1.to_string() << " vs " << s2.to_string() << ": " << e.what()
                 << "\n";
      continue;
    }
    any_triggered = any_triggered || report.triggered;
    if (ctx.json) {
      reports.push_back(io::to_json(report));
      continue;
    }
    ctx.os() << (report.triggered ? "TRIGGERED" : "quiet") << "  " << s1.to_string() << " vs "
             << s2.to_string() << " -> " << report.s2_prime.to_string()
             << "  (before: " << (report.consistent_before ? "consistent" : "inconsistent")
             << ", after: " << (report.consistent_after ? "consistent" : "inconsistent") << ")\n";
    for (const TriggerCause& cause : report.causes) {
      ctx.os() << "    cause [" << to_string(cause.impact) << "] " << cause.op;
      if (!cause.affected_objects.empty()) {
        ctx.os() << " affecting";
        for (const std::string& id : cause.affected_objects) ctx.os() << " " << id;
      }
      ctx.os() << "\n";
    }
  }
  if (ctx.json) ctx.emit({{"linkType", link_type}, {"reports", reports}});
  if (any_triggered) ctx.exit_code = 1;
}

void cmd_migrate(Ctx& ctx, const std::string& subject_ref, const std::string& delta_ref,
                 const std::string& decisions_file, const std::string& new_version, bool plan_only) {
  Repository repo = load_repository(repo_root());
  ArtifactRef subject = parse_artifact_ref(subject_ref);
  auto [delta_mv, from_version, to_version] = parse_delta_ref(delta_ref);

  const Multiverse& mv = repo.multiverse(subject.multiverse);
  const Slice* slice = mv.find_slice(subject.version);
  if (!slice)
    throw Error(ErrorKind::not_found, "multiverse '" + subject.multiverse +
                                          "': unknown slice '" + subject.version + "'");
  auto artifact_it = slice->artifacts.find(subject.artifact);
  if (artifact_it == slice->artifacts.end())
    throw Error(ErrorKind::not_found,
                "no artifact '" + subject.artifact + "' in slice " + subject.multiverse + "@" +
                    subject.version);
  if (artifact_it->second.kind != ArtifactKind::model)
    throw Error(ErrorKind::precondition, "artifact '" + subject.artifact + "' is not a model");
  const ModelInstance& model = *artifact_it->second.model;

  Delta delta = load_or_compute_delta(repo, delta_mv, from_version, to_version);
  const Multiverse& delta_multiverse = repo.multiverse(delta_mv);
  const Slice* from_slice = delta_multiverse.find_slice(from_version);
  if (!from_slice)
    throw Error(ErrorKind::not_found,
                "multiverse '" + delta_mv + "': unknown slice '" + from_version + "'");
  auto [mm_name, from_mm] = unique_metamodel(*from_slice, delta_mv + "@" + from_version);

  MigrationPlan plan = plan_migration(model, *from_mm, delta);
  if (plan_only) {
    if (ctx.json) ctx.emit(io::to_json(plan));
    else print_plan(ctx, plan);
    if (!plan.required_decisions.empty()) ctx.exit_code = 1;
    return;
  }

  DecisionFile decisions;
  if (!decisions_file.empty())
    decisions = io::decisions_from_json(io::load_json_file(decisions_file), decisions_file);
  Migration migration = migrate(model, *from_mm, delta, decisions);

  std::map<std::string, Artifact> artifacts = slice->artifacts;
  std::string file_name = artifact_it->second.file_name;
  artifacts[subject.artifact] = Artifact::of(migration.migrated, file_name);
  CommitOptions options;
  options.rationale =
      "co-evolution of " + subject.artifact + " along " + delta_mv + ":" + from_version + ".." +
      to_version;
  Repository next =
      commit_slice(repo, subject.multiverse, new_version, artifacts, {subject.version}, options);

  // rebinding mints fresh links; slices and the registry stay append-only
  std::vector<CrossLink> affected;
  for (const CrossLink& link : next.links)
    if (link.source.multiverse == subject.multiverse && link.source.version == subject.version &&
        link.source.artifact == subject.artifact && link.target.multiverse == delta_mv)
      affected.push_back(link);
  std::vector<CrossLink> rebound =
      rebind_links(affected, {subject.multiverse, subject.version},
                   {subject.multiverse, new_version}, to_version);
  if (!rebound.empty()) next = add_links(next, rebound);

  bool closure_holds = true;
  io::json closure_out = io::json::object();
  std::set<std::string> rebound_types;
  for (const CrossLink& link : rebound) rebound_types.insert(link.type);
  for (const std::string& t : rebound_types) {
    const LinkType* lt = find_link_type(t);
    if (!lt || !lt->has_evaluator) continue;
    ConsistencyResult restored = restore_consistency_check(
        next.multiverses, {subject.multiverse, new_version}, {delta_mv, to_version}, t,
        next.links);
    if (!restored.holds) closure_holds = false;
    if (ctx.json) closure_out[t] = io::to_json(restored);
    else print_consistency(ctx, t + ", after co-evolution", restored);
  }

  if (ctx.json) {
    io::json correspondence = io::json::object();
    for (const auto& [old_id, new_id] : migration.correspondence) correspondence[old_id] = new_id;
    ctx.emit({{"ok", true},
              {"slice", subject.multiverse + "@" + new_version},
              {"correspondence", correspondence},
              {"reboundLinks", rebound.size()},
              {"restoreConsistency", closure_out}});
  } else {
    ctx.os() << "committed " << subject.multiverse << "@" << new_version << " with migrated '"
             << subject.artifact << "' (" << migration.correspondence.size()
             << " objects under correspondence)\n";
    ctx.os() << "rebound " << rebound.size() << " link" << (rebound.size() == 1 ? "" : "s")
             << "\n";
  }
  if (!closure_holds) ctx.exit_code = 1;
}

void cmd_types(Ctx& ctx, const std::string& mv_name, const std::vector<std::string>& versions) {
  Repository repo = load_repository(repo_root());
  const Multiverse& mv = repo.multiverse(mv_name);
  std::vector<std::pair<std::string, std::shared_ptr<const Metamodel>>> scope;
  for (const std::string& version : versions) {
    const Slice* slice = mv.find_slice(version);
    if (!slice)
      throw Error(ErrorKind::not_found,
                  "multiverse '" + mv_name + "': unknown slice '" + version + "'");
    scope.push_back({version, unique_metamodel(*slice, mv_name + "@" + version).second});
  }
  TypeReport report = compute_type_report(scope);
  if (ctx.json) ctx.emit(io::to_json(report));
  else ctx.os() << type_report_table(report);
}

// "MM:1.0,2.0" or "MM:1.0,MM:2.0"
std::vector<std::pair<std::string, std::string>> parse_scope(
    const std::vector<std::string>& items) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string current_mv;
  for (const std::string& item : split_commas(items)) {
    auto colon = item.find(':');
    if (colon != std::string::npos) {
      current_mv = item.substr(0, colon);
      out.push_back({current_mv, item.substr(colon + 1)});
    } else {
      if (current_mv.empty())
        throw Error(ErrorKind::usage, "scope item '" + item + "' lacks a multiverse prefix");
      out.push_back({current_mv, item});
    }
  }
  if (out.empty()) throw Error(ErrorKind::usage, "empty --scope");
  return out;
}

void cmd_typecheck(Ctx& ctx, const std::string& file, const std::vector<std::string>& scope_args) {
  Repository repo = load_repository(repo_root());
  std::vector<ConstraintAst> constraints = parse_constraints(read_text_file(file));
  auto scope_items = parse_scope(scope_args);

  bool any_errors = false;
  io::json results = io::json::array();
  for (const ConstraintAst& ast : constraints) {
    std::vector<std::pair<std::string, std::shared_ptr<const Metamodel>>> scope;
    for (const auto& [mv_name, version] : scope_items) {
      if (mv_name != ast.multiverse) continue;
      const Multiverse& mv = repo.multiverse(mv_name);
      const Slice* slice = mv.find_slice(version);
      if (!slice)
        throw Error(ErrorKind::not_found,
                    "multiverse '" + mv_name + "': unknown slice '" + version + "'");
      scope.push_back({version, unique_metamodel(*slice, mv_name + "@" + version).second});
    }
    if (scope.empty())
      throw Error(ErrorKind::usage, "constraint '" + ast.name + "' is on multiverse '" +
                                        ast.multiverse + "' but --scope has no slices of it");
    TypeReport report = compute_type_report(scope);
    std::vector<ConstraintTypeError> errors = typecheck(ast, report);
    if (!errors.empty()) any_errors = true;
    if (ctx.json) {
      io::json error_list = io::json::array();
      for (const ConstraintTypeError& e : errors)
        error_list.push_back(io::json{{"where", e.where},
                                      {"kind", e.kind},
                                      {"message", e.message},
                                      {"offeredBy", e.offering_versions}});
      results.push_back(io::json{{"constraint", ast.name}, {"errors", error_list}});
      continue;
    }
    if (errors.empty()) {
      ctx.os() << ast.name << ": ok\n";
    } else {
      ctx.os() << ast.name << ": " << errors.size() << " type error"
               << (errors.size() == 1 ? "" : "s") << "\n";
      for (const ConstraintTypeError& e : errors)
        ctx.os() << "  " << e.kind << " at " << e.where << ": " << e.message << "\n";
    }
  }
  if (ctx.json) ctx.emit({{"results", results}});
  if (any_errors) ctx.exit_code = 1;
}

void cmd_eval(Ctx& ctx, const std::string& file, const std::vector<std::string>& composite_refs) {
  Repository repo = load_repository(repo_root());
  std::vector<ConstraintAst> constraints = parse_constraints(read_text_file(file));
  CompositeSlice composite = compose_from(repo, composite_refs);
  bool any_failed = false;
  io::json results = io::json::array();
  for (const ConstraintAst& ast : constraints) {
    EvalResult result = evaluate(ast, composite);
    if (!result.holds) any_failed = true;
    if (ctx.json) {
      results.push_back(io::to_json(result));
      continue;
    }
    ctx.os() << result.constraint_name << ": " << (result.holds ? "holds" : "violated");
    if (!result.witnesses.empty()) {
      ctx.os() << "  [";
      for (size_t i = 0; i < result.witnesses.size(); ++i)
        ctx.os() << (i ? ", " : "") << result.witnesses[i];
      ctx.os() << "]";
    }
    ctx.os() << "\n";
  }
  if (ctx.json) ctx.emit({{"results", results}});
  if (any_failed) ctx.exit_code = 1;
}

void cmd_checkout(Ctx& ctx, const std::vector<std::string>& composite_refs,
                  const std::string& out_dir) {
  Repository repo = load_repository(repo_root());
  CompositeSlice composite = compose_from(repo, composite_refs);
  ClosednessReport closedness = check_closed(composite, repo.links);

  fs::path out(out_dir);
  fs::create_directories(out);
  io::json index = io::json::object();
  for (const auto& [key, artifact] : composite.index) {
    auto colon = key.find(':');
    std::string mv_name = key.substr(0, colon);
    std::string artifact_name = key.substr(colon + 1);
    fs::create_directories(out / mv_name);
    std::string file =
        artifact.file_name.empty() ? artifact_name + ".json" : artifact.file_name;
    fs::path target = out / mv_name / file;
    if (!artifact.source_path.empty() && fs::exists(artifact.source_path))
      fs::copy_file(artifact.source_path, target, fs::copy_options::overwrite_existing);
    else {
      std::ofstream os(target, std::ios::binary);
      os << io::artifact_to_bytes(artifact);
    }
    index[key] = mv_name + "/" + file;
  }
  io::json members = io::json::array();
  for (const SliceKey& member : composite.members) members.push_back(member.to_string());
  io::json manifest{{"members", members},
                    {"artifacts", index},
                    {"closedness", io::to_json(closedness)}};
  std::ofstream manifest_out(out / "composite.json", std::ios::binary);
  manifest_out << manifest.dump(2) << "\n";

  if (ctx.json) {
    ctx.emit({{"ok", true}, {"out", out.string()}, {"artifacts", composite.index.size()},
              {"closed", closedness.closed}});
  } else {
    ctx.os() << "materialized " << composite.index.size() << " artifact"
             << (composite.index.size() == 1 ? "" : "s") << " into " << out.string() << "\n";
    ctx.os() << "closedness: " << (closedness.closed ? "closed" : "open") << "\n";
    for (const std::string& id : closedness.unresolved)
      ctx.os() << "  unresolved link " << id << "\n";
  }
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"mvx - design multiverse versioning and co-evolution"};
  app.require_subcommand(1);

  Ctx ctx;
  ctx.out = &out;
  app.add_flag("--json", ctx.json, "machine-readable output");

  CLI::App* init = app.add_subcommand("init", "create an empty repository here");

  CLI::App* slice = app.add_subcommand("slice", "slice operations");
  slice->require_subcommand(1);
  CLI::App* slice_add = slice->add_subcommand("add", "commit a new slice");
  std::string sa_mv, sa_version, sa_hints, sa_rationale;
  std::vector<std::string> sa_artifacts, sa_parents;
  slice_add->add_option("multiverse", sa_mv)->required();
  slice_add->add_option("version", sa_version)->required();
  slice_add->add_option("--artifact", sa_artifacts, "path or name=path")->required();
  slice_add->add_option("--parent", sa_parents);
  slice_add->add_option("--hints", sa_hints, "rename/merge hints file");
  slice_add->add_option("--rationale", sa_rationale);

  CLI::App* log = app.add_subcommand("log", "topological history of a multiverse");
  std::string log_mv;
  log->add_option("multiverse", log_mv)->required();

  CLI::App* diff = app.add_subcommand("diff", "semantic delta between two versions");
  std::string diff_mv, diff_v1, diff_v2, diff_hints;
  diff->add_option("multiverse", diff_mv)->required();
  diff->add_option("from", diff_v1)->required();
  diff->add_option("to", diff_v2)->required();
  diff->add_option("--hints", diff_hints);

  CLI::App* partial = app.add_subcommand("partial", "minimal spanning subtree over labels");
  std::string partial_mv;
  std::vector<std::string> partial_labels;
  partial->add_option("multiverse", partial_mv)->required();
  partial->add_option("labels", partial_labels)->required();

  CLI::App* link = app.add_subcommand("link", "cross-link registry");
  link->require_subcommand(1);
  CLI::App* link_add = link->add_subcommand("add", "register a cross-link");
  std::string la_id, la_type, la_from, la_to, la_payload;
  link_add->add_option("--id", la_id, "defaults to a fresh L<n>");
  link_add->add_option("--type", la_type)->required();
  link_add->add_option("--from", la_from, "<mv@v:artifact>")->required();
  link_add->add_option("--to", la_to, "<mv@v:artifact>")->required();
  link_add->add_option("--payload", la_payload, "JSON file with used element names");

  CLI::App* check = app.add_subcommand("check", "closedness + consistency of a composite");
  std::vector<std::string> check_composite;
  std::string check_type;
  check->add_option("--composite", check_composite, "<mv@v>...")->required();
  check->add_option("--type", check_type, "restrict to one link type");

  CLI::App* triggers = app.add_subcommand("triggers", "co-evolution triggers after a transition");
  std::string tr_type, tr_after;
  triggers->add_option("--link-type", tr_type)->required();
  triggers->add_option("--after", tr_after, "<mv@v> the evolved slice")->required();

  CLI::App* migrate_cmd = app.add_subcommand("migrate", "migrate a model along a delta");
  std::string mi_subject, mi_delta, mi_decisions, mi_as;
  bool mi_plan = false;
  migrate_cmd->add_option("subject", mi_subject, "<mv@v:artifact>")->required();
  migrate_cmd->add_option("--delta", mi_delta, "<mv:from..to>")->required();
  migrate_cmd->add_option("--decisions", mi_decisions, "decision file");
  migrate_cmd->add_option("--as", mi_as, "version label for the migrated slice");
  migrate_cmd->add_flag("--plan", mi_plan, "print the migration plan and stop");

  CLI::App* types = app.add_subcommand("types", "multiverse type report");
  std::string ty_mv;
  std::vector<std::string> ty_versions;
  types->add_option("multiverse", ty_mv)->required();
  types->add_option("--versions", ty_versions, "comma-separated labels")->required();

  CLI::App* typecheck_cmd = app.add_subcommand("typecheck", "typecheck constraints against a scope");
  std::string tc_file;
  std::vector<std::string> tc_scope;
  typecheck_cmd->add_option("file", tc_file)->required();
  typecheck_cmd->add_option("--scope", tc_scope, "<mv:v,...>")->required();

  CLI::App* eval = app.add_subcommand("eval", "evaluate constraints on a composite");
  std::string ev_file;
  std::vector<std::string> ev_composite;
  eval->add_option("file", ev_file)->required();
  eval->add_option("--composite", ev_composite, "<mv@v>...")->required();

  CLI::App* checkout = app.add_subcommand("checkout", "materialize a composite workspace");
  std::vector<std::string> co_composite;
  std::string co_out;
  checkout->add_option("--composite", co_composite, "<mv@v>...")->required();
  checkout->add_option("--out", co_out)->required();

  std::vector<const char*> argv;
  argv.push_back("mvx");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (init->parsed()) cmd_init(ctx);
    else if (slice_add->parsed())
      cmd_slice_add(ctx, sa_mv, sa_version, sa_artifacts, sa_parents, sa_hints, sa_rationale);
    else if (log->parsed()) cmd_log(ctx, log_mv);
    else if (diff->parsed()) cmd_diff(ctx, diff_mv, diff_v1, diff_v2, diff_hints);
    else if (partial->parsed()) cmd_partial(ctx, partial_mv, partial_labels);
    else if (link_add->parsed()) cmd_link_add(ctx, la_id, la_type, la_from, la_to, la_payload);
    else if (check->parsed()) cmd_check(ctx, check_composite, check_type);
    else if (triggers->parsed()) cmd_triggers(ctx, tr_type, tr_after);
    else if (migrate_cmd->parsed()) {
      if (!mi_plan && mi_as.empty())
        throw Error(ErrorKind::usage, "--as <version> is required unless --plan is given");
      cmd_migrate(ctx, mi_subject, mi_delta, mi_decisions, mi_as, mi_plan);
    } else if (types->parsed()) cmd_types(ctx, ty_mv, split_commas(ty_versions));
    else if (typecheck_cmd->parsed()) cmd_typecheck(ctx, tc_file, tc_scope);
    else if (eval->parsed()) cmd_eval(ctx, ev_file, ev_composite);
    else if (checkout->parsed()) cmd_checkout(ctx, co_composite, co_out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::corrupt_repo ? 3 : 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return ctx.exit_code;
}

} // namespace mvx::cli
