#include "mvx/multiverse.hpp"

#include <algorithm>
#include <set>

#include "mvx/coevolution.hpp"
#include "mvx/error.hpp"

namespace mvx {

std::string_view to_string(ArtifactKind k) {
  switch (k) {
    case ArtifactKind::metamodel: return "metamodel";
    case ArtifactKind::model: return "model";
    case ArtifactKind::blob: return "blob";
  }
  return "?";
}

Artifact Artifact::of(Metamodel mm, std::string file) {
  Artifact a;
  a.kind = ArtifactKind::metamodel;
  a.metamodel = std::make_shared<const Metamodel>(std::move(mm));
  a.file_name = std::move(file);
  return a;
}

Artifact Artifact::of(ModelInstance m, std::string file) {
  Artifact a;
  a.kind = ArtifactKind::model;
  a.model = std::make_shared<const ModelInstance>(std::move(m));
  a.file_name = std::move(file);
  return a;
}

Artifact Artifact::of_blob(std::string bytes, std::string file) {
  Artifact a;
  a.kind = ArtifactKind::blob;
  a.blob = std::make_shared<const std::string>(std::move(bytes));
  a.file_name = std::move(file);
  return a;
}

bool payload_equal(const Artifact& a, const Artifact& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ArtifactKind::metamodel: return structurally_equal(*a.metamodel, *b.metamodel);
    case ArtifactKind::model: return structurally_equal(*a.model, *b.model);
    case ArtifactKind::blob: return *a.blob == *b.blob;
  }
  return false;
}

const Slice* Multiverse::find_slice(std::string_view version) const {
  auto it = slices.find(std::string(version));
  return it == slices.end() ? nullptr : &it->second;
}

std::vector<std::string> Multiverse::parents(const std::string& version) const {
  std::vector<std::string> out;
  for (const DesignTransition& t : transitions)
    if (t.to == version) out.push_back(t.from);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> Multiverse::children(const std::string& version) const {
  std::vector<std::string> out;
  for (const DesignTransition& t : transitions)
    if (t.from == version) out.push_back(t.to);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> Multiverse::topological_order() const {
  std::map<std::string, int> indegree;
  for (const auto& [version, slice] : slices) indegree[version] = 0;
  for (const DesignTransition& t : transitions) indegree[t.to] += 1;

  std::set<std::string> ready;
  for (const auto& [version, degree] : indegree)
    if (degree == 0) ready.insert(version);

  std::vector<std::string> order;
  while (!ready.empty()) {
    std::string next = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(next);
    for (const std::string& child : children(next))
      if (--indegree[child] == 0) ready.insert(child);
  }
  if (order.size() != slices.size())
    throw Error(ErrorKind::corrupt_repo,
                "multiverse '" + name + "': transition graph has a cycle");
  return order;
}

Multiverse add_slice(Multiverse mv, const std::string& version,
                     std::map<std::string, Artifact> artifacts,
                     const std::vector<std::string>& parents, const std::string& rationale,
                     std::map<std::string, Delta> recorded_deltas,
                     std::vector<InternalRef> internal_refs) {
  if (version.empty())
    throw Error(ErrorKind::usage, "multiverse '" + mv.name + "': empty version label");
  if (mv.slices.count(version))
    throw Error(ErrorKind::conflict,
                "multiverse '" + mv.name + "': duplicate version '" + version + "'");
  for (const std::string& parent : parents)
    if (!mv.slices.count(parent))
      throw Error(ErrorKind::not_found,
                  "multiverse '" + mv.name + "': unknown parent '" + parent + "'");
  for (const InternalRef& r : internal_refs)
    if (!artifacts.count(r.source_artifact) || !artifacts.count(r.target_artifact))
      throw Error(ErrorKind::precondition, "multiverse '" + mv.name + "': internal reference " +
                                               r.source_artifact + " -> " + r.target_artifact +
                                               " does not resolve inside the slice");

  Slice slice;
  slice.version = version;
  slice.artifacts = std::move(artifacts);
  slice.internal_refs = std::move(internal_refs);
  mv.slices.emplace(version, std::move(slice));
  for (const std::string& parent : parents) {
    DesignTransition t;
    t.from = parent;
    t.to = version;
    t.rationale = rationale;
    t.deltas = recorded_deltas;
    mv.transitions.push_back(std::move(t));
  }
  return mv;
}

std::vector<EvolutionLink> DesignTransition::evolution_links(const Slice& from_slice,
                                                             const Slice& to_slice) const {
  std::vector<EvolutionLink> out;
  for (const auto& [name, artifact] : to_slice.artifacts) {
    auto old_it = from_slice.artifacts.find(name);
    if (old_it == from_slice.artifacts.end()) continue; // fresh artifact, no link
    EvolutionLink link;
    link.artifact_name = name;
    if (auto it = deltas.find(name); it != deltas.end()) {
      link.delta = it->second;
    } else if (!payload_equal(old_it->second, artifact)) {
      // changed without a recorded delta: metamodels get a lazy diff,
      // anything else is an unrecorded change
      if (old_it->second.kind == ArtifactKind::metamodel &&
          artifact.kind == ArtifactKind::metamodel) {
        Delta d = diff_metamodel(*old_it->second.metamodel, *artifact.metamodel);
        d.from_version = from;
        d.to_version = to;
        link.delta = std::move(d);
      } else {
        Delta d;
        d.from_version = from;
        d.to_version = to;
        link.delta = std::move(d);
      }
    }
    out.push_back(std::move(link));
  }
  return out;
}

namespace {

// ancestors including the node itself
std::set<std::string> ancestor_set(const Multiverse& mv, const std::string& start) {
  std::set<std::string> seen;
  std::vector<std::string> work{start};
  while (!work.empty()) {
    std::string cur = work.back();
    work.pop_back();
    if (!seen.insert(cur).second) continue;
    for (const std::string& p : mv.parents(cur)) work.push_back(p);
  }
  return seen;
}

std::map<std::string, int> depths(const Multiverse& mv) {
  std::map<std::string, int> depth;
  for (const std::string& v : mv.topological_order()) {
    int d = 0;
    for (const std::string& p : mv.parents(v)) d = std::max(d, depth[p] + 1);
    depth[v] = d;
  }
  return depth;
}

std::vector<std::string> deepest_common_ancestors(const Multiverse& mv, const std::string& a,
                                                  const std::string& b) {
  std::set<std::string> common;
  std::set<std::string> ancestors_a = ancestor_set(mv, a);
  for (const std::string& v : ancestor_set(mv, b))
    if (ancestors_a.count(v)) common.insert(v);
  if (common.empty()) return {};
  std::map<std::string, int> depth = depths(mv);
  int best = -1;
  for (const std::string& v : common) best = std::max(best, depth[v]);
  std::vector<std::string> out;
  for (const std::string& v : common)
    if (depth[v] == best) out.push_back(v);
  std::sort(out.begin(), out.end());
  return out;
}

std::string join(const std::vector<std::string>& items, const std::string& sep) {
  std::string out;
  for (size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

// all directed paths from `from` down to `to`
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

std::vector<std::string> unique_path(const Multiverse& mv, const std::string& from,
                                     const std::string& to) {
  std::vector<std::string> path;
  std::vector<std::vector<std::string>> found;
  collect_paths(mv, from, to, path, found);
  if (found.empty())
    throw Error(ErrorKind::not_found, "multiverse '" + mv.name + "': no directed path from '" +
                                          from + "' to '" + to + "'");
  if (found.size() > 1)
    throw Error(ErrorKind::precondition,
                "multiverse '" + mv.name + "': ambiguous merge ancestry, multiple paths from '" +
                    from + "' to '" + to + "'");
  return found.front();
}

} // namespace

std::string lca(const Multiverse& mv, const std::string& a, const std::string& b) {
  for (const std::string& v : {a, b})
    if (!mv.slices.count(v))
      throw Error(ErrorKind::not_found, "multiverse '" + mv.name + "': unknown label '" + v + "'");
  std::vector<std::string> best = deepest_common_ancestors(mv, a, b);
  if (best.empty())
    throw Error(ErrorKind::not_found, "multiverse '" + mv.name + "': no common ancestor of '" + a +
                                          "' and '" + b + "'");
  return best.front();
}

std::vector<std::string> partial_multiverse(const Multiverse& mv,
                                            const std::vector<std::string>& explicit_labels) {
  if (explicit_labels.empty())
    throw Error(ErrorKind::usage, "partial multiverse needs at least one explicit label");
  for (const std::string& v : explicit_labels)
    if (!mv.slices.count(v))
      throw Error(ErrorKind::not_found, "multiverse '" + mv.name + "': unknown label '" + v + "'");

  std::set<std::string> result(explicit_labels.begin(), explicit_labels.end());
  for (size_t i = 0; i < explicit_labels.size(); ++i) {
    for (size_t j = i + 1; j < explicit_labels.size(); ++j) {
      const std::string& a = explicit_labels[i];
      const std::string& b = explicit_labels[j];
      std::vector<std::string> anc = deepest_common_ancestors(mv, a, b);
      if (anc.empty())
        throw Error(ErrorKind::precondition, "multiverse '" + mv.name +
                                                 "': explicit slices '" + a + "' and '" + b +
                                                 "' share no common ancestor");
      if (anc.size() > 1)
        throw Error(ErrorKind::precondition,
                    "multiverse '" + mv.name + "': ambiguous merge ancestry for '" + a + "' and '" +
                        b + "', candidates: " + join(anc, ", "));
      for (const std::string& member : {a, b})
        for (const std::string& v : unique_path(mv, anc.front(), member)) result.insert(v);
    }
  }

  std::vector<std::string> ordered;
  for (const std::string& v : mv.topological_order())
    if (result.count(v)) ordered.push_back(v);
  return ordered;
}

const Artifact* CompositeSlice::find(const std::string& multiverse,
                                     const std::string& artifact) const {
  auto it = index.find(multiverse + ":" + artifact);
  return it == index.end() ? nullptr : &it->second;
}

CompositeSlice compose(const std::vector<std::pair<const Multiverse*, std::string>>& selection) {
  CompositeSlice composite;
  for (const auto& [mv, version] : selection) {
    if (composite.selected_version.count(mv->name))
      throw Error(ErrorKind::conflict,
                  "composite selects multiverse '" + mv->name + "' more than once");
    const Slice* slice = mv->find_slice(version);
    if (!slice)
      throw Error(ErrorKind::not_found,
                  "multiverse '" + mv->name + "': unknown slice '" + version + "'");
    composite.members.push_back({mv->name, version});
    composite.selected_version[mv->name] = version;
    for (const auto& [name, artifact] : slice->artifacts)
      composite.index[mv->name + ":" + name] = artifact;
  }
  std::sort(composite.members.begin(), composite.members.end());
  return composite;
}

ClosednessReport check_closed(const CompositeSlice& c, const std::vector<CrossLink>& links) {
  ClosednessReport report;
  auto is_member = [&](const std::string& mv, const std::string& version) {
    auto it = c.selected_version.find(mv);
    return it != c.selected_version.end() && it->second == version;
  };
  std::vector<const CrossLink*> ordered;
  for (const CrossLink& l : links) ordered.push_back(&l);
  std::sort(ordered.begin(), ordered.end(),
            [](const CrossLink* a, const CrossLink* b) { return a->id < b->id; });
  for (const CrossLink* l : ordered) {
    if (!is_member(l->source.multiverse, l->source.version)) continue;
    if (!is_member(l->target.multiverse, l->target.version)) report.unresolved.push_back(l->id);
  }
  report.closed = report.unresolved.empty();
  return report;
}

} // namespace mvx
