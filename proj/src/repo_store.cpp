#include "mvx/repo_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <fstream>
#include <set>

#include "mvx/error.hpp"
#include "mvx/json_io.hpp"

namespace fs = std::filesystem;

namespace mvx {

namespace repo_testing {
std::function<void()> pre_rename_hook;
} // namespace repo_testing

namespace {

void validate_name(const std::string& name, const std::string& what) {
  if (name.empty() || name == "." || name == "..")
    throw Error(ErrorKind::usage, what + " '" + name + "' is not a valid name");
  if (name.find('/') != std::string::npos || name.find('\\') != std::string::npos)
    throw Error(ErrorKind::usage, what + " '" + name + "' must not contain path separators");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
  out << bytes;
  out.close();
  if (!out) throw Error(ErrorKind::io, "failed writing '" + path.string() + "'");
}

// write-temp-rename; the hook fires at the crash-injection point
void write_file_atomic(const fs::path& path, const std::string& bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  write_file(tmp, bytes);
  if (repo_testing::pre_rename_hook) repo_testing::pre_rename_hook();
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec)
    throw Error(ErrorKind::io, "cannot rename '" + tmp.string() + "' into place: " + ec.message());
}

// Advisory single-writer lock; readers never take it.
class WriteLock {
public:
  explicit WriteLock(const fs::path& mvx_dir) : path_(mvx_dir / "lock") {
    int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
      if (errno == EEXIST)
        throw Error(ErrorKind::locked, "repository is locked (" + path_.string() + ")");
      throw Error(ErrorKind::io, "cannot create lock file '" + path_.string() + "'");
    }
    ::close(fd);
  }
  ~WriteLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  WriteLock(const WriteLock&) = delete;
  WriteLock& operator=(const WriteLock&) = delete;

private:
  fs::path path_;
};

fs::path multiverse_dir(const Repository& repo, const std::string& name) {
  return repo.mvx_dir() / "multiverses" / name;
}

io::GraphManifest manifest_of(const Multiverse& mv) {
  io::GraphManifest manifest;
  manifest.name = mv.name;
  for (const auto& [version, slice] : mv.slices) {
    io::GraphManifest::SliceEntry entry;
    entry.version = version;
    for (const auto& [name, artifact] : slice.artifacts) {
      std::string file = artifact.file_name.empty() ? name + ".json" : artifact.file_name;
      entry.artifacts[name] = "slices/" + version + "/" + file;
    }
    manifest.slices.push_back(std::move(entry));
  }
  for (const DesignTransition& t : mv.transitions) {
    io::GraphManifest::TransitionEntry entry;
    entry.from = t.from;
    entry.to = t.to;
    entry.rationale = t.rationale;
    entry.delta_refs = t.delta_refs;
    manifest.transitions.push_back(std::move(entry));
  }
  return manifest;
}

void write_graph(const Repository& repo, const Multiverse& mv) {
  fs::path dir = multiverse_dir(repo, mv.name);
  fs::create_directories(dir);
  write_file_atomic(dir / "graph.json", io::to_json(manifest_of(mv)).dump(2) + "\n");
}

void derive_internal_refs(Slice& slice) {
  bool has_exports = slice.artifacts.count("exports") &&
                     slice.artifacts.at("exports").kind == ArtifactKind::metamodel;
  if (!has_exports) return;
  for (const auto& [name, artifact] : slice.artifacts)
    if (artifact.kind == ArtifactKind::blob)
      slice.internal_refs.push_back({name, "exports", "describes"});
}

} // namespace

const Multiverse& Repository::multiverse(const std::string& name) const {
  auto it = multiverses.find(name);
  if (it == multiverses.end())
    throw Error(ErrorKind::not_found, "unknown multiverse '" + name + "'");
  return it->second;
}

Repository init_repository(const fs::path& path) {
  fs::path mvx = path / ".mvx";
  if (fs::exists(mvx))
    throw Error(ErrorKind::conflict, "'" + path.string() + "' is already a repository");
  std::error_code ec;
  fs::create_directories(mvx / "multiverses", ec);
  if (ec)
    throw Error(ErrorKind::io, "cannot create '" + mvx.string() + "': " + ec.message());
  fs::create_directories(mvx / "deltas");
  write_file(mvx / "manifest.json", io::json{{"formatVersion", "1"}}.dump(2) + "\n");
  write_file(mvx / "links.json", io::links_to_json({}).dump(2) + "\n");
  Repository repo;
  repo.root = path;
  return repo;
}

std::optional<fs::path> discover_repository(fs::path start) {
  std::error_code ec;
  fs::path current = fs::absolute(start, ec);
  while (true) {
    if (fs::exists(current / ".mvx")) return current;
    fs::path parent = current.parent_path();
    if (parent == current) return std::nullopt;
    current = parent;
  }
}

Repository load_repository(const fs::path& path) {
  fs::path mvx = path / ".mvx";
  if (!fs::exists(mvx))
    throw Error(ErrorKind::not_found, "'" + path.string() + "' is not a repository (no .mvx)");

  Repository repo;
  repo.root = path;

  io::json manifest = io::load_json_file(mvx / "manifest.json");
  if (!manifest.contains("formatVersion") || !manifest.at("formatVersion").is_string())
    throw Error(ErrorKind::corrupt_repo,
                "corrupt repository: manifest.json lacks a formatVersion");
  repo.format_version = manifest.at("formatVersion").get<std::string>();
  if (repo.format_version != "1")
    throw Error(ErrorKind::corrupt_repo, "repository format version '" + repo.format_version +
                                             "' is not supported by this build (wants 1)");

  fs::path multiverses = mvx / "multiverses";
  std::vector<fs::path> graph_files;
  if (fs::exists(multiverses))
    for (const auto& entry : fs::directory_iterator(multiverses))
      if (entry.is_directory() && fs::exists(entry.path() / "graph.json"))
        graph_files.push_back(entry.path() / "graph.json");
  std::sort(graph_files.begin(), graph_files.end());

  for (const fs::path& graph_path : graph_files) {
    std::string context = graph_path.string();
    io::GraphManifest manifest;
    try {
      manifest = io::graph_from_json(io::load_json_file(graph_path), context);
    } catch (const Error& e) {
      throw Error(ErrorKind::corrupt_repo, std::string("corrupt repository: ") + e.what());
    }
    Multiverse mv;
    mv.name = manifest.name;
    fs::path dir = graph_path.parent_path();
    if (dir.filename().string() != mv.name)
      throw Error(ErrorKind::corrupt_repo, "corrupt repository: " + context +
                                               " names multiverse '" + mv.name +
                                               "' but lives in '" + dir.filename().string() + "'");
    for (const auto& entry : manifest.slices) {
      if (mv.slices.count(entry.version))
        throw Error(ErrorKind::corrupt_repo, "corrupt repository: " + context +
                                                 " lists version '" + entry.version + "' twice");
      Slice slice;
      slice.version = entry.version;
      for (const auto& [name, rel_path] : entry.artifacts) {
        fs::path file = dir / rel_path;
        if (!fs::exists(file))
          throw Error(ErrorKind::corrupt_repo, "corrupt repository: " + context +
                                                   " references missing artifact file '" +
                                                   rel_path + "'");
        Artifact artifact;
        try {
          artifact = io::parse_artifact(read_file(file), file.filename().string(), file.string());
        } catch (const Error& e) {
          throw Error(ErrorKind::corrupt_repo, std::string("corrupt repository: ") + e.what());
        }
        artifact.source_path = file;
        slice.artifacts.emplace(name, std::move(artifact));
      }
      derive_internal_refs(slice);
      mv.slices.emplace(entry.version, std::move(slice));
    }
    for (const auto& entry : manifest.transitions) {
      for (const std::string& endpoint : {entry.from, entry.to})
        if (!mv.slices.count(endpoint))
          throw Error(ErrorKind::corrupt_repo, "corrupt repository: " + context +
                                                   " transition references unknown slice '" +
                                                   endpoint + "'");
      DesignTransition t;
      t.from = entry.from;
      t.to = entry.to;
      t.rationale = entry.rationale;
      t.delta_refs = entry.delta_refs;
      for (const auto& [artifact, rel_path] : entry.delta_refs) {
        fs::path file = mvx / rel_path;
        if (!fs::exists(file))
          throw Error(ErrorKind::corrupt_repo, "corrupt repository: " + context +
                                                   " references missing delta file '" + rel_path +
                                                   "'");
        Delta d;
        try {
          d = io::delta_from_json(io::load_json_file(file), file.string());
        } catch (const Error& e) {
          throw Error(ErrorKind::corrupt_repo, std::string("corrupt repository: ") + e.what());
        }
        if (d.from_version != t.from || d.to_version != t.to)
          throw Error(ErrorKind::corrupt_repo,
                      "corrupt repository: delta file '" + rel_path + "' covers " +
                          d.from_version + ".." + d.to_version + " but the transition is " +
                          t.from + ".." + t.to);
        t.deltas.emplace(artifact, std::move(d));
      }
      mv.transitions.push_back(std::move(t));
    }
    try {
      mv.topological_order();
    } catch (const Error&) {
      throw Error(ErrorKind::corrupt_repo,
                  "corrupt repository: " + context + " transition graph has a cycle");
    }
    repo.multiverses.emplace(mv.name, std::move(mv));
  }

  try {
    repo.links = io::links_from_json(io::load_json_file(mvx / "links.json"),
                                     (mvx / "links.json").string());
  } catch (const Error& e) {
    throw Error(ErrorKind::corrupt_repo, std::string("corrupt repository: ") + e.what());
  }
  return repo;
}

namespace {

Repository commit_impl(const Repository& repo, const std::string& multiverse,
                       const std::string& version, std::map<std::string, Artifact> artifacts,
                       const std::vector<std::string>& parents, const CommitOptions& options,
                       const std::map<std::string, std::string>& verbatim_bytes) {
  validate_name(multiverse, "multiverse");
  validate_name(version, "version");
  for (const auto& [name, artifact] : artifacts) {
    validate_name(name, "artifact");
    if (!artifact.file_name.empty()) validate_name(artifact.file_name, "artifact file");
  }
  if (!fs::exists(repo.mvx_dir()))
    throw Error(ErrorKind::not_found, "'" + repo.root.string() + "' is not a repository");

  WriteLock lock(repo.mvx_dir());

  Repository next = repo;
  auto [it, inserted] = next.multiverses.try_emplace(multiverse);
  Multiverse& mv = it->second;
  if (inserted) mv.name = multiverse;

  // deltas recorded only when hints are supplied; otherwise computed lazily
  std::map<std::string, Delta> recorded;
  std::map<std::string, std::string> delta_refs;
  std::vector<std::pair<fs::path, Delta>> delta_files;
  if (options.hints) {
    for (const std::string& parent : parents) {
      const Slice* parent_slice = mv.find_slice(parent);
      if (!parent_slice) continue; // add_slice reports unknown parents
      std::vector<std::string> changed;
      for (const auto& [name, artifact] : artifacts) {
        auto old_it = parent_slice->artifacts.find(name);
        if (old_it == parent_slice->artifacts.end()) continue;
        if (old_it->second.kind != ArtifactKind::metamodel ||
            artifact.kind != ArtifactKind::metamodel)
          continue;
        if (!payload_equal(old_it->second, artifact)) changed.push_back(name);
      }
      if (changed.empty()) continue;
      if (changed.size() > 1)
        throw Error(ErrorKind::usage, "hints are ambiguous: several metamodel artifacts changed (" +
                                          changed.front() + ", " + changed[1] + ", ...)");
      const std::string& name = changed.front();
      Delta d = diff_metamodel(*parent_slice->artifacts.at(name).metamodel,
                               *artifacts.at(name).metamodel, *options.hints);
      d.from_version = parent;
      d.to_version = version;
      std::string rel = "deltas/" + multiverse + "/" + parent + ".." + version + ".json";
      recorded[name] = d;
      delta_refs[name] = rel;
      delta_files.push_back({repo.mvx_dir() / rel, std::move(d)});
    }
  }

  mv = add_slice(std::move(mv), version, artifacts, parents, options.rationale, recorded);
  for (DesignTransition& t : mv.transitions)
    if (t.to == version) t.delta_refs = delta_refs;

  // payload files first, then delta files, then the atomic graph swap
  fs::path slice_dir = multiverse_dir(next, multiverse) / "slices" / version;
  fs::create_directories(slice_dir);
  for (auto& [name, artifact] : mv.slices.at(version).artifacts) {
    std::string file = artifact.file_name.empty() ? name + ".json" : artifact.file_name;
    fs::path target = slice_dir / file;
    if (auto vb = verbatim_bytes.find(name); vb != verbatim_bytes.end())
      write_file(target, vb->second);
    else
      write_file(target, io::artifact_to_bytes(artifact));
    artifact.file_name = file;
    artifact.source_path = target;
  }
  for (const auto& [path, delta] : delta_files) {
    fs::create_directories(path.parent_path());
    write_file(path, io::to_json(delta).dump(2) + "\n");
  }
  write_graph(next, mv);
  return next;
}

} // namespace

Repository commit_slice(const Repository& repo, const std::string& multiverse,
                        const std::string& version, std::map<std::string, Artifact> artifacts,
                        const std::vector<std::string>& parents, const CommitOptions& options) {
  return commit_impl(repo, multiverse, version, std::move(artifacts), parents, options, {});
}

Repository commit_slice_files(
    const Repository& repo, const std::string& multiverse, const std::string& version,
    const std::vector<std::pair<std::string, fs::path>>& artifact_files,
    const std::vector<std::string>& parents, const CommitOptions& options) {
  std::map<std::string, Artifact> artifacts;
  std::map<std::string, std::string> verbatim;
  for (const auto& [name, path] : artifact_files) {
    if (artifacts.count(name))
      throw Error(ErrorKind::usage, "artifact '" + name + "' given twice");
    std::string bytes = read_file(path);
    Artifact artifact = io::parse_artifact(bytes, path.filename().string(), path.string());
    // stored under the artifact name, keeping the source extension
    artifact.file_name = name + path.extension().string();
    verbatim[name] = std::move(bytes);
    artifacts.emplace(name, std::move(artifact));
  }
  return commit_impl(repo, multiverse, version, std::move(artifacts), parents, options, verbatim);
}

Repository add_links(const Repository& repo, const std::vector<CrossLink>& links) {
  if (!fs::exists(repo.mvx_dir()))
    throw Error(ErrorKind::not_found, "'" + repo.root.string() + "' is not a repository");
  WriteLock lock(repo.mvx_dir());
  Repository next = repo;
  for (const CrossLink& link : links) {
    validate_link(link);
    for (const CrossLink& existing : next.links)
      if (existing.id == link.id)
        throw Error(ErrorKind::conflict, "link id '" + link.id + "' already registered");
    for (const ArtifactRef* ref : {&link.source, &link.target}) {
      const Multiverse& mv = next.multiverse(ref->multiverse);
      const Slice* slice = mv.find_slice(ref->version);
      if (!slice)
        throw Error(ErrorKind::not_found,
                    "link '" + link.id + "': unknown slice " + ref->multiverse + "@" + ref->version);
      if (!slice->artifacts.count(ref->artifact))
        throw Error(ErrorKind::not_found,
                    "link '" + link.id + "': no artifact '" + ref->artifact + "' in slice " +
                        ref->multiverse + "@" + ref->version);
    }
    next.links.push_back(link);
  }
  write_file_atomic(next.mvx_dir() / "links.json",
                    io::links_to_json(next.links).dump(2) + "\n");
  return next;
}

Delta load_or_compute_delta(const Repository& repo, const std::string& multiverse,
                            const std::string& from, const std::string& to) {
  fs::path file = repo.mvx_dir() / "deltas" / multiverse / (from + ".." + to + ".json");
  if (fs::exists(file)) {
    Delta d = io::delta_from_json(io::load_json_file(file), file.string());
    if (d.from_version != from || d.to_version != to)
      throw Error(ErrorKind::corrupt_repo, "delta file '" + file.string() +
                                               "' covers " + d.from_version + ".." + d.to_version);
    return d;
  }
  const Multiverse& mv = repo.multiverse(multiverse);
  const Slice* a = mv.find_slice(from);
  const Slice* b = mv.find_slice(to);
  if (!a || !b)
    throw Error(ErrorKind::not_found,
                "multiverse '" + multiverse + "': unknown slice '" + (a ? to : from) + "'");
  auto [name_a, mm_a] = unique_metamodel(*a, multiverse + "@" + from);
  auto [name_b, mm_b] = unique_metamodel(*b, multiverse + "@" + to);
  if (name_a != name_b)
    throw Error(ErrorKind::precondition, "metamodel artifact is named '" + name_a + "' in " +
                                             from + " but '" + name_b + "' in " + to);
  Delta d = diff_metamodel(*mm_a, *mm_b);
  d.from_version = from;
  d.to_version = to;
  return d;
}

std::pair<std::string, std::shared_ptr<const Metamodel>> unique_metamodel(
    const Slice& slice, const std::string& context) {
  std::pair<std::string, std::shared_ptr<const Metamodel>> found;
  for (const auto& [name, artifact] : slice.artifacts) {
    if (artifact.kind != ArtifactKind::metamodel) continue;
    if (found.second)
      throw Error(ErrorKind::precondition,
                  context + " holds several metamodel artifacts ('" + found.first + "', '" + name +
                      "')");
    found = {name, artifact.metamodel};
  }
  if (!found.second)
    throw Error(ErrorKind::not_found, context + " holds no metamodel artifact");
  return found;
}

} // namespace mvx
