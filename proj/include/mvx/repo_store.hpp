#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mvx/coevolution.hpp"
#include "mvx/delta.hpp"
#include "mvx/multiverse.hpp"

namespace mvx {

// On-disk layout under <root>/.mvx:
//   manifest.json                               format version
//   multiverses/<name>/graph.json               slice + transition manifest
//   multiverses/<name>/slices/<version>/<files> artifact payloads
//   deltas/<name>/<from>..<to>.json             recorded semantic deltas
//   links.json                                  cross-link registry
struct Repository {
  std::filesystem::path root;
  std::string format_version = "1";
  MultiverseMap multiverses;
  std::vector<CrossLink> links;

  std::filesystem::path mvx_dir() const { return root / ".mvx"; }
  const Multiverse& multiverse(const std::string& name) const;
};

// Creates the layout; fails if the path already holds a repository.
Repository init_repository(const std::filesystem::path& path);

// Loads and cross-validates everything; corrupt state is reported with the
// offending file path.
Repository load_repository(const std::filesystem::path& path);

// Walks up from start looking for a .mvx directory.
std::optional<std::filesystem::path> discover_repository(std::filesystem::path start);

struct CommitOptions {
  std::string rationale;
  std::optional<DiffHints> hints;
};

// Commits in-memory payloads as a new slice: artifact files written under
// the slice directory, graph.json swapped in atomically, and, when hints
// are given and a parent shares a changed metamodel artifact, the computed
// delta recorded under deltas/. Unchanged artifacts need no delta; they are
// identity correspondences.
Repository commit_slice(const Repository& repo, const std::string& multiverse,
                        const std::string& version, std::map<std::string, Artifact> artifacts,
                        const std::vector<std::string>& parents, const CommitOptions& options = {});

// Same, reading artifact payloads from files (copied verbatim).
Repository commit_slice_files(
    const Repository& repo, const std::string& multiverse, const std::string& version,
    const std::vector<std::pair<std::string, std::filesystem::path>>& artifact_files,
    const std::vector<std::string>& parents, const CommitOptions& options = {});

// Registers cross-links (ids fresh, endpoints resolve) and rewrites
// links.json atomically.
Repository add_links(const Repository& repo, const std::vector<CrossLink>& links);

// The recorded delta for a transition, or a structural diff of the slices'
// unique metamodel artifact when none was recorded.
Delta load_or_compute_delta(const Repository& repo, const std::string& multiverse,
                            const std::string& from, const std::string& to);

// The single metamodel-kind artifact of a slice; anything else is an error.
std::pair<std::string, std::shared_ptr<const Metamodel>> unique_metamodel(
    const Slice& slice, const std::string& context);

namespace repo_testing {
// invoked between writing graph.json.tmp and the rename; lets tests inject
// a crash at the atomicity boundary
extern std::function<void()> pre_rename_hook;
} // namespace repo_testing

} // namespace mvx
