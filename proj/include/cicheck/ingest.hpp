#pragma once

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cicheck/manifest.hpp"
#include "cicheck/snapshot.hpp"
#include "cicheck/status.hpp"
#include "cicheck/textdiff.hpp"

namespace cicheck {

struct IngestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One linearized commit: position t in the repository's build order, its
// collapsed status, and the filtered snapshot of its tree.
struct LabeledCommit {
    int index = 0;
    std::string commit_id;
    BuildStatus status = BuildStatus::Pass;
    RepoSnapshot snapshot;
    // changed logical lines (added + deleted) vs the previous linearized
    // commit; for index 0 this equals the snapshot's total line count
    std::size_t commit_size = 0;
};

namespace detail {

inline std::string read_file(const std::filesystem::path& p, bool* ok) {
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        *ok = false;
        return {};
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    *ok = in.good() || in.eof();
    return buf.str();
}

struct CommandResult {
    int exit_code = -1;
    std::string output;
};

inline CommandResult run_command(const std::string& cmd) {
    CommandResult res;
    FILE* pipe = ::popen((cmd + " 2>/dev/null").c_str(), "r");
    if (!pipe) return res;
    char buf[4096];
    std::size_t n;
    while ((n = ::fread(buf, 1, sizeof buf, pipe)) > 0) res.output.append(buf, n);
    int status = ::pclose(pipe);
    res.exit_code = (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
    return res;
}

inline std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'')
            out += "'\\''";
        else
            out += c;
    }
    out += "'";
    return out;
}

inline std::map<std::string, std::string> read_checkout_git(
    const std::filesystem::path& repo, const std::string& commit_id,
    std::vector<std::string>* warnings) {
    std::string base = "git -C " + shell_quote(repo.string()) + " ";
    auto ls = run_command(base + "ls-tree -r --name-only " + shell_quote(commit_id));
    if (ls.exit_code != 0)
        throw IngestError("commit not found in git repository: " + commit_id);
    std::map<std::string, std::string> checkout;
    for (const std::string& path : split_lines(ls.output)) {
        if (path.empty()) continue;
        auto show = run_command(base + "show " + shell_quote(commit_id + ":" + path));
        if (show.exit_code != 0) {
            if (warnings) warnings->push_back("unreadable git blob skipped: " + path);
            continue;
        }
        checkout.emplace(path, std::move(show.output));
    }
    return checkout;
}

}  // namespace detail

// One commit's files as (relative path -> content). Unreadable files are
// skipped with a warning rather than failing the checkout.
inline std::map<std::string, std::string> read_checkout_dir(
    const std::filesystem::path& root, std::vector<std::string>* warnings = nullptr) {
    std::map<std::string, std::string> checkout;
    for (auto it = std::filesystem::recursive_directory_iterator(root);
         it != std::filesystem::recursive_directory_iterator(); ++it) {
        if (!it->is_regular_file()) continue;
        std::string rel = std::filesystem::relative(it->path(), root).generic_string();
        bool ok = true;
        std::string content = detail::read_file(it->path(), &ok);
        if (!ok) {
            if (warnings) warnings->push_back("unreadable file skipped: " + rel);
            continue;
        }
        checkout.emplace(std::move(rel), std::move(content));
    }
    return checkout;
}

enum class RepoLayout { GitRepository, DirectoryPerCommit };

// A repository arrives either as a git checkout (read through the local
// object store) or as a pre-exported directory-per-commit tree, optionally
// under a "commits/" subdirectory.
inline RepoLayout detect_repo_layout(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    if (fs::exists(root / ".git")) return RepoLayout::GitRepository;
    // bare repository
    if (fs::exists(root / "HEAD") && fs::exists(root / "objects"))
        return RepoLayout::GitRepository;
    return RepoLayout::DirectoryPerCommit;
}

inline std::filesystem::path commit_dir(const std::filesystem::path& root,
                                        const std::string& commit_id) {
    namespace fs = std::filesystem;
    if (fs::is_directory(root / "commits" / commit_id)) return root / "commits" / commit_id;
    return root / commit_id;
}

// Order the manifest by CI build number (timestamp, then commit id as
// tiebreakers for schema compatibility), check out every commit, filter it,
// and label it. Duplicate build numbers make the order ambiguous and fail.
inline std::vector<LabeledCommit> linearize_history(
    const std::filesystem::path& repo_root, const BuildManifest& manifest,
    const FilterPolicy& policy = FilterPolicy::defaults(),
    std::vector<std::string>* warnings = nullptr) {
    namespace fs = std::filesystem;
    if (!fs::exists(repo_root))
        throw IngestError("repository path does not exist: " + repo_root.string());

    std::vector<ManifestRow> rows = manifest.rows;
    std::stable_sort(rows.begin(), rows.end(), [](const ManifestRow& a, const ManifestRow& b) {
        return std::tie(a.build_number, a.timestamp, a.commit_id) <
               std::tie(b.build_number, b.timestamp, b.commit_id);
    });
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].build_number == rows[i - 1].build_number)
            throw IngestError("duplicate build number " +
                              std::to_string(rows[i].build_number) +
                              " (ambiguous build order)");

    RepoLayout layout = detect_repo_layout(repo_root);
    std::vector<LabeledCommit> out;
    out.reserve(rows.size());
    const RepoSnapshot* prev = nullptr;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::map<std::string, std::string> checkout;
        if (layout == RepoLayout::GitRepository) {
            checkout = detail::read_checkout_git(repo_root, rows[i].commit_id, warnings);
        } else {
            fs::path dir = commit_dir(repo_root, rows[i].commit_id);
            if (!fs::is_directory(dir))
                throw IngestError("commit not found: " + rows[i].commit_id +
                                  " (no directory " + dir.string() + ")");
            checkout = read_checkout_dir(dir, warnings);
        }
        LabeledCommit commit;
        commit.index = static_cast<int>(i);
        commit.commit_id = rows[i].commit_id;
        commit.status = collapse_status(rows[i].status);
        commit.snapshot = filter_repository(checkout, policy, warnings);
        static const RepoSnapshot kEmpty;
        commit.commit_size = snapshot_edit_count(prev ? *prev : kEmpty, commit.snapshot);
        out.push_back(std::move(commit));
        prev = &out.back().snapshot;
    }
    return out;
}

}  // namespace cicheck
