#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cicheck/lines.hpp"

namespace cicheck {

// Filename patterns ('*' and '?' globs, matched against the basename) that
// decide which files take part in feature extraction.
struct FilterPolicy {
    std::vector<std::string> patterns;

    bool operator==(const FilterPolicy&) const = default;

    static FilterPolicy defaults() {
        return FilterPolicy{{"*.rb", "Gemfile", "Gemfile.*", "*.gemspec",
                             ".travis.yml", "*.yml", "*.lock"}};
    }

    bool empty() const { return patterns.empty(); }

    bool matches(std::string_view path) const {
        std::string_view base = path;
        if (auto pos = base.rfind('/'); pos != std::string_view::npos)
            base = base.substr(pos + 1);
        return std::any_of(patterns.begin(), patterns.end(),
                           [&](const std::string& p) { return glob_match(p, base); });
    }

    static bool glob_match(std::string_view pat, std::string_view text) {
        // iterative '*'/'?' matcher with backtracking on the last star
        std::size_t p = 0, t = 0, star = std::string_view::npos, mark = 0;
        while (t < text.size()) {
            if (p < pat.size() && (pat[p] == '?' || pat[p] == text[t])) {
                ++p;
                ++t;
            } else if (p < pat.size() && pat[p] == '*') {
                star = p++;
                mark = t;
            } else if (star != std::string_view::npos) {
                p = star + 1;
                t = ++mark;
            } else {
                return false;
            }
        }
        while (p < pat.size() && pat[p] == '*') ++p;
        return p == pat.size();
    }
};

// One commit's filtered file contents, keyed by relative path.
struct RepoSnapshot {
    std::map<std::string, std::vector<LogicalLine>> files;

    bool operator==(const RepoSnapshot&) const = default;

    std::size_t total_lines() const {
        std::size_t n = 0;
        for (const auto& [path, lines] : files) n += lines.size();
        return n;
    }
};

inline bool looks_binary(std::string_view content) {
    std::size_t probe = std::min<std::size_t>(content.size(), 8000);
    return content.substr(0, probe).find('\0') != std::string_view::npos;
}

// Keep only files admitted by the policy, join continuation lines, and drop
// logical lines that are empty after trimming. Binary files never survive.
inline RepoSnapshot filter_repository(const std::map<std::string, std::string>& checkout,
                                      const FilterPolicy& policy,
                                      std::vector<std::string>* warnings = nullptr) {
    if (policy.empty())
        throw std::invalid_argument("filter policy must contain at least one pattern");
    RepoSnapshot snap;
    for (const auto& [path, content] : checkout) {
        if (!policy.matches(path)) continue;
        if (looks_binary(content)) {
            if (warnings) warnings->push_back("skipped binary file: " + path);
            continue;
        }
        std::vector<LogicalLine> logical = join_continuations(split_lines(content));
        std::vector<LogicalLine> kept;
        kept.reserve(logical.size());
        for (auto& line : logical)
            if (!strip(line.text).empty()) kept.push_back(std::move(line));
        snap.files.emplace(path, std::move(kept));
    }
    return snap;
}

}  // namespace cicheck
