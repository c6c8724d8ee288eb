#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cicheck/feature.hpp"
#include "cicheck/snapshot.hpp"
#include "cicheck/textdiff.hpp"

namespace cicheck {

// --- tokenization -----------------------------------------------------------

inline bool is_token_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '/';
}

// Split on whitespace and punctuation; '.', '_', '/' stay inside tokens.
// Case-sensitive.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : text) {
        if (is_token_char(c)) {
            cur += c;
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

// --- version embedding ------------------------------------------------------

// Dotted versions, at most 4 components, each below 10^4.
inline std::optional<std::vector<int>> parse_version_components(std::string_view text) {
    if (text.empty()) return std::nullopt;
    std::vector<int> comps;
    int cur = 0, digits = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c >= '0' && c <= '9') {
            cur = cur * 10 + (c - '0');
            if (++digits > 4 || cur >= 10000) return std::nullopt;
        } else if (c == '.') {
            if (digits == 0 || i + 1 == text.size()) return std::nullopt;
            comps.push_back(cur);
            cur = 0;
            digits = 0;
            if (comps.size() == 4) return std::nullopt;
        } else {
            return std::nullopt;
        }
    }
    if (digits == 0) return std::nullopt;
    comps.push_back(cur);
    return comps;
}

// Order-preserving embedding of component-wise version order: components are
// left-aligned base-10^4 digits, so "1.0", "1", and "1.0.0" coincide and
// "3.4.34" < "3.4.35" survives the mapping.
inline double embed_version(const std::vector<int>& components) {
    double value = 0.0;
    for (std::size_t i = 0; i < components.size() && i < 4; ++i)
        value += components[i] * std::pow(10.0, 4.0 * (3.0 - static_cast<double>(i)));
    return value;
}

inline std::optional<double> version_to_real(std::string_view text) {
    auto comps = parse_version_components(text);
    if (!comps) return std::nullopt;
    return embed_version(*comps);
}

// --- magic-constant scanning -------------------------------------------------

struct MagicLineMatch {
    std::string keyword;  // last word before the separator, cleaned
    std::string prefix;   // everything left of the value, whitespace collapsed
    std::vector<int> components;
    double value = 0.0;
};

namespace detail {

inline std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    std::string cur;
    for (char c : text) {
        if (c == ' ' || c == '\t') {
            if (!cur.empty()) {
                words.push_back(std::move(cur));
                cur.clear();
            }
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));
    return words;
}

inline bool is_wrap_char(char c) {
    return c == '\'' || c == '"' || c == '(' || c == ')' || c == '[' || c == ']' ||
           c == '{' || c == '}' || c == ',' || c == ';';
}

inline std::string_view strip_wrapping(std::string_view w) {
    while (!w.empty() && is_wrap_char(w.front())) w.remove_prefix(1);
    while (!w.empty() && is_wrap_char(w.back())) w.remove_suffix(1);
    return w;
}

inline bool is_separator_char(char c) {
    return c == '=' || c == ':' || c == '<' || c == '>' || c == '~';
}

inline bool is_separator_word(std::string_view w) {
    return !w.empty() && std::all_of(w.begin(), w.end(), is_separator_char);
}

inline bool has_alnum(std::string_view w) {
    return std::any_of(w.begin(), w.end(),
                       [](char c) { return std::isalnum(static_cast<unsigned char>(c)); });
}

}  // namespace detail

// Match the pattern <keyword> <separator> <numeric-literal-or-version> at the
// end of a logical line. Separators: whitespace, '=', ':', '>=', '<=', '~>'.
// The value may carry a leading 'v'/'V' and wrapping quotes or brackets.
inline std::optional<MagicLineMatch> scan_magic_line(std::string_view text) {
    std::vector<std::string> words = detail::split_words(text);
    if (words.size() < 2) return std::nullopt;

    std::string_view value_word = detail::strip_wrapping(words.back());
    if (!value_word.empty() && (value_word.front() == 'v' || value_word.front() == 'V'))
        value_word.remove_prefix(1);
    auto comps = parse_version_components(value_word);
    if (!comps) return std::nullopt;

    // the separator may be its own word or glued onto the keyword
    std::size_t kw_idx = words.size() - 2;
    if (detail::is_separator_word(detail::strip_wrapping(words[kw_idx]))) {
        if (kw_idx == 0) return std::nullopt;
        --kw_idx;
    }
    std::string_view kw = detail::strip_wrapping(words[kw_idx]);
    while (!kw.empty() && detail::is_separator_char(kw.back())) kw.remove_suffix(1);
    kw = detail::strip_wrapping(kw);
    if (kw.empty() || !detail::has_alnum(kw)) return std::nullopt;

    MagicLineMatch m;
    m.keyword = std::string(kw);
    for (std::size_t i = 0; i <= kw_idx; ++i) {
        if (i) m.prefix += ' ';
        m.prefix += words[i];
    }
    m.components = std::move(*comps);
    m.value = embed_version(m.components);
    return m;
}

// --- per-snapshot index -------------------------------------------------------

struct MagicHit {
    double value = 0.0;
    SourceLoc loc;
    std::string prefix;
};

// Lexical index of one snapshot: every magic-constant match and every token
// occurrence, in file-then-line order. Built once, queried per feature.
struct SnapshotIndex {
    std::map<std::string, std::vector<MagicHit>> magic;
    std::map<std::string, std::vector<SourceLoc>> tokens;

    static SnapshotIndex build(const RepoSnapshot& snap) {
        SnapshotIndex index;
        for (const auto& [path, lines] : snap.files) {
            for (const LogicalLine& line : lines) {
                SourceLoc loc{path, line.first_line, line.last_line};
                if (auto m = scan_magic_line(line.text))
                    index.magic[m->keyword].push_back(MagicHit{m->value, loc, m->prefix});
                for (std::string& tok : tokenize(line.text)) {
                    auto& occs = index.tokens[tok];
                    if (occs.empty() || !(occs.back() == loc)) occs.push_back(loc);
                }
            }
        }
        return index;
    }
};

// --- feature extraction and evaluation ---------------------------------------

inline FeatureSet extract_magic_candidates(const SnapshotIndex& index) {
    FeatureSet out;
    for (const auto& [keyword, hits] : index.magic)
        out.insert(CodeFeature::magic(keyword, hits.front().prefix));
    return out;
}

inline FeatureSet extract_magic_candidates(const RepoSnapshot& snap) {
    return extract_magic_candidates(SnapshotIndex::build(snap));
}

// Diff features from adjacent snapshots: pair removed/added lines through the
// unified diff, compare their tokens positionally, and emit one feature per
// differing position. A pair is only a feature when the removed token is gone
// from the new snapshot and the added token is absent from the old one — a
// diff-derived feature must never see both keywords in one snapshot.
inline FeatureSet extract_diff_features(const RepoSnapshot& snap_t,
                                        const RepoSnapshot& snap_t1) {
    std::set<std::string> tokens_before, tokens_after;
    for (const auto& [path, lines] : snap_t.files)
        for (const LogicalLine& line : lines)
            for (std::string& tok : tokenize(line.text)) tokens_before.insert(std::move(tok));
    for (const auto& [path, lines] : snap_t1.files)
        for (const LogicalLine& line : lines)
            for (std::string& tok : tokenize(line.text)) tokens_after.insert(std::move(tok));

    FeatureSet out;
    auto it_a = snap_t.files.begin();
    auto it_b = snap_t1.files.begin();
    while (it_a != snap_t.files.end() && it_b != snap_t1.files.end()) {
        if (it_a->first < it_b->first) {
            ++it_a;
            continue;
        }
        if (it_b->first < it_a->first) {
            ++it_b;
            continue;
        }
        for (auto [removed, added] : textdiff::changed_pairs(it_a->second, it_b->second)) {
            std::vector<std::string> ta = tokenize(removed->text);
            std::vector<std::string> tb = tokenize(added->text);
            for (std::size_t i = 0; i < ta.size() && i < tb.size(); ++i) {
                if (ta[i] == tb[i]) continue;
                if (tokens_after.contains(ta[i]) || tokens_before.contains(tb[i])) continue;
                out.insert(CodeFeature::diff(ta[i], tb[i]));
            }
        }
        ++it_a, ++it_b;
    }
    return out;
}

inline FeatureValue evaluate_magic_feature(const CodeFeature& f, const SnapshotIndex& index) {
    FeatureValue v;
    auto it = index.magic.find(f.keyword);
    if (it == index.magic.end()) return v;  // absent sentinel: 0, no locations
    for (const MagicHit& hit : it->second) v.locations.push_back(hit.loc);
    v.value = it->second.back().value;  // last match in file-then-line order
    return v;
}

inline FeatureValue evaluate_diff_feature(const CodeFeature& f, const SnapshotIndex& index) {
    FeatureValue v;
    auto removed = index.tokens.find(f.keyword);
    auto added = index.tokens.find(f.added);
    bool has_removed = removed != index.tokens.end();
    bool has_added = added != index.tokens.end();
    if (has_removed && has_added) {
        // diffs never produce co-occurring keywords; arbitrary snapshots can
        v.anomaly = true;
        return v;
    }
    if (has_removed) {
        v.value = -1.0;
        v.locations = removed->second;
    } else if (has_added) {
        v.value = 1.0;
        v.locations = added->second;
    }
    return v;
}

inline FeatureValue evaluate_feature(const CodeFeature& f, const SnapshotIndex& index) {
    return f.kind == FeatureKind::Magic ? evaluate_magic_feature(f, index)
                                        : evaluate_diff_feature(f, index);
}

inline RepoSummary summarize(const SnapshotIndex& index, const FeatureSet& extractors) {
    if (extractors.empty())
        throw std::invalid_argument("summarize requires a non-empty extractor set");
    RepoSummary summary;
    for (const CodeFeature& f : extractors)
        summary.entries.emplace(f, evaluate_feature(f, index));
    return summary;
}

inline RepoSummary summarize(const RepoSnapshot& snap, const FeatureSet& extractors) {
    return summarize(SnapshotIndex::build(snap), extractors);
}

// --- support ------------------------------------------------------------------

// Fraction of summaries in which the feature occurs.
inline double support(const CodeFeature& f, const std::vector<RepoSummary>& summaries) {
    if (summaries.empty())
        throw std::invalid_argument("support requires at least one summary");
    std::size_t present = 0;
    for (const RepoSummary& s : summaries) {
        const FeatureValue* v = s.find(f);
        if (!v)
            throw std::invalid_argument("summary not built over feature " + f.name());
        if (feature_present(f, *v)) ++present;
    }
    return static_cast<double>(present) / static_cast<double>(summaries.size());
}

inline FeatureSet prune_by_support(const FeatureSet& candidates,
                                   const std::vector<RepoSummary>& summaries,
                                   double threshold) {
    if (threshold < 0.0 || threshold > 1.0)
        throw std::invalid_argument("support threshold must be in [0,1]");
    FeatureSet kept;
    for (const CodeFeature& f : candidates)
        if (support(f, summaries) >= threshold) kept.insert(f);
    return kept;
}

}  // namespace cicheck
