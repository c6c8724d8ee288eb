#pragma once

#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "cicheck/status.hpp"

namespace cicheck {

enum class FeatureKind : std::uint8_t { Magic, Diff };

// A named extractor. Magic features bind a keyword to a numeric constant;
// Diff features track a keyword replacement mined from a commit pair.
// Identity is (kind, keywords); the prefix is reporting metadata only.
struct CodeFeature {
    FeatureKind kind = FeatureKind::Magic;
    std::string keyword;  // Magic keyword, or the removed keyword for Diff
    std::string added;    // Diff only: the added keyword
    std::string prefix;   // Magic only: collapsed line prefix, not part of identity

    static CodeFeature magic(std::string kw, std::string prefix = {}) {
        CodeFeature f;
        f.kind = FeatureKind::Magic;
        f.keyword = std::move(kw);
        f.prefix = std::move(prefix);
        return f;
    }

    static CodeFeature diff(std::string removed, std::string added_kw) {
        CodeFeature f;
        f.kind = FeatureKind::Diff;
        f.keyword = std::move(removed);
        f.added = std::move(added_kw);
        return f;
    }

    std::string name() const {
        return kind == FeatureKind::Magic ? keyword : keyword + "/" + added;
    }

    friend bool operator<(const CodeFeature& a, const CodeFeature& b) {
        return std::tie(a.kind, a.keyword, a.added) < std::tie(b.kind, b.keyword, b.added);
    }
    friend bool operator==(const CodeFeature& a, const CodeFeature& b) {
        return std::tie(a.kind, a.keyword, a.added) == std::tie(b.kind, b.keyword, b.added);
    }
};

using FeatureSet = std::set<CodeFeature>;

struct SourceLoc {
    std::string file;
    int first_line = 0;
    int last_line = 0;

    friend bool operator<(const SourceLoc& a, const SourceLoc& b) {
        return std::tie(a.file, a.first_line, a.last_line) <
               std::tie(b.file, b.first_line, b.last_line);
    }
    bool operator==(const SourceLoc&) const = default;
};

// Value of one feature on one snapshot. Magic features use 0 with no
// locations as the absent sentinel; Diff features take values in {-1,0,+1}.
struct FeatureValue {
    double value = 0.0;
    std::vector<SourceLoc> locations;
    // set when both keywords of a Diff feature occur in a snapshot
    bool anomaly = false;

    bool operator==(const FeatureValue&) const = default;
};

inline bool feature_present(const CodeFeature& f, const FeatureValue& v) {
    return f.kind == FeatureKind::Magic ? !v.locations.empty() : v.value != 0.0;
}

// The feature vector Sigma for one snapshot, total over the extractor set it
// was built with.
struct RepoSummary {
    std::map<CodeFeature, FeatureValue> entries;

    bool same_domain(const RepoSummary& other) const {
        if (entries.size() != other.entries.size()) return false;
        auto it = other.entries.begin();
        for (const auto& [f, v] : entries) {
            if (!(f == it->first)) return false;
            ++it;
        }
        return true;
    }

    // value-vector equality, the comparison ABR is defined over
    bool values_equal(const RepoSummary& other) const {
        if (entries.size() != other.entries.size()) return false;
        auto it = other.entries.begin();
        for (const auto& [f, v] : entries) {
            if (!(f == it->first) || v.value != it->second.value) return false;
            ++it;
        }
        return true;
    }

    const FeatureValue* find(const CodeFeature& f) const {
        auto it = entries.find(f);
        return it == entries.end() ? nullptr : &it->second;
    }
};

// --- extractor-set serialization ------------------------------------------

inline nlohmann::json feature_to_json(const CodeFeature& f) {
    nlohmann::json j;
    j["kind"] = f.kind == FeatureKind::Magic ? "magic" : "diff";
    j["keywords"] = f.kind == FeatureKind::Magic
                        ? nlohmann::json::array({f.keyword})
                        : nlohmann::json::array({f.keyword, f.added});
    if (!f.prefix.empty()) j["prefix"] = f.prefix;
    return j;
}

inline CodeFeature feature_from_json(const nlohmann::json& j) {
    std::string kind = j.at("kind").get<std::string>();
    const auto& kws = j.at("keywords");
    if (kind == "magic") {
        if (kws.size() != 1) throw std::invalid_argument("magic feature needs 1 keyword");
        return CodeFeature::magic(kws[0].get<std::string>(),
                                  j.value("prefix", std::string{}));
    }
    if (kind == "diff") {
        if (kws.size() != 2) throw std::invalid_argument("diff feature needs 2 keywords");
        return CodeFeature::diff(kws[0].get<std::string>(), kws[1].get<std::string>());
    }
    throw std::invalid_argument("unknown feature kind: " + kind);
}

inline nlohmann::json features_to_json(const FeatureSet& set) {
    nlohmann::json arr = nlohmann::json::array();
    for (const CodeFeature& f : set) arr.push_back(feature_to_json(f));
    return arr;
}

inline FeatureSet features_from_json(const nlohmann::json& arr) {
    FeatureSet set;
    for (const auto& j : arr) set.insert(feature_from_json(j));
    return set;
}

}  // namespace cicheck
