#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "cicheck/dtree.hpp"
#include "cicheck/feature.hpp"
#include "cicheck/report.hpp"

namespace cicheck {

enum class ModelScope : std::uint8_t { Global, Local };
enum class CombinePolicy : std::uint8_t { Conservative, GlobalPriority, LocalPriority };

inline std::string_view to_string(CombinePolicy p) {
    switch (p) {
        case CombinePolicy::Conservative: return "conservative";
        case CombinePolicy::GlobalPriority: return "global-priority";
        case CombinePolicy::LocalPriority: return "local-priority";
    }
    return "";
}

inline CombinePolicy parse_combine_policy(std::string_view text) {
    if (text == "conservative") return CombinePolicy::Conservative;
    if (text == "global-priority") return CombinePolicy::GlobalPriority;
    if (text == "local-priority") return CombinePolicy::LocalPriority;
    throw std::invalid_argument("unknown combine policy: \"" + std::string(text) + "\"");
}

// FNV-1a over a canonical rendering of the training set; stored as model
// provenance so lookahead bugs are detectable from bundles alone.
inline std::string training_digest(const std::vector<TrainingSample>& samples) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](std::string_view s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ull;
        }
        h ^= 0x1f;
        h *= 1099511628211ull;
    };
    for (const TrainingSample& s : samples) {
        mix(to_string(s.label));
        for (const auto& [f, v] : s.summary->entries) {
            mix(f.name());
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", v.value);
            mix(buf);
        }
    }
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

struct Model {
    DecisionTree tree;
    FeatureSet extractors;
    ModelScope scope = ModelScope::Global;
    std::string repo_id;  // Local only
    std::string digest;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["scope"] = scope == ModelScope::Global ? "global" : "local";
        if (scope == ModelScope::Local) j["repo_id"] = repo_id;
        j["extractors"] = features_to_json(extractors);
        j["tree"] = tree.to_json();
        j["digest"] = digest;
        return j;
    }

    static Model from_json(const nlohmann::json& j) {
        Model m;
        m.scope = j.at("scope").get<std::string>() == "global" ? ModelScope::Global
                                                               : ModelScope::Local;
        if (j.contains("repo_id")) m.repo_id = j.at("repo_id").get<std::string>();
        m.extractors = features_from_json(j.at("extractors"));
        m.tree = DecisionTree::from_json(j.at("tree"));
        m.digest = j.value("digest", std::string{});
        return m;
    }
};

struct CombinedModel {
    Model global;
    Model local;
    CombinePolicy policy = CombinePolicy::Conservative;
};

namespace detail {

inline void append_findings(Explanation& e, const DecisionPath& path,
                            const RepoSummary& summary) {
    for (const std::string& keyword : path_keywords(path)) {
        bool seen = std::any_of(e.findings.begin(), e.findings.end(),
                                [&](const Finding& f) { return f.keyword == keyword; });
        if (seen) continue;
        Finding f;
        f.keyword = keyword;
        f.locations = localize(keyword, summary);
        e.findings.push_back(std::move(f));
    }
}

}  // namespace detail

// Combine the two classifiers. Conservative only reports Err when both agree
// on Err; the priority policies let the named model win conflicts. The
// explanation carries the decision paths of every model that predicted the
// final label when that label is Err.
inline std::pair<BuildStatus, Explanation> combine_predict(const CombinedModel& cm,
                                                           const RepoSummary& summary_global,
                                                           const RepoSummary& summary_local) {
    auto [global_status, global_path] = cm.global.tree.predict(summary_global);
    auto [local_status, local_path] = cm.local.tree.predict(summary_local);

    BuildStatus final = BuildStatus::Pass;
    switch (cm.policy) {
        case CombinePolicy::Conservative:
            final = (global_status == BuildStatus::Err && local_status == BuildStatus::Err)
                        ? BuildStatus::Err
                        : BuildStatus::Pass;
            break;
        case CombinePolicy::GlobalPriority:
            final = global_status;
            break;
        case CombinePolicy::LocalPriority:
            final = local_status;
            break;
    }

    Explanation e;
    e.prediction = final;
    if (final == BuildStatus::Err) {
        if (global_status == final) {
            e.from_global = true;
            detail::append_findings(e, global_path, summary_global);
        }
        if (local_status == final) {
            e.from_local = true;
            detail::append_findings(e, local_path, summary_local);
        }
    }
    return {final, e};
}

}  // namespace cicheck
