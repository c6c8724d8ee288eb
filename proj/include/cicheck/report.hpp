#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "cicheck/feature.hpp"
#include "cicheck/status.hpp"

namespace cicheck {

struct LocationEntry {
    std::string file;  // empty for marker-only entries
    std::string desc;  // "Line N", "Multiple Lines", or a marker

    bool operator==(const LocationEntry&) const = default;
};

struct Finding {
    std::string keyword;
    std::vector<LocationEntry> locations;

    bool operator==(const Finding&) const = default;
};

struct Explanation {
    BuildStatus prediction = BuildStatus::Pass;
    std::vector<Finding> findings;
    bool from_global = false;
    bool from_local = false;
};

// Where a keyword's feature matched in this snapshot. One line renders
// "Line N"; several lines in one file collapse to "Multiple Lines"; three or
// more files collapse to the aggregate "Multiple Files:Multiple Lines" header.
inline std::vector<LocationEntry> localize(const std::string& keyword,
                                           const RepoSummary& summary) {
    std::map<std::string, std::set<int>> by_file;
    for (const auto& [feature, value] : summary.entries) {
        if (feature.name() != keyword) continue;
        for (const SourceLoc& loc : value.locations) by_file[loc.file].insert(loc.first_line);
    }
    if (by_file.empty())
        return {LocationEntry{"", "(not found in current snapshot)"}};
    if (by_file.size() >= 3)
        return {LocationEntry{"Multiple Files", "Multiple Lines"}};
    std::vector<LocationEntry> out;
    for (const auto& [file, lines] : by_file)
        out.push_back(LocationEntry{
            file, lines.size() == 1 ? "Line " + std::to_string(*lines.begin())
                                    : std::string("Multiple Lines")});
    return out;
}

inline std::string render(const Explanation& e) {
    if (e.prediction == BuildStatus::Pass) return "Predicted build success.\n";
    std::string out = "Predicted build failure based on potential error locations:\n";
    for (const Finding& finding : e.findings) {
        if (finding.locations.empty()) {
            out += "(not found in current snapshot)\n";
        } else {
            for (const LocationEntry& loc : finding.locations) {
                if (loc.file.empty())
                    out += loc.desc;
                else
                    out += loc.file + ":" + loc.desc;
                out += '\n';
            }
        }
        out += "   " + finding.keyword + "\n";
    }
    return out;
}

inline nlohmann::json explanation_to_json(const Explanation& e) {
    nlohmann::json j;
    j["prediction"] = std::string(to_string(e.prediction));
    nlohmann::json findings = nlohmann::json::array();
    for (const Finding& f : e.findings) {
        nlohmann::json fj;
        fj["keyword"] = f.keyword;
        fj["locations"] = nlohmann::json::array();
        for (const LocationEntry& loc : f.locations)
            fj["locations"].push_back({{"file", loc.file}, {"desc", loc.desc}});
        findings.push_back(std::move(fj));
    }
    j["findings"] = std::move(findings);
    nlohmann::json sources = nlohmann::json::array();
    if (e.from_global) sources.push_back("global");
    if (e.from_local) sources.push_back("local");
    j["source_models"] = std::move(sources);
    return j;
}

}  // namespace cicheck
