#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cicheck/lines.hpp"
#include "cicheck/status.hpp"

namespace cicheck {

struct ManifestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ManifestRow {
    std::int64_t build_number = 0;
    std::string commit_id;
    RawStatus status = RawStatus::Pass;
    std::int64_t timestamp = 0;  // optional; 0 when absent
};

struct BuildManifest {
    std::vector<ManifestRow> rows;
};

namespace detail {

inline std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(std::string(strip(cur)));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(std::string(strip(cur)));
    return fields;
}

inline ManifestRow manifest_row_from_json(const nlohmann::json& j) {
    ManifestRow row;
    row.build_number = j.at("build_number").get<std::int64_t>();
    row.commit_id = j.at("commit_id").get<std::string>();
    row.status = parse_raw_status(j.at("raw_status").get<std::string>());
    if (j.contains("timestamp")) row.timestamp = j.at("timestamp").get<std::int64_t>();
    return row;
}

}  // namespace detail

// CSV rows are "build_number,commit_id,raw_status[,timestamp]" with an
// optional header; JSON lines carry the same fields as an object per line.
inline BuildManifest parse_manifest(const std::string& text) {
    BuildManifest manifest;
    std::vector<std::string> lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string_view line = strip(lines[i]);
        if (line.empty() || line.front() == '#') continue;
        try {
            if (line.front() == '{') {
                manifest.rows.push_back(
                    detail::manifest_row_from_json(nlohmann::json::parse(line)));
                continue;
            }
            auto fields = detail::split_csv_row(std::string(line));
            if (i == 0 && !fields.empty() && fields[0] == "build_number") continue;
            if (fields.size() < 3)
                throw ManifestError("expected build_number,commit_id,raw_status");
            ManifestRow row;
            row.build_number = std::stoll(fields[0]);
            row.commit_id = fields[1];
            if (row.commit_id.empty()) throw ManifestError("empty commit id");
            row.status = parse_raw_status(fields[2]);
            if (fields.size() > 3 && !fields[3].empty()) row.timestamp = std::stoll(fields[3]);
            manifest.rows.push_back(std::move(row));
        } catch (const ManifestError&) {
            throw;
        } catch (const std::exception& e) {
            throw ManifestError("manifest line " + std::to_string(i + 1) +
                                ": " + e.what());
        }
    }
    return manifest;
}

inline BuildManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ManifestError("cannot open manifest: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_manifest(buf.str());
}

}  // namespace cicheck
