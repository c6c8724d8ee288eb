#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cicheck/dtree.hpp"
#include "cicheck/lines.hpp"
#include "cicheck/model.hpp"
#include "cicheck/snapshot.hpp"

namespace cicheck {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Everything a run needs to be reproducible. Serializes as a plain key/value
// document; parse(to_text()) is the identity.
struct RunConfig {
    FilterPolicy filter_policy = FilterPolicy::defaults();
    double support_threshold_global = 0.10;
    double support_threshold_local = 0.10;
    double target_error_rate = 0.30;
    TreeParams tree_params;
    int migar_budget = 10;
    CombinePolicy combine_policy = CombinePolicy::Conservative;
    std::uint64_t seed = 0;

    bool operator==(const RunConfig&) const = default;

    void validate() const {
        auto check_threshold = [](double v, const char* name) {
            if (!(v > 0.0 && v <= 1.0))
                throw ConfigError(std::string(name) + " must be in (0,1]");
        };
        check_threshold(support_threshold_global, "support_threshold_global");
        check_threshold(support_threshold_local, "support_threshold_local");
        if (!(target_error_rate > 0.0 && target_error_rate < 1.0))
            throw ConfigError("target_error_rate must be in (0,1)");
        if (filter_policy.empty()) throw ConfigError("filter_policy must not be empty");
        if (tree_params.max_depth < 1) throw ConfigError("tree_max_depth must be >= 1");
        if (tree_params.min_leaf < 1) throw ConfigError("tree_min_leaf must be >= 1");
        if (migar_budget < 0) throw ConfigError("migar_budget must be >= 0");
    }

    std::string to_text() const {
        std::ostringstream out;
        out << "# cicheck run configuration\n";
        out << "filter_policy = ";
        for (std::size_t i = 0; i < filter_policy.patterns.size(); ++i)
            out << (i ? ", " : "") << filter_policy.patterns[i];
        out << "\n";
        out << "support_threshold_global = " << support_threshold_global << "\n";
        out << "support_threshold_local = " << support_threshold_local << "\n";
        out << "target_error_rate = " << target_error_rate << "\n";
        out << "tree_max_depth = " << tree_params.max_depth << "\n";
        out << "tree_min_leaf = " << tree_params.min_leaf << "\n";
        out << "migar_budget = " << migar_budget << "\n";
        out << "combine_policy = " << to_string(combine_policy) << "\n";
        out << "seed = " << seed << "\n";
        return out.str();
    }

    static RunConfig parse(const std::string& text) {
        RunConfig cfg;
        for (const std::string& raw : split_lines(text)) {
            std::string_view line = strip(raw);
            if (line.empty() || line.front() == '#') continue;
            auto eq = line.find('=');
            if (eq == std::string_view::npos)
                throw ConfigError("expected key = value, got: " + std::string(line));
            std::string key(strip(line.substr(0, eq)));
            std::string value(strip(line.substr(eq + 1)));
            try {
                if (key == "filter_policy") {
                    cfg.filter_policy.patterns.clear();
                    std::string cur;
                    for (char c : value + ",") {
                        if (c == ',') {
                            std::string_view p = strip(cur);
                            if (!p.empty()) cfg.filter_policy.patterns.emplace_back(p);
                            cur.clear();
                        } else {
                            cur += c;
                        }
                    }
                } else if (key == "support_threshold_global") {
                    cfg.support_threshold_global = std::stod(value);
                } else if (key == "support_threshold_local") {
                    cfg.support_threshold_local = std::stod(value);
                } else if (key == "target_error_rate") {
                    cfg.target_error_rate = std::stod(value);
                } else if (key == "tree_max_depth") {
                    cfg.tree_params.max_depth = std::stoi(value);
                } else if (key == "tree_min_leaf") {
                    cfg.tree_params.min_leaf = std::stoi(value);
                } else if (key == "migar_budget") {
                    cfg.migar_budget = std::stoi(value);
                } else if (key == "combine_policy") {
                    cfg.combine_policy = parse_combine_policy(value);
                } else if (key == "seed") {
                    cfg.seed = std::stoull(value);
                } else {
                    throw ConfigError("unknown configuration key: " + key);
                }
            } catch (const ConfigError&) {
                throw;
            } catch (const std::exception& e) {
                throw ConfigError("bad value for " + key + ": " + e.what());
            }
        }
        cfg.validate();
        return cfg;
    }

    static RunConfig load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path.string());
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse(buf.str());
    }

    // stable digest of the canonical rendering
    std::string digest() const {
        std::uint64_t h = 1469598103934665603ull;
        for (unsigned char c : to_text()) {
            h ^= c;
            h *= 1099511628211ull;
        }
        char out[17];
        std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
        return out;
    }
};

}  // namespace cicheck
