#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include <json.hpp>

#include "cicheck/config.hpp"
#include "cicheck/model.hpp"

namespace cicheck {

struct BundleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Persisted training result: the global model plus one local model per
// training repository, tied to the configuration that produced them.
struct ModelBundle {
    static constexpr int kFormatVersion = 1;

    RunConfig config;
    Model global;
    std::map<std::string, Model> locals;  // repo id -> local model

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["format_version"] = kFormatVersion;
        j["config"] = config.to_text();
        j["config_digest"] = config.digest();
        j["global"] = global.to_json();
        nlohmann::json locals_json = nlohmann::json::object();
        for (const auto& [repo_id, model] : locals) locals_json[repo_id] = model.to_json();
        j["locals"] = std::move(locals_json);
        return j;
    }

    static ModelBundle from_json(const nlohmann::json& j) {
        try {
            if (j.at("format_version").get<int>() != kFormatVersion)
                throw BundleError("unsupported bundle format version");
            ModelBundle b;
            b.config = RunConfig::parse(j.at("config").get<std::string>());
            if (j.at("config_digest").get<std::string>() != b.config.digest())
                throw BundleError("bundle config digest mismatch");
            b.global = Model::from_json(j.at("global"));
            for (const auto& [repo_id, mj] : j.at("locals").items())
                b.locals.emplace(repo_id, Model::from_json(mj));
            return b;
        } catch (const BundleError&) {
            throw;
        } catch (const std::exception& e) {
            throw BundleError(std::string("malformed bundle: ") + e.what());
        }
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw BundleError("cannot write bundle: " + path.string());
        out << to_json().dump(2) << "\n";
    }

    static ModelBundle load(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw BundleError("cannot read bundle: " + path.string());
        nlohmann::json j;
        try {
            in >> j;
        } catch (const std::exception& e) {
            throw BundleError(std::string("bundle parse error: ") + e.what());
        }
        return from_json(j);
    }
};

}  // namespace cicheck
