#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "cicheck/extract.hpp"
#include "cicheck/pipeline.hpp"

namespace cicheck {

struct CorpusError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class RuleKind : std::uint8_t {
    VersionEquality,  // two keywords' constants must match
    VersionBound,     // keyword's constant must be >= min
    ForbiddenToken,   // presence of the keyword errors
    RenamePair        // using k1 after the cutover commit errors
};

enum class RuleScope : std::uint8_t { Global, Local };

struct RuleSpec {
    RuleKind kind = RuleKind::VersionBound;
    RuleScope scope = RuleScope::Global;
    std::string k1;
    std::string k2;           // VersionEquality / RenamePair
    std::string min_version;  // VersionBound
    int cutover = -1;         // RenamePair
    double weight = 1.0;

    std::string describe() const {
        switch (kind) {
            case RuleKind::VersionEquality: return "version_equality(" + k1 + "," + k2 + ")";
            case RuleKind::VersionBound: return "version_bound(" + k1 + ">=" + min_version + ")";
            case RuleKind::ForbiddenToken: return "forbidden_token(" + k1 + ")";
            case RuleKind::RenamePair: return "rename_pair(" + k1 + "->" + k2 + ")";
        }
        return "";
    }
};

struct CorpusSpec {
    int repo_count = 10;
    int commits_per_repo = 50;
    std::vector<RuleSpec> rules;
    double violation_rate = 0.2;
    double impure_error_rate = 0.05;
    std::uint64_t seed = 1;

    // Default mix: version rules carry the bulk and the rename rule stays
    // small. Forbidden-token rules are supported but not in the defaults: a
    // presence-only keyword tied to a 20% violation share sits near 5%
    // support and the 10% pruning threshold removes it before learning.
    static CorpusSpec defaults(int repo_count = 10, int commits_per_repo = 50) {
        CorpusSpec spec;
        spec.repo_count = repo_count;
        spec.commits_per_repo = commits_per_repo;
        RuleSpec bound;
        bound.kind = RuleKind::VersionBound;
        bound.k1 = "rack";
        bound.min_version = "2.0";
        bound.weight = 0.47;
        RuleSpec equality;
        equality.kind = RuleKind::VersionEquality;
        equality.k1 = "APP_VERSION";
        equality.k2 = "app_version";
        equality.weight = 0.47;
        RuleSpec rename;
        rename.kind = RuleKind::RenamePair;
        rename.scope = RuleScope::Local;
        rename.k1 = "tweet";
        rename.k2 = "sendTweet";
        // an early library upgrade keeps most of the history in the
        // post-rename regime the evaluation half lives in
        rename.cutover = std::min(std::max(1, commits_per_repo / 10), commits_per_repo - 1);
        rename.weight = 0.06;
        spec.rules = {bound, equality, rename};
        return spec;
    }

    void validate() const {
        if (repo_count < 1 || commits_per_repo < 1)
            throw CorpusError("repo_count and commits_per_repo must be positive");
        if (violation_rate < 0.0 || violation_rate > 1.0 || impure_error_rate < 0.0 ||
            impure_error_rate > 1.0)
            throw CorpusError("rates must lie in [0,1]");
        if (rules.empty()) throw CorpusError("at least one rule is required");
        std::set<std::string> keywords;
        for (const RuleSpec& r : rules) {
            if (r.k1.empty()) throw CorpusError("rule keyword must be non-empty");
            for (const std::string& kw : {r.k1, r.k2}) {
                if (kw.empty()) continue;
                if (!keywords.insert(kw).second)
                    throw CorpusError("contradictory rules: keyword \"" + kw +
                                      "\" appears in more than one rule");
            }
            switch (r.kind) {
                case RuleKind::VersionEquality:
                    if (r.k2.empty()) throw CorpusError("version_equality needs two keywords");
                    break;
                case RuleKind::VersionBound:
                    if (!parse_version_components(r.min_version))
                        throw CorpusError("version_bound needs a valid min version");
                    break;
                case RuleKind::ForbiddenToken:
                    break;
                case RuleKind::RenamePair:
                    if (r.k2.empty()) throw CorpusError("rename_pair needs two keywords");
                    if (r.cutover < 0 || r.cutover >= commits_per_repo)
                        throw CorpusError("rename_pair cutover must fall inside the history");
                    break;
            }
            if (r.weight <= 0.0) throw CorpusError("rule weight must be positive");
        }
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["repo_count"] = repo_count;
        j["commits_per_repo"] = commits_per_repo;
        j["violation_rate"] = violation_rate;
        j["impure_error_rate"] = impure_error_rate;
        j["seed"] = seed;
        nlohmann::json arr = nlohmann::json::array();
        for (const RuleSpec& r : rules) {
            nlohmann::json rj;
            switch (r.kind) {
                case RuleKind::VersionEquality:
                    rj["kind"] = "version_equality";
                    rj["k1"] = r.k1;
                    rj["k2"] = r.k2;
                    break;
                case RuleKind::VersionBound:
                    rj["kind"] = "version_bound";
                    rj["keyword"] = r.k1;
                    rj["min"] = r.min_version;
                    break;
                case RuleKind::ForbiddenToken:
                    rj["kind"] = "forbidden_token";
                    rj["keyword"] = r.k1;
                    break;
                case RuleKind::RenamePair:
                    rj["kind"] = "rename_pair";
                    rj["k1"] = r.k1;
                    rj["k2"] = r.k2;
                    rj["cutover"] = r.cutover;
                    break;
            }
            rj["scope"] = r.scope == RuleScope::Global ? "global" : "local";
            rj["weight"] = r.weight;
            arr.push_back(std::move(rj));
        }
        j["rules"] = std::move(arr);
        return j;
    }

    static CorpusSpec from_json(const nlohmann::json& j) {
        CorpusSpec spec;
        spec.repo_count = j.at("repo_count").get<int>();
        spec.commits_per_repo = j.at("commits_per_repo").get<int>();
        spec.violation_rate = j.at("violation_rate").get<double>();
        spec.impure_error_rate = j.at("impure_error_rate").get<double>();
        spec.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& rj : j.at("rules")) {
            RuleSpec r;
            std::string kind = rj.at("kind").get<std::string>();
            if (kind == "version_equality") {
                r.kind = RuleKind::VersionEquality;
                r.k1 = rj.at("k1").get<std::string>();
                r.k2 = rj.at("k2").get<std::string>();
            } else if (kind == "version_bound") {
                r.kind = RuleKind::VersionBound;
                r.k1 = rj.at("keyword").get<std::string>();
                r.min_version = rj.at("min").get<std::string>();
            } else if (kind == "forbidden_token") {
                r.kind = RuleKind::ForbiddenToken;
                r.k1 = rj.at("keyword").get<std::string>();
            } else if (kind == "rename_pair") {
                r.kind = RuleKind::RenamePair;
                r.k1 = rj.at("k1").get<std::string>();
                r.k2 = rj.at("k2").get<std::string>();
                r.cutover = rj.at("cutover").get<int>();
            } else {
                throw CorpusError("unknown rule kind: " + kind);
            }
            if (rj.contains("scope"))
                r.scope = rj.at("scope").get<std::string>() == "local" ? RuleScope::Local
                                                                       : RuleScope::Global;
            if (rj.contains("weight")) r.weight = rj.at("weight").get<double>();
            spec.rules.push_back(std::move(r));
        }
        spec.validate();
        return spec;
    }
};

struct GroundTruthEntry {
    int index = 0;
    std::string commit_id;
    bool impure = false;
    std::string rule;  // empty for impure errors
    std::vector<std::string> tokens;
    std::vector<SourceLoc> lines;
};

// splitmix64; owned so corpora are byte-identical across standard libraries
struct CorpusRng {
    std::uint64_t state;

    explicit CorpusRng(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    double unit() { return static_cast<double>(next() >> 11) / 9007199254740992.0; }
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }
    bool chance(double p) { return unit() < p; }
};

namespace corpus_detail {

struct RuleState {
    bool violating = false;
    std::string v1;  // bound: current value; equality: k1 value; rename: active call keyword
    std::string v2;  // equality: k2 value; rename: companion lib version
};

struct RepoState {
    std::vector<RuleState> rules;
    std::string noise_gem = "1.8";
    std::string noise_patch = "34";
    std::string noise_rvm = "2.1";
    std::string comment_word = "notes";
    int active_rule = -1;  // at most one violation at a time
};

inline const std::vector<std::string>& good_pool() {
    static const std::vector<std::string> pool{"2.0", "2.1", "2.2"};
    return pool;
}
inline const std::vector<std::string>& bad_pool() {
    static const std::vector<std::string> pool{"1.8", "1.9"};
    return pool;
}
inline const std::vector<std::string>& equality_pool() {
    static const std::vector<std::string> pool{"1.0", "2.0"};
    return pool;
}
inline const std::vector<std::string>& comment_pool() {
    static const std::vector<std::string> pool{"notes",  "cleanup", "refactor", "docs",
                                               "chore",  "tidy",    "polish",   "stabilize"};
    return pool;
}

inline std::string lib_keyword(const RuleSpec& rule) { return rule.k1 + "_lib"; }

inline RepoState initial_state(const CorpusSpec& spec) {
    RepoState st;
    for (const RuleSpec& rule : spec.rules) {
        RuleState rs;
        switch (rule.kind) {
            case RuleKind::VersionBound:
                rs.v1 = good_pool().front();
                break;
            case RuleKind::VersionEquality:
                rs.v1 = equality_pool().front();
                rs.v2 = equality_pool().front();
                break;
            case RuleKind::ForbiddenToken:
                break;
            case RuleKind::RenamePair:
                rs.v1 = rule.k1;   // pre-cutover code uses the old name
                rs.v2 = "1.0";
                break;
        }
        st.rules.push_back(std::move(rs));
    }
    return st;
}

inline std::map<std::string, std::string> render_files(const CorpusSpec& spec,
                                                       const RepoState& st) {
    std::map<std::string, std::string> files;

    std::string gemfile = "source 'https://rubygems.org'\n";
    gemfile += "gem 'rake', '10.4'\n";
    for (std::size_t r = 0; r < spec.rules.size(); ++r)
        if (spec.rules[r].kind == RuleKind::VersionBound)
            gemfile += "gem '" + spec.rules[r].k1 + "', '" + st.rules[r].v1 + "'\n";
    gemfile += "gem 'json', '" + st.noise_gem + "'\n";
    gemfile += "gem 'minitest', '5.8'\n";
    files["Gemfile"] = gemfile;

    std::string version_rb = "module AppVersion\n";
    for (std::size_t r = 0; r < spec.rules.size(); ++r)
        if (spec.rules[r].kind == RuleKind::VersionEquality)
            version_rb += "  " + spec.rules[r].k1 + " = '" + st.rules[r].v1 + "'\n";
    version_rb += "  MINOR = 4\n";
    version_rb += "  PATCH = " + st.noise_patch + "\n";
    version_rb += "end\n";
    files["lib/version.rb"] = version_rb;

    std::string lock = "GEM\n  remote: https://rubygems.org/\n  specs:\n";
    for (std::size_t r = 0; r < spec.rules.size(); ++r)
        if (spec.rules[r].kind == RuleKind::VersionEquality)
            lock += "    " + spec.rules[r].k2 + " (" + st.rules[r].v2 + ")\n";
    lock += "    concurrent-ruby (1.0)\n";
    files["Gemfile.lock"] = lock;

    std::string travis = "language: ruby\n";
    travis += "rvm: " + st.noise_rvm + "\n";
    travis += "script: bundle exec rake\n";
    for (std::size_t r = 0; r < spec.rules.size(); ++r)
        if (spec.rules[r].kind == RuleKind::ForbiddenToken && st.rules[r].violating)
            travis += spec.rules[r].k1 + ": 1\n";
    travis += "cache: bundler\n";
    files[".travis.yml"] = travis;

    std::string app = "require 'net/http'\n";
    for (std::size_t r = 0; r < spec.rules.size(); ++r)
        if (spec.rules[r].kind == RuleKind::RenamePair) {
            app += "import " + lib_keyword(spec.rules[r]) + " V" + st.rules[r].v2 + "\n";
            app += "import RndMsg V2.0\n";
            app += "msg = RndMsg()\n";
            app += st.rules[r].v1 + "(msg)\n";
        }
    app += "worker_count = 4\n";
    app += "# " + st.comment_word + " build notes\n";
    files["lib/app.rb"] = app;

    return files;
}

// locations of a keyword's line(s) in the rendered checkout
inline std::vector<SourceLoc> find_keyword_lines(
    const std::map<std::string, std::string>& files, const std::string& keyword) {
    std::vector<SourceLoc> out;
    for (const auto& [path, content] : files) {
        std::vector<std::string> lines = split_lines(content);
        for (std::size_t i = 0; i < lines.size(); ++i) {
            for (const std::string& tok : tokenize(lines[i]))
                if (tok == keyword) {
                    out.push_back(SourceLoc{path, static_cast<int>(i) + 1,
                                            static_cast<int>(i) + 1});
                    break;
                }
        }
    }
    return out;
}

}  // namespace corpus_detail

struct GeneratedRepo {
    std::string id;
    std::filesystem::path dir;
    BuildManifest manifest;
    std::vector<GroundTruthEntry> ground_truth;
};

struct GeneratedCorpus {
    std::filesystem::path root;
    std::vector<GeneratedRepo> repos;
};

// Deterministic corpus generation: every commit mutates at most one template
// slot; a commit errors exactly when it violates a planted rule or the impure
// coin fires (impure builds change nothing, like a rebuild after an outage).
inline GeneratedCorpus generate(const CorpusSpec& spec, const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;
    using namespace corpus_detail;
    spec.validate();

    GeneratedCorpus corpus;
    corpus.root = out_dir;
    fs::create_directories(out_dir);
    {
        std::ofstream spec_out(out_dir / "corpus_spec.json");
        spec_out << spec.to_json().dump(2) << "\n";
    }

    for (int repo_idx = 0; repo_idx < spec.repo_count; ++repo_idx) {
        CorpusRng rng(spec.seed * 0x2545f4914f6cdd1dull + 0x9e3779b9ull +
                      static_cast<std::uint64_t>(repo_idx) * 0xd1342543de82ef95ull);
        char id_buf[16];
        std::snprintf(id_buf, sizeof id_buf, "repo%02d", repo_idx);
        GeneratedRepo repo;
        repo.id = id_buf;
        repo.dir = out_dir / repo.id;
        fs::create_directories(repo.dir / "commits");

        RepoState st = initial_state(spec);
        // stationary violation fraction ~= violation_rate under fix prob 0.75
        const double p_fix = 0.75;
        const double p_enter = spec.violation_rate >= 1.0
                                   ? 1.0
                                   : p_fix * spec.violation_rate / (1.0 - spec.violation_rate);

        auto apply_violation = [&](std::size_t r) {
            RuleState& rs = st.rules[r];
            const RuleSpec& rule = spec.rules[r];
            switch (rule.kind) {
                case RuleKind::VersionBound:
                    rs.v1 = bad_pool()[rng.below(bad_pool().size())];
                    break;
                case RuleKind::VersionEquality: {
                    // the primary version runs ahead or the lockfile
                    // regresses; either way the pair lands in the same
                    // (ahead, stale) state
                    const auto& pool = equality_pool();
                    if (rs.v1 == pool[0])
                        rs.v1 = pool[1];
                    else
                        rs.v2 = pool[0];
                    break;
                }
                case RuleKind::ForbiddenToken:
                    break;
                case RuleKind::RenamePair:
                    rs.v1 = rule.k1;
                    break;
            }
            rs.violating = true;
            st.active_rule = static_cast<int>(r);
        };
        auto apply_fix = [&](std::size_t r) {
            RuleState& rs = st.rules[r];
            const RuleSpec& rule = spec.rules[r];
            switch (rule.kind) {
                case RuleKind::VersionBound:
                    rs.v1 = good_pool()[rng.below(good_pool().size())];
                    break;
                case RuleKind::VersionEquality:
                    rs.v2 = rs.v1;
                    break;
                case RuleKind::ForbiddenToken:
                    break;
                case RuleKind::RenamePair:
                    rs.v1 = rule.k2;
                    break;
            }
            rs.violating = false;
            st.active_rule = -1;
        };
        // rule-line edits are only safe while no violation is active
        auto benign_edit = [&](bool may_touch_rules) {
            switch (rng.below(may_touch_rules ? 6 : 4)) {
                case 0: st.noise_gem = st.noise_gem == "1.8" ? "1.9" : "1.8"; break;
                case 1:
                    st.noise_patch = st.noise_patch == "34"   ? "35"
                                     : st.noise_patch == "35" ? "36"
                                                              : "34";
                    break;
                case 2: st.noise_rvm = st.noise_rvm == "2.1" ? "2.2" : "2.1"; break;
                case 3:
                    st.comment_word = comment_pool()[rng.below(comment_pool().size())];
                    break;
                case 4:
                    for (std::size_t r = 0; r < spec.rules.size(); ++r)
                        if (spec.rules[r].kind == RuleKind::VersionBound)
                            st.rules[r].v1 = good_pool()[rng.below(good_pool().size())];
                    break;
                case 5:
                    // synchronized equality bump keeps the pair legal
                    for (std::size_t r = 0; r < spec.rules.size(); ++r)
                        if (spec.rules[r].kind == RuleKind::VersionEquality) {
                            const auto& pool = equality_pool();
                            st.rules[r].v1 = st.rules[r].v1 == pool[0] ? pool[1] : pool[0];
                            st.rules[r].v2 = st.rules[r].v1;
                        }
                    break;
            }
        };
        auto rename_eligible = [&](std::size_t r, int i) {
            const RuleSpec& rule = spec.rules[r];
            return rule.kind != RuleKind::RenamePair ||
                   (i > rule.cutover && st.rules[r].v1 == rule.k2);
        };

        // scripted opening: young repositories break and fix each rule once
        // (equality via both edit paths), starting right after the rename
        // cutover so early training windows see every failure mode in the
        // regime the rest of the history lives in
        std::set<int> cutovers;
        for (const RuleSpec& rule : spec.rules)
            if (rule.kind == RuleKind::RenamePair) cutovers.insert(rule.cutover);
        std::map<int, std::pair<std::size_t, bool>> script;  // index -> (rule, violate)
        if (spec.violation_rate > 0.0) {
            const std::set<int>& blocked = cutovers;
            int cursor = 1;
            for (std::size_t r = 0; r < spec.rules.size(); ++r) {
                if (spec.rules[r].kind != RuleKind::RenamePair) continue;
                int c = spec.rules[r].cutover;
                if (c + 2 < spec.commits_per_repo) {
                    script[c + 1] = {r, true};
                    script[c + 2] = {r, false};
                    cursor = std::max(cursor, c + 3);
                }
            }
            auto reserve = [&](std::size_t r, bool violate) {
                while (script.contains(cursor) || blocked.contains(cursor)) ++cursor;
                if (cursor < spec.commits_per_repo) script[cursor++] = {r, violate};
            };
            for (std::size_t r = 0; r < spec.rules.size(); ++r) {
                const RuleSpec& rule = spec.rules[r];
                if (rule.kind == RuleKind::RenamePair) continue;
                int episodes = rule.kind == RuleKind::VersionEquality ? 2 : 1;
                for (int e = 0; e < episodes; ++e) {
                    reserve(r, true);
                    reserve(r, false);
                }
            }
        }

        for (int i = 0; i < spec.commits_per_repo; ++i) {
            bool impure = false;
            if (i > 0) {
                // one edit per commit: fix, violate, upgrade, or benign churn
                auto scripted = script.find(i);
                if (scripted != script.end()) {
                    auto [r, violate] = scripted->second;
                    if (violate && st.active_rule < 0 && rename_eligible(r, i))
                        apply_violation(r);
                    else if (!violate && st.active_rule == static_cast<int>(r))
                        apply_fix(r);
                    else
                        benign_edit(st.active_rule < 0);
                } else if (st.active_rule >= 0) {
                    if (rng.chance(p_fix))
                        apply_fix(static_cast<std::size_t>(st.active_rule));
                    else
                        st.comment_word = comment_pool()[rng.below(comment_pool().size())];
                } else if (!cutovers.contains(i) && rng.chance(spec.impure_error_rate)) {
                    impure = true;  // no edit at all (a rebuild that failed)
                } else if (rng.chance(p_enter)) {
                    // weighted pick among currently violable rules
                    double total = 0.0;
                    std::vector<std::pair<std::size_t, double>> eligible;
                    for (std::size_t r = 0; r < spec.rules.size(); ++r) {
                        if (!rename_eligible(r, i)) continue;
                        eligible.emplace_back(r, spec.rules[r].weight);
                        total += spec.rules[r].weight;
                    }
                    if (!eligible.empty()) {
                        double pick = rng.unit() * total;
                        std::size_t chosen = eligible.back().first;
                        for (auto& [r, w] : eligible) {
                            if (pick < w) {
                                chosen = r;
                                break;
                            }
                            pick -= w;
                        }
                        apply_violation(chosen);
                    }
                } else {
                    benign_edit(true);
                }
            }
            // scheduled library upgrade at the cutover commit
            for (std::size_t r = 0; r < spec.rules.size(); ++r)
                if (spec.rules[r].kind == RuleKind::RenamePair && i == spec.rules[r].cutover &&
                    st.active_rule != static_cast<int>(r)) {
                    st.rules[r].v1 = spec.rules[r].k2;
                    st.rules[r].v2 = "2.0";
                }

            std::map<std::string, std::string> files = render_files(spec, st);

            char commit_buf[20];
            std::snprintf(commit_buf, sizeof commit_buf, "%010llx",
                          static_cast<unsigned long long>(rng.next() & 0xffffffffffull));
            std::string commit_id = commit_buf;

            RawStatus status;
            if (st.active_rule >= 0 || impure)
                status = RawStatus::Err;
            else
                status = rng.chance(0.08) ? RawStatus::Fail : RawStatus::Pass;

            if (status == RawStatus::Err) {
                GroundTruthEntry gt;
                gt.index = i;
                gt.commit_id = commit_id;
                if (impure) {
                    gt.impure = true;
                } else {
                    const RuleSpec& rule = spec.rules[static_cast<std::size_t>(st.active_rule)];
                    gt.rule = rule.describe();
                    gt.tokens.push_back(rule.k1);
                    if (!rule.k2.empty()) gt.tokens.push_back(rule.k2);
                    if (rule.kind == RuleKind::RenamePair)
                        gt.tokens.push_back(corpus_detail::lib_keyword(rule));
                    for (const std::string& tok : gt.tokens)
                        for (const SourceLoc& loc : find_keyword_lines(files, tok))
                            gt.lines.push_back(loc);
                }
                repo.ground_truth.push_back(std::move(gt));
            }

            fs::path commit_path = repo.dir / "commits" / commit_id;
            for (const auto& [rel, content] : files) {
                fs::path file_path = commit_path / rel;
                fs::create_directories(file_path.parent_path());
                std::ofstream out(file_path, std::ios::binary);
                out << content;
            }

            ManifestRow row;
            row.build_number = i + 1;
            row.commit_id = commit_id;
            row.status = status;
            repo.manifest.rows.push_back(std::move(row));
        }

        {
            std::ofstream m(repo.dir / "manifest.csv");
            m << "build_number,commit_id,raw_status\n";
            for (const ManifestRow& row : repo.manifest.rows)
                m << row.build_number << "," << row.commit_id << "," << to_string(row.status)
                  << "\n";
        }
        {
            nlohmann::json gt = nlohmann::json::array();
            for (const GroundTruthEntry& e : repo.ground_truth) {
                nlohmann::json ej;
                ej["index"] = e.index;
                ej["commit_id"] = e.commit_id;
                ej["impure"] = e.impure;
                ej["rule"] = e.rule;
                ej["tokens"] = e.tokens;
                nlohmann::json lines = nlohmann::json::array();
                for (const SourceLoc& loc : e.lines)
                    lines.push_back({{"file", loc.file}, {"line", loc.first_line}});
                ej["lines"] = std::move(lines);
                gt.push_back(std::move(ej));
            }
            std::ofstream g(repo.dir / "ground_truth.json");
            g << gt.dump(2) << "\n";
        }
        corpus.repos.push_back(std::move(repo));
    }
    return corpus;
}

inline std::vector<GroundTruthEntry> load_ground_truth(const std::filesystem::path& repo_dir) {
    std::ifstream in(repo_dir / "ground_truth.json");
    if (!in) throw CorpusError("cannot read ground truth in " + repo_dir.string());
    nlohmann::json j;
    in >> j;
    std::vector<GroundTruthEntry> out;
    for (const auto& ej : j) {
        GroundTruthEntry e;
        e.index = ej.at("index").get<int>();
        e.commit_id = ej.at("commit_id").get<std::string>();
        e.impure = ej.at("impure").get<bool>();
        e.rule = ej.at("rule").get<std::string>();
        for (const auto& t : ej.at("tokens")) e.tokens.push_back(t.get<std::string>());
        for (const auto& lj : ej.at("lines"))
            e.lines.push_back(SourceLoc{lj.at("file").get<std::string>(),
                                        lj.at("line").get<int>(), lj.at("line").get<int>()});
        out.push_back(std::move(e));
    }
    return out;
}

// keyword-level containment: the explanation keyword equals the ground-truth
// token or contains it as a '/'-separated part (diff feature names)
inline bool keyword_matches_token(const std::string& keyword, const std::string& token) {
    if (keyword == token) return true;
    std::size_t start = 0;
    while (start <= keyword.size()) {
        std::size_t slash = keyword.find('/', start);
        std::string part = keyword.substr(start, slash == std::string::npos ? std::string::npos
                                                                            : slash - start);
        if (part == token) return true;
        if (slash == std::string::npos) break;
        start = slash + 1;
    }
    return false;
}

// Fraction of true-positive error predictions whose explanation names at
// least one ground-truth responsible token.
inline double score_explanations(const std::vector<Outcome>& outcomes,
                                 const std::vector<GroundTruthEntry>& ground_truth) {
    std::map<int, const GroundTruthEntry*> by_index;
    for (const GroundTruthEntry& e : ground_truth) by_index[e.index] = &e;

    std::size_t true_positives = 0, matched = 0;
    for (const Outcome& o : outcomes) {
        if (o.predicted != BuildStatus::Err || o.actual != BuildStatus::Err) continue;
        ++true_positives;
        auto it = by_index.find(o.index);
        if (it == by_index.end()) continue;
        bool hit = false;
        for (const Finding& f : o.explanation.findings) {
            for (const std::string& tok : it->second->tokens)
                if (keyword_matches_token(f.keyword, tok)) {
                    hit = true;
                    break;
                }
            if (hit) break;
        }
        if (hit) ++matched;
    }
    if (true_positives == 0) return 1.0;
    return static_cast<double>(matched) / static_cast<double>(true_positives);
}

}  // namespace cicheck
