// cicheck: learn CI-configuration correctness models from labeled commit
// histories, predict whether a new commit will break the build, and point at
// the suspect keywords and file locations.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cicheck/bundle.hpp"
#include "cicheck/config.hpp"
#include "cicheck/corpus.hpp"
#include "cicheck/ingest.hpp"
#include "cicheck/pipeline.hpp"
#include "cicheck/report.hpp"

namespace fs = std::filesystem;
using namespace cicheck;

namespace {

// exit codes: 0 = ok / pass prediction, 10 = err prediction,
// 64 = usage error, 2 = data error
constexpr int kExitPass = 0;
constexpr int kExitErrPrediction = 10;
constexpr int kExitUsage = 64;
constexpr int kExitData = 2;

fs::path find_manifest(const fs::path& repo_dir) {
    for (const char* name : {"manifest.csv", "manifest.jsonl", "manifest.json"}) {
        if (fs::exists(repo_dir / name)) return repo_dir / name;
    }
    throw ManifestError("no manifest.csv/.jsonl/.json found in " + repo_dir.string());
}

PreparedRepo load_repo(const fs::path& repo_dir, const RunConfig& cfg,
                       std::vector<std::string>* warnings) {
    BuildManifest manifest = load_manifest(find_manifest(repo_dir));
    auto commits = linearize_history(repo_dir, manifest, cfg.filter_policy, warnings);
    return PreparedRepo::prepare(repo_dir.filename().string(), std::move(commits));
}

std::vector<fs::path> corpus_repo_dirs(const fs::path& corpus_dir) {
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(corpus_dir)) {
        if (!entry.is_directory()) continue;
        bool has_manifest = false;
        for (const char* name : {"manifest.csv", "manifest.jsonl", "manifest.json"})
            if (fs::exists(entry.path() / name)) has_manifest = true;
        if (has_manifest) dirs.push_back(entry.path());
    }
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty())
        throw IngestError("no repositories with manifests under " + corpus_dir.string());
    return dirs;
}

RunConfig load_config(const std::string& config_path, std::optional<std::uint64_t> seed) {
    RunConfig cfg = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
    if (seed) cfg.seed = *seed;
    cfg.validate();
    return cfg;
}

int cmd_train(const std::vector<std::string>& repo_paths, const std::string& config_path,
              std::optional<std::uint64_t> seed, const std::string& out_path,
              const std::string& dump_dir) {
    RunConfig cfg = load_config(config_path, seed);
    std::vector<std::string> warnings;
    std::vector<PreparedRepo> repos;
    for (const std::string& p : repo_paths) repos.push_back(load_repo(p, cfg, &warnings));
    for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";

    std::vector<const PreparedRepo*> refs;
    for (const PreparedRepo& r : repos) refs.push_back(&r);
    ModelBundle bundle = train_bundle(refs, cfg);
    bundle.save(out_path);
    std::cout << "trained global model (" << bundle.global.extractors.size()
              << " features) and " << bundle.locals.size() << " local model(s); wrote "
              << out_path << "\n";

    if (!dump_dir.empty()) {
        fs::create_directories(dump_dir);
        for (const PreparedRepo& r : repos) {
            std::vector<LabeledSummary> seq;
            for (std::size_t i = 0; i < r.commits.size(); ++i)
                seq.push_back(LabeledSummary::make(
                    r.commits[i].index, summarize(r.indexes[i], bundle.global.extractors),
                    r.commits[i].status));
            auto abr = abr_relabel(seq);
            auto sampled = undersample(abr, cfg.target_error_rate);
            std::ofstream out(fs::path(dump_dir) / (r.id + ".tsv"));
            out << dataset_debug_tsv(abr, sampled);
        }
        std::cout << "wrote dataset dumps to " << dump_dir << "\n";
    }
    return kExitPass;
}

int cmd_predict(const std::string& bundle_path, const std::string& snapshot_path,
                const std::string& repo_id, bool as_json) {
    ModelBundle bundle = ModelBundle::load(bundle_path);

    const Model* local = nullptr;
    if (!repo_id.empty()) {
        auto it = bundle.locals.find(repo_id);
        if (it == bundle.locals.end())
            throw BundleError("bundle has no local model for repository \"" + repo_id + "\"");
        local = &it->second;
    } else if (bundle.locals.size() == 1) {
        local = &bundle.locals.begin()->second;
    } else {
        std::cerr << "error: bundle holds " << bundle.locals.size()
                  << " local models; pick one with --repo\n";
        return kExitUsage;
    }

    std::vector<std::string> warnings;
    auto checkout = read_checkout_dir(snapshot_path, &warnings);
    RepoSnapshot snap = filter_repository(checkout, bundle.config.filter_policy, &warnings);
    SnapshotIndex index = SnapshotIndex::build(snap);

    CombinedModel cm{bundle.global, *local, bundle.config.combine_policy};
    RepoSummary summary_global = summarize(index, cm.global.extractors);
    RepoSummary summary_local = summarize(index, cm.local.extractors);
    auto [status, explanation] = combine_predict(cm, summary_global, summary_local);

    if (as_json)
        std::cout << explanation_to_json(explanation).dump(2) << "\n";
    else
        std::cout << render(explanation);
    return status == BuildStatus::Err ? kExitErrPrediction : kExitPass;
}

int cmd_evaluate(const std::string& corpus_path, const std::string& config_path,
                 std::optional<std::uint64_t> seed, bool timing,
                 const std::string& json_out) {
    RunConfig cfg = load_config(config_path, seed);
    std::vector<PreparedRepo> repos;
    for (const fs::path& dir : corpus_repo_dirs(corpus_path))
        repos.push_back(load_repo(dir, cfg, nullptr));

    std::vector<MetricsReport> reports;
    for (std::size_t i = 0; i < repos.size(); ++i) {
        std::vector<const PreparedRepo*> aux;
        for (std::size_t j = 0; j < repos.size(); ++j)
            if (j != i) aux.push_back(&repos[j]);
        reports.push_back(evaluate_rolling(repos[i], aux, cfg));
    }
    std::cout << metrics_table(reports);

    if (!json_out.empty()) {
        nlohmann::json j = nlohmann::json::array();
        for (const MetricsReport& r : reports) j.push_back(r.to_json());
        std::ofstream out(json_out);
        out << j.dump(2) << "\n";
        std::cout << "wrote metrics to " << json_out << "\n";
    }

    if (timing) {
        std::cout << "\nTraining time by corpus size\n";
        std::cout << "repos  commits  seconds\n";
        std::vector<std::size_t> repo_counts{1};
        if (repos.size() >= 5) repo_counts.push_back(5);
        if (repos.size() >= 10) repo_counts.push_back(10);
        if (repos.size() > 1 && repos.size() != 5 && repos.size() != 10)
            repo_counts.push_back(repos.size());
        for (std::size_t rc : repo_counts) {
            std::vector<const PreparedRepo*> subset;
            for (std::size_t i = 0; i < rc; ++i) subset.push_back(&repos[i]);
            TrainTiming t = time_training(subset, cfg);
            char line[64];
            std::snprintf(line, sizeof line, "%5zu  %7zu  %7.3f\n", t.repo_count,
                          t.total_commits, t.seconds);
            std::cout << line;
        }
    }
    return kExitPass;
}

int cmd_gen_corpus(const std::string& spec_path, const std::string& out_dir, int repos,
                   int commits, double violation_rate, double impure_rate,
                   std::optional<std::uint64_t> seed) {
    CorpusSpec spec;
    if (!spec_path.empty()) {
        std::ifstream in(spec_path);
        if (!in) throw CorpusError("cannot open corpus spec: " + spec_path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const std::exception& e) {
            throw CorpusError(std::string("corpus spec parse error: ") + e.what());
        }
        spec = CorpusSpec::from_json(j);
    } else {
        spec = CorpusSpec::defaults(repos, commits);
        spec.violation_rate = violation_rate;
        spec.impure_error_rate = impure_rate;
    }
    if (seed) spec.seed = *seed;
    spec.validate();
    GeneratedCorpus corpus = generate(spec, out_dir);
    std::size_t err_total = 0;
    for (const GeneratedRepo& r : corpus.repos) err_total += r.ground_truth.size();
    std::cout << "generated " << corpus.repos.size() << " repositories x "
              << spec.commits_per_repo << " commits (" << err_total
              << " erroring) under " << out_dir << "\n";
    return kExitPass;
}

int cmd_inspect(const std::string& bundle_path) {
    ModelBundle bundle = ModelBundle::load(bundle_path);
    std::cout << "bundle format " << ModelBundle::kFormatVersion << ", config digest "
              << bundle.config.digest() << "\n\n";
    std::cout << "global model (" << bundle.global.extractors.size() << " features, digest "
              << bundle.global.digest << ")\n";
    std::cout << bundle.global.tree.dump();
    for (const auto& [repo_id, model] : bundle.locals) {
        std::cout << "\nlocal model for " << repo_id << " (" << model.extractors.size()
                  << " features, digest " << model.digest << ")\n";
        std::cout << model.tree.dump();
    }
    return kExitPass;
}

int cmd_config(const std::string& check_path) {
    if (check_path.empty()) {
        std::cout << RunConfig{}.to_text();
        return kExitPass;
    }
    RunConfig cfg = RunConfig::load(check_path);
    std::cout << cfg.to_text();
    return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cicheck: learned static checking of CI configurations"};
    app.require_subcommand(1);
    app.fallthrough();  // --seed may follow the subcommand

    std::optional<std::uint64_t> seed;
    app.add_option("--seed", seed, "override the configured random seed");

    // train
    auto* train = app.add_subcommand("train", "learn a model bundle from repositories");
    std::vector<std::string> train_repos;
    std::string train_config, train_out = "bundle.json", train_dump;
    train->add_option("repos", train_repos, "repository directories")->required();
    train->add_option("--config", train_config, "run configuration file");
    train->add_option("--out", train_out, "output bundle path");
    train->add_option("--dump-dataset", train_dump,
                      "write per-repo ABR/undersampling TSV dumps to this directory");

    // predict
    auto* predict = app.add_subcommand("predict", "predict the build status of a snapshot");
    std::string predict_bundle, predict_snapshot, predict_repo;
    bool predict_json = false;
    predict->add_option("--bundle", predict_bundle, "model bundle")->required();
    predict->add_option("snapshot", predict_snapshot, "commit checkout directory")->required();
    predict->add_option("--repo", predict_repo, "local model to use");
    predict->add_flag("--json", predict_json, "emit the report as JSON");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "rolling-retrain evaluation over a corpus");
    std::string eval_corpus, eval_config, eval_json;
    bool eval_timing = false;
    evaluate->add_option("corpus", eval_corpus, "corpus directory")->required();
    evaluate->add_option("--config", eval_config, "run configuration file");
    evaluate->add_option("--json", eval_json, "write metrics JSON to this path");
    evaluate->add_flag("--timing", eval_timing, "measure training time per corpus size");

    // gen-corpus
    auto* gen = app.add_subcommand("gen-corpus", "generate a synthetic corpus");
    std::string gen_spec, gen_out = "corpus";
    int gen_repos = 10, gen_commits = 50;
    double gen_violation = 0.2, gen_impure = 0.05;
    gen->add_option("--spec", gen_spec, "corpus spec JSON (overrides the knobs below)");
    gen->add_option("--out", gen_out, "output directory");
    gen->add_option("--repos", gen_repos, "repository count");
    gen->add_option("--commits", gen_commits, "commits per repository");
    gen->add_option("--violation-rate", gen_violation, "rule violation rate");
    gen->add_option("--impure-rate", gen_impure, "impure (unexplainable) error rate");

    // inspect
    auto* inspect = app.add_subcommand("inspect", "dump the decision trees in a bundle");
    std::string inspect_bundle;
    inspect->add_option("--bundle", inspect_bundle, "model bundle")->required();

    // config
    auto* config = app.add_subcommand("config", "print the default or a checked configuration");
    std::string config_check;
    bool config_defaults = false;
    config->add_flag("--defaults", config_defaults, "print built-in defaults");
    config->add_option("--check", config_check, "parse and echo this configuration file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (train->parsed())
            return cmd_train(train_repos, train_config, seed, train_out, train_dump);
        if (predict->parsed())
            return cmd_predict(predict_bundle, predict_snapshot, predict_repo, predict_json);
        if (evaluate->parsed())
            return cmd_evaluate(eval_corpus, eval_config, seed, eval_timing, eval_json);
        if (gen->parsed())
            return cmd_gen_corpus(gen_spec, gen_out, gen_repos, gen_commits, gen_violation,
                                  gen_impure, seed);
        if (inspect->parsed()) return cmd_inspect(inspect_bundle);
        if (config->parsed()) return cmd_config(config_check);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
