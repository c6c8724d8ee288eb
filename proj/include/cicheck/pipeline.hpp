#pragma once

#include <chrono>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cicheck/bundle.hpp"
#include "cicheck/config.hpp"
#include "cicheck/dataset.hpp"
#include "cicheck/dtree.hpp"
#include "cicheck/extract.hpp"
#include "cicheck/ingest.hpp"
#include "cicheck/model.hpp"

namespace cicheck {

struct TrainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A repository with its per-commit lexical indexes built once up front, so
// repeated (re)training passes stay cheap.
struct PreparedRepo {
    std::string id;
    std::vector<LabeledCommit> commits;
    std::vector<SnapshotIndex> indexes;

    static PreparedRepo prepare(std::string id, std::vector<LabeledCommit> commits) {
        PreparedRepo repo;
        repo.id = std::move(id);
        repo.commits = std::move(commits);
        repo.indexes.reserve(repo.commits.size());
        for (const LabeledCommit& c : repo.commits)
            repo.indexes.push_back(SnapshotIndex::build(c.snapshot));
        return repo;
    }
};

// The first `count` commits of a prepared repository.
struct RepoRef {
    const PreparedRepo* repo = nullptr;
    std::size_t count = 0;

    static RepoRef full(const PreparedRepo& r) { return {&r, r.commits.size()}; }
    static RepoRef prefix(const PreparedRepo& r, std::size_t count) { return {&r, count}; }
};

namespace detail {

inline RepoSummary restrict_summary(const RepoSummary& full, const FeatureSet& cf) {
    RepoSummary out;
    for (const CodeFeature& f : cf) out.entries.emplace(f, *full.find(f));
    return out;
}

// Magic-candidate support straight off the indexes: a magic feature is
// present exactly when its keyword has at least one hit.
inline FeatureSet pruned_magic_candidates(const std::vector<RepoRef>& repos,
                                          double threshold, std::size_t total_commits) {
    std::map<std::string, std::pair<std::size_t, std::string>> counts;  // kw -> (count, prefix)
    for (const RepoRef& ref : repos)
        for (std::size_t i = 0; i < ref.count; ++i)
            for (const auto& [kw, hits] : ref.repo->indexes[i].magic) {
                auto [it, inserted] = counts.try_emplace(kw, 0, hits.front().prefix);
                ++it->second.first;
            }
    FeatureSet kept;
    for (const auto& [kw, entry] : counts) {
        double sup = static_cast<double>(entry.first) / static_cast<double>(total_commits);
        if (sup >= threshold) kept.insert(CodeFeature::magic(kw, entry.second));
    }
    return kept;
}

struct FitResult {
    DecisionTree tree;
    std::string digest;
};

inline FitResult fit_on(const std::vector<std::vector<LabeledSummary>>& kept_per_repo,
                        TreeParams params) {
    std::vector<TrainingSample> samples;
    for (const auto& kept : kept_per_repo)
        for (const LabeledSummary& s : kept)
            samples.push_back(TrainingSample{&s.summary, s.status});
    if (samples.empty()) throw TrainError("no training samples");
    FitResult out{DecisionTree::fit(samples, params), training_digest(samples)};
    return out;
}

}  // namespace detail

// Learn the global model: magic candidates from every commit of every
// repository, support-pruned over the whole set, then ABR and undersampling
// per repository and a single tree over the union.
inline Model train_global(const std::vector<RepoRef>& repos, double support_threshold,
                          TreeParams tree_params, double target_error_rate) {
    std::size_t total_commits = 0;
    for (const RepoRef& ref : repos) total_commits += ref.count;
    if (repos.empty() || total_commits < 2)
        throw TrainError("global training needs at least one repository and two commits");

    FeatureSet cf =
        detail::pruned_magic_candidates(repos, support_threshold, total_commits);
    if (cf.empty())
        throw TrainError(
            "no magic-constant candidates pass the support threshold; "
            "lower support_threshold_global");

    std::vector<std::vector<LabeledSummary>> kept_per_repo;
    for (const RepoRef& ref : repos) {
        std::vector<LabeledSummary> seq;
        seq.reserve(ref.count);
        for (std::size_t i = 0; i < ref.count; ++i)
            seq.push_back(LabeledSummary::make(ref.repo->commits[i].index,
                                               summarize(ref.repo->indexes[i], cf),
                                               ref.repo->commits[i].status));
        seq = abr_relabel(std::move(seq));
        kept_per_repo.push_back(undersample(seq, target_error_rate).entries);
    }

    auto fit = detail::fit_on(kept_per_repo, tree_params);
    Model m;
    m.tree = std::move(fit.tree);
    m.extractors = std::move(cf);
    m.scope = ModelScope::Global;
    m.digest = std::move(fit.digest);
    return m;
}

// Misclassified commits t+1 sitting on a PE/EP transition, ranked by
// ascending commit size, then index.
inline std::vector<int> rank_misclassified(std::span<const LabeledCommit> commits,
                                           const std::vector<BuildStatus>& predictions) {
    if (commits.size() != predictions.size())
        throw std::invalid_argument("rank_misclassified: length mismatch");
    std::vector<std::pair<std::size_t, int>> cand;
    for (std::size_t i = 1; i < commits.size(); ++i) {
        Transition tr = status_transition(commits[i - 1].status, commits[i].status);
        if (tr != Transition::PE && tr != Transition::EP) continue;
        if (predictions[i] == commits[i].status) continue;
        cand.emplace_back(commits[i].commit_size, static_cast<int>(i));
    }
    std::sort(cand.begin(), cand.end());
    std::vector<int> out;
    out.reserve(cand.size());
    for (auto& [size, idx] : cand) out.push_back(idx);
    return out;
}

// Refinement variant used by the MiGAR loop: a PE/EP pair qualifies when
// either endpoint is mispredicted, and pairs whose mispredicted endpoints the
// global oracle already classifies correctly are skipped. Returns the t+1
// index of each pair; diff features are mined from (t, t+1).
inline std::vector<int> rank_refinement_pairs(
    std::span<const LabeledCommit> commits, const std::vector<BuildStatus>& predictions,
    const std::vector<BuildStatus>* oracle_predictions = nullptr) {
    if (commits.size() != predictions.size())
        throw std::invalid_argument("rank_refinement_pairs: length mismatch");
    std::vector<std::pair<std::size_t, int>> cand;
    for (std::size_t i = 1; i < commits.size(); ++i) {
        Transition tr = status_transition(commits[i - 1].status, commits[i].status);
        if (tr != Transition::PE && tr != Transition::EP) continue;
        bool mis_prev = predictions[i - 1] != commits[i - 1].status;
        bool mis_cur = predictions[i] != commits[i].status;
        if (!mis_prev && !mis_cur) continue;
        if (oracle_predictions) {
            bool oracle_covers =
                (!mis_prev || (*oracle_predictions)[i - 1] == commits[i - 1].status) &&
                (!mis_cur || (*oracle_predictions)[i] == commits[i].status);
            if (oracle_covers) continue;
        }
        cand.emplace_back(commits[i].commit_size, static_cast<int>(i));
    }
    std::sort(cand.begin(), cand.end());
    std::vector<int> out;
    out.reserve(cand.size());
    for (auto& [size, idx] : cand) out.push_back(idx);
    return out;
}

struct MigarState {
    int iteration = 0;
    FeatureSet extractors;
    double last_accuracy = 0.0;
    std::vector<int> candidate_queue;
};

// Misclassification-guided abstraction refinement: fit on the current
// extractor set, rank status-flipping mispredicted commit pairs by size, add
// the diff features of the top pair, and repeat. Keeps the best model seen,
// measured against the original labels of the full sequence.
inline Model migar_refine(const PreparedRepo& repo, std::size_t count, FeatureSet extractors,
                          const Model* global_oracle, int budget, TreeParams tree_params,
                          double target_error_rate,
                          std::vector<MigarState>* trace = nullptr) {
    if (count == 0 || count > repo.commits.size())
        throw std::invalid_argument("migar_refine: bad commit count");
    if (extractors.empty())
        throw TrainError("migar_refine requires a non-empty initial extractor set");

    std::span<const LabeledCommit> window(repo.commits.data(), count);

    std::optional<std::vector<BuildStatus>> oracle_preds;
    if (global_oracle) {
        oracle_preds.emplace();
        for (std::size_t i = 0; i < count; ++i)
            oracle_preds->push_back(
                global_oracle->tree
                    .predict(summarize(repo.indexes[i], global_oracle->extractors))
                    .first);
    }

    Model best;
    double best_acc = -1.0;
    int no_improve = 0;
    for (int iter = 0;; ++iter) {
        std::vector<LabeledSummary> seq;
        seq.reserve(count);
        for (std::size_t i = 0; i < count; ++i)
            seq.push_back(LabeledSummary::make(window[i].index,
                                               summarize(repo.indexes[i], extractors),
                                               window[i].status));
        std::vector<LabeledSummary> abr = abr_relabel(seq);
        std::vector<std::vector<LabeledSummary>> kept{
            undersample(abr, target_error_rate).entries};
        auto fit = detail::fit_on(kept, tree_params);

        std::vector<BuildStatus> preds;
        preds.reserve(count);
        std::size_t hits = 0;
        for (std::size_t i = 0; i < count; ++i) {
            BuildStatus p = fit.tree.predict(seq[i].summary).first;
            preds.push_back(p);
            if (p == window[i].status) ++hits;
        }
        double acc = static_cast<double>(hits) / static_cast<double>(count);

        if (acc > best_acc + 1e-12) {
            best.tree = std::move(fit.tree);
            best.extractors = extractors;
            best.digest = std::move(fit.digest);
            best_acc = acc;
            no_improve = 0;
        } else {
            ++no_improve;
        }

        // candidates that would actually grow the extractor set
        std::vector<int> queue;
        for (int c : rank_refinement_pairs(window, preds,
                                           oracle_preds ? &*oracle_preds : nullptr)) {
            FeatureSet diffs = extract_diff_features(window[static_cast<std::size_t>(c) - 1].snapshot,
                                                     window[static_cast<std::size_t>(c)].snapshot);
            bool grows = std::any_of(diffs.begin(), diffs.end(), [&](const CodeFeature& f) {
                return !extractors.contains(f);
            });
            if (grows) queue.push_back(c);
        }
        if (trace)
            trace->push_back(MigarState{iter, extractors, acc, queue});

        if (queue.empty() || iter >= budget || no_improve >= 2) break;

        std::size_t top = static_cast<std::size_t>(queue.front());
        FeatureSet diffs = extract_diff_features(window[top - 1].snapshot, window[top].snapshot);
        extractors.insert(diffs.begin(), diffs.end());
    }
    best.scope = ModelScope::Local;
    best.repo_id = repo.id;
    return best;
}

// Local model: magic candidates and support computed against this repository
// only, then the MiGAR loop with the global model as oracle.
inline Model train_local(const PreparedRepo& repo, std::size_t count, const RunConfig& cfg,
                         const Model* global_oracle,
                         std::vector<MigarState>* trace = nullptr) {
    if (count == 0) throw TrainError("local training needs at least one commit");
    FeatureSet initial = detail::pruned_magic_candidates(
        {RepoRef::prefix(repo, count)}, cfg.support_threshold_local, count);
    if (initial.empty())
        throw TrainError(
            "no magic-constant candidates pass the support threshold; "
            "lower support_threshold_local");
    return migar_refine(repo, count, std::move(initial), global_oracle, cfg.migar_budget,
                        cfg.tree_params, cfg.target_error_rate, trace);
}

// Full training over a corpus: one global model plus a local model per repo.
inline ModelBundle train_bundle(const std::vector<const PreparedRepo*>& repos,
                                const RunConfig& cfg) {
    cfg.validate();
    std::vector<RepoRef> refs;
    refs.reserve(repos.size());
    for (const PreparedRepo* r : repos) refs.push_back(RepoRef::full(*r));
    ModelBundle bundle;
    bundle.config = cfg;
    bundle.global = train_global(refs, cfg.support_threshold_global, cfg.tree_params,
                                 cfg.target_error_rate);
    for (const PreparedRepo* r : repos)
        bundle.locals.emplace(r->id, train_local(*r, r->commits.size(), cfg, &bundle.global));
    return bundle;
}

// --- rolling evaluation -------------------------------------------------------

struct Outcome {
    int index = 0;
    BuildStatus predicted = BuildStatus::Pass;
    BuildStatus actual = BuildStatus::Pass;
    Explanation explanation;
    std::string global_digest;
    std::string local_digest;
};

struct MetricsReport {
    std::string repo_id;
    int tp = 0, tn = 0, fp = 0, fn = 0;
    double accuracy = 0.0;
    std::optional<double> precision;  // '-' when TP+FP == 0
    std::optional<double> recall;     // '-' when TP+FN == 0
    std::vector<Outcome> outcomes;

    void finalize() {
        int total = tp + tn + fp + fn;
        accuracy = total ? static_cast<double>(tp + tn) / total : 0.0;
        if (tp + fp > 0) precision = static_cast<double>(tp) / (tp + fp);
        if (tp + fn > 0) recall = static_cast<double>(tp) / (tp + fn);
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["repo_id"] = repo_id;
        j["accuracy"] = accuracy;
        j["precision"] = precision ? nlohmann::json(*precision) : nlohmann::json(nullptr);
        j["recall"] = recall ? nlohmann::json(*recall) : nlohmann::json(nullptr);
        j["tp"] = tp;
        j["tn"] = tn;
        j["fp"] = fp;
        j["fn"] = fn;
        return j;
    }
};

// The rolling retrain protocol: for each k in [t/2, t-1], train global and
// local models on the first k commits (plus any auxiliary repositories in
// full) and predict commit k. Metrics are counted against original labels.
inline MetricsReport evaluate_rolling(const PreparedRepo& user,
                                      const std::vector<const PreparedRepo*>& aux,
                                      const RunConfig& cfg) {
    cfg.validate();
    std::size_t t = user.commits.size();
    if (t < 4) throw TrainError("rolling evaluation needs at least 4 commits");

    MetricsReport report;
    report.repo_id = user.id;
    for (std::size_t k = t / 2; k < t; ++k) {
        std::vector<RepoRef> global_refs;
        for (const PreparedRepo* r : aux) global_refs.push_back(RepoRef::full(*r));
        global_refs.push_back(RepoRef::prefix(user, k));

        Model global = train_global(global_refs, cfg.support_threshold_global,
                                    cfg.tree_params, cfg.target_error_rate);
        Model local = train_local(user, k, cfg, &global);

        CombinedModel cm{std::move(global), std::move(local), cfg.combine_policy};
        RepoSummary summary_global = summarize(user.indexes[k], cm.global.extractors);
        RepoSummary summary_local = summarize(user.indexes[k], cm.local.extractors);
        auto [predicted, explanation] = combine_predict(cm, summary_global, summary_local);

        Outcome outcome;
        outcome.index = static_cast<int>(k);
        outcome.predicted = predicted;
        outcome.actual = user.commits[k].status;
        outcome.explanation = std::move(explanation);
        outcome.global_digest = cm.global.digest;
        outcome.local_digest = cm.local.digest;

        if (predicted == BuildStatus::Err)
            (outcome.actual == BuildStatus::Err ? report.tp : report.fp)++;
        else
            (outcome.actual == BuildStatus::Pass ? report.tn : report.fn)++;
        report.outcomes.push_back(std::move(outcome));
    }
    report.finalize();
    return report;
}

// Text table in the evaluation layout: per-repo rows plus an average row.
inline std::string metrics_table(const std::vector<MetricsReport>& reports) {
    auto fmt_ratio = [](const std::optional<double>& v) {
        if (!v) return std::string("-");
        char buf[16];
        std::snprintf(buf, sizeof buf, "%.3f", *v);
        return std::string(buf);
    };
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof line, "%-28s %9s %10s %7s %5s %5s %5s %5s\n", "Repository",
                  "Accuracy", "Precision", "Recall", "TP", "TN", "FP", "FN");
    out << line;
    double acc_sum = 0.0, prec_sum = 0.0, rec_sum = 0.0;
    double tp_sum = 0.0, tn_sum = 0.0, fp_sum = 0.0, fn_sum = 0.0;
    int prec_n = 0, rec_n = 0;
    for (const MetricsReport& r : reports) {
        std::snprintf(line, sizeof line, "%-28s %8.0f%% %10s %7s %5d %5d %5d %5d\n",
                      r.repo_id.c_str(), r.accuracy * 100.0, fmt_ratio(r.precision).c_str(),
                      fmt_ratio(r.recall).c_str(), r.tp, r.tn, r.fp, r.fn);
        out << line;
        acc_sum += r.accuracy;
        if (r.precision) prec_sum += *r.precision, ++prec_n;
        if (r.recall) rec_sum += *r.recall, ++rec_n;
        tp_sum += r.tp, tn_sum += r.tn, fp_sum += r.fp, fn_sum += r.fn;
    }
    if (!reports.empty()) {
        double n = static_cast<double>(reports.size());
        std::optional<double> avg_prec, avg_rec;
        if (prec_n) avg_prec = prec_sum / prec_n;
        if (rec_n) avg_rec = rec_sum / rec_n;
        std::snprintf(line, sizeof line, "%-28s %8.1f%% %10s %7s %5.1f %5.1f %5.1f %5.1f\n",
                      "Average", acc_sum / n * 100.0, fmt_ratio(avg_prec).c_str(),
                      fmt_ratio(avg_rec).c_str(), tp_sum / n, tn_sum / n, fp_sum / n,
                      fn_sum / n);
        out << line;
    }
    return out.str();
}

// --- training-time measurement -------------------------------------------------

struct TrainTiming {
    std::size_t repo_count = 0;
    std::size_t total_commits = 0;
    double seconds = 0.0;
};

inline TrainTiming time_training(const std::vector<const PreparedRepo*>& repos,
                                 const RunConfig& cfg) {
    TrainTiming t;
    t.repo_count = repos.size();
    for (const PreparedRepo* r : repos) t.total_commits += r->commits.size();
    auto start = std::chrono::steady_clock::now();
    ModelBundle bundle = train_bundle(repos, cfg);
    (void)bundle;
    t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return t;
}

}  // namespace cicheck
