#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "cicheck/pipeline.hpp"
#include "helpers.hpp"

using namespace cicheck;
using testutil::make_commit;

namespace {

// commits over one file whose libA constant decides the build: < 2.0 errors
std::vector<LabeledCommit> liba_repo(const std::vector<double>& values) {
    std::vector<LabeledCommit> commits;
    for (std::size_t i = 0; i < values.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.1f", values[i]);
        std::map<std::string, std::string> files{
            {"config.rb", "libA = " + std::string(buf) + "\nanchor = 1\n"}};
        commits.push_back(make_commit(
            static_cast<int>(i), "c" + std::to_string(i),
            values[i] < 2.0 ? BuildStatus::Err : BuildStatus::Pass, files,
            commits.empty() ? nullptr : &commits.back()));
    }
    return commits;
}

Model leaf_model(BuildStatus label, ModelScope scope) {
    RepoSummary s;
    FeatureValue v;
    v.value = 1.0;
    s.entries.emplace(CodeFeature::magic("anchor"), v);
    std::vector<TrainingSample> samples{TrainingSample{&s, label}};
    Model m;
    m.tree = DecisionTree::fit(samples, TreeParams{});
    m.extractors = FeatureSet{CodeFeature::magic("anchor")};
    m.scope = scope;
    m.digest = training_digest(samples);
    return m;
}

RepoSummary anchor_summary() {
    RepoSummary s;
    FeatureValue v;
    v.value = 1.0;
    s.entries.emplace(CodeFeature::magic("anchor"), v);
    return s;
}

}  // namespace

TEST_CASE("rank_misclassified orders status-flipping misses by size", "[pipeline]") {
    // statuses P,E,P,E,P with flips into every index; sizes vary
    std::vector<LabeledCommit> commits;
    std::string statuses = "PEPEP";
    std::size_t sizes[] = {5, 40, 3, 12, 9};
    for (int i = 0; i < 5; ++i) {
        LabeledCommit c;
        c.index = i;
        c.commit_id = "c" + std::to_string(i);
        c.status = statuses[static_cast<std::size_t>(i)] == 'E' ? BuildStatus::Err
                                                                : BuildStatus::Pass;
        c.commit_size = sizes[i];
        commits.push_back(std::move(c));
    }
    // every prediction wrong => indices 1..4 all misclassified at t+1;
    // ascending size order = sizes 3, 9, 12, 40
    std::vector<BuildStatus> wrong;
    for (const auto& c : commits)
        wrong.push_back(c.status == BuildStatus::Pass ? BuildStatus::Err : BuildStatus::Pass);
    CHECK(rank_misclassified(commits, wrong) == std::vector<int>{2, 4, 3, 1});

    // all correct: nothing to rank
    std::vector<BuildStatus> right;
    for (const auto& c : commits) right.push_back(c.status);
    CHECK(rank_misclassified(commits, right).empty());

    // a mispredicted commit on a PP transition is excluded
    std::vector<LabeledCommit> pp;
    for (int i = 0; i < 3; ++i) {
        LabeledCommit c;
        c.index = i;
        c.status = BuildStatus::Pass;
        c.commit_size = 1;
        pp.push_back(std::move(c));
    }
    std::vector<BuildStatus> miss{BuildStatus::Pass, BuildStatus::Err, BuildStatus::Pass};
    CHECK(rank_misclassified(pp, miss).empty());
}

TEST_CASE("ranked candidates are a sorted subset of the misses", "[pipeline]") {
    std::mt19937 rng(41);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = 2 + rng() % 12;
        std::vector<LabeledCommit> commits;
        std::vector<BuildStatus> preds;
        for (std::size_t i = 0; i < n; ++i) {
            LabeledCommit c;
            c.index = static_cast<int>(i);
            c.status = rng() % 3 == 0 ? BuildStatus::Err : BuildStatus::Pass;
            c.commit_size = rng() % 50;
            commits.push_back(std::move(c));
            preds.push_back(rng() % 2 ? BuildStatus::Err : BuildStatus::Pass);
        }
        auto ranked = rank_misclassified(commits, preds);
        for (std::size_t k = 0; k < ranked.size(); ++k) {
            auto idx = static_cast<std::size_t>(ranked[k]);
            REQUIRE(preds[idx] != commits[idx].status);  // subset of the misses
            if (k == 0) continue;
            auto prev = static_cast<std::size_t>(ranked[k - 1]);
            auto key = [&](std::size_t i) {
                return std::make_pair(commits[i].commit_size, i);
            };
            REQUIRE(key(prev) < key(idx));  // strictly sorted by (size, index)
        }
    }
}

TEST_CASE("refinement pairs qualify on either mispredicted endpoint", "[pipeline]") {
    // P,E,E,P with the middle Err pair: EP transition at (2,3); the local
    // model mispredicts index 2 only
    std::vector<LabeledCommit> commits;
    std::string statuses = "PEEP";
    for (int i = 0; i < 4; ++i) {
        LabeledCommit c;
        c.index = i;
        c.status = statuses[static_cast<std::size_t>(i)] == 'E' ? BuildStatus::Err
                                                                : BuildStatus::Pass;
        c.commit_size = 1;
        commits.push_back(std::move(c));
    }
    std::vector<BuildStatus> preds{BuildStatus::Pass, BuildStatus::Err, BuildStatus::Pass,
                                   BuildStatus::Pass};
    auto pairs = rank_refinement_pairs(commits, preds);
    // (1,2) EE is no flip; (0,1) PE has both endpoints right; (2,3) EP
    // qualifies through its mispredicted Err side
    CHECK(pairs == std::vector<int>{3});

    // with a global oracle that already classifies index 2 correctly, the
    // pair is skipped
    std::vector<BuildStatus> oracle{BuildStatus::Pass, BuildStatus::Err, BuildStatus::Err,
                                    BuildStatus::Pass};
    CHECK(rank_refinement_pairs(commits, preds, &oracle).empty());
}

TEST_CASE("conservative combination errs only on double agreement", "[pipeline]") {
    Model global_pass = leaf_model(BuildStatus::Pass, ModelScope::Global);
    Model global_err = leaf_model(BuildStatus::Err, ModelScope::Global);
    Model local_pass = leaf_model(BuildStatus::Pass, ModelScope::Local);
    Model local_err = leaf_model(BuildStatus::Err, ModelScope::Local);
    RepoSummary s = anchor_summary();

    int err_outcomes = 0;
    for (const Model* g : {&global_pass, &global_err})
        for (const Model* l : {&local_pass, &local_err}) {
            CombinedModel cm{*g, *l, CombinePolicy::Conservative};
            auto [status, e] = combine_predict(cm, s, s);
            if (status == BuildStatus::Err) ++err_outcomes;
            CHECK(e.prediction == status);
        }
    CHECK(err_outcomes == 1);

    // priority policies let the named model win conflicts
    CombinedModel gp{global_err, local_pass, CombinePolicy::GlobalPriority};
    CHECK(combine_predict(gp, s, s).first == BuildStatus::Err);
    CombinedModel lp{global_err, local_pass, CombinePolicy::LocalPriority};
    CHECK(combine_predict(lp, s, s).first == BuildStatus::Pass);

    // double pass stays pass under every policy
    for (CombinePolicy policy : {CombinePolicy::Conservative, CombinePolicy::GlobalPriority,
                                 CombinePolicy::LocalPriority}) {
        CombinedModel cm{global_pass, local_pass, policy};
        CHECK(combine_predict(cm, s, s).first == BuildStatus::Pass);
    }
}

TEST_CASE("explanations carry the decision paths of agreeing models", "[pipeline]") {
    auto commits = liba_repo({2.5, 1.5, 2.0, 1.0, 2.5, 1.5, 2.0});
    PreparedRepo repo = PreparedRepo::prepare("r", commits);
    Model global = train_global({RepoRef::full(repo)}, 0.1, TreeParams{}, 0.3);
    Model local = train_local(repo, repo.commits.size(), RunConfig{}, &global);
    CombinedModel cm{global, local, CombinePolicy::Conservative};

    RepoSummary sg = summarize(repo.indexes[3], cm.global.extractors);
    RepoSummary sl = summarize(repo.indexes[3], cm.local.extractors);
    auto [status, e] = combine_predict(cm, sg, sl);
    REQUIRE(status == BuildStatus::Err);
    CHECK(e.from_global);
    CHECK(e.from_local);
    REQUIRE_FALSE(e.findings.empty());
    bool names_liba = false;
    std::set<std::string> seen;
    for (const Finding& f : e.findings) {
        names_liba |= f.keyword == "libA";
        CHECK(seen.insert(f.keyword).second);  // each keyword appears once
    }
    CHECK(names_liba);

    // traceability: every printed keyword sits on a contributing model's path
    auto keywords_of = [](const DecisionPath& p) { return path_keywords(p); };
    auto gk = keywords_of(cm.global.tree.predict(sg).second);
    auto lk = keywords_of(cm.local.tree.predict(sl).second);
    for (const Finding& f : e.findings) {
        bool on_global = std::find(gk.begin(), gk.end(), f.keyword) != gk.end();
        bool on_local = std::find(lk.begin(), lk.end(), f.keyword) != lk.end();
        CHECK((on_global || on_local));
    }
}

TEST_CASE("a planted global rule surfaces on the error path", "[pipeline]") {
    // five repositories share the libA >= 2 constraint
    std::mt19937 rng(31);
    std::vector<PreparedRepo> repos;
    for (int r = 0; r < 5; ++r) {
        std::vector<double> values;
        for (int i = 0; i < 10; ++i)
            values.push_back(rng() % 3 == 0 ? (rng() % 2 ? 1.0 : 1.5) : (rng() % 2 ? 2.0 : 2.5));
        repos.push_back(PreparedRepo::prepare("r" + std::to_string(r), liba_repo(values)));
    }
    std::vector<RepoRef> refs;
    for (const PreparedRepo& r : repos) refs.push_back(RepoRef::full(r));
    Model global = train_global(refs, 0.1, TreeParams{}, 0.3);
    CHECK(global.scope == ModelScope::Global);

    RepoSummary bad = summarize(testutil::make_snapshot({{"config.rb", "libA = 1.0\nanchor = 1\n"}}),
                                global.extractors);
    auto [status, path] = global.tree.predict(bad);
    CHECK(status == BuildStatus::Err);
    auto kws = path_keywords(path);
    CHECK(std::find(kws.begin(), kws.end(), "libA") != kws.end());
}

TEST_CASE("an all-pass repository trains to a single pass leaf", "[pipeline]") {
    PreparedRepo repo = PreparedRepo::prepare("r", liba_repo({2.0, 2.1, 2.2, 2.0}));
    Model global = train_global({RepoRef::full(repo)}, 0.1, TreeParams{}, 0.3);
    REQUIRE(global.tree.nodes().size() == 1);
    CHECK(global.tree.nodes()[0].label == BuildStatus::Pass);
}

TEST_CASE("an impossible support threshold reports the pruning error", "[pipeline]") {
    // two commits with disjoint keywords: nothing reaches support 1.0
    std::vector<LabeledCommit> commits;
    commits.push_back(make_commit(0, "a", BuildStatus::Pass, {{"x.rb", "alpha = 1\n"}}));
    commits.push_back(
        make_commit(1, "b", BuildStatus::Pass, {{"x.rb", "beta = 2\n"}}, &commits.back()));
    PreparedRepo repo = PreparedRepo::prepare("r", commits);
    try {
        train_global({RepoRef::full(repo)}, 1.0, TreeParams{}, 0.3);
        FAIL("expected TrainError");
    } catch (const TrainError& e) {
        CHECK(std::string(e.what()).find("support") != std::string::npos);
    }
}

TEST_CASE("migar refines the tweet history on the rename commit", "[pipeline]") {
    PreparedRepo repo = PreparedRepo::prepare("tweet", testutil::tweet_history());
    FeatureSet initial = detail::pruned_magic_candidates({RepoRef::full(repo)}, 0.1, 6);
    REQUIRE(initial.contains(CodeFeature::magic("Tweet")));
    REQUIRE(initial.contains(CodeFeature::magic("RndMsg")));

    std::vector<MigarState> trace;
    Model refined = migar_refine(repo, 6, initial, nullptr, 10, TreeParams{}, 0.3, &trace);
    CHECK(refined.extractors.contains(CodeFeature::diff("tweet", "sendTweet")));
    REQUIRE(trace.size() >= 2);
    // the first round queues exactly the rename pair (impure pairs add no
    // features and are dropped)
    CHECK(trace[0].candidate_queue == std::vector<int>{5});

    // extractor growth is monotone and accuracy ends at 5/6 (the impure
    // failure at t=1 stays unpredictable)
    for (std::size_t i = 1; i < trace.size(); ++i)
        for (const CodeFeature& f : trace[i - 1].extractors)
            CHECK(trace[i].extractors.contains(f));
    CHECK(trace.back().last_accuracy == Catch::Approx(5.0 / 6.0));
}

TEST_CASE("budget zero fits on the initial extractors only", "[pipeline]") {
    PreparedRepo repo = PreparedRepo::prepare("tweet", testutil::tweet_history());
    FeatureSet initial = detail::pruned_magic_candidates({RepoRef::full(repo)}, 0.1, 6);
    Model unrefined = migar_refine(repo, 6, initial, nullptr, 0, TreeParams{}, 0.3);
    CHECK(unrefined.extractors == initial);
}

TEST_CASE("a rename-only failure needs refinement to become learnable", "[pipeline]") {
    // the failure signal is visible only through the tweet -> sendTweet swap
    auto body = [](bool uses_old) {
        return std::map<std::string, std::string>{
            {"app.rb", std::string("anchor = 1\n") +
                           (uses_old ? "tweet(msg)\n" : "sendTweet(msg)\n")}};
    };
    std::vector<LabeledCommit> commits;
    std::string pattern = "PEPEPPEP";  // E exactly when the old name is used
    for (int i = 0; i < 8; ++i) {
        bool old_name = pattern[static_cast<std::size_t>(i)] == 'E';
        commits.push_back(make_commit(i, "c" + std::to_string(i),
                                      old_name ? BuildStatus::Err : BuildStatus::Pass,
                                      body(old_name),
                                      commits.empty() ? nullptr : &commits.back()));
    }
    PreparedRepo repo = PreparedRepo::prepare("r", commits);
    RunConfig cfg;

    Model unrefined = migar_refine(repo, 8,
                                   detail::pruned_magic_candidates({RepoRef::full(repo)}, 0.1, 8),
                                   nullptr, 0, cfg.tree_params, cfg.target_error_rate);
    Model refined = train_local(repo, 8, cfg, nullptr);

    auto accuracy_on = [&](const Model& m) {
        std::size_t hits = 0;
        for (std::size_t i = 0; i < 8; ++i)
            if (m.tree.predict(summarize(repo.indexes[i], m.extractors)).first ==
                repo.commits[i].status)
                ++hits;
        return static_cast<double>(hits) / 8.0;
    };
    CHECK(accuracy_on(unrefined) < 1.0);
    CHECK(accuracy_on(refined) == 1.0);
    CHECK(refined.scope == ModelScope::Local);
    CHECK(refined.repo_id == "r");
}

TEST_CASE("rolling evaluation scores a learnable repository perfectly", "[pipeline]") {
    auto commits = liba_repo({2.0, 1.5, 2.1, 1.0, 2.2, 2.0, 1.5, 2.1, 1.0, 2.0, 1.5, 2.2});
    PreparedRepo repo = PreparedRepo::prepare("r", commits);
    RunConfig cfg;
    MetricsReport report = evaluate_rolling(repo, {}, cfg);
    CHECK(report.accuracy == 1.0);
    CHECK(report.fp == 0);
    CHECK(report.fn == 0);
    CHECK(report.outcomes.size() == 6);  // t/2 predictions for t = 12
    REQUIRE(report.precision.has_value());
    CHECK(*report.precision == 1.0);
}

TEST_CASE("an all-pass evaluation span leaves precision and recall undefined", "[pipeline]") {
    PreparedRepo repo =
        PreparedRepo::prepare("r", liba_repo({2.0, 2.1, 2.2, 2.0, 2.1, 2.2, 2.0, 2.1}));
    MetricsReport report = evaluate_rolling(repo, {}, RunConfig{});
    CHECK(report.tn == static_cast<int>(report.outcomes.size()));
    CHECK_FALSE(report.precision.has_value());
    CHECK_FALSE(report.recall.has_value());
    std::string table = metrics_table({report});
    CHECK(table.find('-') != std::string::npos);
    CHECK(table.find("Average") != std::string::npos);
}

TEST_CASE("rolling evaluation refuses too-short histories", "[pipeline]") {
    PreparedRepo repo = PreparedRepo::prepare("r", liba_repo({2.0, 2.1, 1.5}));
    CHECK_THROWS_AS(evaluate_rolling(repo, {}, RunConfig{}), TrainError);
}

TEST_CASE("rolling windows train strictly on the past", "[pipeline]") {
    auto commits = liba_repo({2.0, 1.5, 2.1, 1.0, 2.2, 2.0, 1.5, 2.1});
    PreparedRepo repo = PreparedRepo::prepare("r", commits);
    RunConfig cfg;
    MetricsReport report = evaluate_rolling(repo, {}, cfg);
    REQUIRE(report.outcomes.size() == 4);

    // the first window's digest equals a fresh train on exactly that prefix
    Model fresh = train_global({RepoRef::prefix(repo, 4)}, cfg.support_threshold_global,
                               cfg.tree_params, cfg.target_error_rate);
    CHECK(report.outcomes[0].global_digest == fresh.digest);
    // growing windows change the training set
    CHECK(report.outcomes[0].global_digest != report.outcomes.back().global_digest);
}

TEST_CASE("train_bundle produces one local model per repository", "[pipeline]") {
    PreparedRepo a = PreparedRepo::prepare("a", liba_repo({2.0, 1.5, 2.1, 1.0}));
    PreparedRepo b = PreparedRepo::prepare("b", liba_repo({2.2, 2.0, 1.5, 2.1}));
    ModelBundle bundle = train_bundle({&a, &b}, RunConfig{});
    CHECK(bundle.locals.size() == 2);
    CHECK(bundle.locals.at("a").scope == ModelScope::Local);
    CHECK(bundle.global.scope == ModelScope::Global);

    // bundle JSON round-trips
    ModelBundle back = ModelBundle::from_json(bundle.to_json());
    CHECK(back.to_json() == bundle.to_json());
}

TEST_CASE("global training rejects an empty corpus", "[pipeline]") {
    CHECK_THROWS_AS(train_global({}, 0.1, TreeParams{}, 0.3), TrainError);
}
