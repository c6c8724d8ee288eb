#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "cicheck/report.hpp"

using namespace cicheck;

namespace {

RepoSummary summary_with(const std::string& keyword,
                         const std::vector<SourceLoc>& locations, double value = 1.0) {
    RepoSummary s;
    FeatureValue v;
    v.value = value;
    v.locations = locations;
    s.entries.emplace(CodeFeature::magic(keyword), v);
    return s;
}

}  // namespace

TEST_CASE("failure reports render the canonical five-line shape", "[report]") {
    Explanation e;
    e.prediction = BuildStatus::Err;
    e.findings = {
        Finding{"TARGET_ENCODINGS=",
                {LocationEntry{"lib/rails_admin/support/csv_converter.rb", "Line 7"}}},
        Finding{"-rvm", {LocationEntry{".travis.yml", "Multiple Lines"}}},
    };
    CHECK(render(e) ==
          "Predicted build failure based on potential error locations:\n"
          "lib/rails_admin/support/csv_converter.rb:Line 7\n"
          "   TARGET_ENCODINGS=\n"
          ".travis.yml:Multiple Lines\n"
          "   -rvm\n");
}

TEST_CASE("pass predictions render a single definite line", "[report]") {
    Explanation e;
    e.prediction = BuildStatus::Pass;
    CHECK(render(e) == "Predicted build success.\n");
}

TEST_CASE("multi-file findings render the aggregate header", "[report]") {
    Explanation e;
    e.prediction = BuildStatus::Err;
    e.findings = {
        Finding{"PATCH", {LocationEntry{"lib/active_scaffold/version.rb", "Line 5"}}},
        Finding{"rails", {LocationEntry{"Multiple Files", "Multiple Lines"}}},
        Finding{"s.add_runtime_dependency",
                {LocationEntry{"active_scaffold.gemspec", "Multiple Lines"}}},
    };
    std::string text = render(e);
    CHECK(text.find("Multiple Files:Multiple Lines\n   rails\n") != std::string::npos);
    CHECK(text.find("lib/active_scaffold/version.rb:Line 5\n   PATCH\n") !=
          std::string::npos);
}

TEST_CASE("localize renders one line as Line N", "[report]") {
    RepoSummary s = summary_with("PATCH", {{"lib/active_scaffold/version.rb", 5, 5}});
    auto entries = localize("PATCH", s);
    REQUIRE(entries.size() == 1);
    CHECK(entries[0].file == "lib/active_scaffold/version.rb");
    CHECK(entries[0].desc == "Line 5");
}

TEST_CASE("localize collapses several lines in one file", "[report]") {
    RepoSummary s = summary_with(
        "-rvm", {{".travis.yml", 2, 2}, {".travis.yml", 3, 3}, {".travis.yml", 4, 4},
                 {".travis.yml", 5, 5}});
    auto entries = localize("-rvm", s);
    REQUIRE(entries.size() == 1);
    CHECK(entries[0].file == ".travis.yml");
    CHECK(entries[0].desc == "Multiple Lines");
}

TEST_CASE("localize lists two files individually", "[report]") {
    RepoSummary s = summary_with("gem_pin", {{"Gemfile", 3, 3}, {"Gemfile.lock", 9, 9}});
    auto entries = localize("gem_pin", s);
    REQUIRE(entries.size() == 2);
    CHECK(entries[0].file == "Gemfile");
    CHECK(entries[0].desc == "Line 3");
    CHECK(entries[1].file == "Gemfile.lock");
    CHECK(entries[1].desc == "Line 9");
}

TEST_CASE("localize aggregates three or more files", "[report]") {
    RepoSummary s = summary_with(
        "rails", {{"a.rb", 1, 1}, {"b.rb", 2, 2}, {"c.rb", 3, 3}});
    auto entries = localize("rails", s);
    REQUIRE(entries.size() == 1);
    CHECK(entries[0].file == "Multiple Files");
    CHECK(entries[0].desc == "Multiple Lines");
}

TEST_CASE("absent keywords localize to the not-found marker", "[report]") {
    RepoSummary s = summary_with("other", {{"a.rb", 1, 1}});
    auto entries = localize("missing", s);
    REQUIRE(entries.size() == 1);
    CHECK(entries[0].file.empty());
    CHECK(entries[0].desc == "(not found in current snapshot)");

    Explanation e;
    e.prediction = BuildStatus::Err;
    e.findings = {Finding{"missing", entries}};
    CHECK(render(e) ==
          "Predicted build failure based on potential error locations:\n"
          "(not found in current snapshot)\n"
          "   missing\n");
}

TEST_CASE("diff feature names localize through their value locations", "[report]") {
    RepoSummary s;
    FeatureValue v;
    v.value = -1.0;
    v.locations = {{"lib/app.rb", 5, 5}};
    s.entries.emplace(CodeFeature::diff("tweet", "sendTweet"), v);
    auto entries = localize("tweet/sendTweet", s);
    REQUIRE(entries.size() == 1);
    CHECK(entries[0].desc == "Line 5");
}

TEST_CASE("distinct findings render distinct reports", "[report]") {
    std::vector<Explanation> variants;
    for (const char* kw : {"alpha", "beta"})
        for (int line : {1, 2}) {
            Explanation e;
            e.prediction = BuildStatus::Err;
            e.findings = {
                Finding{kw, {LocationEntry{"f.rb", "Line " + std::to_string(line)}}}};
            variants.push_back(e);
        }
    std::set<std::string> rendered;
    for (const Explanation& e : variants) rendered.insert(render(e));
    CHECK(rendered.size() == variants.size());
}

TEST_CASE("explanations serialize to JSON with the same fields", "[report]") {
    Explanation e;
    e.prediction = BuildStatus::Err;
    e.from_global = true;
    e.findings = {Finding{"PATCH", {LocationEntry{"version.rb", "Line 5"}}}};
    nlohmann::json j = explanation_to_json(e);
    CHECK(j["prediction"] == "err");
    CHECK(j["findings"][0]["keyword"] == "PATCH");
    CHECK(j["findings"][0]["locations"][0]["file"] == "version.rb");
    CHECK(j["source_models"] == nlohmann::json::array({"global"}));
}
