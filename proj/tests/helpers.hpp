#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "cicheck/extract.hpp"
#include "cicheck/ingest.hpp"
#include "cicheck/pipeline.hpp"

namespace testutil {

using namespace cicheck;

inline RepoSnapshot make_snapshot(const std::map<std::string, std::string>& files) {
    return filter_repository(files, FilterPolicy{{"*"}});
}

inline LabeledCommit make_commit(int index, std::string id, BuildStatus status,
                                 const std::map<std::string, std::string>& files,
                                 const LabeledCommit* prev = nullptr) {
    LabeledCommit c;
    c.index = index;
    c.commit_id = std::move(id);
    c.status = status;
    c.snapshot = make_snapshot(files);
    static const RepoSnapshot kEmpty;
    c.commit_size = snapshot_edit_count(prev ? prev->snapshot : kEmpty, c.snapshot);
    return c;
}

// Six-commit deprecated-call history: an impure failure at t=1 and a rename
// failure at t=4, statuses P,E,P,E,E,P.
inline std::vector<LabeledCommit> tweet_history() {
    auto base = [](const std::string& tweet_v, const std::string& rnd_v,
                   const std::string& call) {
        std::string body = "import Tweet V" + tweet_v + "\nimport RndMsg V" + rnd_v +
                           "\n\nmsg = RndMsg()\n";
        if (!call.empty()) body += call + "(msg)\n";
        return std::map<std::string, std::string>{{"app.rb", body}};
    };
    std::vector<LabeledCommit> commits;
    commits.push_back(make_commit(0, "r1", BuildStatus::Pass, base("1.0", "1.0", "")));
    commits.push_back(
        make_commit(1, "r2", BuildStatus::Err, base("1.0", "1.0", ""), &commits.back()));
    commits.push_back(
        make_commit(2, "r3", BuildStatus::Pass, base("1.0", "1.0", ""), &commits.back()));
    commits.push_back(
        make_commit(3, "r4", BuildStatus::Err, base("1.0", "2.0", "tweet"), &commits.back()));
    commits.push_back(
        make_commit(4, "r5", BuildStatus::Err, base("2.0", "2.0", "tweet"), &commits.back()));
    commits.push_back(make_commit(5, "r6", BuildStatus::Pass, base("2.0", "2.0", "sendTweet"),
                                  &commits.back()));
    return commits;
}

struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("cicheck_" + tag + "_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << content;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct CliResult {
    int exit_code = -1;
    std::string output;
};

inline const char* cli_binary() { return std::getenv("CICHECK_BIN"); }

inline CliResult run_cli(const std::string& args) {
    CliResult res;
    std::string cmd = std::string(cli_binary()) + " " + args + " 2>&1";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) return res;
    char buf[4096];
    std::size_t n;
    while ((n = ::fread(buf, 1, sizeof buf, pipe)) > 0) res.output.append(buf, n);
    int status = ::pclose(pipe);
    res.exit_code = (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
    return res;
}

}  // namespace testutil
