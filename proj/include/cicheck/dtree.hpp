#pragma once

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cicheck/feature.hpp"
#include "cicheck/status.hpp"

namespace cicheck {

struct TreeParams {
    int max_depth = 8;
    int min_leaf = 2;

    bool operator==(const TreeParams&) const = default;
};

struct PathStep {
    CodeFeature feature;
    double threshold = 0.0;
    bool went_left = false;  // left = value <= threshold
    double observed = 0.0;
};

struct DecisionPath {
    std::vector<PathStep> steps;
    BuildStatus label = BuildStatus::Pass;
};

// Feature names along a path, deduplicated, first occurrence order.
inline std::vector<std::string> path_keywords(const DecisionPath& path) {
    std::vector<std::string> out;
    for (const PathStep& step : path.steps) {
        std::string name = step.feature.name();
        if (std::find(out.begin(), out.end(), name) == out.end())
            out.push_back(std::move(name));
    }
    return out;
}

struct TrainingSample {
    const RepoSummary* summary = nullptr;
    BuildStatus label = BuildStatus::Pass;
};

struct PredictError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Binary CART-style tree over feature values; internal nodes route value <=
// threshold to the left. Induction is greedy Gini with midpoint thresholds,
// deterministic under the tie-break (feature name, then lower threshold).
class DecisionTree {
public:
    struct Node {
        bool leaf = true;
        // internal
        CodeFeature feature;
        double threshold = 0.0;
        int left = -1, right = -1;
        // leaf
        BuildStatus label = BuildStatus::Pass;
        std::int64_t pass_count = 0, err_count = 0;
    };

    static DecisionTree fit(const std::vector<TrainingSample>& samples, TreeParams params) {
        if (samples.empty())
            throw std::invalid_argument("fit requires at least one sample");
        const RepoSummary& first = *samples[0].summary;
        for (const TrainingSample& s : samples)
            if (!s.summary->same_domain(first))
                throw std::invalid_argument("fit: samples built over mixed extractor sets");

        DecisionTree tree;
        tree.params_ = params;
        for (const auto& [f, v] : first.entries) tree.features_.insert(f);

        // dense matrix, columns ordered by (name, identity) for tie-breaking
        std::vector<CodeFeature> columns(tree.features_.begin(), tree.features_.end());
        std::sort(columns.begin(), columns.end(), [](const CodeFeature& a, const CodeFeature& b) {
            std::string an = a.name(), bn = b.name();
            return std::tie(an, a) < std::tie(bn, b);
        });
        std::vector<std::vector<double>> x(samples.size(), std::vector<double>(columns.size()));
        std::vector<BuildStatus> y(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) {
            y[i] = samples[i].label;
            std::size_t j = 0;
            for (const CodeFeature& f : columns)
                x[i][j++] = samples[i].summary->find(f)->value;
        }

        std::vector<std::size_t> all(samples.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        tree.build_node(x, y, columns, all, 0);
        return tree;
    }

    std::pair<BuildStatus, DecisionPath> predict(const RepoSummary& summary) const {
        DecisionPath path;
        int node = 0;
        while (!nodes_[static_cast<std::size_t>(node)].leaf) {
            const Node& n = nodes_[static_cast<std::size_t>(node)];
            const FeatureValue* v = summary.find(n.feature);
            if (!v)
                throw PredictError("summary is missing feature " + n.feature.name());
            bool left = v->value <= n.threshold;
            path.steps.push_back(PathStep{n.feature, n.threshold, left, v->value});
            node = left ? n.left : n.right;
        }
        path.label = nodes_[static_cast<std::size_t>(node)].label;
        return {path.label, path};
    }

    const FeatureSet& features() const { return features_; }
    const TreeParams& params() const { return params_; }
    const std::vector<Node>& nodes() const { return nodes_; }

    std::size_t leaf_count() const {
        return static_cast<std::size_t>(
            std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.leaf; }));
    }

    int depth() const { return depth_below(0); }

    // indented if/else rendering with feature names, thresholds, leaf counts
    std::string dump() const {
        std::ostringstream out;
        dump_node(out, 0, 0);
        return out.str();
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["format_version"] = 1;
        j["params"] = {{"max_depth", params_.max_depth}, {"min_leaf", params_.min_leaf}};
        j["features"] = features_to_json(features_);
        nlohmann::json nodes = nlohmann::json::array();
        for (const Node& n : nodes_) {
            nlohmann::json nj;
            if (n.leaf) {
                nj["type"] = "leaf";
                nj["label"] = std::string(to_string(n.label));
                nj["pass_count"] = n.pass_count;
                nj["err_count"] = n.err_count;
            } else {
                nj["type"] = "internal";
                nj["feature"] = feature_to_json(n.feature);
                nj["threshold"] = n.threshold;
                nj["left"] = n.left;
                nj["right"] = n.right;
            }
            nodes.push_back(std::move(nj));
        }
        j["nodes"] = std::move(nodes);
        return j;
    }

    static DecisionTree from_json(const nlohmann::json& j) {
        if (j.at("format_version").get<int>() != 1)
            throw std::invalid_argument("unsupported tree format version");
        DecisionTree tree;
        tree.params_.max_depth = j.at("params").at("max_depth").get<int>();
        tree.params_.min_leaf = j.at("params").at("min_leaf").get<int>();
        tree.features_ = features_from_json(j.at("features"));
        for (const auto& nj : j.at("nodes")) {
            Node n;
            if (nj.at("type").get<std::string>() == "leaf") {
                n.leaf = true;
                n.label = parse_build_status(nj.at("label").get<std::string>());
                n.pass_count = nj.at("pass_count").get<std::int64_t>();
                n.err_count = nj.at("err_count").get<std::int64_t>();
            } else {
                n.leaf = false;
                n.feature = feature_from_json(nj.at("feature"));
                n.threshold = nj.at("threshold").get<double>();
                n.left = nj.at("left").get<int>();
                n.right = nj.at("right").get<int>();
            }
            tree.nodes_.push_back(std::move(n));
        }
        if (tree.nodes_.empty()) throw std::invalid_argument("tree has no nodes");
        return tree;
    }

private:
    static double gini(std::int64_t pass, std::int64_t err) {
        double n = static_cast<double>(pass + err);
        if (n == 0.0) return 0.0;
        double p = static_cast<double>(pass) / n, e = static_cast<double>(err) / n;
        return 1.0 - p * p - e * e;
    }

    int build_node(const std::vector<std::vector<double>>& x, const std::vector<BuildStatus>& y,
                   const std::vector<CodeFeature>& columns, std::vector<std::size_t>& subset,
                   int depth) {
        std::int64_t pass = 0, err = 0;
        for (std::size_t i : subset) (y[i] == BuildStatus::Pass ? pass : err)++;

        constexpr double kEps = 1e-12;
        bool stop = pass == 0 || err == 0 || depth >= params_.max_depth ||
                    static_cast<int>(subset.size()) < params_.min_leaf;

        std::size_t best_col = columns.size();
        double best_threshold = 0.0;
        double best_score = gini(pass, err);  // must strictly improve on the parent
        if (!stop) {
            std::vector<std::pair<double, BuildStatus>> vals(subset.size());
            for (std::size_t j = 0; j < columns.size(); ++j) {
                for (std::size_t k = 0; k < subset.size(); ++k)
                    vals[k] = {x[subset[k]][j], y[subset[k]]};
                std::sort(vals.begin(), vals.end(),
                          [](const auto& a, const auto& b) { return a.first < b.first; });
                std::int64_t lp = 0, le = 0;
                for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
                    (vals[k].second == BuildStatus::Pass ? lp : le)++;
                    if (vals[k].first == vals[k + 1].first) continue;
                    double threshold = vals[k].first + (vals[k + 1].first - vals[k].first) / 2.0;
                    double nl = static_cast<double>(k + 1);
                    double nr = static_cast<double>(vals.size() - k - 1);
                    double weighted = (nl * gini(lp, le) + nr * gini(pass - lp, err - le)) /
                                      static_cast<double>(vals.size());
                    // strict improvement keeps the first (name-ordered column,
                    // lowest threshold) winner on ties
                    if (weighted < best_score - kEps) {
                        best_score = weighted;
                        best_col = j;
                        best_threshold = threshold;
                    }
                }
            }
        }

        int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        if (best_col == columns.size()) {
            Node& leaf = nodes_.back();
            leaf.leaf = true;
            // Err wins ties: the tool exists to flag failures
            leaf.label = err >= pass ? BuildStatus::Err : BuildStatus::Pass;
            leaf.pass_count = pass;
            leaf.err_count = err;
            return id;
        }

        std::vector<std::size_t> left_set, right_set;
        for (std::size_t i : subset)
            (x[i][best_col] <= best_threshold ? left_set : right_set).push_back(i);
        subset.clear();
        subset.shrink_to_fit();

        nodes_[static_cast<std::size_t>(id)].leaf = false;
        nodes_[static_cast<std::size_t>(id)].feature = columns[best_col];
        nodes_[static_cast<std::size_t>(id)].threshold = best_threshold;
        int left = build_node(x, y, columns, left_set, depth + 1);
        nodes_[static_cast<std::size_t>(id)].left = left;
        int right = build_node(x, y, columns, right_set, depth + 1);
        nodes_[static_cast<std::size_t>(id)].right = right;
        return id;
    }

    int depth_below(int node) const {
        const Node& n = nodes_[static_cast<std::size_t>(node)];
        if (n.leaf) return 0;
        return 1 + std::max(depth_below(n.left), depth_below(n.right));
    }

    void dump_node(std::ostringstream& out, int node, int indent) const {
        const Node& n = nodes_[static_cast<std::size_t>(node)];
        std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
        if (n.leaf) {
            out << pad << "predict " << to_string(n.label) << "  [pass=" << n.pass_count
                << " err=" << n.err_count << "]\n";
            return;
        }
        out << pad << "if " << n.feature.name() << " <= " << n.threshold << ":\n";
        dump_node(out, n.left, indent + 1);
        out << pad << "else:\n";
        dump_node(out, n.right, indent + 1);
    }

    FeatureSet features_;
    TreeParams params_;
    std::vector<Node> nodes_;
};

inline double training_accuracy(const DecisionTree& tree,
                                const std::vector<TrainingSample>& samples) {
    if (samples.empty()) return 0.0;
    std::size_t hits = 0;
    for (const TrainingSample& s : samples)
        if (tree.predict(*s.summary).first == s.label) ++hits;
    return static_cast<double>(hits) / static_cast<double>(samples.size());
}

}  // namespace cicheck
