#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cicheck/snapshot.hpp"

namespace cicheck {

// Line-level diff between two logical-line sequences, LCS-based. Good enough
// for config-sized files; inputs beyond the DP budget fall back to a plain
// prefix/suffix trim with the middle treated as one replacement run.
namespace textdiff {

enum class OpKind { Equal, Del, Ins };

struct Op {
    OpKind kind;
    // index into the old sequence for Equal/Del, into the new one for Ins
    std::size_t index;
};

inline std::vector<Op> diff_ops(const std::vector<LogicalLine>& a,
                                const std::vector<LogicalLine>& b) {
    std::size_t lo = 0;
    while (lo < a.size() && lo < b.size() && a[lo].text == b[lo].text) ++lo;
    std::size_t ta = a.size(), tb = b.size();
    while (ta > lo && tb > lo && a[ta - 1].text == b[tb - 1].text) --ta, --tb;

    std::vector<Op> ops;
    for (std::size_t i = 0; i < lo; ++i) ops.push_back({OpKind::Equal, i});

    std::size_t n = ta - lo, m = tb - lo;
    constexpr std::size_t kDpBudget = 4'000'000;
    if (n > 0 && m > 0 && n * m <= kDpBudget) {
        // LCS lengths, then walk back to emit ops in forward order
        std::vector<std::vector<std::uint32_t>> lcs(n + 1,
                                                    std::vector<std::uint32_t>(m + 1, 0));
        for (std::size_t i = n; i-- > 0;)
            for (std::size_t j = m; j-- > 0;)
                lcs[i][j] = a[lo + i].text == b[lo + j].text
                                ? lcs[i + 1][j + 1] + 1
                                : std::max(lcs[i + 1][j], lcs[i][j + 1]);
        std::size_t i = 0, j = 0;
        while (i < n && j < m) {
            if (a[lo + i].text == b[lo + j].text) {
                ops.push_back({OpKind::Equal, lo + i});
                ++i, ++j;
            } else if (lcs[i + 1][j] >= lcs[i][j + 1]) {
                ops.push_back({OpKind::Del, lo + i});
                ++i;
            } else {
                ops.push_back({OpKind::Ins, lo + j});
                ++j;
            }
        }
        for (; i < n; ++i) ops.push_back({OpKind::Del, lo + i});
        for (; j < m; ++j) ops.push_back({OpKind::Ins, lo + j});
    } else {
        for (std::size_t i = lo; i < ta; ++i) ops.push_back({OpKind::Del, i});
        for (std::size_t j = lo; j < tb; ++j) ops.push_back({OpKind::Ins, j});
    }

    for (std::size_t i = ta; i < a.size(); ++i) ops.push_back({OpKind::Equal, i});
    return ops;
}

// Removed/added line pairs: within each run of non-equal ops, the k-th
// deleted line is paired with the k-th inserted line. Unpaired lines
// (pure insertions or deletions) are not reported.
inline std::vector<std::pair<const LogicalLine*, const LogicalLine*>> changed_pairs(
    const std::vector<LogicalLine>& a, const std::vector<LogicalLine>& b) {
    std::vector<std::pair<const LogicalLine*, const LogicalLine*>> pairs;
    auto ops = diff_ops(a, b);
    std::size_t i = 0;
    while (i < ops.size()) {
        if (ops[i].kind == OpKind::Equal) {
            ++i;
            continue;
        }
        std::vector<const LogicalLine*> dels, inss;
        while (i < ops.size() && ops[i].kind != OpKind::Equal) {
            if (ops[i].kind == OpKind::Del)
                dels.push_back(&a[ops[i].index]);
            else
                inss.push_back(&b[ops[i].index]);
            ++i;
        }
        for (std::size_t k = 0; k < dels.size() && k < inss.size(); ++k)
            pairs.emplace_back(dels[k], inss[k]);
    }
    return pairs;
}

inline std::size_t edit_count(const std::vector<LogicalLine>& a,
                              const std::vector<LogicalLine>& b) {
    std::size_t n = 0;
    for (const Op& op : diff_ops(a, b))
        if (op.kind != OpKind::Equal) ++n;
    return n;
}

}  // namespace textdiff

// Total changed logical lines (added + deleted) between two snapshots.
inline std::size_t snapshot_edit_count(const RepoSnapshot& prev, const RepoSnapshot& next) {
    static const std::vector<LogicalLine> kEmpty;
    std::size_t total = 0;
    auto it_a = prev.files.begin();
    auto it_b = next.files.begin();
    while (it_a != prev.files.end() || it_b != next.files.end()) {
        if (it_b == next.files.end() ||
            (it_a != prev.files.end() && it_a->first < it_b->first)) {
            total += it_a->second.size();
            ++it_a;
        } else if (it_a == prev.files.end() || it_b->first < it_a->first) {
            total += it_b->second.size();
            ++it_b;
        } else {
            total += textdiff::edit_count(it_a->second, it_b->second);
            ++it_a, ++it_b;
        }
    }
    return total;
}

}  // namespace cicheck
