#pragma once

#include <algorithm>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cicheck/feature.hpp"
#include "cicheck/status.hpp"

namespace cicheck {

struct LabeledSummary {
    int index = 0;
    RepoSummary summary;
    BuildStatus status = BuildStatus::Pass;
    bool relabeled = false;
    BuildStatus original_status = BuildStatus::Pass;

    static LabeledSummary make(int index, RepoSummary summary, BuildStatus status) {
        LabeledSummary s;
        s.index = index;
        s.summary = std::move(summary);
        s.status = status;
        s.original_status = status;
        return s;
    }
};

// Abstraction-Based Relabelling: whenever adjacent commits have equal feature
// vectors but different statuses, the erroring one cannot be explained by the
// abstraction and is relabeled Pass. Runs to fixpoint; Pass labels never flip.
inline std::vector<LabeledSummary> abr_relabel(std::vector<LabeledSummary> seq) {
    for (std::size_t i = 1; i < seq.size(); ++i)
        if (!seq[i].summary.same_domain(seq[i - 1].summary))
            throw std::invalid_argument("abr_relabel: summaries built over mixed extractor sets");

    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 1; i < seq.size(); ++i) {
            LabeledSummary& a = seq[i - 1];
            LabeledSummary& b = seq[i];
            if (a.status == b.status) continue;
            if (!a.summary.values_equal(b.summary)) continue;
            LabeledSummary& err = a.status == BuildStatus::Err ? a : b;
            err.status = BuildStatus::Pass;
            err.relabeled = true;
            changed = true;
        }
    }
    return seq;
}

struct UndersampleResult {
    std::vector<LabeledSummary> entries;
    // false when the target rate could not be reached (warning flag)
    bool target_reached = true;
};

// Domain-aware undersampling: drop Pass entries from the middle of long
// all-Pass runs outward, never touching an entry adjacent to an Err (every
// P-E-P pattern survives), until the Err rate reaches the target.
inline UndersampleResult undersample(const std::vector<LabeledSummary>& seq,
                                     double target_error_rate) {
    if (target_error_rate <= 0.0 || target_error_rate >= 1.0)
        throw std::invalid_argument("target error rate must be in (0,1)");

    std::size_t err_count = std::count_if(seq.begin(), seq.end(), [](const LabeledSummary& s) {
        return s.status == BuildStatus::Err;
    });
    if (err_count == 0) return {seq, false};

    auto rate = [&](std::size_t n) {
        return static_cast<double>(err_count) / static_cast<double>(n);
    };
    if (seq.empty() || rate(seq.size()) >= target_error_rate) return {seq, true};

    auto protected_entry = [&](std::size_t i) {
        if (seq[i].status == BuildStatus::Err) return true;
        if (i > 0 && seq[i - 1].status == BuildStatus::Err) return true;
        if (i + 1 < seq.size() && seq[i + 1].status == BuildStatus::Err) return true;
        return false;
    };

    // removable indices grouped into maximal runs of consecutive positions
    std::vector<std::vector<std::size_t>> runs;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (protected_entry(i)) continue;
        if (runs.empty() || runs.back().back() + 1 != i) runs.emplace_back();
        runs.back().push_back(i);
    }

    std::vector<bool> removed(seq.size(), false);
    std::size_t remaining = seq.size();
    while (rate(remaining) < target_error_rate) {
        // longest run first, earliest run on ties; take its middle element
        std::size_t best = runs.size();
        for (std::size_t r = 0; r < runs.size(); ++r)
            if (!runs[r].empty() && (best == runs.size() || runs[r].size() > runs[best].size()))
                best = r;
        if (best == runs.size()) break;  // nothing left to remove
        auto& run = runs[best];
        std::size_t victim = run[run.size() / 2];
        run.erase(run.begin() + static_cast<std::ptrdiff_t>(run.size() / 2));
        removed[victim] = true;
        --remaining;
    }

    UndersampleResult out;
    out.entries.reserve(remaining);
    for (std::size_t i = 0; i < seq.size(); ++i)
        if (!removed[i]) out.entries.push_back(seq[i]);
    out.target_reached = rate(remaining) >= target_error_rate;
    return out;
}

// Debug dump: one row per input entry with its original status, ABR status,
// and whether undersampling dropped it.
inline std::string dataset_debug_tsv(const std::vector<LabeledSummary>& post_abr,
                                     const UndersampleResult& sampled) {
    std::size_t next_kept = 0;
    std::ostringstream out;
    out << "index\toriginal_status\tabr_status\tremoved\n";
    for (const LabeledSummary& s : post_abr) {
        bool kept = next_kept < sampled.entries.size() &&
                    sampled.entries[next_kept].index == s.index;
        if (kept) ++next_kept;
        out << s.index << '\t' << to_string(s.original_status) << '\t'
            << to_string(s.status) << '\t' << (kept ? 0 : 1) << '\n';
    }
    return out.str();
}

}  // namespace cicheck
