#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cicheck {

// A logical line: one or more physical lines joined into a single unit of
// text, remembering the original 1-based line span.
struct LogicalLine {
    std::string text;
    int first_line = 0;
    int last_line = 0;

    bool operator==(const LogicalLine&) const = default;
};

inline std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            if (start < text.size()) out.emplace_back(text.substr(start));
            break;
        }
        std::string_view line = text.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        out.emplace_back(line);
        start = nl + 1;
    }
    return out;
}

inline std::string_view rstrip(std::string_view s) {
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline std::string_view strip(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    return rstrip(s);
}

inline int bracket_balance(std::string_view s) {
    int bal = 0;
    for (char c : s) {
        if (c == '(' || c == '[' || c == '{') ++bal;
        if (c == ')' || c == ']' || c == '}') --bal;
    }
    return bal;
}

// Merge physical lines into logical lines. A line whose (right-trimmed) text
// ends with '\' is glued to its successor with the backslash dropped. A line
// left with unbalanced open brackets is glued to successors, separated by a
// single space, until balanced or 5 physical lines have been consumed.
inline std::vector<LogicalLine> join_continuations(const std::vector<std::string>& raw) {
    std::vector<LogicalLine> out;
    std::size_t i = 0;
    while (i < raw.size()) {
        std::string acc = raw[i];
        int first = static_cast<int>(i) + 1;
        int consumed = 1;
        while (i + 1 < raw.size()) {
            std::string_view trimmed = rstrip(acc);
            if (!trimmed.empty() && trimmed.back() == '\\') {
                acc = std::string(trimmed.substr(0, trimmed.size() - 1));
                acc += raw[++i];
                ++consumed;
                continue;
            }
            if (bracket_balance(acc) > 0 && consumed < 5) {
                acc += ' ';
                acc += raw[++i];
                ++consumed;
                continue;
            }
            break;
        }
        out.push_back(LogicalLine{std::move(acc), first, static_cast<int>(i) + 1});
        ++i;
    }
    return out;
}

}  // namespace cicheck
