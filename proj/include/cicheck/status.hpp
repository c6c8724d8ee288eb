#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cicheck {

// Raw CI outcome as reported by the CI service.
enum class RawStatus : std::uint8_t { Pass, Fail, Err };

// Collapsed label: Pass means the build itself succeeded (tests may have
// failed); Err means the build process broke before tests could run.
enum class BuildStatus : std::uint8_t { Pass, Err };

// Status change between two adjacent commits.
enum class Transition : std::uint8_t { PP, PE, EP, EE };

inline BuildStatus collapse_status(RawStatus raw) {
    return raw == RawStatus::Err ? BuildStatus::Err : BuildStatus::Pass;
}

inline Transition status_transition(BuildStatus s_t, BuildStatus s_t1) {
    if (s_t == BuildStatus::Pass)
        return s_t1 == BuildStatus::Pass ? Transition::PP : Transition::PE;
    return s_t1 == BuildStatus::Pass ? Transition::EP : Transition::EE;
}

inline std::string_view to_string(RawStatus s) {
    switch (s) {
        case RawStatus::Pass: return "passed";
        case RawStatus::Fail: return "failed";
        case RawStatus::Err: return "errored";
    }
    return "";
}

inline std::string_view to_string(BuildStatus s) {
    return s == BuildStatus::Pass ? "pass" : "err";
}

inline std::string_view to_string(Transition t) {
    switch (t) {
        case Transition::PP: return "PP";
        case Transition::PE: return "PE";
        case Transition::EP: return "EP";
        case Transition::EE: return "EE";
    }
    return "";
}

inline RawStatus parse_raw_status(std::string_view text) {
    if (text == "passed") return RawStatus::Pass;
    if (text == "failed") return RawStatus::Fail;
    if (text == "errored") return RawStatus::Err;
    throw std::invalid_argument("unknown raw status: \"" + std::string(text) +
                                "\" (expected passed|failed|errored)");
}

inline BuildStatus parse_build_status(std::string_view text) {
    if (text == "pass") return BuildStatus::Pass;
    if (text == "err") return BuildStatus::Err;
    throw std::invalid_argument("unknown build status: \"" + std::string(text) + "\"");
}

}  // namespace cicheck
