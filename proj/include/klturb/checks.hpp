#pragma once

#include <string>
#include <vector>

namespace klturb {

/// One verification outcome: |value - reference| <= tolerance unless `passed` is set otherwise.
struct Check {
    std::string name;
    double value = 0.0;
    double reference = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    std::string note;
};

inline bool all_passed(const std::vector<Check>& checks)
{
    for (const auto& c : checks)
        if (!c.passed) return false;
    return true;
}

}  // namespace klturb
