#pragma once

#include <filesystem>
#include <string>

#include "mrsafe/scenario.hpp"

namespace mrsafe::testutil {

inline std::filesystem::path scenario_path(const std::string& name) {
    return std::filesystem::path(MRSAFE_SCENARIO_DIR) / (name + ".json");
}

inline ScenarioSpec load(const std::string& name, const std::vector<std::string>& overrides = {}) {
    return load_scenario(scenario_path(name), overrides);
}

/// One robot driving along +x from the origin, no obstacles.
inline ScenarioSpec single_robot(double t_end = 2.0) {
    return parse_scenario(R"({
      "robots": [{"pose": {"x": 0, "y": 0, "theta": 0},
                  "reference": {"kind": "line", "goal": [4, 0], "duration": 8}}],
      "sim": {"t_end": )" + std::to_string(t_end) + "}}");
}

}  // namespace mrsafe::testutil
