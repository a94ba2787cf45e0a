#pragma once

#include <array>
#include <string_view>
#include <utility>

namespace stableprod {

inline constexpr std::string_view kLibraryVersion = "1.0.0";

/// Bumped whenever a module changes the numbers it produces for a fixed seed.
inline constexpr std::array<std::pair<std::string_view, std::string_view>, 6>
    kModuleVersions{{{"rng", "1.0.0"},
                     {"paths", "1.0.0"},
                     {"analytics", "1.0.0"},
                     {"estimators", "1.0.0"},
                     {"bridge", "1.0.0"},
                     {"cli", "1.0.0"}}};

}  // namespace stableprod
