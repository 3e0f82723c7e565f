#pragma once

#include <optional>
#include <string_view>
#include <vector>

namespace gameharness::assets {

// Bundled asset lookup by path relative to the assets/ directory,
// e.g. "templates/g2048_empirical_1.txt".
std::optional<std::string_view> find(std::string_view name);
std::vector<std::string_view> list(std::string_view prefix);

}  // namespace gameharness::assets
