#pragma once

#include <string_view>
#include <utility>
#include <vector>

namespace magspec::detail {

// (name, JSON text) for every file in presets/, generated at configure time.
const std::vector<std::pair<std::string_view, std::string_view>>& embedded_presets();

}  // namespace magspec::detail
