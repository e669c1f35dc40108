#pragma once

#include <string_view>

namespace prml {

/// Short git commit the library was configured from, or "unknown".
std::string_view build_commit();

}  // namespace prml
