#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace gridlay {

/// Technology documents compiled into the library, looked up by tech name.
std::optional<std::string> builtin_tech_text(std::string_view name);

}  // namespace gridlay
