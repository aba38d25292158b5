#pragma once

#include <string_view>

namespace purrfect {

std::string_view software_version() noexcept;

}  // namespace purrfect
