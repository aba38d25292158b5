#include "purrfect/version.hpp"

#ifndef PURRFECT_VERSION
#define PURRFECT_VERSION "dev"
#endif

namespace purrfect {

std::string_view software_version() noexcept { return PURRFECT_VERSION; }

}  // namespace purrfect
