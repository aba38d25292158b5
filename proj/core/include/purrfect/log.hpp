#pragma once

namespace purrfect {

/// Configures the process-wide logger from PURRFECT_LOG_LEVEL
/// (trace|debug|info|warn|error|off; default warn). Idempotent.
void init_logging();

}  // namespace purrfect
