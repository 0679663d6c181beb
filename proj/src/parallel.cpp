#include "dynperc/parallel.hpp"

#include <cstdlib>
#include <string>

namespace dynperc {

std::size_t resolve_workers(std::size_t requested) {
  if (const char* env = std::getenv("DYNPERC_WORKERS"); env != nullptr && *env != '\0') {
    try {
      requested = static_cast<std::size_t>(std::stoul(env));
    } catch (const std::exception&) {
      // Ignore malformed values and keep the configured count.
    }
  }
  if (requested == 0) requested = std::max(1u, std::thread::hardware_concurrency());
  return requested;
}

}  // namespace dynperc
