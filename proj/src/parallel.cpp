#include "robising/parallel.hpp"

#include <cstdlib>
#include <string>

namespace robising {

int worker_count() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (const char* env = std::getenv("ROBUST_ISING_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap >= 1) return std::min(hw, cap);
    } catch (const std::exception&) {
      // Ignore malformed values.
    }
  }
  return hw;
}

}  // namespace robising
