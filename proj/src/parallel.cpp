#include "tessperc/parallel.hpp"

#include <cstdlib>
#include <string>

namespace tessperc {

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("TESSPERC_WORKERS")) {
    try {
      int w = std::stoi(env);
      if (w > 0) return w;
    } catch (const std::exception&) {
    }
  }
  return 1;
}

}  // namespace tessperc
