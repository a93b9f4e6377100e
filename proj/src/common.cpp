#include "glw/common.hpp"

#include <cstdlib>

namespace glw {

std::size_t worker_threads() {
    const char* env = std::getenv("GLW_THREADS");
    if (!env) return 1;
    const long v = std::strtol(env, nullptr, 10);
    return v > 1 ? static_cast<std::size_t>(v) : 1;
}

}  // namespace glw
