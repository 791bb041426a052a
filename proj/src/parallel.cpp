#include "tcbct/parallel.hpp"

#include <cstdlib>
#include <string>

namespace tcbct {

namespace {
std::atomic<int> g_threads{0};
}

int thread_count() {
  if (const int n = g_threads.load(); n > 0) return n;
  if (const char* env = std::getenv("TRUNC_CBCT_THREADS")) {
    try {
      if (const int n = std::stoi(env); n > 0) return n;
    } catch (const std::exception&) {
      // fall through to the hardware default
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void set_thread_count(int n) { g_threads = std::max(0, n); }

}  // namespace tcbct
