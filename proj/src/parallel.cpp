#include "ptycho/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ptycho {
namespace {

std::atomic<int> g_cap{0};

int env_cap() {
  static const int cap = [] {
    const char* s = std::getenv("PTYCHO_DRS_THREADS");
    if (!s || !*s) return 0;
    char* end = nullptr;
    const long v = std::strtol(s, &end, 10);
    return (end && *end == '\0' && v > 0) ? static_cast<int>(std::min(v, 1024L)) : 0;
  }();
  return cap;
}

}  // namespace

int worker_threads() {
#ifdef _OPENMP
  int n = omp_get_max_threads();
#else
  int n = 1;
#endif
  if (const int e = env_cap(); e > 0) n = std::min(n, e);
  if (const int c = g_cap.load(); c > 0) n = std::min(n, c);
  return std::max(n, 1);
}

void set_thread_cap(int threads) { g_cap.store(std::max(threads, 0)); }

}  // namespace ptycho
