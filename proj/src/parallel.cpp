#include "kens/parallel.hpp"

#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace kens::parallel {

namespace {
std::atomic<int> g_threads{0};
std::atomic<bool> g_deterministic{false};
}  // namespace

void set_threads(int n) {
  g_threads.store(n < 0 ? 0 : n);
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#endif
}

int threads() { return g_threads.load(); }

void set_deterministic(bool on) { g_deterministic.store(on); }

bool deterministic() { return g_deterministic.load(); }

bool enabled() {
#ifdef _OPENMP
  return !g_deterministic.load() && g_threads.load() != 1;
#else
  return false;
#endif
}

}  // namespace kens::parallel
