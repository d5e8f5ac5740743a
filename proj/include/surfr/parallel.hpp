#pragma once

#include <cstdlib>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif
#include <Eigen/Core>

namespace surfr {

// Worker-thread cap. Resolution order: explicit argument, SURFR_THREADS env
// var, hardware concurrency. All parallel regions in the library partition
// work by output element, so results do not depend on the thread count.
inline int resolve_thread_count(int requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SURFR_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

inline void init_threads(int requested = 0) {
  const int n = resolve_thread_count(requested);
#ifdef _OPENMP
  omp_set_num_threads(n);
#endif
  Eigen::setNbThreads(n);
}

}  // namespace surfr
