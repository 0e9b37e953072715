#pragma once

#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace atransn {

// Worker thread count for the OpenMP kernels. ATRANSN_THREADS caps it;
// 0 or unset falls back to the OpenMP default. Every parallel kernel in
// this project merges per-item results in item order, so the outputs
// are bit-identical for any thread count.
inline int thread_count() {
#ifdef _OPENMP
    int n = omp_get_max_threads();
    if (const char* env = std::getenv("ATRANSN_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1 && cap < n) n = cap;
    }
    return n;
#else
    return 1;
#endif
}

}  // namespace atransn
