#include "svsr/threading.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <string>

namespace svsr {

void configure_threads_from_env() {
    const char* env = std::getenv("SVSR_THREADS");
    if (!env) return;
    try {
        int requested = std::stoi(env);
        if (requested >= 1) {
            omp_set_num_threads(std::min(requested, omp_get_num_procs()));
        }
    } catch (...) {
        // Malformed value: leave the OpenMP default in place.
    }
}

int thread_count() {
    return omp_get_max_threads();
}

}  // namespace svsr
