#pragma once

namespace svsr {

// Applies the SVSR_THREADS environment variable (if set) as a cap on the
// number of OpenMP threads used by op kernels. Safe to call more than once.
void configure_threads_from_env();

// Current intra-op thread count.
int thread_count();

}  // namespace svsr
