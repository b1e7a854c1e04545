#pragma once

#include <cstdint>
#include <functional>

namespace cmvlab {

// Thread-count policy: CMVLAB_THREADS caps parallelism, 1 forces serial.
// All parallel loops in this library assign one independent output slot per
// index, so results are bitwise identical for every thread count.
int max_threads();

// Runs body(i) for i in [0, n). Parallel when OpenMP is enabled and
// max_threads() > 1, otherwise a plain serial loop.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body);

// Serial reference loop with the same contract, kept for testing and for the
// benchmark comparing it against the OpenMP path.
void serial_for(std::int64_t n, const std::function<void(std::int64_t)>& body);

// Scoped override used by tests and the benchmark to force the serial path
// through code that normally calls parallel_for.
struct ForceSerialGuard {
    ForceSerialGuard();
    ~ForceSerialGuard();
};

}  // namespace cmvlab
