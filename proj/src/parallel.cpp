#include "cmvlab/parallel.hpp"

#include <atomic>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cmvlab {

namespace {
std::atomic<int> g_force_serial{0};
}

int max_threads() {
    if (g_force_serial.load(std::memory_order_relaxed) > 0) return 1;
    if (const char* env = std::getenv("CMVLAB_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void serial_for(std::int64_t n, const std::function<void(std::int64_t)>& body) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body) {
    const int nt = max_threads();
    if (nt <= 1 || n < 2) {
        serial_for(n, body);
        return;
    }
#ifdef _OPENMP
    // Exceptions may not unwind out of an OpenMP region; keep the first one.
    std::exception_ptr error;
    std::atomic<bool> failed{false};
#pragma omp parallel for schedule(static) num_threads(nt)
    for (std::int64_t i = 0; i < n; ++i) {
        if (failed.load(std::memory_order_relaxed)) continue;
        try {
            body(i);
        } catch (...) {
#pragma omp critical(cmvlab_parallel_error)
            {
                if (!failed.exchange(true)) error = std::current_exception();
            }
        }
    }
    if (error) std::rethrow_exception(error);
#else
    serial_for(n, body);
#endif
}

ForceSerialGuard::ForceSerialGuard() { g_force_serial.fetch_add(1); }
ForceSerialGuard::~ForceSerialGuard() { g_force_serial.fetch_sub(1); }

}  // namespace cmvlab
