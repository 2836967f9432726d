#ifndef GFDTL_PARALLEL_HPP
#define GFDTL_PARALLEL_HPP

/*
 * Minimal fork-join helper for embarrassingly parallel sweeps (grid fits,
 * replication batches).  Work items write to index-addressed slots, so the
 * result is identical regardless of scheduling.
 */

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace gfdtl {

/// Worker count to use: the GFDTL_THREADS environment variable overrides the
/// requested value; anything unparsable or nonpositive falls through.
inline int resolve_jobs(int requested) {
    if (const char* env = std::getenv("GFDTL_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
    }
    return std::max(1, requested);
}

/// Run fn(i) for i in [0, n) on up to `jobs` threads.  The first exception
/// thrown by any item is rethrown after all workers stop.
template <typename Fn>
void parallel_for(int n, int jobs, Fn&& fn) {
    jobs = std::clamp(jobs, 1, std::max(1, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::atomic<bool> abort{false};
    std::exception_ptr first_error;
    std::mutex error_mu;
    auto work = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n || abort.load()) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!first_error) first_error = std::current_exception();
                abort.store(true);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int w = 0; w < jobs; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace gfdtl

#endif  // GFDTL_PARALLEL_HPP
