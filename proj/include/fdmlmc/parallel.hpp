#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace fdmlmc {

// Worker count; 0 means all hardware threads.
inline unsigned resolve_workers(int requested) {
    if (requested > 0) return static_cast<unsigned>(requested);
    return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(i) for i in [0, count). Tasks are handed out dynamically; results
// must be written to per-index slots. If tasks throw, the exception of the
// lowest failing index is rethrown after all workers finish.
template <class Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
    const unsigned nthreads = static_cast<unsigned>(std::min<std::size_t>(resolve_workers(workers), count));
    if (nthreads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    // lowest failing index so far; later indices are skipped
    std::atomic<std::size_t> first_failure{count};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count || i > first_failure.load()) return;
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
                std::size_t cur = first_failure.load();
                while (i < cur && !first_failure.compare_exchange_weak(cur, i)) {}
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(nthreads);
    for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    pool.clear();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace fdmlmc
