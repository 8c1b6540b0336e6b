#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sphdir {

// Thread count from SPHDIR_THREADS, else the hardware concurrency (at least 1).
int default_thread_count();

namespace detail {
inline thread_local bool in_parallel_region = false;
}

// Runs body(i) for i in [0, count) on a small pool. Work items must write only to
// their own output slots; the first exception thrown is rethrown on the caller.
// Calls made from inside a running body execute serially.
template <class Body>
void parallel_for(std::size_t count, Body&& body, int threads = default_thread_count()) {
    if (count == 0) return;
    const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(threads < 1 ? 1 : threads));
    if (workers == 1 || detail::in_parallel_region) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run = [&] {
        const bool outer = detail::in_parallel_region;
        detail::in_parallel_region = true;
        struct Reset {
            bool value;
            ~Reset() { detail::in_parallel_region = value; }
        } reset{outer};
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(count);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace sphdir
