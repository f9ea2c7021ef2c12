#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace oee {

// Worker count: OEE_THREADS caps it, otherwise hardware concurrency.
inline int max_threads() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    if (const char* env = std::getenv("OEE_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) return std::min(hw, cap);
    }
    return hw;
}

namespace detail {
inline thread_local bool in_parallel_region = false;
}

// Runs fn(i) for i in [0, n). Each index writes only its own slot, so the
// result is independent of the thread count. Nested calls run serially on
// the calling worker. Exceptions are captured and the first one rethrown
// after all workers join.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const int threads = std::min<std::size_t>(max_threads(), n);
    if (threads <= 1 || detail::in_parallel_region) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::size_t> cursor{0};
    std::mutex cursor_mutex;
    auto worker = [&] {
        detail::in_parallel_region = true;
        for (;;) {
            std::size_t i;
            {
                std::lock_guard<std::mutex> lock(cursor_mutex);
                if (cursor[0] >= n) return;
                i = cursor[0]++;
            }
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace oee
