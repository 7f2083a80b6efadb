#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace glauber {

namespace detail {
inline std::atomic<int>& thread_setting() {
    static std::atomic<int> n{0};
    return n;
}
}  // namespace detail

/// Worker count for operator application. 0 (default) means: GLAUBER_THREADS
/// if set, else hardware concurrency.
inline void set_num_threads(int n) { detail::thread_setting() = n; }

inline int num_threads() {
    int n = detail::thread_setting();
    if (n > 0) return n;
    if (const char* env = std::getenv("GLAUBER_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs f(i) for i in [0, n). Each index is handled by exactly one worker, so
/// writes to distinct output slots need no synchronization and results do not
/// depend on the worker count.
template <class F>
void parallel_for(std::size_t n, F&& f, std::size_t min_chunk = 32) {
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(num_threads()), (n + min_chunk - 1) / min_chunk);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> cursor{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        try {
            while (true) {
                const std::size_t begin = cursor.fetch_add(min_chunk);
                if (begin >= n) break;
                const std::size_t end = std::min(n, begin + min_chunk);
                for (std::size_t i = begin; i < end; ++i) f(i);
            }
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            cursor = n;
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace glauber
