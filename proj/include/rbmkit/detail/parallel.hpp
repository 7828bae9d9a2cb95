#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <utility>
#include <vector>

namespace rbmkit {

namespace detail {

inline std::size_t& thread_count_ref() {
    static std::size_t count = 1;
    return count;
}

} // namespace detail

// Worker count for slot-parallel loops (AIS chains, per-row transfer).
// Purely a wall-time knob: every slot owns its state and rng stream, so
// outputs are byte-identical at any thread count.
inline void set_max_threads(std::size_t n) {
    detail::thread_count_ref() = n == 0 ? 1 : n;
}

inline std::size_t max_threads() { return detail::thread_count_ref(); }

namespace detail {

// fn(i) for i in [0, n), each i touching only its own slot. The first
// exception out of any worker is rethrown on the calling thread.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const std::size_t workers = std::min(max_threads(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (!failed.load(std::memory_order_relaxed)) {
                const std::size_t i =
                    next.fetch_add(1, std::memory_order_relaxed);
                if (i >= n) {
                    return;
                }
                try {
                    fn(i);
                } catch (...) {
                    if (!failed.exchange(true)) {
                        error = std::current_exception();
                    }
                    return;
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (failed.load()) {
        std::rethrow_exception(error);
    }
}

} // namespace detail

} // namespace rbmkit
