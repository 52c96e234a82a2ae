#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ergolab {

/// Thread count used when a caller passes 0.
inline std::size_t default_threads()
{
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Calls body(begin, end) on contiguous chunks of [0, count). Chunk
/// boundaries depend only on `count` and `threads`; callers write results by
/// index and reduce afterwards in index order, so output never depends on
/// scheduling.
template <class Body>
void parallel_for(std::size_t count, std::size_t threads, Body&& body)
{
    if (threads == 0) threads = default_threads();
    threads = std::min(threads, std::max<std::size_t>(1, count));
    if (threads <= 1) {
        body(std::size_t{0}, count);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        const std::size_t chunk = (count + threads - 1) / threads;
        for (std::size_t t = 0; t < threads; ++t) {
            const std::size_t begin = t * chunk, end = std::min(count, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back([&, begin, end] {
                try {
                    body(begin, end);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

} // namespace ergolab
