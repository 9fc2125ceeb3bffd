#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace vascnet {

/// Process-wide worker count used by the parallel loops. 1 disables threading.
unsigned thread_count();
void set_thread_count(unsigned n);

/// Splits [0, n) into contiguous ranges and runs `body(begin, end)` on each.
/// Callers must write only to disjoint outputs so results cannot depend on the
/// schedule.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
    const unsigned workers = std::max(1u, std::min<unsigned>(thread_count(), static_cast<unsigned>(n)));
    if (workers <= 1 || n < 2) {
        if (n > 0) body(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t step = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t b = w * step;
        const std::size_t e = std::min(n, b + step);
        if (b >= e) break;
        pool.emplace_back([&body, b, e] { body(b, e); });
    }
    for (auto& t : pool) t.join();
}

/// Reduction over [0, n) with a chunking that does not depend on the thread
/// count: partial sums are formed per fixed-size chunk and added in chunk
/// order, so the result is bit-identical for any number of workers.
template <typename T, typename ChunkFn>
T chunked_sum(std::size_t n, ChunkFn&& chunk_fn, std::size_t chunk = 1u << 14) {
    const std::size_t chunks = (n + chunk - 1) / chunk;
    std::vector<T> partial(chunks, T{});
    parallel_for(chunks, [&](std::size_t b, std::size_t e) {
        for (std::size_t c = b; c < e; ++c) {
            partial[c] = chunk_fn(c * chunk, std::min(n, (c + 1) * chunk));
        }
    });
    T total{};
    for (const auto& p : partial) total += p;
    return total;
}

}  // namespace vascnet
