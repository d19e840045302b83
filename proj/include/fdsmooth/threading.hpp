#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace fdsmooth {

// Runs fn(begin, end) over a static partition of [0, count) into contiguous
// blocks, one per worker. Each block must write only its own outputs; results
// are then independent of the worker count, which keeps runs bit-reproducible.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
    if (count == 0) return;
    std::size_t workers = threads < 1 ? 1 : static_cast<std::size_t>(threads);
    if (workers > count) workers = count;
    if (workers == 1) {
        fn(std::size_t{0}, count);
        return;
    }
    const std::size_t base = count / workers;
    const std::size_t rem = count % workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::size_t begin = 0;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t len = base + (w < rem ? 1 : 0);
        const std::size_t end = begin + len;
        pool.emplace_back([&fn, begin, end] { fn(begin, end); });
        begin = end;
    }
    for (std::thread& t : pool) t.join();
}

}  // namespace fdsmooth
