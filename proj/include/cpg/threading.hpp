#ifndef CPG_THREADING_HPP
#define CPG_THREADING_HPP

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace cpg {

// Global cap on worker threads (CLI --threads). 0 means hardware default.
void set_thread_cap(int n);
int thread_cap();

namespace detail {
int resolved_thread_count(std::size_t items);
}

// Runs fn(i) for i in [0, n). Work items must be independent; results must
// not depend on which thread runs which item.
template <class F>
void parallel_for(std::size_t n, F&& fn) {
    const int workers = detail::resolved_thread_count(n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto run = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) break;
            fn(i);
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers) - 1);
    for (int t = 1; t < workers; ++t) pool.emplace_back(run);
    run();
}

// Deterministic sum of per-element terms: the index space is split into
// fixed 4096-element chunks, each chunk is accumulated sequentially in
// double, and chunk partials are combined in chunk order. The result is
// identical for every thread count.
inline constexpr std::size_t kSumChunk = 4096;

template <class PerChunk>
double deterministic_chunked_sum(std::size_t n, PerChunk&& partial_of) {
    if (n == 0) return 0.0;
    const std::size_t chunks = (n + kSumChunk - 1) / kSumChunk;
    std::vector<double> partials(chunks);
    parallel_for(chunks, [&](std::size_t c) {
        const std::size_t begin = c * kSumChunk;
        const std::size_t end = begin + std::min(kSumChunk, n - begin);
        partials[c] = partial_of(begin, end);
    });
    double total = 0.0;
    for (double p : partials) total += p;
    return total;
}

// Element-wise form: term(i) summed with the same fixed chunking.
template <class Term>
double deterministic_sum(std::size_t n, Term&& term) {
    return deterministic_chunked_sum(n, [&](std::size_t b, std::size_t e) {
        double acc = 0.0;
        for (std::size_t i = b; i < e; ++i) acc += term(i);
        return acc;
    });
}

}  // namespace cpg

#endif
