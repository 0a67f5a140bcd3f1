#include "cpg/threading.hpp"

#include <algorithm>

namespace cpg {

namespace {
std::atomic<int> g_thread_cap{0};
}

void set_thread_cap(int n) { g_thread_cap.store(n < 0 ? 0 : n, std::memory_order_relaxed); }

int thread_cap() { return g_thread_cap.load(std::memory_order_relaxed); }

namespace detail {

int resolved_thread_count(std::size_t items) {
    int cap = thread_cap();
    if (cap == 0) {
        unsigned hw = std::thread::hardware_concurrency();
        cap = hw == 0 ? 1 : static_cast<int>(hw);
    }
    if (items < 2) return 1;
    return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(cap), items));
}

}  // namespace detail

}  // namespace cpg
