#include "heatpack/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace heatpack {

namespace {
std::atomic<unsigned> g_threads{0};
}

void set_threads(unsigned n) { g_threads = n; }

unsigned threads()
{
    unsigned n = g_threads;
    if (n == 0)
        n = std::max(1u, std::thread::hardware_concurrency());
    return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body)
{
    const std::size_t workers = std::min<std::size_t>(threads(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            body(i);
        return;
    }
    std::exception_ptr first;
    std::mutex guard;
    std::vector<std::thread> pool;
    const std::size_t block = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * block;
        const std::size_t hi = std::min(n, lo + block);
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i)
                    body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(guard);
                if (!first)
                    first = std::current_exception();
            }
        });
    }
    for (auto& t : pool)
        t.join();
    if (first)
        std::rethrow_exception(first);
}

} // namespace heatpack
