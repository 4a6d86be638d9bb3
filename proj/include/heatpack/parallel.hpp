#pragma once

#include <cstddef>
#include <functional>

namespace heatpack {

// Number of worker threads used by parallel_for. 0 selects hardware concurrency.
void set_threads(unsigned n);
unsigned threads();

// Calls body(i) for i in [0, n). Work is split into fixed contiguous blocks, so
// results written by index do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace heatpack
