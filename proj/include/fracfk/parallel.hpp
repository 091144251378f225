#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace fracfk {

// Resolves a requested worker count: positive values are used as given,
// otherwise FRACFK_THREADS is consulted, falling back to 1.
[[nodiscard]] int resolve_threads(int requested);

// Runs body(i) for i in [0, n) over contiguous blocks. Each index must write
// only its own output slot; the first exception thrown is rethrown.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

// Pairwise summation in index order. The result depends only on the values,
// never on how they were produced.
[[nodiscard]] double pairwise_sum(std::span<const double> v);

}  // namespace fracfk
