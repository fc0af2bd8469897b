#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace ifpca {

// Worker cap shared by every parallel loop in the library. Results never
// depend on it: work is split by index and each index writes its own slot.
void set_num_threads(unsigned threads);
unsigned num_threads();

// Runs body(begin, end) over contiguous chunks of [0, count).
void parallel_for(std::size_t count,
                  const std::function<void(std::size_t, std::size_t)>& body);

// SplitMix64 finalizer; used to derive independent per-index seeds from a
// master seed so parallel streams never depend on scheduling.
std::uint64_t mix_seed(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                          std::uint64_t index);

}  // namespace ifpca
