#pragma once

#include <cstddef>

namespace icut {

/// Applies the ICUT_THREADS cap (if set) to the OpenMP runtime.
/// Returns the worker count in effect.
int configure_threads_from_env();

void set_threads(int n);
int max_threads();

/// Fixed chunking used by every reduction. Chunk boundaries depend only on
/// the problem size, never on the worker count, so summing per-chunk
/// partials in chunk order gives identical bits for any thread count.
constexpr std::size_t kReductionChunk = 64;

constexpr std::size_t chunk_count(std::size_t n, std::size_t chunk = kReductionChunk) {
    return (n + chunk - 1) / chunk;
}

}  // namespace icut
