#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace heraldsim {

using Rng = std::mt19937_64;

/// Derives an independent 64-bit seed for sub-stream `stream` of a run seeded
/// with `seed` (splitmix64 finalizer over both words). Every parallel task
/// owns the generator built from its own derived seed, so results do not
/// depend on scheduling.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng(derive_seed(seed, stream));
}

/// Runs `body(i)` for i in [0, count) on a small pool of std::threads.
/// Work is split into contiguous chunks; the body must only write to
/// per-index storage.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace heraldsim
