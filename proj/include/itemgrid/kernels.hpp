#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace itemgrid::kernels {

// Bit-counting kernels over packed 64-bit transaction bitmaps. The scalar
// kernel is the portable reference; the SIMD variants must produce identical
// results and are picked at runtime from what the host CPU supports.
enum class Kind { scalar, avx2, neon };

bool available(Kind kind);
Kind best_available();
std::string_view name(Kind kind);

/// Popcount of the bitwise AND of `rows` word arrays of `words` words each.
/// Zero rows count as an empty intersection (0).
std::uint64_t intersect_count(Kind kind, std::span<const std::uint64_t *const> rows,
                              std::size_t words);

/// Popcount of a single word array.
std::uint64_t popcount_words(Kind kind, const std::uint64_t *row, std::size_t words);

}  // namespace itemgrid::kernels
