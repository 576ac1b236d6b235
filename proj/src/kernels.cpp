#include "itemgrid/kernels.hpp"

#include <bit>
#include <stdexcept>

#if defined(__x86_64__) || defined(__amd64__) || defined(__i386__)
#define ITEMGRID_KERNEL_X86 1
#include <immintrin.h>
#elif defined(__aarch64__)
#define ITEMGRID_KERNEL_NEON 1
#include <arm_neon.h>
#endif

namespace itemgrid::kernels {
namespace {

std::uint64_t intersect_scalar(std::span<const std::uint64_t *const> rows,
                               std::size_t words) {
  std::uint64_t total = 0;
  for (std::size_t w = 0; w < words; ++w) {
    std::uint64_t acc = rows[0][w];
    for (std::size_t r = 1; r < rows.size(); ++r) acc &= rows[r][w];
    total += static_cast<std::uint64_t>(std::popcount(acc));
  }
  return total;
}

#if ITEMGRID_KERNEL_X86
__attribute__((target("avx2"))) std::uint64_t intersect_avx2(
    std::span<const std::uint64_t *const> rows, std::size_t words) {
  std::uint64_t total = 0;
  std::size_t w = 0;
  for (; w + 4 <= words; w += 4) {
    __m256i acc =
        _mm256_loadu_si256(reinterpret_cast<const __m256i *>(rows[0] + w));
    for (std::size_t r = 1; r < rows.size(); ++r) {
      acc = _mm256_and_si256(
          acc, _mm256_loadu_si256(reinterpret_cast<const __m256i *>(rows[r] + w)));
    }
    alignas(32) std::uint64_t lanes[4];
    _mm256_store_si256(reinterpret_cast<__m256i *>(lanes), acc);
    total += static_cast<std::uint64_t>(std::popcount(lanes[0])) +
             static_cast<std::uint64_t>(std::popcount(lanes[1])) +
             static_cast<std::uint64_t>(std::popcount(lanes[2])) +
             static_cast<std::uint64_t>(std::popcount(lanes[3]));
  }
  for (; w < words; ++w) {
    std::uint64_t acc = rows[0][w];
    for (std::size_t r = 1; r < rows.size(); ++r) acc &= rows[r][w];
    total += static_cast<std::uint64_t>(std::popcount(acc));
  }
  return total;
}
#endif

#if ITEMGRID_KERNEL_NEON
std::uint64_t intersect_neon(std::span<const std::uint64_t *const> rows,
                             std::size_t words) {
  std::uint64_t total = 0;
  std::size_t w = 0;
  for (; w + 2 <= words; w += 2) {
    uint8x16_t acc =
        vld1q_u8(reinterpret_cast<const std::uint8_t *>(rows[0] + w));
    for (std::size_t r = 1; r < rows.size(); ++r) {
      acc = vandq_u8(acc,
                     vld1q_u8(reinterpret_cast<const std::uint8_t *>(rows[r] + w)));
    }
    total += vaddlvq_u8(vcntq_u8(acc));
  }
  for (; w < words; ++w) {
    std::uint64_t acc = rows[0][w];
    for (std::size_t r = 1; r < rows.size(); ++r) acc &= rows[r][w];
    total += static_cast<std::uint64_t>(std::popcount(acc));
  }
  return total;
}
#endif

}  // namespace

bool available(Kind kind) {
  switch (kind) {
    case Kind::scalar:
      return true;
    case Kind::avx2:
#if ITEMGRID_KERNEL_X86
      return __builtin_cpu_supports("avx2") != 0;
#else
      return false;
#endif
    case Kind::neon:
#if ITEMGRID_KERNEL_NEON
      return true;
#else
      return false;
#endif
  }
  return false;
}

Kind best_available() {
  if (available(Kind::avx2)) return Kind::avx2;
  if (available(Kind::neon)) return Kind::neon;
  return Kind::scalar;
}

std::string_view name(Kind kind) {
  switch (kind) {
    case Kind::scalar:
      return "scalar";
    case Kind::avx2:
      return "avx2";
    case Kind::neon:
      return "neon";
  }
  return "?";
}

std::uint64_t intersect_count(Kind kind, std::span<const std::uint64_t *const> rows,
                              std::size_t words) {
  if (rows.empty() || words == 0) return 0;
  if (!available(kind)) throw std::invalid_argument("kernel not available on this host");
  switch (kind) {
    case Kind::scalar:
      return intersect_scalar(rows, words);
    case Kind::avx2:
#if ITEMGRID_KERNEL_X86
      return intersect_avx2(rows, words);
#else
      break;
#endif
    case Kind::neon:
#if ITEMGRID_KERNEL_NEON
      return intersect_neon(rows, words);
#else
      break;
#endif
  }
  return intersect_scalar(rows, words);
}

std::uint64_t popcount_words(Kind kind, const std::uint64_t *row, std::size_t words) {
  const std::uint64_t *const rows[1] = {row};
  return intersect_count(kind, rows, words);
}

}  // namespace itemgrid::kernels
