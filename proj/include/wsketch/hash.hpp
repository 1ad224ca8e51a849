#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace wsketch {

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

/// SplitMix64 output finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

/// Maps a uniformly distributed 64-bit word onto [0, n) with a multiply-shift.
constexpr std::uint64_t reduce_range(std::uint64_t h, std::uint64_t n) noexcept {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(h) * n) >> 64);
}

/// Seed used by the sketch of compression unit `unit` under a master seed.
constexpr std::uint64_t unit_seed(std::uint64_t master, std::uint64_t unit) noexcept {
  return mix64(master ^ mix64(unit + kGoldenGamma));
}

/// One independent hash function per sketch row, all derived from a master
/// seed. In identity mode every row maps an address to `addr mod columns`,
/// which makes collision patterns predictable in tests.
class HashFamily {
 public:
  HashFamily(std::uint64_t master_seed, std::uint32_t rows, bool identity = false);

  std::uint64_t index(std::uint32_t row, std::uint64_t addr,
                      std::uint64_t columns) const noexcept {
    if (identity_) return addr % columns;
    return reduce_range(mix64(seeds_[row] + (addr + 1) * kGoldenGamma), columns);
  }

  std::uint32_t rows() const noexcept { return static_cast<std::uint32_t>(seeds_.size()); }
  std::span<const std::uint64_t> seeds() const noexcept { return seeds_; }
  bool identity() const noexcept { return identity_; }

 private:
  std::vector<std::uint64_t> seeds_;
  bool identity_;
};

}  // namespace wsketch
