#include "wsketch/hash.hpp"

namespace wsketch {

HashFamily::HashFamily(std::uint64_t master_seed, std::uint32_t rows, bool identity)
    : identity_(identity) {
  seeds_.reserve(rows);
  // Row constants are distinct odd multiples of the golden gamma, so the
  // XOR-ed inputs (and therefore the bijective mix outputs) never repeat.
  for (std::uint32_t r = 0; r < rows; ++r) {
    seeds_.push_back(mix64(master_seed ^ (kGoldenGamma * (2 * std::uint64_t{r} + 1))));
  }
}

}  // namespace wsketch
