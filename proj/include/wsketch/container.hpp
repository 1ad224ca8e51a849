#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "wsketch/importance.hpp"
#include "wsketch/quant.hpp"
#include "wsketch/sketch.hpp"
#include "wsketch/tensor.hpp"

namespace wsketch {

inline constexpr std::uint16_t kFormatVersion = 1;

/// One compression unit as stored on disk.
struct SketchUnit {
  QuantizedState state;
  std::vector<Outlier> outliers;

  friend bool operator==(const SketchUnit&, const SketchUnit&) = default;
};

/// A compressed tensor: shared settings plus one sketch per unit. Unit i uses
/// hash seed unit_seed(master_seed, i).
struct SketchContainer {
  Variant variant = Variant::kAbsMaxMin;
  std::uint32_t rows = kDefaultRows;
  bool test_hash = false;
  std::uint64_t master_seed = 0;
  QuantSpec quant;
  Granularity granularity = Granularity::kLayer;
  std::vector<std::uint64_t> shape;
  std::vector<SketchUnit> units;

  /// Config unit i must carry.
  SketchConfig unit_config(std::size_t unit, std::uint64_t columns) const;
  /// Bytes of sketch state: raw values, or codes plus scales, plus stored
  /// outliers. Headers and masks are not counted.
  std::uint64_t payload_bytes() const noexcept;
  /// Throws ContractError when a unit disagrees with the shared settings.
  void validate() const;

  friend bool operator==(const SketchContainer&, const SketchContainer&) = default;
};

/// "WSKT" | u16 version | u8 dtype (0 = f32) | u8 ndim | u64 dims[ndim] |
/// f32 payload, all little-endian, row-major.
std::vector<std::uint8_t> encode_tensor(const Tensor& t);
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

/// "WSKS" | u16 version | u8 variant | u8 rows | u8 flags | u8 quant bits |
/// u8 granularity | u8 ndim | u32 group size | u64 master seed |
/// u64 dims[ndim] | u32 unit count, then per unit:
/// u32 columns | u64 weight count | u32 outlier count | u8 flags |
/// [bit-packed occupancy mask] | f32 values, or f32 scales then codes |
/// (u32 index, f32 value) per outlier.
/// The mask is omitted when it equals the one implied by inserting every
/// non-outlier address.
std::vector<std::uint8_t> encode_sketch(const SketchContainer& c);
SketchContainer decode_sketch(std::span<const std::uint8_t> bytes);

void write_tensor(std::ostream& out, const Tensor& t);
Tensor read_tensor(std::istream& in);
void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

void write_sketch(std::ostream& out, const SketchContainer& c);
SketchContainer read_sketch(std::istream& in);
void write_sketch(const std::filesystem::path& path, const SketchContainer& c);
SketchContainer read_sketch(const std::filesystem::path& path);

}  // namespace wsketch
