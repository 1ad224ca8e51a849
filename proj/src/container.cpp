#include "wsketch/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "wsketch/error.hpp"

namespace wsketch {
namespace {

constexpr char kTensorMagic[4] = {'W', 'S', 'K', 'T'};
constexpr char kSketchMagic[4] = {'W', 'S', 'K', 'S'};
constexpr std::uint8_t kDtypeF32 = 0;
constexpr std::uint8_t kFlagTestHash = 1;
constexpr std::uint8_t kUnitFlagMask = 1;

class ByteWriter {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  template <class T>
  void le(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      buf_.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * i)));
    }
  }
  void f32(float v) { le(std::bit_cast<std::uint32_t>(v)); }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> b) : b_(b) {}

  std::span<const std::uint8_t> bytes(std::uint64_t n) {
    if (n > remaining()) throw FormatError("truncated container");
    auto s = b_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  template <class T>
  T le() {
    auto s = bytes(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= std::uint64_t{s[i]} << (8 * i);
    return static_cast<T>(v);
  }
  float f32() { return std::bit_cast<float>(le<std::uint32_t>()); }
  std::uint64_t remaining() const noexcept { return b_.size() - pos_; }
  void expect_end() const {
    if (remaining() != 0) throw FormatError("trailing bytes after container payload");
  }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

void check_magic(ByteReader& r, const char (&magic)[4]) {
  auto m = r.bytes(4);
  if (std::memcmp(m.data(), magic, 4) != 0) throw FormatError("bad magic");
  const auto version = r.le<std::uint16_t>();
  if (version != kFormatVersion) {
    throw FormatError("unsupported format version " + std::to_string(version));
  }
}

std::vector<std::uint64_t> read_dims(ByteReader& r, std::uint8_t ndim) {
  std::vector<std::uint64_t> dims(ndim);
  for (auto& d : dims) d = r.le<std::uint64_t>();
  return dims;
}

std::uint64_t checked_count(std::span<const std::uint64_t> dims) {
  try {
    return Tensor::element_count(dims);
  } catch (const ContractError&) {
    throw FormatError("dimension product overflows");
  }
}

std::uint8_t narrow_ndim(std::size_t n) {
  if (n > std::numeric_limits<std::uint8_t>::max()) throw ContractError("too many dimensions");
  return static_cast<std::uint8_t>(n);
}

std::vector<std::uint64_t> outlier_addresses(const std::vector<Outlier>& outliers) {
  std::vector<std::uint64_t> a;
  a.reserve(outliers.size());
  for (const auto& o : outliers) a.push_back(o.index);
  return a;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot create '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write to '" + path.string() + "' failed");
}

}  // namespace

SketchConfig SketchContainer::unit_config(std::size_t unit, std::uint64_t columns) const {
  return {variant, rows, columns, unit_seed(master_seed, unit), test_hash};
}

std::uint64_t SketchContainer::payload_bytes() const noexcept {
  std::uint64_t total = 0;
  for (const auto& u : units) total += u.state.payload_bytes() + u.outliers.size() * 8;
  return total;
}

void SketchContainer::validate() const {
  quant.validate();
  if (rows == 0 || rows > 255) throw ContractError("rows must be in [1, 255]");
  if (units.size() > std::numeric_limits<std::uint32_t>::max()) throw ContractError("too many units");
  for (std::size_t i = 0; i < units.size(); ++i) {
    const auto& s = units[i].state;
    if (s.config != unit_config(i, s.config.columns) || s.spec != quant) {
      throw ContractError("unit " + std::to_string(i) + " disagrees with container settings");
    }
    if (s.config.columns > std::numeric_limits<std::uint32_t>::max()) {
      throw ContractError("unit column count exceeds 32 bits");
    }
    if (units[i].outliers.size() > std::numeric_limits<std::uint32_t>::max()) {
      throw ContractError("too many outliers");
    }
    dequantize_state(s);
  }
}

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  if (Tensor::element_count(t.shape) != t.data.size()) throw ContractError("tensor shape/data mismatch");
  ByteWriter w;
  w.bytes(kTensorMagic, 4);
  w.le(kFormatVersion);
  w.le(kDtypeF32);
  w.le(narrow_ndim(t.shape.size()));
  for (auto d : t.shape) w.le(d);
  for (float v : t.data) w.f32(v);
  return w.take();
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  check_magic(r, kTensorMagic);
  if (r.le<std::uint8_t>() != kDtypeF32) throw FormatError("unsupported tensor dtype");
  auto dims = read_dims(r, r.le<std::uint8_t>());
  const std::uint64_t n = checked_count(dims);
  if (n > r.remaining() / 4) throw FormatError("truncated tensor payload");
  std::vector<float> data(n);
  for (auto& v : data) v = r.f32();
  r.expect_end();
  return Tensor(std::move(dims), std::move(data));
}

std::vector<std::uint8_t> encode_sketch(const SketchContainer& c) {
  c.validate();
  ByteWriter w;
  w.bytes(kSketchMagic, 4);
  w.le(kFormatVersion);
  w.le(static_cast<std::uint8_t>(c.variant));
  w.le(static_cast<std::uint8_t>(c.rows));
  w.le(static_cast<std::uint8_t>(c.test_hash ? kFlagTestHash : 0));
  w.le(static_cast<std::uint8_t>(c.quant.bits));
  w.le(static_cast<std::uint8_t>(c.granularity));
  w.le(narrow_ndim(c.shape.size()));
  w.le(c.quant.group_size);
  w.le(c.master_seed);
  for (auto d : c.shape) w.le(d);
  w.le(static_cast<std::uint32_t>(c.units.size()));

  for (const auto& u : c.units) {
    const auto& s = u.state;
    const bool store_mask =
        s.occupied != derive_occupancy(s.config, s.weight_count, outlier_addresses(u.outliers));
    w.le(static_cast<std::uint32_t>(s.config.columns));
    w.le(s.weight_count);
    w.le(static_cast<std::uint32_t>(u.outliers.size()));
    w.le(static_cast<std::uint8_t>(store_mask ? kUnitFlagMask : 0));
    if (store_mask) {
      std::vector<std::uint8_t> packed((s.occupied.size() + 7) / 8, 0);
      for (std::size_t i = 0; i < s.occupied.size(); ++i) {
        if (s.occupied[i]) packed[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
      }
      w.bytes(packed.data(), packed.size());
    }
    if (c.quant.active()) {
      for (float v : s.scales) w.f32(v);
      w.bytes(s.codes.data(), s.codes.size());
    } else {
      for (float v : s.raw_values) w.f32(v);
    }
    for (const auto& o : u.outliers) {
      w.le(o.index);
      w.f32(o.value);
    }
  }
  return w.take();
}

SketchContainer decode_sketch(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  check_magic(r, kSketchMagic);
  SketchContainer c;
  const auto variant = r.le<std::uint8_t>();
  if (variant > static_cast<std::uint8_t>(Variant::kCountMin)) throw FormatError("unknown variant code");
  c.variant = static_cast<Variant>(variant);
  c.rows = r.le<std::uint8_t>();
  if (c.rows == 0) throw FormatError("zero rows");
  const auto flags = r.le<std::uint8_t>();
  if (flags & ~kFlagTestHash) throw FormatError("unknown container flags");
  c.test_hash = flags & kFlagTestHash;
  const auto bits = r.le<std::uint8_t>();
  if (bits != 0 && bits != 4 && bits != 8) throw FormatError("unknown quantization width");
  c.quant.bits = static_cast<QuantBits>(bits);
  const auto gran = r.le<std::uint8_t>();
  if (gran > static_cast<std::uint8_t>(Granularity::kLayer)) throw FormatError("unknown granularity");
  c.granularity = static_cast<Granularity>(gran);
  const auto ndim = r.le<std::uint8_t>();
  c.quant.group_size = r.le<std::uint32_t>();
  if (c.quant.group_size == 0) throw FormatError("zero quantization group size");
  c.master_seed = r.le<std::uint64_t>();
  c.shape = read_dims(r, ndim);
  checked_count(c.shape);
  const auto unit_count = r.le<std::uint32_t>();

  for (std::uint32_t i = 0; i < unit_count; ++i) {
    SketchUnit u;
    auto& s = u.state;
    const auto columns = r.le<std::uint32_t>();
    if (columns == 0) throw FormatError("zero columns");
    s.config = c.unit_config(i, columns);
    s.spec = c.quant;
    s.weight_count = r.le<std::uint64_t>();
    const auto outlier_count = r.le<std::uint32_t>();
    const auto unit_flags = r.le<std::uint8_t>();
    if (unit_flags & ~kUnitFlagMask) throw FormatError("unknown unit flags");
    const std::uint64_t cells = s.config.cell_count();
    if (packed_code_bytes(cells, QuantBits::k4) > r.remaining()) {
      throw FormatError("truncated sketch unit");
    }

    if (unit_flags & kUnitFlagMask) {
      auto packed = r.bytes((cells + 7) / 8);
      s.occupied.resize(cells);
      for (std::uint64_t k = 0; k < cells; ++k) s.occupied[k] = (packed[k / 8] >> (k % 8)) & 1;
    }
    if (c.quant.active()) {
      if (s.group_count() > r.remaining() / 4) throw FormatError("truncated scales");
      s.scales.resize(s.group_count());
      for (auto& v : s.scales) v = r.f32();
      auto codes = r.bytes(packed_code_bytes(cells, c.quant.bits));
      s.codes.assign(codes.begin(), codes.end());
    } else {
      if (cells > r.remaining() / 4) throw FormatError("truncated sketch values");
      s.raw_values.resize(cells);
      for (auto& v : s.raw_values) v = r.f32();
    }
    if (outlier_count > r.remaining() / 8) throw FormatError("truncated outlier list");
    u.outliers.resize(outlier_count);
    for (auto& o : u.outliers) {
      o.index = r.le<std::uint32_t>();
      o.value = r.f32();
      if (o.index >= s.weight_count) throw FormatError("outlier index outside the unit");
    }
    if (!(unit_flags & kUnitFlagMask)) {
      if (s.weight_count > (std::uint64_t{1} << 40)) throw FormatError("implausible weight count");
      s.occupied = derive_occupancy(s.config, s.weight_count, outlier_addresses(u.outliers));
    }
    try {
      dequantize_state(s);
    } catch (const ContractError& e) {
      throw FormatError(std::string("inconsistent sketch unit: ") + e.what());
    }
    c.units.push_back(std::move(u));
  }
  r.expect_end();
  return c;
}

void write_tensor(std::ostream& out, const Tensor& t) {
  const auto b = encode_tensor(t);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  if (!out) throw FormatError("tensor write failed");
}

Tensor read_tensor(std::istream& in) {
  const std::vector<std::uint8_t> b{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_tensor(b);
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  write_file(path, encode_tensor(t));
}

Tensor read_tensor(const std::filesystem::path& path) { return decode_tensor(read_file(path)); }

void write_sketch(std::ostream& out, const SketchContainer& c) {
  const auto b = encode_sketch(c);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  if (!out) throw FormatError("sketch write failed");
}

SketchContainer read_sketch(std::istream& in) {
  const std::vector<std::uint8_t> b{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_sketch(b);
}

void write_sketch(const std::filesystem::path& path, const SketchContainer& c) {
  write_file(path, encode_sketch(c));
}

SketchContainer read_sketch(const std::filesystem::path& path) {
  return decode_sketch(read_file(path));
}

}  // namespace wsketch
