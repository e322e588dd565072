#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace meshsplat::ply {

enum class ScalarType { kInt8, kUInt8, kInt16, kUInt16, kInt32, kUInt32, kFloat32, kFloat64 };

std::size_t scalar_size(ScalarType type);

struct Property {
  std::string name;
  ScalarType type = ScalarType::kFloat32;
  bool is_list = false;
  ScalarType count_type = ScalarType::kUInt8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;

  // Index into `properties`, or -1.
  int find(std::string_view property) const;
  bool has_lists() const;
  std::size_t row_stride() const;  // only meaningful without lists
};

struct Header {
  std::vector<std::string> comments;
  std::vector<Element> elements;
  std::size_t body_offset = 0;

  const Element* find(std::string_view element) const;
};

// Only `format binary_little_endian 1.0` is accepted.
Header parse_header(std::span<const std::byte> bytes);

// Decoded body of one element. Scalars are widened to double, which is exact
// for every PLY scalar type. List properties are stored flattened.
struct ElementData {
  std::vector<std::vector<double>> scalars;  // per property; empty if skipped or list
  std::vector<std::vector<std::uint32_t>> list_values;
  std::vector<std::vector<std::size_t>> list_offsets;  // count + 1 entries
};

using PropertyFilter = std::function<bool(const Element&, const Property&)>;

// Decodes every element in header order. Properties rejected by `keep` are
// skipped without being stored. Throws ParseError on truncation, reporting
// the expected and actual byte counts.
std::vector<ElementData> read_body(const Header& header, std::span<const std::byte> bytes,
                                   const PropertyFilter& keep = {});

// Little-endian byte sink used by the writers.
class ByteWriter {
 public:
  void text(std::string_view s);
  void u8(std::uint8_t v) { bytes_.push_back(static_cast<std::byte>(v)); }
  void u32(std::uint32_t v);
  void f32(float v);
  std::vector<std::byte>& bytes() { return bytes_; }
  std::vector<std::byte> release() { return std::move(bytes_); }

 private:
  std::vector<std::byte> bytes_;
};

}  // namespace meshsplat::ply
