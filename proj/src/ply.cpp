#include "meshsplat/ply.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <sstream>

#include "meshsplat/error.hpp"

namespace meshsplat::ply {

namespace {

static_assert(std::endian::native == std::endian::little,
              "byte decoding assumes a little-endian host");

bool parse_scalar_type(const std::string& token, ScalarType& out) {
  struct Entry {
    const char* name;
    ScalarType type;
  };
  static constexpr Entry kTypes[] = {
      {"char", ScalarType::kInt8},     {"int8", ScalarType::kInt8},
      {"uchar", ScalarType::kUInt8},   {"uint8", ScalarType::kUInt8},
      {"short", ScalarType::kInt16},   {"int16", ScalarType::kInt16},
      {"ushort", ScalarType::kUInt16}, {"uint16", ScalarType::kUInt16},
      {"int", ScalarType::kInt32},     {"int32", ScalarType::kInt32},
      {"uint", ScalarType::kUInt32},   {"uint32", ScalarType::kUInt32},
      {"float", ScalarType::kFloat32}, {"float32", ScalarType::kFloat32},
      {"double", ScalarType::kFloat64}, {"float64", ScalarType::kFloat64},
  };
  for (const auto& e : kTypes) {
    if (token == e.name) {
      out = e.type;
      return true;
    }
  }
  return false;
}

template <typename T>
T load(const std::byte* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

double decode(ScalarType type, const std::byte* p) {
  switch (type) {
    case ScalarType::kInt8: return load<std::int8_t>(p);
    case ScalarType::kUInt8: return load<std::uint8_t>(p);
    case ScalarType::kInt16: return load<std::int16_t>(p);
    case ScalarType::kUInt16: return load<std::uint16_t>(p);
    case ScalarType::kInt32: return load<std::int32_t>(p);
    case ScalarType::kUInt32: return load<std::uint32_t>(p);
    case ScalarType::kFloat32: return load<float>(p);
    case ScalarType::kFloat64: return load<double>(p);
  }
  return 0.0;
}

}  // namespace

std::size_t scalar_size(ScalarType type) {
  switch (type) {
    case ScalarType::kInt8:
    case ScalarType::kUInt8: return 1;
    case ScalarType::kInt16:
    case ScalarType::kUInt16: return 2;
    case ScalarType::kInt32:
    case ScalarType::kUInt32:
    case ScalarType::kFloat32: return 4;
    case ScalarType::kFloat64: return 8;
  }
  return 0;
}

int Element::find(std::string_view property) const {
  for (std::size_t i = 0; i < properties.size(); ++i) {
    if (properties[i].name == property) return static_cast<int>(i);
  }
  return -1;
}

bool Element::has_lists() const {
  for (const auto& p : properties) {
    if (p.is_list) return true;
  }
  return false;
}

std::size_t Element::row_stride() const {
  std::size_t stride = 0;
  for (const auto& p : properties) stride += scalar_size(p.type);
  return stride;
}

const Element* Header::find(std::string_view element) const {
  for (const auto& e : elements) {
    if (e.name == element) return &e;
  }
  return nullptr;
}

Header parse_header(std::span<const std::byte> bytes) {
  // The header is ASCII terminated by "end_header\n".
  static constexpr std::string_view kEnd = "end_header";
  std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  if (text.substr(0, 3) != "ply") throw ParseError("PLY: missing 'ply' magic");

  Header header;
  std::size_t pos = 0;
  bool saw_format = false;
  bool saw_end = false;
  int line_no = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) break;
    std::string line(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::istringstream in(line);
    std::string keyword;
    in >> keyword;
    if (line_no == 1) {
      if (keyword != "ply") throw ParseError("PLY: missing 'ply' magic");
      continue;
    }
    if (keyword.empty() || keyword == "obj_info") continue;
    if (keyword == "comment") {
      std::string rest = line.size() > 8 ? line.substr(8) : std::string();
      header.comments.push_back(rest);
    } else if (keyword == "format") {
      std::string format, version;
      in >> format >> version;
      if (format != "binary_little_endian") {
        throw ParseError("PLY: unsupported format '" + format + "' (need binary_little_endian)");
      }
      saw_format = true;
    } else if (keyword == "element") {
      Element e;
      long long count = -1;
      in >> e.name >> count;
      if (e.name.empty() || count < 0) throw ParseError("PLY: bad element line: " + line);
      e.count = static_cast<std::size_t>(count);
      header.elements.push_back(std::move(e));
    } else if (keyword == "property") {
      if (header.elements.empty()) throw ParseError("PLY: property before any element");
      Property p;
      std::string type;
      in >> type;
      if (type == "list") {
        std::string count_type, item_type;
        in >> count_type >> item_type >> p.name;
        if (!parse_scalar_type(count_type, p.count_type) || !parse_scalar_type(item_type, p.type)) {
          throw ParseError("PLY: bad list property: " + line);
        }
        p.is_list = true;
      } else {
        in >> p.name;
        if (!parse_scalar_type(type, p.type)) {
          throw ParseError("PLY: unknown property type '" + type + "'");
        }
      }
      if (p.name.empty()) throw ParseError("PLY: unnamed property: " + line);
      header.elements.back().properties.push_back(std::move(p));
    } else if (keyword == kEnd) {
      saw_end = true;
      break;
    } else {
      throw ParseError("PLY: unexpected header line: " + line);
    }
  }
  if (!saw_end) throw ParseError("PLY: header not terminated by end_header");
  if (!saw_format) throw ParseError("PLY: missing format line");
  header.body_offset = pos;
  return header;
}

std::vector<ElementData> read_body(const Header& header, std::span<const std::byte> bytes,
                                   const PropertyFilter& keep) {
  const std::size_t available = bytes.size() - std::min(bytes.size(), header.body_offset);
  bool fixed = true;
  std::size_t expected = 0;
  for (const auto& e : header.elements) {
    if (e.has_lists()) fixed = false;
    expected += e.row_stride() * e.count;
  }
  if (fixed && available < expected) {
    throw ParseError("PLY: truncated body, expected " + std::to_string(expected) +
                     " bytes, got " + std::to_string(available));
  }

  const std::byte* p = bytes.data() + header.body_offset;
  const std::byte* end = p + available;
  auto need = [&](std::size_t n) {
    if (static_cast<std::size_t>(end - p) < n) {
      throw ParseError("PLY: truncated body, expected at least " +
                       std::to_string(static_cast<std::size_t>(p - bytes.data()) -
                                      header.body_offset + n) +
                       " bytes, got " + std::to_string(available));
    }
  };

  std::vector<ElementData> out;
  out.reserve(header.elements.size());
  for (const auto& e : header.elements) {
    ElementData data;
    const std::size_t np = e.properties.size();
    data.scalars.resize(np);
    data.list_values.resize(np);
    data.list_offsets.resize(np);
    std::vector<bool> wanted(np);
    for (std::size_t k = 0; k < np; ++k) {
      const auto& prop = e.properties[k];
      wanted[k] = !keep || keep(e, prop);
      if (!wanted[k]) continue;
      if (prop.is_list) {
        data.list_offsets[k].reserve(e.count + 1);
        data.list_offsets[k].push_back(0);
      } else {
        data.scalars[k].reserve(e.count);
      }
    }

    if (!e.has_lists()) {
      const std::size_t stride = e.row_stride();
      need(stride * e.count);
      std::vector<std::size_t> offsets(np);
      std::size_t off = 0;
      for (std::size_t k = 0; k < np; ++k) {
        offsets[k] = off;
        off += scalar_size(e.properties[k].type);
      }
      for (std::size_t row = 0; row < e.count; ++row) {
        const std::byte* r = p + row * stride;
        for (std::size_t k = 0; k < np; ++k) {
          if (wanted[k]) data.scalars[k].push_back(decode(e.properties[k].type, r + offsets[k]));
        }
      }
      p += stride * e.count;
    } else {
      for (std::size_t row = 0; row < e.count; ++row) {
        for (std::size_t k = 0; k < np; ++k) {
          const auto& prop = e.properties[k];
          if (prop.is_list) {
            const std::size_t cs = scalar_size(prop.count_type);
            need(cs);
            const double n = decode(prop.count_type, p);
            p += cs;
            if (n < 0) throw ParseError("PLY: negative list length in '" + prop.name + "'");
            const auto count = static_cast<std::size_t>(n);
            const std::size_t is = scalar_size(prop.type);
            need(count * is);
            if (wanted[k]) {
              for (std::size_t i = 0; i < count; ++i) {
                const double v = decode(prop.type, p + i * is);
                if (v < 0 || v > 4294967295.0) {
                  throw ParseError("PLY: list value out of range in '" + prop.name + "'");
                }
                data.list_values[k].push_back(static_cast<std::uint32_t>(v));
              }
              data.list_offsets[k].push_back(data.list_values[k].size());
            }
            p += count * is;
          } else {
            const std::size_t s = scalar_size(prop.type);
            need(s);
            if (wanted[k]) data.scalars[k].push_back(decode(prop.type, p));
            p += s;
          }
        }
      }
    }
    out.push_back(std::move(data));
  }
  return out;
}

void ByteWriter::text(std::string_view s) {
  for (char c : s) bytes_.push_back(static_cast<std::byte>(c));
}

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFFu));
}

void ByteWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

}  // namespace meshsplat::ply
