#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace vitalrr {

/// Writes through a sibling temp file and renames it into place.
void write_file_atomic(const std::string& path,
                       std::span<const unsigned char> bytes);
void write_text_atomic(const std::string& path, const std::string& text);

std::vector<unsigned char> read_file(const std::string& path);
std::string read_text(const std::string& path);

nlohmann::json read_json(const std::string& path);
void write_json(const std::string& path, const nlohmann::json& j);

// Little-endian scalar packing.
void put_u16(std::vector<unsigned char>& out, std::uint16_t v);
void put_u32(std::vector<unsigned char>& out, std::uint32_t v);
void put_f32(std::vector<unsigned char>& out, float v);

/// Bounds-checked little-endian reader; throws FormatError on truncation.
class ByteReader {
 public:
  explicit ByteReader(std::span<const unsigned char> bytes) : bytes_(bytes) {}
  std::uint16_t u16();
  std::uint32_t u32();
  float f32();
  void raw(std::span<unsigned char> out);
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const;
  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace vitalrr
