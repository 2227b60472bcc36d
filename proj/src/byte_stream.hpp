#pragma once

// Little-endian encoding helpers shared by the binary file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smarthand/error.hpp"

namespace smarthand::detail {

class ByteWriter {
 public:
  void raw(std::string_view bytes) {
    buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
  }
  void u8(std::uint8_t v) { buffer_.push_back(v); }
  void u16(std::uint16_t v) { put(v); }
  void u32(std::uint32_t v) { put(v); }
  void u64(std::uint64_t v) { put(v); }
  void i16(std::int16_t v) { put(static_cast<std::uint16_t>(v)); }
  void f32(float v) { put(std::bit_cast<std::uint32_t>(v)); }

  std::vector<std::uint8_t> take() { return std::move(buffer_); }
  const std::vector<std::uint8_t>& bytes() const { return buffer_; }

 private:
  template <typename U>
  void put(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i)
      buffer_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  std::vector<std::uint8_t> buffer_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  /// Consumes `magic.size()` bytes; throws BadMagic on mismatch and
  /// Truncated when the input is shorter than the magic.
  void expect_magic(std::string_view magic) {
    need(magic.size());
    if (std::memcmp(bytes_.data() + pos_, magic.data(), magic.size()) != 0)
      fail(ErrorKind::BadMagic, "bad magic: expected \"" +
                                    std::string(magic.substr(0, magic.find('\0'))) + "\"");
    pos_ += magic.size();
  }

  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint16_t u16() { return get<std::uint16_t>(); }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  std::int16_t i16() { return static_cast<std::int16_t>(get<std::uint16_t>()); }
  float f32() { return std::bit_cast<float>(get<std::uint32_t>()); }

  std::string string(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t position() const { return pos_; }

  void need(std::size_t n) const {
    if (remaining() < n)
      fail(ErrorKind::Truncated, "truncated input at byte " + std::to_string(pos_) +
                                     " (needed " + std::to_string(n) + ", have " +
                                     std::to_string(remaining()) + ")");
  }

 private:
  template <typename U>
  U get() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
      v |= static_cast<U>(static_cast<U>(bytes_[pos_ + i]) << (8 * i));
    pos_ += sizeof(U);
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace smarthand::detail
