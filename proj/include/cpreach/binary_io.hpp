#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <utility>
#include <string>
#include <type_traits>
#include <vector>

#include "cpreach/error.hpp"

namespace cpreach {

// Little-endian primitives for the binary artifact formats.
class LittleEndianWriter {
 public:
  template <class T>
  void put(T value) {
    static_assert(std::is_arithmetic_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
      for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    }
    buffer_.insert(buffer_.end(), bytes, bytes + sizeof(T));
  }

  void put_bytes(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    buffer_.insert(buffer_.end(), p, p + size);
  }

  /// Fixed-width, zero-padded string field.
  void put_fixed_string(const std::string& s, std::size_t width) {
    require(s.size() <= width, ErrorKind::Io, "string field '" + s + "' is too long");
    put_bytes(s.data(), s.size());
    buffer_.insert(buffer_.end(), width - s.size(), 0);
  }

  const std::vector<unsigned char>& bytes() const { return buffer_; }

  void write_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(buffer_.data()), static_cast<std::streamsize>(buffer_.size()));
    if (!out) fail(ErrorKind::Io, "failed writing '" + path + "'");
  }

 private:
  std::vector<unsigned char> buffer_;
};

class LittleEndianReader {
 public:
  explicit LittleEndianReader(std::vector<unsigned char> bytes) : bytes_(std::move(bytes)) {}

  static LittleEndianReader from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return LittleEndianReader(std::move(bytes));
  }

  template <class T>
  T get() {
    static_assert(std::is_arithmetic_v<T>);
    need(sizeof(T));
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
      for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    }
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
  }

  std::string get_fixed_string(std::size_t width) {
    need(width);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), width);
    pos_ += width;
    const auto end = s.find('\0');
    if (end != std::string::npos) s.resize(end);
    return s;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t size) const {
    if (pos_ + size > bytes_.size()) fail(ErrorKind::Io, "unexpected end of binary artifact");
  }

  std::vector<unsigned char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace cpreach
