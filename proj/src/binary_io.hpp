#pragma once

// Little-endian primitives shared by the binary file formats.

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "qe/error.hpp"

namespace qe::detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                         static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(bytes, 4);
}

inline void put_string(std::ostream& out, std::string_view s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void bytes(char* dst, std::size_t n, const std::string& what) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw Error(ErrorKind::TruncatedFile, what);
  }

  std::uint32_t u32(const std::string& what) {
    unsigned char b[4];
    bytes(reinterpret_cast<char*>(b), 4, what);
    return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
           (std::uint32_t{b[3]} << 24);
  }

  std::string string(const std::string& what) {
    const std::uint32_t n = u32(what);
    std::string s;
    // Grow in chunks so a corrupt length cannot trigger a huge allocation.
    constexpr std::size_t kChunk = 1 << 16;
    std::size_t done = 0;
    while (done < n) {
      const std::size_t take = std::min<std::size_t>(kChunk, n - done);
      s.resize(done + take);
      bytes(s.data() + done, take, what);
      done += take;
    }
    return s;
  }

 private:
  std::istream& in_;
};

}  // namespace qe::detail
