#include "paris/common/hash.hpp"

#include <cstdio>

#include "paris/common/error.hpp"

namespace paris {

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(std::string_view s) {
  if (s.size() != 18 || s[0] != '0' || s[1] != 'x') throw ParseError("bad hash literal: " + std::string(s));
  std::uint64_t v = 0;
  for (std::size_t i = 2; i < s.size(); ++i) {
    const char c = s[i];
    int d;
    if (c >= '0' && c <= '9') d = c - '0';
    else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
    else throw ParseError("bad hash literal: " + std::string(s));
    v = (v << 4) | static_cast<std::uint64_t>(d);
  }
  return v;
}

}  // namespace paris
