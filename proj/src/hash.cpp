#include "percog/hash.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace percog {

std::string hex64(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[h & 0xF];
    h >>= 4;
  }
  return s;
}

std::string hash_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("hash_file: cannot open " + path);
  std::uint64_t h = 1469598103934665603ULL;
  char buf[65536];
  while (f.read(buf, sizeof(buf)) || f.gcount() > 0) {
    h = fnv1a(std::string_view(buf, static_cast<std::size_t>(f.gcount())), h);
    if (f.eof()) break;
  }
  return hex64(h);
}

}  // namespace percog
