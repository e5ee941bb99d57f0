#include "percog/npy.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace percog {

namespace {

std::string shape_literal(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) os << shape[i] << ", ";
  if (shape.empty()) os << ",";
  os << ")";
  // python tuple style: (3,) for rank 1, (3, 4, ) is fine too but keep tidy
  std::string s = os.str();
  if (shape.size() > 1) {
    // drop trailing ", " before ")"
    s.erase(s.size() - 3, 2);
  }
  return s;
}

}  // namespace

void npy_write(const std::string& path, const Tensor& t, bool float32) {
  std::string header = "{'descr': '";
  header += float32 ? "<f4" : "<f8";
  header += "', 'fortran_order': False, 'shape': ";
  header += shape_literal(t.shape);
  header += ", }";
  // pad so that magic(6)+version(2)+len(2)+header is a multiple of 64
  std::size_t unpadded = 10 + header.size() + 1;  // +1 for '\n'
  std::size_t padded = (unpadded + 63) / 64 * 64;
  header.append(padded - unpadded, ' ');
  header.push_back('\n');

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("npy_write: cannot open " + path);
  f.write("\x93NUMPY\x01\x00", 8);
  std::uint16_t hlen = static_cast<std::uint16_t>(header.size());
  f.write(reinterpret_cast<const char*>(&hlen), 2);
  f.write(header.data(), static_cast<std::streamsize>(header.size()));
  if (float32) {
    std::vector<float> buf(t.v.begin(), t.v.end());
    f.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
  } else {
    f.write(reinterpret_cast<const char*>(t.v.data()),
            static_cast<std::streamsize>(t.v.size() * sizeof(double)));
  }
  if (!f) throw std::runtime_error("npy_write: write failed for " + path);
}

Tensor npy_read(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("npy_read: cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, "\x93NUMPY", 6) != 0)
    throw std::runtime_error("npy_read: not an NPY file: " + path);
  std::uint16_t hlen = 0;
  f.read(reinterpret_cast<char*>(&hlen), 2);
  std::string header(hlen, '\0');
  f.read(header.data(), hlen);
  if (!f) throw std::runtime_error("npy_read: truncated header: " + path);

  bool f32;
  if (header.find("'<f4'") != std::string::npos)
    f32 = true;
  else if (header.find("'<f8'") != std::string::npos)
    f32 = false;
  else
    throw std::runtime_error("npy_read: unsupported dtype in " + path);
  if (header.find("'fortran_order': False") == std::string::npos)
    throw std::runtime_error("npy_read: fortran order unsupported: " + path);

  auto lp = header.find('(');
  auto rp = header.find(')', lp);
  if (lp == std::string::npos || rp == std::string::npos)
    throw std::runtime_error("npy_read: malformed shape in " + path);
  std::vector<int> shape;
  std::string inner = header.substr(lp + 1, rp - lp - 1);
  std::stringstream ss(inner);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::string trimmed;
    for (char c : tok)
      if (!std::isspace(static_cast<unsigned char>(c))) trimmed += c;
    if (!trimmed.empty()) shape.push_back(std::stoi(trimmed));
  }

  Tensor t(shape, 0.0);
  if (f32) {
    std::vector<float> buf(t.v.size());
    f.read(reinterpret_cast<char*>(buf.data()),
           static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!f) throw std::runtime_error("npy_read: truncated data: " + path);
    for (std::size_t i = 0; i < buf.size(); ++i) t.v[i] = buf[i];
  } else {
    f.read(reinterpret_cast<char*>(t.v.data()),
           static_cast<std::streamsize>(t.v.size() * sizeof(double)));
    if (!f) throw std::runtime_error("npy_read: truncated data: " + path);
  }
  return t;
}

}  // namespace percog
