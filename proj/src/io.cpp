#include "tpr/io.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

namespace tpr::io {

void atomic_write(const std::string& path, const std::function<void(std::ostream&)>& body) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::ios_base::failure("cannot open " + tmp.string() + " for writing");
    body(os);
    os.flush();
    if (!os) throw std::ios_base::failure("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::ios_base::failure("cannot rename into " + path + ": " + ec.message());
  }
}

void write_f32le(std::ostream& os, std::span<const float> values) {
  std::vector<unsigned char> buf(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(values[i]);
    buf[4 * i + 0] = static_cast<unsigned char>(bits);
    buf[4 * i + 1] = static_cast<unsigned char>(bits >> 8);
    buf[4 * i + 2] = static_cast<unsigned char>(bits >> 16);
    buf[4 * i + 3] = static_cast<unsigned char>(bits >> 24);
  }
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

void read_f32le(std::istream& is, std::span<float> values) {
  std::vector<unsigned char> buf(values.size() * 4);
  is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(is.gcount()) != buf.size()) {
    is.setstate(std::ios::failbit);
    return;
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint32_t bits = std::uint32_t{buf[4 * i]} | (std::uint32_t{buf[4 * i + 1]} << 8) |
                               (std::uint32_t{buf[4 * i + 2]} << 16) |
                               (std::uint32_t{buf[4 * i + 3]} << 24);
    values[i] = std::bit_cast<float>(bits);
  }
}

bool read_header_line(std::istream& is, std::string& line, std::size_t max_len) {
  line.clear();
  char ch;
  while (is.get(ch)) {
    if (ch == '\n') return true;
    line.push_back(ch);
    if (line.size() > max_len) return false;
  }
  return false;
}

}  // namespace tpr::io
