#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <string>

namespace tpr::io {

/// Writes through a temporary sibling file and renames it into place.
/// Throws std::ios_base::failure on I/O errors.
void atomic_write(const std::string& path, const std::function<void(std::ostream&)>& body);

void write_f32le(std::ostream& os, std::span<const float> values);
void read_f32le(std::istream& is, std::span<float> values);

/// Reads the first line of `is` (without the newline). Returns false on EOF.
bool read_header_line(std::istream& is, std::string& line, std::size_t max_len = 1 << 16);

}  // namespace tpr::io
