#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "tpr/encodings.hpp"
#include "tpr/errors.hpp"
#include "tpr/io.hpp"

namespace tpr {

void write_dataset(std::ostream& os, const Dataset& d) {
  if (d.activations.rows() != static_cast<Eigen::Index>(d.labels.size()) ||
      d.activations.cols() != d.d_model) {
    throw DimensionMismatch("dataset activations do not match labels / d_model");
  }
  nlohmann::ordered_json header;
  header["magic"] = "tprds";
  header["version"] = 1;
  header["d_model"] = d.d_model;
  header["count"] = d.labels.size();
  header["source"] = to_string(d.source);
  header["split"] = to_string(d.split);
  header["layer"] = d.layer;
  header["dtype"] = "f32le";
  os << header.dump() << '\n';
  for (std::size_t i = 0; i < d.labels.size(); ++i) {
    io::write_f32le(os, {d.activations.data() + i * d.d_model, static_cast<std::size_t>(d.d_model)});
    char bytes[othello::kNumSquares];
    for (int s = 0; s < othello::kNumSquares; ++s) bytes[s] = static_cast<char>(d.labels[i][s]);
    os.write(bytes, sizeof bytes);
  }
}

void write_dataset(const std::string& path, const Dataset& d) {
  io::atomic_write(path, [&](std::ostream& os) { write_dataset(os, d); });
}

Dataset read_dataset(std::istream& is, std::optional<int> expected_d_model) {
  std::string line;
  if (!io::read_header_line(is, line)) throw FormatError("missing dataset header line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed dataset header: ") + e.what());
  }
  Dataset d;
  std::size_t count = 0;
  try {
    if (header.at("magic").get<std::string>() != "tprds") throw FormatError("bad magic");
    if (header.at("version").get<int>() != 1) throw FormatError("unsupported version");
    if (header.at("dtype").get<std::string>() != "f32le") throw FormatError("unsupported dtype");
    d.d_model = header.at("d_model").get<int>();
    count = header.at("count").get<std::size_t>();
    d.layer = header.at("layer").get<int>();
    auto source = parse_source(header.at("source").get<std::string>());
    auto split = parse_split(header.at("split").get<std::string>());
    if (!source || !split) throw FormatError("bad source or split");
    d.source = *source;
    d.split = *split;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed dataset header: ") + e.what());
  }
  if (d.d_model <= 0) throw FormatError("d_model must be positive");
  if (expected_d_model && *expected_d_model != d.d_model) {
    throw FormatError("d_model mismatch: file has " + std::to_string(d.d_model) + ", expected " +
                      std::to_string(*expected_d_model));
  }

  d.activations.resize(static_cast<Eigen::Index>(count), d.d_model);
  d.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    io::read_f32le(is, {d.activations.data() + i * d.d_model, static_cast<std::size_t>(d.d_model)});
    char bytes[othello::kNumSquares];
    is.read(bytes, sizeof bytes);
    if (!is) throw FormatError("truncated payload at record " + std::to_string(i));
    for (int s = 0; s < othello::kNumSquares; ++s) {
      const auto v = static_cast<unsigned char>(bytes[s]);
      if (v > 2) throw FormatError("label byte out of range");
      d.labels[i][s] = static_cast<CellColor>(v);
    }
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw FormatError("payload longer than declared count");
  }
  return d;
}

Dataset read_dataset(const std::string& path, std::optional<int> expected_d_model) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::ios_base::failure("cannot open " + path);
  return read_dataset(is, expected_d_model);
}

}  // namespace tpr
