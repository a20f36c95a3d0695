#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "tpr/errors.hpp"
#include "tpr/io.hpp"
#include "tpr/probes.hpp"

namespace tpr {
namespace {

void write_tensor(std::ostream& os, const Eigen::MatrixXd& m) {
  const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> f = m.cast<float>();
  io::write_f32le(os, {f.data(), static_cast<std::size_t>(f.size())});
}

void read_tensor(std::istream& is, Eigen::MatrixXd& m) {
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> f(m.rows(), m.cols());
  io::read_f32le(is, {f.data(), static_cast<std::size_t>(f.size())});
  if (!is) throw FormatError("truncated checkpoint payload");
  m = f.cast<double>();
}

int positive(const nlohmann::json& header, const char* key) {
  const int v = header.at(key).get<int>();
  if (v < 1) throw FormatError(std::string(key) + " must be positive");
  return v;
}

}  // namespace

void save_probe(std::ostream& os, const Probe& p) {
  validate(p);
  const ProbeDims d = dims_of(p);
  nlohmann::ordered_json header;
  header["magic"] = "tprpb";
  header["version"] = 1;
  header["kind"] = to_string(d.kind);
  if (d.kind == ProbeKind::Bilinear) {
    header["d_r"] = d.d_r;
    header["d_f"] = d.d_f;
  } else if (d.kind == ProbeKind::Trilinear) {
    header["d_u"] = d.d_u;
    header["d_v"] = d.d_v;
    header["d_f"] = d.d_f;
  }
  header["d_model"] = d.d_model;
  header["dtype"] = "f32le";
  os << header.dump() << '\n';
  for (const Eigen::MatrixXd* m : parameters(p)) write_tensor(os, *m);
}

void save_probe(const std::string& path, const Probe& p) {
  io::atomic_write(path, [&](std::ostream& os) { save_probe(os, p); });
}

Probe load_probe(std::istream& is) {
  std::string line;
  if (!io::read_header_line(is, line)) throw FormatError("missing checkpoint header line");
  Probe p;
  try {
    const auto header = nlohmann::json::parse(line);
    if (header.at("magic").get<std::string>() != "tprpb") throw FormatError("bad magic");
    if (header.at("version").get<int>() != 1) throw FormatError("unsupported version");
    if (header.at("dtype").get<std::string>() != "f32le") throw FormatError("unsupported dtype");
    const std::string kind = header.at("kind").get<std::string>();
    ProbeDims d;
    d.d_model = positive(header, "d_model");
    if (kind == "linear") {
      d.kind = ProbeKind::Linear;
    } else if (kind == "bilinear") {
      d.kind = ProbeKind::Bilinear;
      d.d_r = positive(header, "d_r");
      d.d_f = positive(header, "d_f");
    } else if (kind == "trilinear") {
      d.kind = ProbeKind::Trilinear;
      d.d_u = positive(header, "d_u");
      d.d_v = positive(header, "d_v");
      d.d_f = positive(header, "d_f");
    } else {
      throw FormatError("unknown probe kind '" + kind + "'");
    }
    p = init_probe(d, 0, 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed checkpoint header: ") + e.what());
  }
  for (Eigen::MatrixXd* m : parameters(p)) read_tensor(is, *m);
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after checkpoint payload");
  return p;
}

Probe load_probe(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::ios_base::failure("cannot open " + path);
  return load_probe(is);
}

}  // namespace tpr
