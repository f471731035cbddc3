#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pinnode/errors.hpp"
#include "pinnode/network.hpp"
#include "pinnode/param_vector.hpp"

namespace pinnode {

namespace detail {

inline void encode_f64_le(double v, char* out) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  for (int b = 0; b < 8; ++b) out[b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
}

inline double decode_f64_le(const char* in) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b)
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[b])) << (8 * b);
  double v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

}  // namespace detail

// Checkpoint file layout: one line of JSON (shape, layout, caller metadata),
// then the raw parameter values as little-endian IEEE float64.
inline void save_checkpoint(const std::string& path, const ParamVector& params,
                            const nlohmann::json& metadata) {
  nlohmann::json header;
  header["format"] = "pinnode-checkpoint-v1";
  header["count"] = params.size();
  nlohmann::json layout = nlohmann::json::array();
  for (const auto& s : params.layout) {
    layout.push_back({{"layer", s.layer},
                      {"kind", s.kind == ParamKind::Weight ? "weight" : "bias"},
                      {"rows", s.rows},
                      {"cols", s.cols}});
  }
  header["layout"] = layout;
  header["metadata"] = metadata;

  std::ofstream os(path, std::ios::binary);
  if (!os) throw parse_error("cannot open '" + path + "' for writing");
  os << header.dump() << '\n';
  char buf[8];
  for (double v : params.data) {
    detail::encode_f64_le(v, buf);
    os.write(buf, sizeof(buf));
  }
  if (!os) throw parse_error("write failed for '" + path + "'");
}

struct Checkpoint {
  ParamVector params;
  nlohmann::json metadata;
};

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw parse_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(is, line)) throw parse_error("checkpoint '" + path + "': missing header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw parse_error("checkpoint '" + path + "': bad header: " + std::string(e.what()), 1);
  }
  if (header.value("format", "") != "pinnode-checkpoint-v1")
    throw parse_error("checkpoint '" + path + "': unknown format", 1);

  Checkpoint ckpt;
  const long count = header.at("count").get<long>();
  for (const auto& s : header.at("layout")) {
    LayerShape shape;
    shape.layer = s.at("layer").get<int>();
    shape.kind = s.at("kind").get<std::string>() == "weight" ? ParamKind::Weight : ParamKind::Bias;
    shape.rows = s.at("rows").get<int>();
    shape.cols = s.at("cols").get<int>();
    ckpt.params.layout.push_back(shape);
  }
  long expect = 0;
  for (const auto& s : ckpt.params.layout) expect += s.count();
  if (expect != count)
    throw parse_error("checkpoint '" + path + "': layout does not match count", 1);
  ckpt.metadata = header.value("metadata", nlohmann::json::object());

  ckpt.params.data.resize(static_cast<std::size_t>(count));
  char buf[8];
  for (long i = 0; i < count; ++i) {
    if (!is.read(buf, sizeof(buf)))
      throw parse_error("checkpoint '" + path + "': truncated parameter data");
    ckpt.params.data[static_cast<std::size_t>(i)] = detail::decode_f64_le(buf);
  }
  return ckpt;
}

}  // namespace pinnode
