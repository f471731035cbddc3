#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pinnode/errors.hpp"

namespace pinnode {

enum class ParamKind { Weight, Bias };

// Shape of one block in the flat parameter vector.  Blocks are ordered
// layer 0..depth, weight before bias; weights are stored row-major.
struct LayerShape {
  int layer = 0;
  ParamKind kind = ParamKind::Weight;
  int rows = 0;
  int cols = 0;  // 1 for biases

  long count() const { return static_cast<long>(rows) * cols; }
};

// Flat parameter storage plus the layout needed to view it as per-layer
// weight/bias blocks.
struct ParamVector {
  std::vector<double> data;
  std::vector<LayerShape> layout;

  long size() const { return static_cast<long>(data.size()); }

  long block_offset(std::size_t block) const {
    long off = 0;
    for (std::size_t i = 0; i < block; ++i) off += layout[i].count();
    return off;
  }

  std::span<double> block(std::size_t i) {
    return {data.data() + block_offset(i), static_cast<std::size_t>(layout[i].count())};
  }
  std::span<const double> block(std::size_t i) const {
    return {data.data() + block_offset(i), static_cast<std::size_t>(layout[i].count())};
  }
};

inline ParamVector make_param_vector(std::vector<LayerShape> layout) {
  ParamVector pv;
  pv.layout = std::move(layout);
  long total = 0;
  for (const auto& s : pv.layout) total += s.count();
  pv.data.assign(static_cast<std::size_t>(total), 0.0);
  return pv;
}

// Splits the flat vector into per-block copies.
inline std::vector<std::vector<double>> to_blocks(const ParamVector& pv) {
  std::vector<std::vector<double>> out;
  out.reserve(pv.layout.size());
  for (std::size_t i = 0; i < pv.layout.size(); ++i) {
    auto b = pv.block(i);
    out.emplace_back(b.begin(), b.end());
  }
  return out;
}

// Joins per-block values back into a flat vector with the given layout.
inline ParamVector from_blocks(const std::vector<LayerShape>& layout,
                               const std::vector<std::vector<double>>& blocks) {
  if (blocks.size() != layout.size())
    throw config_error("from_blocks: block count does not match layout");
  ParamVector pv = make_param_vector(layout);
  long off = 0;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (static_cast<long>(blocks[i].size()) != layout[i].count())
      throw config_error("from_blocks: block size does not match layout");
    for (double v : blocks[i]) pv.data[static_cast<std::size_t>(off++)] = v;
  }
  return pv;
}

}  // namespace pinnode
