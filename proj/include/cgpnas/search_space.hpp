#pragma once

// Block catalog, V1/V2 function sets and the Normal/Reduction block template.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cgpnas/cgp.hpp"

namespace cgpnas {

enum class BlockType {
  conv,
  res,
  bottleneck,
  fused_mbconv,
  mbconv,
  sep_conv,
  dil_conv,
  identity,
  conv_1x7_7x1,
  sum,
  concat,
};

inline constexpr std::array<BlockType, 11> kBlockTypes = {
    BlockType::conv,     BlockType::res,      BlockType::bottleneck, BlockType::fused_mbconv,
    BlockType::mbconv,   BlockType::sep_conv, BlockType::dil_conv,   BlockType::identity,
    BlockType::conv_1x7_7x1, BlockType::sum,  BlockType::concat,
};

inline constexpr std::string_view block_name(BlockType t) {
  switch (t) {
    case BlockType::conv: return "ConvBlock";
    case BlockType::res: return "ResBlock";
    case BlockType::bottleneck: return "Bottleneck";
    case BlockType::fused_mbconv: return "FusedMBConv";
    case BlockType::mbconv: return "MBConv";
    case BlockType::sep_conv: return "SepConv";
    case BlockType::dil_conv: return "DiConv";
    case BlockType::identity: return "Identity";
    case BlockType::conv_1x7_7x1: return "C1x7-7x1";
    case BlockType::sum: return "Summation";
    case BlockType::concat: return "Concatenation";
  }
  return "?";
}

inline constexpr std::string_view block_symbol(BlockType t) {
  switch (t) {
    case BlockType::conv: return "CB";
    case BlockType::res: return "RB";
    case BlockType::bottleneck: return "BN";
    case BlockType::fused_mbconv: return "FBC";
    case BlockType::mbconv: return "MBC";
    case BlockType::sep_conv: return "SC";
    case BlockType::dil_conv: return "DC";
    case BlockType::identity: return "I";
    case BlockType::conv_1x7_7x1: return "C17";
    case BlockType::sum: return "Sum";
    case BlockType::concat: return "Concat";
  }
  return "?";
}

inline std::optional<BlockType> parse_block_name(std::string_view name) {
  for (BlockType t : kBlockTypes)
    if (block_name(t) == name) return t;
  return std::nullopt;
}

inline constexpr int block_arity(BlockType t) {
  return (t == BlockType::sum || t == BlockType::concat) ? 2 : 1;
}

// True for block types whose channel count and kernel size vary.
inline constexpr bool has_hyperparameters(BlockType t) {
  switch (t) {
    case BlockType::identity:
    case BlockType::conv_1x7_7x1:
    case BlockType::sum:
    case BlockType::concat: return false;
    default: return true;
  }
}

// Kernel sizes listed for each block in the V1 function set. Empty for
// blocks without variants and for MBConv, which V1 does not use.
inline std::vector<int> v1_kernel_options(BlockType t) {
  switch (t) {
    case BlockType::conv: return {1, 3, 5, 7};
    case BlockType::res:
    case BlockType::bottleneck:
    case BlockType::sep_conv: return {3, 5, 7};
    case BlockType::fused_mbconv: return {3};
    case BlockType::dil_conv: return {3, 5};
    default: return {};
  }
}

inline constexpr std::array<int, 4> kChannelOptions = {32, 64, 128, 256};

struct FunctionSpec {
  BlockType type;
  int arity;
  int channels = 0;  // 0 when unbound (V2, or blocks without variants)
  int kernel = 0;

  bool bound() const { return channels > 0; }

  std::string label() const {
    std::string s(block_symbol(type));
    if (bound()) s += "(" + std::to_string(channels) + "," + std::to_string(kernel) + ")";
    return s;
  }

  friend bool operator==(const FunctionSpec&, const FunctionSpec&) = default;
};

inline std::vector<FunctionSpec> build_v1_function_set(std::span<const int> channel_options) {
  if (channel_options.empty()) throw ConfigError("V1 function set needs at least one channel option");
  std::vector<FunctionSpec> set;
  for (BlockType t : kBlockTypes) {
    if (!has_hyperparameters(t)) continue;
    for (int c : channel_options)
      for (int k : v1_kernel_options(t)) set.push_back({t, block_arity(t), c, k});
  }
  for (BlockType t : {BlockType::identity, BlockType::conv_1x7_7x1, BlockType::sum, BlockType::concat})
    set.push_back({t, block_arity(t)});
  return set;
}

inline std::vector<FunctionSpec> build_v1_function_set() { return build_v1_function_set(kChannelOptions); }

inline std::vector<FunctionSpec> build_v2_function_set() {
  std::vector<FunctionSpec> set;
  for (BlockType t : kBlockTypes) set.push_back({t, block_arity(t)});
  return set;
}

// V2 per-node hyperparameter genes: slot 0 picks the channel count, slot 1
// the kernel size.
struct HyperparameterSchema {
  std::vector<int> channels{32, 64, 128, 256};
  std::vector<int> kernels{3, 5};

  std::vector<int> totals() const { return {static_cast<int>(channels.size()), static_cast<int>(kernels.size())}; }
};

enum class Variant { v1, v2 };
// Whether each V1 stage only sees its own two channel options or all four.
enum class ChannelMode { per_stage, full };

inline std::string_view variant_name(Variant v) { return v == Variant::v1 ? "v1" : "v2"; }

inline Variant parse_variant(std::string_view s) {
  if (s == "v1" || s == "V1") return Variant::v1;
  if (s == "v2" || s == "V2") return Variant::v2;
  throw ConfigError("unknown variant '" + std::string(s) + "' (expected v1 or v2)");
}

inline std::string_view channel_mode_name(ChannelMode m) { return m == ChannelMode::per_stage ? "per_stage" : "full"; }

inline ChannelMode parse_channel_mode(std::string_view s) {
  if (s == "per_stage") return ChannelMode::per_stage;
  if (s == "full") return ChannelMode::full;
  throw ConfigError("unknown channel mode '" + std::string(s) + "' (expected per_stage or full)");
}

struct NormalStage {
  int index = 0;
  std::vector<int> channel_options;
  GridConfig grid;
  std::vector<FunctionSpec> functions;

  // Width used by blocks without a channel parameter (C1x7-7x1).
  int width() const { return 32 << index; }
};

enum class StageKind { normal, reduction };

struct BlockTemplate {
  Variant variant = Variant::v2;
  ChannelMode channel_mode = ChannelMode::per_stage;
  std::vector<NormalStage> normal;  // Reduction (max-pool) stages sit between consecutive Normal stages
  HyperparameterSchema hyper;
  int pool_kernel = 2;
  int pool_stride = 2;

  std::vector<StageKind> layout() const {
    std::vector<StageKind> seq;
    for (std::size_t i = 0; i < normal.size(); ++i) {
      if (i > 0) seq.push_back(StageKind::reduction);
      seq.push_back(StageKind::normal);
    }
    return seq;
  }

  GenomeSchema schema(std::size_t stage) const {
    const NormalStage& s = normal[stage];
    GenomeSchema g{s.grid, {}, {}};
    for (const auto& f : s.functions) g.arities.push_back(f.arity);
    if (variant == Variant::v2) g.hyper_totals = hyper.totals();
    return g;
  }

  std::vector<GenomeSchema> schemas() const {
    std::vector<GenomeSchema> out;
    for (std::size_t i = 0; i < normal.size(); ++i) out.push_back(schema(i));
    return out;
  }
};

inline GridConfig default_grid(Variant v) {
  GridConfig g;
  if (v == Variant::v1) {
    g.rows = 5;
    g.cols = 25;
  } else {
    g.rows = 10;
    g.cols = 4;
  }
  g.level_back = 1;
  g.max_arity = 2;
  return g;
}

inline BlockTemplate make_template(Variant variant, const GridConfig& grid, ChannelMode mode = ChannelMode::per_stage,
                                   int normal_blocks = 3) {
  grid.check();
  if (grid.max_arity < 2) throw ConfigError("the block catalog needs max_arity >= 2");
  if (normal_blocks < 1) throw ConfigError("at least one Normal block is required");
  BlockTemplate t;
  t.variant = variant;
  t.channel_mode = mode;
  for (int i = 0; i < normal_blocks; ++i) {
    NormalStage s;
    s.index = i;
    s.grid = grid;
    if (variant == Variant::v1 && mode == ChannelMode::per_stage) {
      s.channel_options = {32 << i, 64 << i};
    } else {
      s.channel_options.assign(kChannelOptions.begin(), kChannelOptions.end());
    }
    s.functions = variant == Variant::v1 ? build_v1_function_set(s.channel_options) : build_v2_function_set();
    t.normal.push_back(std::move(s));
  }
  return t;
}

inline BlockTemplate template_default(Variant variant, ChannelMode mode = ChannelMode::per_stage) {
  return make_template(variant, default_grid(variant), mode);
}

}  // namespace cgpnas
