#pragma once

// Decoded architectures: graph construction from a genotype, shape
// propagation, and analytic MAdds / parameter accounting.
//
// Accounting conventions. One MAdd is one multiply-accumulate; a convolution
// costs H_out*W_out*C_out*(C_in/groups)*k_h*k_w MAdds and k_h*k_w*(C_in/groups)*C_out
// weights (no bias). A BatchNorm after a convolution adds 2*C_out parameters
// and no MAdds. ReLU, identity, summation, concatenation and pooling are free.
// All convolutions are stride 1 with size-preserving padding.
//
//   ConvBlock    conv kxk -> BN
//   ResBlock     (conv kxk -> BN) x2, plus 1x1 conv -> BN projection when C_in != C
//   Bottleneck   1x1 to C/4 -> BN, kxk -> BN, 1x1 to C -> BN, projection as ResBlock
//   FusedMBConv  kxk to 6*C_in -> BN, 1x1 to C -> BN
//   MBConv       1x1 to 6*C_in -> BN, depthwise kxk -> BN, 1x1 to C -> BN
//   SepConv      (depthwise kxk, 1x1 -> BN) x2, second pass at C channels
//   DiConv       dilated kxk (dilation 2) -> BN
//   C1x7-7x1     1x7 conv, 7x1 conv -> BN, at the stage width
//   Classifier   fully connected C_last -> n_classes with bias

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "cgpnas/cgp.hpp"
#include "cgpnas/codec.hpp"
#include "cgpnas/search_space.hpp"

namespace cgpnas {

inline constexpr std::uint64_t kMobileMaddsLimit = 600'000'000;
inline constexpr int kGraphFormatVersion = 1;
inline constexpr int kDilation = 2;
inline constexpr int kExpandRatio = 6;

struct TensorShape {
  int channels = 0;
  int height = 0;
  int width = 0;
  friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

enum class NodeOp { input, block, max_pool, global_avg_pool, classifier };

struct GraphNode {
  int id = 0;
  NodeOp op = NodeOp::block;
  BlockType block = BlockType::identity;  // meaningful when op == block
  int channels = 0;                       // 0 when derived from the inputs
  int kernel = 0;
  int stage = -1;
  std::vector<int> inputs;  // ordered predecessor ids

  std::string type_name() const {
    switch (op) {
      case NodeOp::input: return "Input";
      case NodeOp::max_pool: return "MaxPool";
      case NodeOp::global_avg_pool: return "GlobalAvgPool";
      case NodeOp::classifier: return "Classifier";
      case NodeOp::block: return std::string(block_name(block));
    }
    return "?";
  }

  friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

struct ArchitectureGraph {
  TensorShape input_shape{3, 32, 32};
  int n_classes = 10;
  std::vector<GraphNode> nodes;  // topologically ordered; id == position

  std::vector<std::pair<int, int>> edges() const {
    std::vector<std::pair<int, int>> e;
    for (const auto& n : nodes)
      for (int src : n.inputs) e.emplace_back(src, n.id);
    return e;
  }

  std::size_t block_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [](const GraphNode& n) { return n.op == NodeOp::block; }));
  }

  friend bool operator==(const ArchitectureGraph&, const ArchitectureGraph&) = default;
};

namespace detail {

inline int add_node(ArchitectureGraph& g, GraphNode n) {
  n.id = static_cast<int>(g.nodes.size());
  g.nodes.push_back(std::move(n));
  return g.nodes.back().id;
}

inline GraphNode resolve_block(const BlockTemplate& tmpl, const NormalStage& stage, const GenomeSchema& schema,
                               const IntegerGenome& genome, int node) {
  const FunctionSpec& spec = stage.functions[static_cast<std::size_t>(genome.function(schema, node))];
  GraphNode n;
  n.op = NodeOp::block;
  n.block = spec.type;
  n.stage = stage.index;
  if (spec.type == BlockType::conv_1x7_7x1) {
    n.channels = stage.width();
    n.kernel = 7;
  } else if (has_hyperparameters(spec.type)) {
    if (tmpl.variant == Variant::v1) {
      n.channels = spec.channels;
      n.kernel = spec.kernel;
    } else {
      n.channels = tmpl.hyper.channels[static_cast<std::size_t>(genome.hyper(schema, node, 0))];
      n.kernel = tmpl.hyper.kernels[static_cast<std::size_t>(genome.hyper(schema, node, 1))];
    }
  }
  return n;
}

}  // namespace detail

// Block-chained phenotype: stage 0 -> pool -> stage 1 -> ... -> global
// average pool -> classifier. Only active CGP nodes are materialized.
inline ArchitectureGraph decode_architecture(const BlockTemplate& tmpl, const Genotype& genotype,
                                             TensorShape input_shape = {3, 32, 32}, int n_classes = 10) {
  if (genotype.blocks.size() != tmpl.normal.size())
    throw SchemaError("genotype has " + std::to_string(genotype.blocks.size()) + " blocks, template has " +
                      std::to_string(tmpl.normal.size()));
  if (n_classes < 1) throw ConfigError("n_classes must be positive");
  ArchitectureGraph g;
  g.input_shape = input_shape;
  g.n_classes = n_classes;
  GraphNode in;
  in.op = NodeOp::input;
  in.channels = input_shape.channels;
  int prev = detail::add_node(g, in);

  for (std::size_t s = 0; s < tmpl.normal.size(); ++s) {
    const NormalStage& stage = tmpl.normal[s];
    const GenomeSchema schema = tmpl.schema(s);
    const IntegerGenome& genome = genotype.blocks[s];
    if (auto v = validate(schema, genome))
      throw SchemaError("stage " + std::to_string(s) + " gene " + std::to_string(v->gene) + ": " + v->reason);
    if (s > 0) {
      GraphNode pool;
      pool.op = NodeOp::max_pool;
      pool.kernel = tmpl.pool_kernel;
      pool.stage = static_cast<int>(s) - 1;
      pool.inputs = {prev};
      prev = detail::add_node(g, pool);
    }
    const int n_in = schema.grid.n_inputs;
    std::map<int, int> graph_id;  // absolute CGP index -> graph node id
    for (int i = 0; i < n_in; ++i) graph_id[i] = prev;
    for (int node : trace_active(schema, genome).nodes) {
      GraphNode n = detail::resolve_block(tmpl, stage, schema, genome, node);
      for (int i = 0; i < block_arity(n.block); ++i) n.inputs.push_back(graph_id.at(genome.input(schema, node, i)));
      graph_id[n_in + node] = detail::add_node(g, std::move(n));
    }
    prev = graph_id.at(genome.output());
  }

  const int last_stage = static_cast<int>(tmpl.normal.size()) - 1;
  GraphNode gap;
  gap.op = NodeOp::global_avg_pool;
  gap.stage = last_stage;
  gap.inputs = {prev};
  prev = detail::add_node(g, gap);
  GraphNode fc;
  fc.op = NodeOp::classifier;
  fc.channels = n_classes;
  fc.stage = last_stage;
  fc.inputs = {prev};
  detail::add_node(g, fc);
  return g;
}

inline std::vector<TensorShape> propagate_shapes(const ArchitectureGraph& g) {
  std::vector<TensorShape> shapes;
  shapes.reserve(g.nodes.size());
  auto in_shape = [&](const GraphNode& n, std::size_t i) { return shapes[static_cast<std::size_t>(n.inputs[i])]; };
  for (const auto& n : g.nodes) {
    TensorShape out;
    switch (n.op) {
      case NodeOp::input:
        out = g.input_shape;
        if (out.channels < 1 || out.height < 1 || out.width < 1) throw ShapeError("input shape must be positive");
        break;
      case NodeOp::max_pool: {
        const TensorShape in = in_shape(n, 0);
        const int k = n.kernel > 0 ? n.kernel : 2;
        if (in.height < k || in.width < k)
          throw ShapeError("node " + std::to_string(n.id) + ": pooling reduces spatial size to zero");
        out = {in.channels, (in.height - k) / 2 + 1, (in.width - k) / 2 + 1};
        break;
      }
      case NodeOp::global_avg_pool: out = {in_shape(n, 0).channels, 1, 1}; break;
      case NodeOp::classifier: out = {g.n_classes, 1, 1}; break;
      case NodeOp::block: {
        const TensorShape in = in_shape(n, 0);
        switch (n.block) {
          case BlockType::identity: out = in; break;
          case BlockType::sum:
          case BlockType::concat: {
            const TensorShape other = in_shape(n, 1);
            if (other.height != in.height || other.width != in.width)
              throw ShapeError("node " + std::to_string(n.id) + ": merge of mismatched spatial sizes");
            const int c = n.block == BlockType::sum ? std::max(in.channels, other.channels)
                                                    : in.channels + other.channels;
            out = {c, in.height, in.width};
            break;
          }
          default: out = {n.channels, in.height, in.width}; break;
        }
        break;
      }
    }
    shapes.push_back(out);
  }
  return shapes;
}

struct NodeCost {
  std::uint64_t madds = 0;
  std::uint64_t params = 0;

  NodeCost& operator+=(const NodeCost& o) {
    madds += o.madds;
    params += o.params;
    return *this;
  }
  friend bool operator==(const NodeCost&, const NodeCost&) = default;
};

// Stride-1, size-preserving convolution over an h x w map.
inline NodeCost conv_cost(std::uint64_t c_in, std::uint64_t c_out, std::uint64_t kh, std::uint64_t kw, std::uint64_t h,
                          std::uint64_t w, std::uint64_t groups, bool batch_norm) {
  const std::uint64_t per_group_in = c_in / groups;
  return {h * w * c_out * per_group_in * kh * kw, kh * kw * per_group_in * c_out + (batch_norm ? 2 * c_out : 0)};
}

inline NodeCost block_cost(BlockType type, const TensorShape& in, int channels, int kernel) {
  const std::uint64_t ci = static_cast<std::uint64_t>(in.channels);
  const std::uint64_t co = static_cast<std::uint64_t>(channels);
  const std::uint64_t k = static_cast<std::uint64_t>(kernel);
  const std::uint64_t h = static_cast<std::uint64_t>(in.height);
  const std::uint64_t w = static_cast<std::uint64_t>(in.width);
  NodeCost c;
  switch (type) {
    case BlockType::conv:
    case BlockType::dil_conv: c += conv_cost(ci, co, k, k, h, w, 1, true); break;
    case BlockType::res:
      c += conv_cost(ci, co, k, k, h, w, 1, true);
      c += conv_cost(co, co, k, k, h, w, 1, true);
      if (ci != co) c += conv_cost(ci, co, 1, 1, h, w, 1, true);
      break;
    case BlockType::bottleneck: {
      const std::uint64_t mid = std::max<std::uint64_t>(1, co / 4);
      c += conv_cost(ci, mid, 1, 1, h, w, 1, true);
      c += conv_cost(mid, mid, k, k, h, w, 1, true);
      c += conv_cost(mid, co, 1, 1, h, w, 1, true);
      if (ci != co) c += conv_cost(ci, co, 1, 1, h, w, 1, true);
      break;
    }
    case BlockType::fused_mbconv: {
      const std::uint64_t e = ci * kExpandRatio;
      c += conv_cost(ci, e, k, k, h, w, 1, true);
      c += conv_cost(e, co, 1, 1, h, w, 1, true);
      break;
    }
    case BlockType::mbconv: {
      const std::uint64_t e = ci * kExpandRatio;
      c += conv_cost(ci, e, 1, 1, h, w, 1, true);
      c += conv_cost(e, e, k, k, h, w, e, true);
      c += conv_cost(e, co, 1, 1, h, w, 1, true);
      break;
    }
    case BlockType::sep_conv:
      c += conv_cost(ci, ci, k, k, h, w, ci, false);
      c += conv_cost(ci, co, 1, 1, h, w, 1, true);
      c += conv_cost(co, co, k, k, h, w, co, false);
      c += conv_cost(co, co, 1, 1, h, w, 1, true);
      break;
    case BlockType::conv_1x7_7x1:
      c += conv_cost(ci, co, 1, 7, h, w, 1, false);
      c += conv_cost(co, co, 7, 1, h, w, 1, true);
      break;
    case BlockType::identity:
    case BlockType::sum:
    case BlockType::concat: break;
  }
  return c;
}

struct ComplexityReport {
  std::uint64_t madds = 0;
  std::uint64_t params = 0;
  std::vector<NodeCost> per_node;

  double madds_millions() const { return static_cast<double>(madds) / 1e6; }
};

inline ComplexityReport complexity(const ArchitectureGraph& g, const std::vector<TensorShape>& shapes) {
  ComplexityReport r;
  r.per_node.reserve(g.nodes.size());
  for (const auto& n : g.nodes) {
    NodeCost c;
    if (n.op == NodeOp::block) {
      c = block_cost(n.block, shapes[static_cast<std::size_t>(n.inputs[0])], n.channels, n.kernel);
    } else if (n.op == NodeOp::classifier) {
      const auto c_last = static_cast<std::uint64_t>(shapes[static_cast<std::size_t>(n.inputs[0])].channels);
      const auto classes = static_cast<std::uint64_t>(g.n_classes);
      c = {c_last * classes, c_last * classes + classes};
    }
    r.madds += c.madds;
    r.params += c.params;
    r.per_node.push_back(c);
  }
  return r;
}

inline ComplexityReport complexity(const ArchitectureGraph& g) { return complexity(g, propagate_shapes(g)); }

inline bool is_mobile_feasible(std::uint64_t madds) { return madds <= kMobileMaddsLimit; }

// ---- export ---------------------------------------------------------------

inline nlohmann::ordered_json to_json(const ArchitectureGraph& g) {
  nlohmann::ordered_json doc;
  doc["format"] = "cgpnas-architecture";
  doc["version"] = kGraphFormatVersion;
  doc["input_shape"] = {g.input_shape.channels, g.input_shape.height, g.input_shape.width};
  doc["n_classes"] = g.n_classes;
  auto nodes = nlohmann::ordered_json::array();
  for (const auto& n : g.nodes) {
    nlohmann::ordered_json node;
    node["id"] = n.id;
    node["block_type"] = n.type_name();
    node["channels"] = n.channels;
    node["kernel"] = n.kernel;
    node["stage"] = n.stage;
    nodes.push_back(std::move(node));
  }
  doc["nodes"] = std::move(nodes);
  auto edges = nlohmann::ordered_json::array();
  for (auto [src, dst] : g.edges()) edges.push_back({src, dst});
  doc["edges"] = std::move(edges);
  return doc;
}

inline ArchitectureGraph graph_from_json(const nlohmann::ordered_json& doc) {
  try {
    if (doc.at("format") != "cgpnas-architecture") throw SchemaError("not an architecture document");
    if (doc.at("version").get<int>() != kGraphFormatVersion)
      throw SchemaError("unsupported architecture version " + doc.at("version").dump());
    ArchitectureGraph g;
    const auto& shape = doc.at("input_shape");
    g.input_shape = {shape.at(0).get<int>(), shape.at(1).get<int>(), shape.at(2).get<int>()};
    g.n_classes = doc.at("n_classes").get<int>();
    for (const auto& jn : doc.at("nodes")) {
      GraphNode n;
      n.id = jn.at("id").get<int>();
      if (n.id != static_cast<int>(g.nodes.size())) throw SchemaError("node ids must be consecutive from 0");
      const auto type = jn.at("block_type").get<std::string>();
      if (type == "Input") n.op = NodeOp::input;
      else if (type == "MaxPool") n.op = NodeOp::max_pool;
      else if (type == "GlobalAvgPool") n.op = NodeOp::global_avg_pool;
      else if (type == "Classifier") n.op = NodeOp::classifier;
      else if (auto b = parse_block_name(type)) n.block = *b;
      else throw SchemaError("unknown block_type '" + type + "'");
      n.channels = jn.at("channels").get<int>();
      n.kernel = jn.at("kernel").get<int>();
      n.stage = jn.at("stage").get<int>();
      g.nodes.push_back(std::move(n));
    }
    for (const auto& e : doc.at("edges")) {
      const int src = e.at(0).get<int>();
      const int dst = e.at(1).get<int>();
      if (dst < 0 || dst >= static_cast<int>(g.nodes.size()) || src < 0 || src >= dst)
        throw SchemaError("edge [" + std::to_string(src) + "," + std::to_string(dst) + "] is not forward");
      g.nodes[static_cast<std::size_t>(dst)].inputs.push_back(src);
    }
    for (const auto& n : g.nodes) {
      const std::size_t want = n.op == NodeOp::input ? 0 : n.op == NodeOp::block ? block_arity(n.block) : 1;
      if (n.inputs.size() != want)
        throw SchemaError("node " + std::to_string(n.id) + " has " + std::to_string(n.inputs.size()) +
                          " predecessors, expected " + std::to_string(want));
    }
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed architecture document: ") + e.what());
  }
}

inline std::string to_dot(const ArchitectureGraph& g) {
  std::vector<TensorShape> shapes;
  try {
    shapes = propagate_shapes(g);
  } catch (const ShapeError&) {
  }
  std::ostringstream os;
  os << "digraph architecture {\n  rankdir=TB;\n  node [shape=box, fontname=\"Helvetica\"];\n";
  for (const auto& n : g.nodes) {
    os << "  n" << n.id << " [label=\"" << n.type_name();
    if (n.op == NodeOp::block && n.kernel > 0 && n.block != BlockType::conv_1x7_7x1)
      os << "(" << n.channels << "," << n.kernel << "x" << n.kernel << ")";
    if (!shapes.empty()) {
      const auto& s = shapes[static_cast<std::size_t>(n.id)];
      os << "\\n" << s.channels << "x" << s.height << "x" << s.width;
    }
    os << "\"];\n";
  }
  for (auto [src, dst] : g.edges()) os << "  n" << src << " -> n" << dst << ";\n";
  os << "}\n";
  return os.str();
}

}  // namespace cgpnas
