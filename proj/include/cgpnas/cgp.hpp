#pragma once

// Fixed-grid Cartesian genetic programming genomes.
//
// Nodes are indexed column-major: node n sits in column n / rows. Connection
// and output genes hold *absolute* source indices, where [0, n_inputs) are the
// block inputs and node n has absolute index n_inputs + n.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cgpnas/errors.hpp"
#include "cgpnas/rng.hpp"

namespace cgpnas {

struct GridConfig {
  int rows = 1;
  int cols = 1;
  int level_back = 1;  // counted in columns
  int n_inputs = 1;
  int n_outputs = 1;
  int max_arity = 2;

  int node_count() const { return rows * cols; }

  void check() const {
    if (rows < 1 || cols < 1) throw ConfigError("grid must have at least one row and one column");
    if (level_back < 1) throw ConfigError("level_back must be >= 1");
    if (n_inputs < 1) throw ConfigError("n_inputs must be >= 1");
    if (n_outputs != 1) throw ConfigError("exactly one block output is supported");
    if (max_arity < 1) throw ConfigError("max_arity must be >= 1");
  }

  friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

// Everything needed to lay out and check one block's integer genome.
struct GenomeSchema {
  GridConfig grid;
  std::vector<int> arities;       // indexed by function id
  std::vector<int> hyper_totals;  // value count per hyperparameter slot; empty without hyperparameter genes

  int function_count() const { return static_cast<int>(arities.size()); }
  int hyper_slots() const { return static_cast<int>(hyper_totals.size()); }
  int record_width() const { return 1 + grid.max_arity + hyper_slots(); }

  std::size_t genome_length() const {
    return static_cast<std::size_t>(grid.node_count()) * static_cast<std::size_t>(record_width()) + 1;
  }

  std::size_t record_offset(int node) const {
    return static_cast<std::size_t>(node) * static_cast<std::size_t>(record_width());
  }
  std::size_t output_position() const { return genome_length() - 1; }

  int column_of(int node) const { return node / grid.rows; }
  int first_source_column(int col) const { return std::max(0, col - grid.level_back); }

  // Number of legal connection targets for a node in `col`: the block inputs
  // plus every node of the level-back window of preceding columns.
  int connection_term(int col) const {
    return grid.n_inputs + grid.rows * (col - first_source_column(col));
  }

  // j-th legal target (absolute index) for a node in `col`.
  int connection_target(int col, int j) const {
    if (j < grid.n_inputs) return j;
    return grid.n_inputs + grid.rows * first_source_column(col) + (j - grid.n_inputs);
  }

  // Inverse of connection_target; empty when `target` is not legal from `col`.
  std::optional<int> connection_slot(int col, int target) const {
    if (target < 0) return std::nullopt;
    if (target < grid.n_inputs) return target;
    const int lo = grid.n_inputs + grid.rows * first_source_column(col);
    const int hi = grid.n_inputs + grid.rows * col;
    if (target < lo || target >= hi) return std::nullopt;
    return grid.n_inputs + (target - lo);
  }

  int output_term() const { return grid.n_inputs + grid.node_count(); }

  void check() const {
    grid.check();
    if (arities.empty()) throw ConfigError("function set is empty");
    for (int a : arities)
      if (a < 0 || a > grid.max_arity) throw ConfigError("function arity exceeds max_arity");
    for (int t : hyper_totals)
      if (t < 1) throw ConfigError("hyperparameter slot must have at least one value");
  }
};

struct IntegerGenome {
  std::vector<int> genes;

  int function(const GenomeSchema& s, int node) const { return genes[s.record_offset(node)]; }
  int input(const GenomeSchema& s, int node, int i) const {
    return genes[s.record_offset(node) + 1 + static_cast<std::size_t>(i)];
  }
  int hyper(const GenomeSchema& s, int node, int slot) const {
    return genes[s.record_offset(node) + 1 + static_cast<std::size_t>(s.grid.max_arity + slot)];
  }
  int output() const { return genes.back(); }

  friend bool operator==(const IntegerGenome&, const IntegerGenome&) = default;
};

inline IntegerGenome random_genome(const GenomeSchema& schema, Rng& rng) {
  schema.check();
  IntegerGenome g;
  g.genes.reserve(schema.genome_length());
  const auto& grid = schema.grid;
  for (int node = 0; node < grid.node_count(); ++node) {
    const int col = schema.column_of(node);
    g.genes.push_back(static_cast<int>(rng.below(static_cast<std::size_t>(schema.function_count()))));
    for (int i = 0; i < grid.max_arity; ++i) {
      const auto j = static_cast<int>(rng.below(static_cast<std::size_t>(schema.connection_term(col))));
      g.genes.push_back(schema.connection_target(col, j));
    }
    for (int t : schema.hyper_totals) g.genes.push_back(static_cast<int>(rng.below(static_cast<std::size_t>(t))));
  }
  // Fresh genomes always express at least one node; a block-input output is
  // still legal and reachable through variation.
  g.genes.push_back(grid.n_inputs + static_cast<int>(rng.below(static_cast<std::size_t>(grid.node_count()))));
  return g;
}

inline IntegerGenome random_genome(const GenomeSchema& schema, std::uint64_t seed) {
  Rng rng(seed);
  return random_genome(schema, rng);
}

// Nodes reachable backward from the output gene.
struct ActiveTrace {
  std::vector<bool> mask;  // per node
  std::vector<int> nodes;  // ascending

  bool contains(int node) const { return mask[static_cast<std::size_t>(node)]; }
  friend bool operator==(const ActiveTrace&, const ActiveTrace&) = default;
};

// Connections only point to earlier columns, so one reverse sweep suffices.
inline ActiveTrace trace_active(const GenomeSchema& schema, const IntegerGenome& genome) {
  const int n_in = schema.grid.n_inputs;
  const int count = schema.grid.node_count();
  ActiveTrace trace;
  trace.mask.assign(static_cast<std::size_t>(count), false);
  if (genome.output() >= n_in) trace.mask[static_cast<std::size_t>(genome.output() - n_in)] = true;
  for (int node = count - 1; node >= 0; --node) {
    if (!trace.mask[static_cast<std::size_t>(node)]) continue;
    const int arity = schema.arities[static_cast<std::size_t>(genome.function(schema, node))];
    for (int i = 0; i < arity; ++i) {
      const int src = genome.input(schema, node, i);
      if (src >= n_in) trace.mask[static_cast<std::size_t>(src - n_in)] = true;
    }
  }
  for (int node = 0; node < count; ++node)
    if (trace.mask[static_cast<std::size_t>(node)]) trace.nodes.push_back(node);
  return trace;
}

struct Violation {
  std::size_t gene;
  std::string reason;
};

// First invariant violation of `genome`, or nothing when it is valid.
inline std::optional<Violation> validate(const GenomeSchema& schema, const IntegerGenome& genome) {
  const std::size_t expected = schema.genome_length();
  if (genome.genes.size() != expected) {
    return Violation{std::min(genome.genes.size(), expected),
                     "genome length " + std::to_string(genome.genes.size()) + " != expected " +
                         std::to_string(expected)};
  }
  const auto& grid = schema.grid;
  for (int node = 0; node < grid.node_count(); ++node) {
    const std::size_t off = schema.record_offset(node);
    const int col = schema.column_of(node);
    const int f = genome.genes[off];
    if (f < 0 || f >= schema.function_count())
      return Violation{off, "function id " + std::to_string(f) + " outside [0, " +
                                std::to_string(schema.function_count()) + ")"};
    for (int i = 0; i < grid.max_arity; ++i) {
      const std::size_t pos = off + 1 + static_cast<std::size_t>(i);
      const int src = genome.genes[pos];
      if (src < 0 || src >= schema.output_term())
        return Violation{pos, "connection " + std::to_string(src) + " names no input or node"};
      if (!schema.connection_slot(col, src))
        return Violation{pos, "connection " + std::to_string(src) + " from column " + std::to_string(col) +
                                  " violates level-back/acyclicity"};
    }
    for (int h = 0; h < schema.hyper_slots(); ++h) {
      const std::size_t pos = off + 1 + static_cast<std::size_t>(grid.max_arity + h);
      const int v = genome.genes[pos];
      if (v < 0 || v >= schema.hyper_totals[static_cast<std::size_t>(h)])
        return Violation{pos, "hyperparameter index " + std::to_string(v) + " out of range"};
    }
  }
  const int out = genome.output();
  if (out < 0 || out >= schema.output_term())
    return Violation{schema.output_position(), "output gene " + std::to_string(out) + " names no input or node"};
  return std::nullopt;
}

}  // namespace cgpnas
