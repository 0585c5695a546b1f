#pragma once

// Interval mapping between integer CGP genes and reals in [0, 1).
//
// A gene with T admissible values encodes value index k as a uniform draw
// from [k/T, (k+1)/T) and decodes as floor(g*T). Connection genes index into
// the list of level-back-legal targets of their column, so every real vector
// decodes to a valid genome without repair.

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cgpnas/cgp.hpp"

namespace cgpnas {

enum class GeneKind { function, connection, hyper, output };

struct GeneDomain {
  GeneKind kind;
  int total;       // number of admissible values
  int column = 0;  // owning node's column (connection genes)
};

// floor(g*T), clamped to [0, T-1]. NaN decodes to 0.
inline int quantize(double gene, int total) {
  if (!(gene > 0.0)) return 0;
  if (gene >= 1.0) return total - 1;
  const double k = std::floor(gene * static_cast<double>(total));
  return std::min(static_cast<int>(k), total - 1);
}

// Uniform draw from [k/T, (k+1)/T) that is guaranteed to quantize back to k.
inline double sample_interval(int k, int total, Rng& rng) {
  const double t = static_cast<double>(total);
  const double lo = static_cast<double>(k) / t;
  const double hi = static_cast<double>(k + 1) / t;
  double g = lo + rng.uniform() * (hi - lo);
  while (g >= 1.0 || quantize(g, total) > k) g = std::nextafter(g, 0.0);
  while (quantize(g, total) < k) g = std::nextafter(g, 1.0);
  return g;
}

class BlockCodec {
 public:
  explicit BlockCodec(GenomeSchema schema) : schema_(std::move(schema)) {
    schema_.check();
    const auto& grid = schema_.grid;
    domains_.reserve(schema_.genome_length());
    for (int node = 0; node < grid.node_count(); ++node) {
      const int col = schema_.column_of(node);
      domains_.push_back({GeneKind::function, schema_.function_count(), col});
      for (int i = 0; i < grid.max_arity; ++i)
        domains_.push_back({GeneKind::connection, schema_.connection_term(col), col});
      for (int t : schema_.hyper_totals) domains_.push_back({GeneKind::hyper, t, col});
    }
    domains_.push_back({GeneKind::output, schema_.output_term(), grid.cols});
  }

  const GenomeSchema& schema() const { return schema_; }
  const std::vector<GeneDomain>& domains() const { return domains_; }
  std::size_t length() const { return domains_.size(); }

  // Interval index of an integer gene value; throws CodecError when the
  // value is not admissible at that position.
  int to_index(std::size_t pos, int value) const {
    const GeneDomain& d = domains_[pos];
    if (d.kind == GeneKind::connection) {
      if (auto slot = schema_.connection_slot(d.column, value)) return *slot;
      throw CodecError("gene " + std::to_string(pos) + ": connection " + std::to_string(value) +
                       " is not legal from column " + std::to_string(d.column));
    }
    if (value < 0 || value >= d.total)
      throw CodecError("gene " + std::to_string(pos) + ": value " + std::to_string(value) + " outside [0, " +
                       std::to_string(d.total) + ")");
    return value;
  }

  int from_index(std::size_t pos, int index) const {
    const GeneDomain& d = domains_[pos];
    return d.kind == GeneKind::connection ? schema_.connection_target(d.column, index) : index;
  }

  void encode_into(const IntegerGenome& genome, Rng& rng, std::vector<double>& out) const {
    if (genome.genes.size() != length())
      throw CodecError("genome length " + std::to_string(genome.genes.size()) + " != expected " +
                       std::to_string(length()));
    for (std::size_t pos = 0; pos < length(); ++pos)
      out.push_back(sample_interval(to_index(pos, genome.genes[pos]), domains_[pos].total, rng));
  }

  std::vector<double> encode(const IntegerGenome& genome, Rng& rng) const {
    std::vector<double> out;
    out.reserve(length());
    encode_into(genome, rng, out);
    return out;
  }

  IntegerGenome decode(std::span<const double> real) const {
    if (real.size() != length())
      throw CodecError("real vector length " + std::to_string(real.size()) + " != expected " +
                       std::to_string(length()));
    IntegerGenome g;
    g.genes.resize(length());
    for (std::size_t pos = 0; pos < length(); ++pos)
      g.genes[pos] = from_index(pos, quantize(real[pos], domains_[pos].total));
    return g;
  }

 private:
  GenomeSchema schema_;
  std::vector<GeneDomain> domains_;
};

// One integer genome per Normal block.
struct Genotype {
  std::vector<IntegerGenome> blocks;
  friend bool operator==(const Genotype&, const Genotype&) = default;
};

// Sizes of the per-block sub-vectors of a real genome.
struct Partition {
  std::vector<std::size_t> sizes;

  std::size_t total() const { return std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}); }
  std::size_t offset(std::size_t block) const {
    return std::accumulate(sizes.begin(), sizes.begin() + static_cast<std::ptrdiff_t>(block), std::size_t{0});
  }
  std::size_t count() const { return sizes.size(); }
};

struct RealGenome {
  std::vector<double> genes;
  friend bool operator==(const RealGenome&, const RealGenome&) = default;
};

class GenotypeCodec {
 public:
  explicit GenotypeCodec(const std::vector<GenomeSchema>& schemas) {
    if (schemas.empty()) throw ConfigError("at least one block schema is required");
    for (const auto& s : schemas) {
      blocks_.emplace_back(s);
      partition_.sizes.push_back(blocks_.back().length());
    }
  }

  const std::vector<BlockCodec>& blocks() const { return blocks_; }
  const Partition& partition() const { return partition_; }
  std::size_t length() const { return partition_.total(); }

  RealGenome encode(const Genotype& genotype, Rng& rng) const {
    if (genotype.blocks.size() != blocks_.size())
      throw CodecError("genotype has " + std::to_string(genotype.blocks.size()) + " blocks, expected " +
                       std::to_string(blocks_.size()));
    RealGenome real;
    real.genes.reserve(length());
    for (std::size_t b = 0; b < blocks_.size(); ++b) blocks_[b].encode_into(genotype.blocks[b], rng, real.genes);
    return real;
  }

  Genotype decode(const RealGenome& real) const {
    if (real.genes.size() != length())
      throw CodecError("real genome length " + std::to_string(real.genes.size()) + " != expected " +
                       std::to_string(length()));
    Genotype g;
    std::span<const double> all(real.genes);
    for (std::size_t b = 0; b < blocks_.size(); ++b)
      g.blocks.push_back(blocks_[b].decode(all.subspan(partition_.offset(b), partition_.sizes[b])));
    return g;
  }

 private:
  std::vector<BlockCodec> blocks_;
  Partition partition_;
};

}  // namespace cgpnas
