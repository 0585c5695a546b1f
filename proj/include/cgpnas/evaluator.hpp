#pragma once

// Fitness boundary. An Evaluator turns architecture graphs into
// classification errors; complexity is always computed analytically by the
// engine.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "cgpnas/phenotype.hpp"

namespace cgpnas {

inline constexpr int kProtocolVersion = 1;

struct EvaluationRequest {
  std::uint64_t id = 0;
  ArchitectureGraph arch;
  int epochs = 36;
  std::string dataset = "cifar10";
  std::string variant = "v2";
};

enum class EvalStatus { ok, failed };

struct EvaluationResult {
  std::uint64_t id = 0;
  EvalStatus status = EvalStatus::failed;
  double error = 1.0;  // meaningful only when status == ok
  std::string diagnostics;

  bool ok() const { return status == EvalStatus::ok; }
};

class Evaluator {
 public:
  virtual ~Evaluator() = default;
  // Results are returned in request order.
  virtual std::vector<EvaluationResult> evaluate(std::span<const EvaluationRequest> batch) = 0;
  virtual std::string name() const = 0;
  // Called once before generation 0; may throw EvaluatorError.
  virtual void start() {}
};

struct SurrogateFeatures {
  std::uint64_t madds = 0;
  int branch_count = 0;         // Summation and Concatenation nodes
  int distinct_block_types = 0;
};

inline SurrogateFeatures surrogate_features(const ArchitectureGraph& g, const ComplexityReport& c) {
  SurrogateFeatures f;
  f.madds = c.madds;
  std::set<BlockType> types;
  for (const auto& n : g.nodes) {
    if (n.op != NodeOp::block) continue;
    types.insert(n.block);
    if (n.block == BlockType::sum || n.block == BlockType::concat) ++f.branch_count;
  }
  f.distinct_block_types = static_cast<int>(types.size());
  return f;
}

// Deterministic stand-in for a trained network's validation error. It is not
// a model of accuracy: it only gives the search a smooth landscape in which
// lower error costs more MAdds.
inline double surrogate_error(const SurrogateFeatures& f) {
  const double madds_m = static_cast<double>(f.madds) / 1e6;
  const double e = 0.9 / (1.0 + 0.35 * std::log1p(madds_m)) + 0.02 * std::abs(f.branch_count - 4) -
                   0.01 * f.distinct_block_types;
  return std::clamp(e, 0.02, 0.95);
}

inline EvaluationResult surrogate_evaluate(const ArchitectureGraph& g, const ComplexityReport& c, std::uint64_t id = 0) {
  return {id, EvalStatus::ok, surrogate_error(surrogate_features(g, c)), {}};
}

class SurrogateEvaluator final : public Evaluator {
 public:
  explicit SurrogateEvaluator(unsigned parallelism = 1) : parallelism_(std::max(1u, parallelism)) {}

  std::vector<EvaluationResult> evaluate(std::span<const EvaluationRequest> batch) override {
    std::vector<EvaluationResult> out(batch.size());
    auto work = [&](std::size_t begin, std::size_t stride) {
      for (std::size_t i = begin; i < batch.size(); i += stride) {
        const auto& req = batch[i];
        try {
          out[i] = surrogate_evaluate(req.arch, complexity(req.arch), req.id);
        } catch (const ShapeError& e) {
          out[i] = {req.id, EvalStatus::failed, 1.0, e.what()};
        }
      }
    };
    const std::size_t threads = std::min<std::size_t>(parallelism_, batch.size());
    if (threads <= 1) {
      work(0, 1);
      return out;
    }
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    pool.clear();
    return out;
  }

  std::string name() const override { return "surrogate"; }

 private:
  unsigned parallelism_;
};

}  // namespace cgpnas
