#pragma once

// Real-coded variation on [0, 1] genomes, applied independently to each
// Normal-block sub-vector: SBX crossover, polynomial mutation and
// differential evolution (rand/1/bin).

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "cgpnas/codec.hpp"
#include "cgpnas/errors.hpp"
#include "cgpnas/rng.hpp"

namespace cgpnas {

struct VariationParams {
  double pc = 0.9;        // crossover probability per sub-vector pair
  double pm = 0.3;        // mutation trigger probability per offspring sub-vector
  double sbx_eta = 20.0;
  double pm_eta = 20.0;
};

inline double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

// Bounded SBX on one pair of equally long sub-vectors, in place.
inline void sbx(std::span<double> x1, std::span<double> x2, double eta, Rng& rng) {
  constexpr double eps = 1e-14;
  for (std::size_t i = 0; i < x1.size(); ++i) {
    if (rng.uniform() > 0.5) continue;
    if (std::fabs(x1[i] - x2[i]) <= eps) continue;
    const double y1 = std::min(x1[i], x2[i]);
    const double y2 = std::max(x1[i], x2[i]);
    const double u = rng.uniform();
    const double exponent = 1.0 / (eta + 1.0);

    auto betaq_for = [&](double beta) {
      const double alpha = 2.0 - std::pow(beta, -(eta + 1.0));
      return u <= 1.0 / alpha ? std::pow(u * alpha, exponent) : std::pow(1.0 / (2.0 - u * alpha), exponent);
    };
    double c1 = 0.5 * ((y1 + y2) - betaq_for(1.0 + 2.0 * y1 / (y2 - y1)) * (y2 - y1));
    double c2 = 0.5 * ((y1 + y2) + betaq_for(1.0 + 2.0 * (1.0 - y2) / (y2 - y1)) * (y2 - y1));
    c1 = clamp01(c1);
    c2 = clamp01(c2);
    if (rng.uniform() <= 0.5) std::swap(c1, c2);
    x1[i] = c1;
    x2[i] = c2;
  }
}

// Polynomial mutation of each gene with probability `rate`, in place.
inline void polynomial_mutation(std::span<double> x, double rate, double eta, Rng& rng) {
  const double exponent = 1.0 / (eta + 1.0);
  for (double& y : x) {
    if (!rng.bernoulli(rate)) continue;
    const double u = rng.uniform();
    double deltaq;
    if (u <= 0.5) {
      const double xy = 1.0 - y;
      const double val = 2.0 * u + (1.0 - 2.0 * u) * std::pow(xy, eta + 1.0);
      deltaq = std::pow(val, exponent) - 1.0;
    } else {
      const double xy = y;
      const double val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * std::pow(xy, eta + 1.0);
      deltaq = 1.0 - std::pow(val, exponent);
    }
    y = clamp01(y + deltaq);
  }
}

namespace detail {

inline void check_partition(const Partition& part, std::size_t length) {
  if (part.total() != length)
    throw InternalError("genome length " + std::to_string(length) + " does not match sub-vector partition total " +
                        std::to_string(part.total()));
}

}  // namespace detail

// Each offspring sub-vector is mutated with probability pm; a triggered
// sub-vector mutates each gene with probability 1/len.
inline void mutate_subvectorwise(RealGenome& g, const Partition& part, const VariationParams& p, Rng& rng) {
  detail::check_partition(part, g.genes.size());
  std::span<double> all(g.genes);
  for (std::size_t b = 0; b < part.count(); ++b) {
    const std::size_t len = part.sizes[b];
    if (len == 0 || !rng.bernoulli(p.pm)) continue;
    polynomial_mutation(all.subspan(part.offset(b), len), 1.0 / static_cast<double>(len), p.pm_eta, rng);
  }
}

inline std::pair<RealGenome, RealGenome> vary_subvectorwise(const RealGenome& a, const RealGenome& b,
                                                            const Partition& part, const VariationParams& p, Rng& rng) {
  detail::check_partition(part, a.genes.size());
  detail::check_partition(part, b.genes.size());
  RealGenome c1 = a;
  RealGenome c2 = b;
  std::span<double> s1(c1.genes);
  std::span<double> s2(c2.genes);
  for (std::size_t k = 0; k < part.count(); ++k) {
    if (rng.bernoulli(p.pc)) sbx(s1.subspan(part.offset(k), part.sizes[k]), s2.subspan(part.offset(k), part.sizes[k]), p.sbx_eta, rng);
  }
  mutate_subvectorwise(c1, part, p, rng);
  mutate_subvectorwise(c2, part, p, rng);
  return {std::move(c1), std::move(c2)};
}

// rand/1/bin trial vector: per sub-vector, gene j takes a_j + f*(b_j - c_j)
// when u < cr or j is that sub-vector's forced index, else the target's gene.
inline RealGenome de_trial(const RealGenome& target, const RealGenome& a, const RealGenome& b, const RealGenome& c,
                           const Partition& part, double cr, double f, Rng& rng) {
  for (const RealGenome* g : {&target, &a, &b, &c}) detail::check_partition(part, g->genes.size());
  RealGenome trial = target;
  for (std::size_t k = 0; k < part.count(); ++k) {
    const std::size_t off = part.offset(k);
    const std::size_t len = part.sizes[k];
    if (len == 0) continue;
    const std::size_t forced = rng.below(len);
    for (std::size_t j = 0; j < len; ++j) {
      const std::size_t i = off + j;
      if (rng.uniform() < cr || j == forced) trial.genes[i] = clamp01(a.genes[i] + f * (b.genes[i] - c.genes[i]));
    }
  }
  return trial;
}

// Picks three distinct donors, all different from `target_index`, and builds
// the trial vector.
inline RealGenome de_variation(std::size_t target_index, std::span<const RealGenome> population, const Partition& part,
                               double cr, double f, Rng& rng) {
  if (population.size() < 4) throw ConfigError("differential evolution needs a population of at least 4");
  std::size_t r[3];
  for (int k = 0; k < 3; ++k) {
    std::size_t pick;
    do {
      pick = rng.below(population.size());
    } while (pick == target_index || (k > 0 && pick == r[0]) || (k > 1 && pick == r[1]));
    r[k] = pick;
  }
  return de_trial(population[target_index], population[r[0]], population[r[1]], population[r[2]], part, cr, f, rng);
}

}  // namespace cgpnas
