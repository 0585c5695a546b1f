#pragma once

// Multi-objective search over real genomes: NSGA-II with SBX or DE
// variation, MOEA/D (Tchebycheff) and steady-state SMS-EMOA. Each step
// produces one population-sized batch of offspring, hands it to the
// evaluation callback in one call and then applies survival.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "cgpnas/analysis.hpp"
#include "cgpnas/codec.hpp"
#include "cgpnas/pareto.hpp"
#include "cgpnas/variation.hpp"

namespace cgpnas {

enum class Algorithm { nsga2_sbx, nsga2_de, moead, smsemoa };

inline constexpr std::array<Algorithm, 4> kAlgorithms = {Algorithm::nsga2_sbx, Algorithm::nsga2_de, Algorithm::moead,
                                                         Algorithm::smsemoa};

inline std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::nsga2_sbx: return "nsga2_sbx";
    case Algorithm::nsga2_de: return "nsga2_de";
    case Algorithm::moead: return "moead";
    case Algorithm::smsemoa: return "smsemoa";
  }
  return "?";
}

inline Algorithm parse_algorithm(std::string_view s) {
  for (Algorithm a : kAlgorithms)
    if (algorithm_name(a) == s) return a;
  throw ConfigError("unknown algorithm '" + std::string(s) + "' (expected nsga2_sbx, nsga2_de, moead or smsemoa)");
}

struct SearchConfig {
  std::size_t population_size = 24;
  int generations = 30;
  double pm = 0.3;
  double pc = 0.9;
  double sbx_eta = 20.0;
  double pm_eta = 20.0;
  Algorithm algorithm = Algorithm::nsga2_sbx;
  double de_cr = 1.0;
  double de_f = 0.5;
  std::size_t moead_neighborhood = 4;
  std::size_t moead_max_replacements = 2;
  std::uint64_t seed = 0;

  VariationParams variation() const { return {pc, pm, sbx_eta, pm_eta}; }

  void check() const {
    if (population_size < 1) throw ConfigError("population must be positive");
    if (generations < 0) throw ConfigError("generations must be non-negative");
    if (pm < 0 || pm > 1 || pc < 0 || pc > 1) throw ConfigError("pm and pc must lie in [0, 1]");
    if (de_cr < 0 || de_cr > 1) throw ConfigError("de_cr must lie in [0, 1]");
    if (sbx_eta < 0 || pm_eta < 0) throw ConfigError("distribution indices must be non-negative");
    if (algorithm == Algorithm::nsga2_sbx && population_size % 2 != 0)
      throw ConfigError("nsga2_sbx needs an even population for pairwise crossover");
    if (algorithm == Algorithm::nsga2_de && population_size < 4)
      throw ConfigError("nsga2_de needs a population of at least 4");
    if (moead_neighborhood < 1) throw ConfigError("moead_neighborhood must be positive");
  }
};

struct Individual {
  std::uint64_t id = 0;
  int birth_generation = 0;
  RealGenome real;
  Genotype genotype;
  ObjectiveVector objectives;
  std::uint64_t params = 0;
  bool evaluated = false;
  bool failed = false;
  int rank = 0;
  double crowding = 0.0;
};

// Decodes and evaluates every individual of the batch in place.
using EvaluateFn = std::function<void(std::vector<Individual>&)>;

struct MoeadState {
  std::vector<std::array<double, 2>> weights;
  std::vector<std::vector<std::size_t>> neighbors;
  ObjectiveVector ideal;
  ObjectiveVector worst;
  bool has_bounds = false;
};

struct SearchState {
  int generation = 0;
  std::vector<Individual> population;
  ElitistArchive archive;
  Rng variation;
  std::uint64_t next_id = 0;
  std::uint64_t evaluations = 0;
  MoeadState moead;
};

inline std::vector<ObjectiveVector> objectives_of(const std::vector<Individual>& pop) {
  std::vector<ObjectiveVector> out;
  out.reserve(pop.size());
  for (const auto& ind : pop) out.push_back(ind.objectives);
  return out;
}

// Survival order: rank, then larger crowding, then lower id.
inline bool survives_before(const Individual& a, const Individual& b) {
  if (a.rank != b.rank) return a.rank < b.rank;
  if (a.crowding != b.crowding) return a.crowding > b.crowding;
  return a.id < b.id;
}

inline void assign_rank_and_crowding(std::vector<Individual>& pop) {
  const auto objs = objectives_of(pop);
  const auto fronts = nondominated_sort(objs);
  for (std::size_t r = 0; r < fronts.size(); ++r) {
    std::vector<ObjectiveVector> fo;
    for (std::size_t i : fronts[r]) fo.push_back(objs[i]);
    const auto cd = crowding_distance(fo);
    for (std::size_t k = 0; k < fronts[r].size(); ++k) {
      pop[fronts[r][k]].rank = static_cast<int>(r);
      pop[fronts[r][k]].crowding = cd[k];
    }
  }
}

// (mu + lambda) elitist truncation by rank and crowding.
inline std::vector<Individual> nsga2_survival(std::vector<Individual> pool, std::size_t n) {
  assign_rank_and_crowding(pool);
  std::sort(pool.begin(), pool.end(), survives_before);
  pool.resize(std::min(n, pool.size()));
  return pool;
}

inline std::size_t binary_tournament(const std::vector<Individual>& pop, Rng& rng) {
  const std::size_t a = rng.below(pop.size());
  if (pop.size() == 1) return a;
  std::size_t b;
  do {
    b = rng.below(pop.size());
  } while (b == a);
  return survives_before(pop[a], pop[b]) ? a : b;
}

inline void archive_individual(SearchState& s, const Individual& ind) {
  s.archive.insert({ind.id, ind.objectives, ind.params, ind.birth_generation, ind.failed});
}

// Assigns ids, evaluates and archives a batch of freshly built offspring.
inline void evaluate_offspring(SearchState& s, std::vector<Individual>& batch, const EvaluateFn& evaluate,
                               int birth_generation) {
  for (auto& ind : batch) {
    ind.id = s.next_id++;
    ind.birth_generation = birth_generation;
    ind.evaluated = false;
  }
  evaluate(batch);
  for (const auto& ind : batch) {
    if (!ind.evaluated) throw InternalError("evaluation callback left an individual unevaluated");
    archive_individual(s, ind);
  }
  s.evaluations += batch.size();
}

inline Individual offspring_from(RealGenome g) {
  Individual ind;
  ind.real = std::move(g);
  return ind;
}

inline void step_nsga2(SearchState& s, const SearchConfig& cfg, const Partition& part, const EvaluateFn& evaluate) {
  const std::size_t n = s.population.size();
  const VariationParams vp = cfg.variation();
  std::vector<Individual> offspring;
  offspring.reserve(n);
  if (cfg.algorithm == Algorithm::nsga2_de) {
    std::vector<RealGenome> reals;
    for (const auto& ind : s.population) reals.push_back(ind.real);
    for (std::size_t i = 0; i < n; ++i) {
      RealGenome trial = de_variation(i, reals, part, cfg.de_cr, cfg.de_f, s.variation);
      mutate_subvectorwise(trial, part, vp, s.variation);
      offspring.push_back(offspring_from(std::move(trial)));
    }
  } else {
    std::vector<std::size_t> mating(n);
    for (auto& m : mating) m = binary_tournament(s.population, s.variation);
    for (std::size_t i = 0; i + 1 < n; i += 2) {
      auto [c1, c2] = vary_subvectorwise(s.population[mating[i]].real, s.population[mating[i + 1]].real, part, vp,
                                         s.variation);
      offspring.push_back(offspring_from(std::move(c1)));
      offspring.push_back(offspring_from(std::move(c2)));
    }
  }
  evaluate_offspring(s, offspring, evaluate, s.generation + 1);
  std::vector<Individual> pool = std::move(s.population);
  pool.insert(pool.end(), std::make_move_iterator(offspring.begin()), std::make_move_iterator(offspring.end()));
  s.population = nsga2_survival(std::move(pool), n);
}

// ---- MOEA/D ---------------------------------------------------------------

inline std::vector<std::array<double, 2>> uniform_weights(std::size_t n) {
  std::vector<std::array<double, 2>> w;
  if (n == 1) return {{0.5, 0.5}};
  for (std::size_t i = 0; i < n; ++i) {
    const double a = static_cast<double>(i) / static_cast<double>(n - 1);
    w.push_back({a, 1.0 - a});
  }
  return w;
}

inline void moead_observe(MoeadState& m, const ObjectiveVector& f) {
  if (!m.has_bounds) {
    m.ideal = m.worst = f;
    m.has_bounds = true;
    return;
  }
  m.ideal.error = std::min(m.ideal.error, f.error);
  m.ideal.madds = std::min(m.ideal.madds, f.madds);
  m.worst.error = std::max(m.worst.error, f.error);
  m.worst.madds = std::max(m.worst.madds, f.madds);
}

// Tchebycheff value on objectives min-max normalized by the bounds seen so far.
inline double tchebycheff(const ObjectiveVector& f, const std::array<double, 2>& w, const MoeadState& m) {
  double g = 0.0;
  for (std::size_t k = 0; k < 2; ++k) {
    const double range = m.worst[k] - m.ideal[k];
    const double nf = range > 0 ? (f[k] - m.ideal[k]) / range : 0.0;
    g = std::max(g, std::max(w[k], 1e-6) * nf);
  }
  return g;
}

inline void init_moead(SearchState& s, const SearchConfig& cfg) {
  const std::size_t n = s.population.size();
  MoeadState& m = s.moead;
  m.weights = uniform_weights(n);
  m.neighbors.assign(n, {});
  const std::size_t t = std::min(cfg.moead_neighborhood, n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto dist = [&](std::size_t j) {
      return std::hypot(m.weights[i][0] - m.weights[j][0], m.weights[i][1] - m.weights[j][1]);
    };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist(a) < dist(b); });
    m.neighbors[i].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(t));
  }
  m.has_bounds = false;
  for (const auto& ind : s.population) moead_observe(m, ind.objectives);
}

inline void step_moead(SearchState& s, const SearchConfig& cfg, const Partition& part, const EvaluateFn& evaluate) {
  const std::size_t n = s.population.size();
  MoeadState& m = s.moead;
  if (m.weights.size() != n) init_moead(s, cfg);
  const VariationParams vp = cfg.variation();
  std::vector<Individual> offspring;
  offspring.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& hood = m.neighbors[i];
    const std::size_t a = hood[s.variation.below(hood.size())];
    std::size_t b = a;
    if (hood.size() > 1) {
      do {
        b = hood[s.variation.below(hood.size())];
      } while (b == a);
    }
    auto children = vary_subvectorwise(s.population[a].real, s.population[b].real, part, vp, s.variation);
    offspring.push_back(offspring_from(std::move(children.first)));
  }
  evaluate_offspring(s, offspring, evaluate, s.generation + 1);
  for (const auto& child : offspring) moead_observe(m, child.objectives);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> hood = m.neighbors[i];
    for (std::size_t k = hood.size(); k > 1; --k) std::swap(hood[k - 1], hood[s.variation.below(k)]);
    std::size_t replaced = 0;
    for (std::size_t j : hood) {
      if (replaced >= cfg.moead_max_replacements) break;
      if (tchebycheff(offspring[i].objectives, m.weights[j], m) <=
          tchebycheff(s.population[j].objectives, m.weights[j], m)) {
        s.population[j] = offspring[i];
        ++replaced;
      }
    }
  }
  assign_rank_and_crowding(s.population);
}

// ---- SMS-EMOA -------------------------------------------------------------

// Reference point for exclusive contributions: 10% of the range beyond the
// worst value of each objective.
inline ObjectiveVector contribution_reference(const std::vector<ObjectiveVector>& pts) {
  const auto b = bounds_of(pts);
  auto beyond = [](double lo, double hi) { return hi > lo ? hi + 0.1 * (hi - lo) : hi + 1.0; };
  return {beyond(b.ideal.error, b.nadir.error), beyond(b.ideal.madds, b.nadir.madds)};
}

// Index (into `pool`) of the member a steady-state step discards: the least
// hypervolume contributor of the worst front.
inline std::size_t smsemoa_victim(const std::vector<ObjectiveVector>& pool) {
  const auto fronts = nondominated_sort(pool);
  const auto& last = fronts.back();
  if (last.size() == 1) return last.front();
  std::vector<ObjectiveVector> pts;
  for (std::size_t i : last) pts.push_back(pool[i]);
  return last[least_contributor(pts, contribution_reference(pool))];
}

inline void step_smsemoa(SearchState& s, const SearchConfig& cfg, const Partition& part, const EvaluateFn& evaluate) {
  const std::size_t n = s.population.size();
  const VariationParams vp = cfg.variation();
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t a = s.variation.below(n);
    std::size_t b = a;
    if (n > 1) {
      do {
        b = s.variation.below(n);
      } while (b == a);
    }
    auto children = vary_subvectorwise(s.population[a].real, s.population[b].real, part, vp, s.variation);
    std::vector<Individual> batch;
    batch.push_back(offspring_from(std::move(children.first)));
    evaluate_offspring(s, batch, evaluate, s.generation + 1);
    s.population.push_back(std::move(batch.front()));
    const std::size_t victim = smsemoa_victim(objectives_of(s.population));
    s.population.erase(s.population.begin() + static_cast<std::ptrdiff_t>(victim));
  }
  assign_rank_and_crowding(s.population);
}

// One generation of the configured algorithm.
inline void step(SearchState& s, const SearchConfig& cfg, const Partition& part, const EvaluateFn& evaluate) {
  switch (cfg.algorithm) {
    case Algorithm::nsga2_sbx:
    case Algorithm::nsga2_de: step_nsga2(s, cfg, part, evaluate); break;
    case Algorithm::moead: step_moead(s, cfg, part, evaluate); break;
    case Algorithm::smsemoa: step_smsemoa(s, cfg, part, evaluate); break;
  }
  ++s.generation;
}

}  // namespace cgpnas
