#pragma once

// Ties the search space, codec, phenotype and evaluator to a MOEA run.

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "cgpnas/config.hpp"
#include "cgpnas/evaluator.hpp"
#include "cgpnas/external_evaluator.hpp"
#include "cgpnas/moea.hpp"

namespace cgpnas {

inline constexpr const char* kEngineVersion = "1.0.0";

inline std::unique_ptr<Evaluator> make_evaluator(const RunConfig& cfg) {
  if (cfg.evaluator.kind == "external") {
    ExternalEvaluator::Options o;
    o.command = cfg.evaluator.command;
    o.timeout_ms = cfg.evaluator.timeout_ms;
    o.max_in_flight = cfg.evaluator.parallelism;
    return std::make_unique<ExternalEvaluator>(std::move(o));
  }
  return std::make_unique<SurrogateEvaluator>(cfg.evaluator.parallelism);
}

struct CachedEvaluation {
  double error = 1.0;
  bool failed = true;
  std::uint64_t madds = 0;
  std::uint64_t params = 0;
};

class Engine {
 public:
  Engine(RunConfig cfg, Evaluator& evaluator)
      : cfg_((cfg.check(), std::move(cfg))),
        tmpl_(cfg_.block_template()),
        codec_(tmpl_.schemas()),
        evaluator_(evaluator),
        init_rng_(Rng::child(cfg_.search.seed, Stream::init)),
        encode_rng_(Rng::child(cfg_.search.seed, Stream::encode)) {
    state_.variation = Rng::child(cfg_.search.seed, Stream::variation);
  }

  const RunConfig& config() const { return cfg_; }
  const BlockTemplate& block_template() const { return tmpl_; }
  const GenotypeCodec& codec() const { return codec_; }
  const SearchState& state() const { return state_; }
  std::uint64_t evaluator_calls() const { return evaluator_calls_; }
  double initial_best_error() const { return initial_best_; }
  bool finished() const { return state_.generation >= cfg_.search.generations; }

  // Receives every evaluated batch, in evaluation order.
  std::function<void(const std::vector<Individual>&)> on_evaluated;

  Genotype random_genotype(Rng& rng) const {
    Genotype g;
    for (const auto& block : codec_.blocks()) g.blocks.push_back(random_genome(block.schema(), rng));
    return g;
  }

  ArchitectureGraph architecture(const Genotype& g) const {
    return decode_architecture(tmpl_, g, cfg_.input_shape, cfg_.n_classes);
  }

  void initialize() {
    std::vector<Individual> pop(cfg_.search.population_size);
    for (auto& ind : pop) ind.real = codec_.encode(random_genotype(init_rng_), encode_rng_);
    evaluate_offspring(state_, pop, [this](std::vector<Individual>& b) { evaluate(b); }, 0);
    assign_rank_and_crowding(pop);
    state_.population = std::move(pop);
    initial_best_ = std::numeric_limits<double>::infinity();
    for (const auto& ind : state_.population) initial_best_ = std::min(initial_best_, ind.objectives.error);
    if (cfg_.search.algorithm == Algorithm::moead) init_moead(state_, cfg_.search);
  }

  void step() {
    cgpnas::step(state_, cfg_.search, codec_.partition(), [this](std::vector<Individual>& b) { evaluate(b); });
  }

  void run() {
    initialize();
    while (!finished()) step();
  }

  nlohmann::json checkpoint() const;
  void restore(const nlohmann::json& doc);

 private:
  static std::vector<int> cache_key(const Genotype& g) {
    std::vector<int> key;
    for (const auto& b : g.blocks) key.insert(key.end(), b.genes.begin(), b.genes.end());
    return key;
  }

  void apply(Individual& ind, const CachedEvaluation& c) const {
    ind.failed = c.failed;
    ind.objectives = {c.failed ? 1.0 : c.error, static_cast<double>(c.madds)};
    ind.params = c.params;
    ind.evaluated = true;
  }

  // Decodes the batch, answers repeats from the memo and sends the rest to
  // the evaluator in one call. Results are attached by index, so the
  // evaluator's internal concurrency cannot change the outcome.
  void evaluate(std::vector<Individual>& batch) {
    std::vector<EvaluationRequest> requests;
    std::vector<CachedEvaluation> request_costs;
    std::map<std::vector<int>, std::size_t> pending;  // key -> request index
    std::vector<std::vector<int>> keys(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      auto& ind = batch[i];
      ind.genotype = codec_.decode(ind.real);
      keys[i] = cache_key(ind.genotype);
      if (cache_.count(keys[i]) || pending.count(keys[i])) continue;
      ArchitectureGraph graph = architecture(ind.genotype);
      CachedEvaluation cost;
      try {
        const auto report = complexity(graph);
        cost.madds = report.madds;
        cost.params = report.params;
      } catch (const ShapeError&) {
        cost.madds = static_cast<std::uint64_t>(cfg_.madds_cap);
        cache_[keys[i]] = cost;
        continue;
      }
      pending[keys[i]] = requests.size();
      requests.push_back({ind.id, std::move(graph), cfg_.epochs, cfg_.dataset, std::string(variant_name(cfg_.variant))});
      request_costs.push_back(cost);
    }
    if (!requests.empty()) {
      const auto results = evaluator_.evaluate(requests);
      if (results.size() != requests.size()) throw InternalError("evaluator returned a short batch");
      evaluator_calls_ += requests.size();
      for (const auto& [key, r] : pending) {
        CachedEvaluation c = request_costs[r];
        c.failed = !results[r].ok();
        c.error = c.failed ? 1.0 : std::clamp(results[r].error, 0.0, 1.0);
        cache_[key] = c;
      }
    }
    for (std::size_t i = 0; i < batch.size(); ++i) apply(batch[i], cache_.at(keys[i]));
    if (on_evaluated) on_evaluated(batch);
  }

  RunConfig cfg_;
  BlockTemplate tmpl_;
  GenotypeCodec codec_;
  Evaluator& evaluator_;
  SearchState state_;
  Rng init_rng_;
  Rng encode_rng_;
  std::map<std::vector<int>, CachedEvaluation> cache_;
  std::uint64_t evaluator_calls_ = 0;
  double initial_best_ = 1.0;
};

// ---- checkpoint -------------------------------------------------------------

namespace detail {

inline nlohmann::json individual_to_json(const Individual& ind) {
  return {{"id", ind.id},
          {"birth", ind.birth_generation},
          {"real", ind.real.genes},
          {"f1", ind.objectives.error},
          {"f2", ind.objectives.madds},
          {"params", ind.params},
          {"failed", ind.failed},
          {"rank", ind.rank},
          {"crowding", std::isinf(ind.crowding) ? -1.0 : ind.crowding}};
}

inline Individual individual_from_json(const nlohmann::json& j, const GenotypeCodec& codec) {
  Individual ind;
  ind.id = j.at("id").get<std::uint64_t>();
  ind.birth_generation = j.at("birth").get<int>();
  ind.real.genes = j.at("real").get<std::vector<double>>();
  ind.genotype = codec.decode(ind.real);
  ind.objectives = {j.at("f1").get<double>(), j.at("f2").get<double>()};
  ind.params = j.at("params").get<std::uint64_t>();
  ind.failed = j.at("failed").get<bool>();
  ind.evaluated = true;
  ind.rank = j.at("rank").get<int>();
  const double c = j.at("crowding").get<double>();
  ind.crowding = c < 0 ? std::numeric_limits<double>::infinity() : c;
  return ind;
}

}  // namespace detail

inline nlohmann::json Engine::checkpoint() const {
  nlohmann::json doc;
  doc["generation"] = state_.generation;
  doc["next_id"] = state_.next_id;
  doc["evaluations"] = state_.evaluations;
  doc["evaluator_calls"] = evaluator_calls_;
  doc["initial_best_error"] = initial_best_;
  doc["rng"] = {{"variation", state_.variation.state()}, {"init", init_rng_.state()}, {"encode", encode_rng_.state()}};
  auto pop = nlohmann::json::array();
  for (const auto& ind : state_.population) pop.push_back(detail::individual_to_json(ind));
  doc["population"] = std::move(pop);
  auto arch = nlohmann::json::array();
  for (const auto& e : state_.archive.members())
    arch.push_back({e.id, e.objectives.error, e.objectives.madds, e.params, e.generation, e.failed});
  doc["archive"] = std::move(arch);
  const auto& m = state_.moead;
  doc["moead"] = {{"weights", m.weights},
                  {"neighbors", m.neighbors},
                  {"ideal", {m.ideal.error, m.ideal.madds}},
                  {"worst", {m.worst.error, m.worst.madds}},
                  {"has_bounds", m.has_bounds}};
  auto cache = nlohmann::json::array();
  for (const auto& [key, c] : cache_) cache.push_back({key, c.error, c.failed, c.madds, c.params});
  doc["cache"] = std::move(cache);
  return doc;
}

inline void Engine::restore(const nlohmann::json& doc) {
  try {
    SearchState s;
    s.generation = doc.at("generation").get<int>();
    s.next_id = doc.at("next_id").get<std::uint64_t>();
    s.evaluations = doc.at("evaluations").get<std::uint64_t>();
    s.variation.restore(doc.at("rng").at("variation").get<std::string>());
    for (const auto& j : doc.at("population")) s.population.push_back(detail::individual_from_json(j, codec_));
    for (const auto& a : doc.at("archive"))
      s.archive.insert({a.at(0).get<std::uint64_t>(), {a.at(1).get<double>(), a.at(2).get<double>()},
                        a.at(3).get<std::uint64_t>(), a.at(4).get<int>(), a.at(5).get<bool>()});
    const auto& m = doc.at("moead");
    s.moead.weights = m.at("weights").get<std::vector<std::array<double, 2>>>();
    s.moead.neighbors = m.at("neighbors").get<std::vector<std::vector<std::size_t>>>();
    s.moead.ideal = {m.at("ideal").at(0).get<double>(), m.at("ideal").at(1).get<double>()};
    s.moead.worst = {m.at("worst").at(0).get<double>(), m.at("worst").at(1).get<double>()};
    s.moead.has_bounds = m.at("has_bounds").get<bool>();
    std::map<std::vector<int>, CachedEvaluation> cache;
    for (const auto& c : doc.at("cache"))
      cache[c.at(0).get<std::vector<int>>()] = {c.at(1).get<double>(), c.at(2).get<bool>(),
                                               c.at(3).get<std::uint64_t>(), c.at(4).get<std::uint64_t>()};
    init_rng_.restore(doc.at("rng").at("init").get<std::string>());
    encode_rng_.restore(doc.at("rng").at("encode").get<std::string>());
    evaluator_calls_ = doc.at("evaluator_calls").get<std::uint64_t>();
    initial_best_ = doc.at("initial_best_error").get<double>();
    cache_ = std::move(cache);
    state_ = std::move(s);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace cgpnas
