// cgpnas command-line front end: search, decode, analyze, export.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cgpnas/cgpnas.hpp"

namespace fs = std::filesystem;
using namespace cgpnas;

namespace {

struct SearchArgs {
  std::string config, out, resume, evaluator_cmd, algo, variant;
  std::vector<std::string> sets;
  long long seed = -1;
  int generations = -1, population = -1, parallelism = -1, stop_after = -1;
  bool quiet = false;
};

RunConfig build_config(const SearchArgs& a) {
  RunConfig cfg = a.config.empty() ? RunConfig{} : RunConfig::load(a.config);
  for (const auto& kv : a.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1)));
  }
  if (!a.variant.empty()) cfg.set("variant", a.variant);
  if (!a.algo.empty()) cfg.set("algorithm", a.algo);
  if (a.seed >= 0) cfg.set("seed", std::to_string(a.seed));
  if (!a.evaluator_cmd.empty()) {
    cfg.set("evaluator", "external");
    cfg.set("evaluator_command", a.evaluator_cmd);
  }
  if (a.generations >= 0) cfg.set("generations", std::to_string(a.generations));
  if (a.population >= 0) cfg.set("population", std::to_string(a.population));
  if (a.parallelism >= 0) cfg.set("parallelism", std::to_string(a.parallelism));
  cfg.check();
  return cfg;
}

void progress(const Engine& e, bool quiet) {
  if (quiet) return;
  const auto& s = e.state();
  std::printf("generation %d evaluations %llu archive %zu best_f1 %.6f\n", s.generation,
              static_cast<unsigned long long>(s.evaluations), s.archive.size(),
              s.archive.size() ? s.archive.members().front().objectives.error : 1.0);
  std::fflush(stdout);
}

int cmd_search(const SearchArgs& a) {
  RunConfig cfg;
  nlohmann::json checkpoint;
  fs::path dir;
  if (!a.resume.empty()) {
    dir = a.resume;
    cfg = RunConfig::from_json(read_json(dir / "manifest.json").at("config"));
    if (a.parallelism >= 0) cfg.set("parallelism", std::to_string(a.parallelism));
    if (!fs::exists(dir / "checkpoint.json")) throw IoError("no checkpoint in '" + dir.string() + "'");
    checkpoint = nlohmann::json::parse(read_file(dir / "checkpoint.json"));
  } else {
    if (a.out.empty()) throw ConfigError("search needs --out (or --resume)");
    cfg = build_config(a);
    dir = a.out;
  }

  auto evaluator = make_evaluator(cfg);
  evaluator->start();
  Engine engine(cfg, *evaluator);
  RunWriter writer(dir);
  if (a.resume.empty()) {
    writer.create(engine);
    engine.on_evaluated = [&](const std::vector<Individual>& b) { writer.record(b); };
    engine.initialize();
    writer.generation_done(engine);
    progress(engine, a.quiet);
  } else {
    engine.restore(checkpoint);
    writer.reopen(engine.state().generation);
    engine.on_evaluated = [&](const std::vector<Individual>& b) { writer.record(b); };
  }
  while (!engine.finished()) {
    if (a.stop_after >= 0 && engine.state().generation >= a.stop_after) {
      if (!a.quiet) std::printf("stopped after generation %d\n", engine.state().generation);
      return 0;
    }
    engine.step();
    writer.generation_done(engine);
    progress(engine, a.quiet);
  }
  writer.finalize(engine);
  if (!a.quiet) std::printf("run written to %s\n", dir.string().c_str());
  return 0;
}

RealGenome read_real_genome(const std::string& path) {
  const std::string text = read_file(path);
  RealGenome g;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    try {
      g.genes = nlohmann::json::parse(text).get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError("genome file '" + path + "' is not a JSON number array");
    }
    return g;
  }
  std::string cleaned = text;
  for (char& c : cleaned)
    if (c == ',') c = ' ';
  std::istringstream in(cleaned);
  for (std::string tok; in >> tok;) g.genes.push_back(detail::parse_real("genome", tok));
  return g;
}

int cmd_decode(const std::string& genome_path, const std::string& config, const std::string& variant,
               const std::string& out) {
  RunConfig cfg = config.empty() ? RunConfig{} : RunConfig::load(config);
  if (!variant.empty()) cfg.set("variant", variant);
  cfg.check();
  const BlockTemplate tmpl = cfg.block_template();
  const GenotypeCodec codec(tmpl.schemas());
  const RealGenome real = read_real_genome(genome_path);
  if (real.genes.size() != codec.length())
    throw SchemaError("genome has " + std::to_string(real.genes.size()) + " genes, expected length " +
                      std::to_string(codec.length()) + " for variant " + std::string(variant_name(cfg.variant)));
  const ArchitectureGraph graph = decode_architecture(tmpl, codec.decode(real), cfg.input_shape, cfg.n_classes);
  const auto report = complexity(graph);
  if (out.empty()) {
    std::cout << to_json(graph).dump(2) << "\n";
    return 0;
  }
  write_file(out + ".arch.json", to_json(graph).dump(2) + "\n");
  write_file(out + ".dot", to_dot(graph));
  std::printf("madds %llu params %llu blocks %zu mobile_feasible %d\n", static_cast<unsigned long long>(report.madds),
              static_cast<unsigned long long>(report.params), graph.block_count(),
              is_mobile_feasible(report.madds) ? 1 : 0);
  return 0;
}

int cmd_analyze(const fs::path& run, bool json) {
  const auto replay = replay_summary(run);
  if (json) {
    std::cout << replay.dump(2) << "\n";
  } else {
    std::printf("hypervolume (normalized, nadir reference)\n");
    const auto& hv = replay["hv_series"];
    for (std::size_t g = 0; g < hv.size(); ++g) std::printf("  %3zu  %.6f\n", g, hv[g].get<double>());
    std::printf("selections\n  %-15s %8s %10s %14s %10s %s\n", "role", "id", "f1", "madds_millions", "params",
                "mobile");
    for (const auto& [role, e] : replay["selections"].items())
      std::printf("  %-15s %8llu %10.6f %14.6f %10llu %d\n", role.c_str(), e["id"].get<unsigned long long>(),
                  e["f1"].get<double>(), e["madds_millions"].get<double>(), e["params"].get<unsigned long long>(),
                  e["mobile_feasible"].get<bool>() ? 1 : 0);
    std::printf("mobile-feasible (MAdds <= 600M): %zu of %zu\n", replay["mobile_feasible_count"].get<std::size_t>(),
                replay["final_front_size"].get<std::size_t>());
    for (const auto& m : replay["mobile"])
      std::printf("  id %llu madds %.0f %s\n", m["id"].get<unsigned long long>(), m["madds"].get<double>(),
                  m["mobile_feasible"].get<bool>() ? "feasible" : "infeasible");
  }
  if (!fs::exists(run / "summary.json")) throw IoError("run has no summary.json; it did not finish");
  const auto stored = read_json(run / "summary.json");
  if (stored.dump() != replay.dump()) {
    std::fprintf(stderr, "error[replay]: recomputed summary differs from %s\n", (run / "summary.json").c_str());
    return 3;
  }
  if (!json) std::printf("replay: summary.json reproduced exactly\n");
  return 0;
}

int cmd_export(const fs::path& run, long long id, const std::string& role, const fs::path& out) {
  const RunConfig cfg = RunConfig::from_json(read_json(run / "manifest.json").at("config"));
  if (id < 0) {
    const auto summary = read_json(run / "summary.json");
    const auto& sel = summary.at("selections");
    if (!sel.contains(role)) throw ConfigError("unknown selection role '" + role + "'");
    id = sel.at(role).at("id").get<long long>();
  }
  const GenomeRecord* found = nullptr;
  const auto genomes = read_genomes(run);
  for (const auto& r : genomes)
    if (r.id == static_cast<std::uint64_t>(id)) found = &r;
  if (!found) throw SchemaError("no individual with id " + std::to_string(id) + " in " + run.string());
  const BlockTemplate tmpl = cfg.block_template();
  const GenotypeCodec codec(tmpl.schemas());
  const ArchitectureGraph graph = decode_architecture(tmpl, codec.decode(found->real), cfg.input_shape, cfg.n_classes);
  fs::create_directories(out);
  const std::string stem = role.empty() ? "id" + std::to_string(id) : role;
  std::string genome;
  char buf[40];
  for (double x : found->real.genes) {
    std::snprintf(buf, sizeof buf, "%.17g\n", x);
    genome += buf;
  }
  write_file(out / (stem + ".genome"), genome);
  write_file(out / (stem + ".arch.json"), to_json(graph).dump(2) + "\n");
  write_file(out / (stem + ".dot"), to_dot(graph));
  std::printf("exported id %lld to %s\n", id, (out / stem).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-objective CGP neural architecture search"};
  app.require_subcommand(1);

  SearchArgs sa;
  auto* search = app.add_subcommand("search", "run a seeded search and write a run directory");
  search->add_option("--config", sa.config, "key = value configuration file");
  search->add_option("--seed", sa.seed, "root seed");
  search->add_option("--algo", sa.algo, "nsga2_sbx | nsga2_de | moead | smsemoa");
  search->add_option("--variant", sa.variant, "v1 | v2");
  search->add_option("--evaluator-cmd", sa.evaluator_cmd, "external evaluator command line");
  search->add_option("--out", sa.out, "run directory to create");
  search->add_option("--generations", sa.generations);
  search->add_option("--population", sa.population);
  search->add_option("--parallelism", sa.parallelism, "evaluations in flight");
  search->add_option("--set", sa.sets, "extra key=value overrides");
  search->add_option("--resume", sa.resume, "continue a run from its checkpoint");
  search->add_option("--stop-after", sa.stop_after, "stop once this generation is persisted");
  search->add_flag("--quiet", sa.quiet);

  std::string genome_path, dconfig, dvariant, dout;
  auto* decode = app.add_subcommand("decode", "decode a real-valued genome file");
  decode->add_option("genome", genome_path, "whitespace separated genes or a JSON array")->required();
  decode->add_option("--config", dconfig);
  decode->add_option("--variant", dvariant);
  decode->add_option("--out", dout, "output prefix for .arch.json and .dot");

  std::string arun;
  bool ajson = false;
  auto* analyze = app.add_subcommand("analyze", "recompute and print a run's report");
  analyze->add_option("run", arun)->required();
  analyze->add_flag("--json", ajson, "print the recomputed summary as JSON");

  std::string erun, erole = "knee", eout;
  long long eid = -1;
  auto* exp = app.add_subcommand("export", "export a genome and its architecture from a run");
  exp->add_option("run", erun)->required();
  exp->add_option("--id", eid);
  exp->add_option("--role", erole, "knee | boundary_light | boundary_heavy | best_f1");
  exp->add_option("--out", eout)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error[usage]: %s\n", e.what());
    return 2;
  }

  try {
    if (*search) return cmd_search(sa);
    if (*decode) return cmd_decode(genome_path, dconfig, dvariant, dout);
    if (*analyze) return cmd_analyze(arun, ajson);
    if (*exp) return cmd_export(erun, eid, eid >= 0 ? "" : erole, eout);
  } catch (const Error& e) {
    std::fprintf(stderr, "error[%s]: %s\n", e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error[internal]: %s\n", e.what());
    return 1;
  }
  return 0;
}
