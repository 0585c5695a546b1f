#pragma once

// Run directory layout (format version 1):
//
//   manifest.json          config snapshot, template, function sets, codec, file index
//   log.jsonl              one record per generation
//   genomes.jsonl          one record per evaluated individual
//   generations/NNN.front  elitist archive after generation NNN
//   archive.front          final elitist archive
//   selections/selections.csv
//   exports/<role>.arch.json, exports/<role>.dot
//   hv_series.dat, front_scatter.dat
//   summary.json           every reported number; `analyze` must reproduce it
//   checkpoint.json        engine state after the last persisted generation

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "cgpnas/analysis.hpp"
#include "cgpnas/engine.hpp"

namespace cgpnas {

inline constexpr int kRunFormatVersion = 1;
inline constexpr const char* kFrontHeader = "id,f1,f2,params,madds_millions,genotype";

namespace fs = std::filesystem;

inline std::string generation_file(int g) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "generations/%03d.front", g);
  return buf;
}

inline std::string front_table(const std::vector<ArchiveEntry>& members) {
  std::string out = std::string(kFrontHeader) + "\n";
  char buf[256];
  for (const auto& m : members) {
    std::snprintf(buf, sizeof buf, "%llu,%.17g,%.17g,%llu,%.6f,genomes.jsonl#%llu\n",
                  static_cast<unsigned long long>(m.id), m.objectives.error, m.objectives.madds,
                  static_cast<unsigned long long>(m.params), m.objectives.madds / 1e6,
                  static_cast<unsigned long long>(m.id));
    out += buf;
  }
  return out;
}

inline std::vector<ArchiveEntry> parse_front_table(std::istream& in, const std::string& origin = "front table") {
  std::string line;
  if (!std::getline(in, line) || line != kFrontHeader) throw SchemaError(origin + ": missing or unexpected header");
  std::vector<ArchiveEntry> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    if (cells.size() != 6) throw SchemaError(origin + ": expected 6 columns in '" + line + "'");
    try {
      ArchiveEntry e;
      e.id = std::stoull(cells[0]);
      e.objectives = {std::stod(cells[1]), std::stod(cells[2])};
      e.params = std::stoull(cells[3]);
      out.push_back(e);
    } catch (const std::exception&) {
      throw SchemaError(origin + ": bad row '" + line + "'");
    }
  }
  return out;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read '" + p.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& p, const std::string& text) {
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + p.string() + "'");
    out << text;
    if (!out.flush()) throw IoError("write failed for '" + p.string() + "'");
  }
  fs::rename(tmp, p);
}

inline nlohmann::ordered_json read_json(const fs::path& p) {
  try {
    return nlohmann::ordered_json::parse(read_file(p));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("'" + p.string() + "' is not valid JSON: " + e.what());
  }
}

// ---- summary ----------------------------------------------------------------

inline constexpr std::array<const char*, 4> kSelectionRoles = {"knee", "boundary_light", "boundary_heavy", "best_f1"};

struct RoleSelection {
  std::string role;
  ArchiveEntry entry;
};

inline std::vector<RoleSelection> select_roles(const std::vector<ArchiveEntry>& front) {
  if (front.empty()) return {};
  std::vector<ObjectiveVector> pts;
  std::vector<std::uint64_t> ids;
  for (const auto& e : front) {
    pts.push_back(e.objectives);
    ids.push_back(e.id);
  }
  const auto k = knee_and_boundary(pts, ids);
  return {{"knee", front[k.knee]},
          {"boundary_light", front[k.boundary_light]},
          {"boundary_heavy", front[k.boundary_heavy]},
          {"best_f1", front[k.boundary_heavy]}};
}

inline nlohmann::ordered_json entry_json(const ArchiveEntry& e) {
  const auto madds = static_cast<std::uint64_t>(e.objectives.madds);
  return {{"id", e.id},
          {"f1", e.objectives.error},
          {"f2", e.objectives.madds},
          {"params", e.params},
          {"madds_millions", e.objectives.madds / 1e6},
          {"mobile_feasible", is_mobile_feasible(madds) && e.objectives.madds == static_cast<double>(madds)}};
}

// Everything a run reports, computed only from the archive snapshots, the
// objectives of every evaluated individual and the generation-0 best error.
inline nlohmann::ordered_json compute_summary(const std::vector<std::vector<ArchiveEntry>>& snapshots,
                                              const std::vector<ObjectiveVector>& evaluated, double initial_best) {
  nlohmann::ordered_json s;
  s["format_version"] = kRunFormatVersion;
  s["generations"] = snapshots.empty() ? 0 : snapshots.size() - 1;
  s["evaluations"] = evaluated.size();
  const auto b = bounds_of(evaluated);
  s["ideal"] = {b.ideal.error, b.ideal.madds};
  s["nadir"] = {b.nadir.error, b.nadir.madds};
  std::vector<std::vector<ObjectiveVector>> fronts;
  for (const auto& snap : snapshots) {
    fronts.emplace_back();
    for (const auto& e : snap) fronts.back().push_back(e.objectives);
  }
  s["hv_series"] = normalized_hv_series(fronts, b);
  const std::vector<ArchiveEntry> final_front = snapshots.empty() ? std::vector<ArchiveEntry>{} : snapshots.back();
  s["initial_best_f1"] = initial_best;
  double final_best = 1.0;
  for (const auto& e : final_front) final_best = std::min(final_best, e.objectives.error);
  s["final_best_f1"] = final_best;
  s["final_front_size"] = final_front.size();
  auto sel = nlohmann::ordered_json::object();
  for (const auto& r : select_roles(final_front)) sel[r.role] = entry_json(r.entry);
  s["selections"] = std::move(sel);
  auto mobile = nlohmann::ordered_json::array();
  std::size_t feasible = 0;
  for (const auto& e : final_front) {
    auto j = entry_json(e);
    feasible += j["mobile_feasible"].get<bool>();
    mobile.push_back({{"id", e.id}, {"madds", e.objectives.madds}, {"mobile_feasible", j["mobile_feasible"]}});
  }
  s["mobile_feasible_count"] = feasible;
  s["mobile"] = std::move(mobile);
  return s;
}

// ---- persisted run contents -------------------------------------------------

struct GenomeRecord {
  std::uint64_t id = 0;
  int generation = 0;
  ObjectiveVector objectives;
  std::uint64_t params = 0;
  bool failed = false;
  RealGenome real;
};

inline nlohmann::ordered_json genome_record_json(const Individual& ind) {
  nlohmann::ordered_json genes = nlohmann::ordered_json::array();
  for (const auto& b : ind.genotype.blocks) genes.push_back(b.genes);
  return {{"id", ind.id},       {"generation", ind.birth_generation}, {"f1", ind.objectives.error},
          {"f2", ind.objectives.madds}, {"params", ind.params},        {"failed", ind.failed},
          {"real", ind.real.genes},     {"genes", std::move(genes)}};
}

inline GenomeRecord parse_genome_record(const std::string& line) {
  try {
    const auto j = nlohmann::json::parse(line);
    GenomeRecord r;
    r.id = j.at("id").get<std::uint64_t>();
    r.generation = j.at("generation").get<int>();
    r.objectives = {j.at("f1").get<double>(), j.at("f2").get<double>()};
    r.params = j.at("params").get<std::uint64_t>();
    r.failed = j.at("failed").get<bool>();
    r.real.genes = j.at("real").get<std::vector<double>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed genome record: ") + e.what());
  }
}

inline std::vector<GenomeRecord> read_genomes(const fs::path& run) {
  std::vector<GenomeRecord> out;
  std::istringstream in(read_file(run / "genomes.jsonl"));
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(parse_genome_record(line));
  return out;
}

inline std::vector<ArchiveEntry> read_front(const fs::path& p) {
  std::istringstream in(read_file(p));
  return parse_front_table(in, p.string());
}

// Snapshots generations/000.front .. NNN.front, stopping at the first gap.
inline std::vector<std::vector<ArchiveEntry>> read_snapshots(const fs::path& run) {
  std::vector<std::vector<ArchiveEntry>> out;
  for (int g = 0; fs::exists(run / generation_file(g)); ++g) out.push_back(read_front(run / generation_file(g)));
  return out;
}

// Recomputes the summary purely from files in the run directory.
inline nlohmann::ordered_json replay_summary(const fs::path& run) {
  const auto genomes = read_genomes(run);
  std::vector<ObjectiveVector> evaluated;
  double initial_best = std::numeric_limits<double>::infinity();
  for (const auto& r : genomes) {
    evaluated.push_back(r.objectives);
    if (r.generation == 0) initial_best = std::min(initial_best, r.objectives.error);
  }
  return compute_summary(read_snapshots(run), evaluated, initial_best);
}

inline nlohmann::ordered_json template_json(const BlockTemplate& t) {
  nlohmann::ordered_json j;
  j["variant"] = variant_name(t.variant);
  j["channel_mode"] = channel_mode_name(t.channel_mode);
  auto layout = nlohmann::ordered_json::array();
  for (auto k : t.layout()) layout.push_back(k == StageKind::normal ? "normal" : "reduction");
  j["layout"] = std::move(layout);
  j["pool"] = {{"op", "max_pool"}, {"kernel", t.pool_kernel}, {"stride", t.pool_stride}};
  j["hyperparameters"] = {{"channels", t.hyper.channels}, {"kernels", t.hyper.kernels}};
  auto stages = nlohmann::ordered_json::array();
  for (const auto& s : t.normal) {
    nlohmann::ordered_json sj;
    sj["index"] = s.index;
    sj["width"] = s.width();
    sj["channel_options"] = s.channel_options;
    sj["grid"] = {{"rows", s.grid.rows},           {"columns", s.grid.cols},        {"level_back", s.grid.level_back},
                  {"n_inputs", s.grid.n_inputs},   {"n_outputs", s.grid.n_outputs}, {"max_arity", s.grid.max_arity}};
    auto fns = nlohmann::ordered_json::array();
    for (const auto& f : s.functions) fns.push_back(f.label());
    sj["functions"] = std::move(fns);
    stages.push_back(std::move(sj));
  }
  j["normal_blocks"] = std::move(stages);
  return j;
}

inline nlohmann::ordered_json codec_json(const GenotypeCodec& c) {
  nlohmann::ordered_json j;
  j["genome_length"] = c.length();
  j["sub_vector_lengths"] = c.partition().sizes;
  auto blocks = nlohmann::ordered_json::array();
  for (const auto& b : c.blocks()) {
    const auto& s = b.schema();
    blocks.push_back({{"record_width", s.record_width()},
                      {"function_total", s.function_count()},
                      {"hyper_totals", s.hyper_totals},
                      {"output_total", s.output_term()}});
  }
  j["blocks"] = std::move(blocks);
  j["quantization"] = "floor(g*T) clamped to [0,T-1]";
  return j;
}

inline nlohmann::ordered_json manifest_json(const Engine& e, int last_generation, bool complete,
                                            const nlohmann::ordered_json& selections) {
  nlohmann::ordered_json m;
  m["format"] = "cgpnas-run";
  m["format_version"] = kRunFormatVersion;
  m["engine_version"] = kEngineVersion;
  m["seed"] = e.config().search.seed;
  m["config"] = e.config().to_json();
  m["template"] = template_json(e.block_template());
  m["codec"] = codec_json(e.codec());
  m["status"] = complete ? "complete" : "running";
  auto gens = nlohmann::ordered_json::array();
  for (int g = 0; g <= last_generation; ++g) gens.push_back(generation_file(g));
  m["generations"] = std::move(gens);
  m["archive"] = complete ? nlohmann::ordered_json("archive.front") : nlohmann::ordered_json(nullptr);
  m["selections"] = selections;
  return m;
}

// Writes a run directory while an Engine advances, and reloads one for resume.
class RunWriter {
 public:
  explicit RunWriter(fs::path root) : root_(std::move(root)) {}

  const fs::path& root() const { return root_; }

  void create(const Engine& e) {
    if (fs::exists(root_ / "manifest.json")) throw IoError("'" + root_.string() + "' already holds a run; use --resume");
    fs::create_directories(root_ / "generations");
    write_file(root_ / "log.jsonl", "");
    write_file(root_ / "genomes.jsonl", "");
    write_file(root_ / "manifest.json", manifest_json(e, -1, false, nlohmann::ordered_json::object()).dump(2) + "\n");
  }

  // Drops everything newer than the checkpointed generation and reloads
  // the in-memory history.
  void reopen(int generation) {
    auto keep = [&](const fs::path& p) {
      std::istringstream in(read_file(p));
      std::string kept;
      for (std::string line; std::getline(in, line);) {
        if (line.empty()) continue;
        if (nlohmann::json::parse(line).at("generation").get<int>() <= generation) kept += line + "\n";
      }
      write_file(p, kept);
    };
    keep(root_ / "log.jsonl");
    keep(root_ / "genomes.jsonl");
    for (int g = generation + 1; fs::exists(root_ / generation_file(g)); ++g) fs::remove(root_ / generation_file(g));
    for (const auto& r : read_genomes(root_)) {
      evaluated_.push_back(r.objectives);
      reals_[r.id] = r.real;
    }
    snapshots_ = read_snapshots(root_);
    if (static_cast<int>(snapshots_.size()) != generation + 1)
      throw SchemaError("run directory lacks snapshots up to generation " + std::to_string(generation));
  }

  void record(const std::vector<Individual>& batch) {
    std::string text;
    for (const auto& ind : batch) {
      text += genome_record_json(ind).dump() + "\n";
      evaluated_.push_back(ind.objectives);
      reals_[ind.id] = ind.real;
    }
    append(root_ / "genomes.jsonl", text);
  }

  void generation_done(const Engine& e) {
    const auto& s = e.state();
    const auto& members = s.archive.members();
    write_file(root_ / generation_file(s.generation), front_table(members));
    snapshots_.push_back(members);
    double pop_best = 1.0;
    for (const auto& ind : s.population) pop_best = std::min(pop_best, ind.objectives.error);
    nlohmann::ordered_json log;
    log["generation"] = s.generation;
    log["evaluations"] = s.evaluations;
    log["evaluator_calls"] = e.evaluator_calls();
    log["archive_size"] = members.size();
    log["archive_best_f1"] = members.empty() ? 1.0 : members.front().objectives.error;
    log["archive_min_f2"] = members.empty() ? 0.0 : members.back().objectives.madds;
    log["population_best_f1"] = pop_best;
    append(root_ / "log.jsonl", log.dump() + "\n");
    write_file(root_ / "checkpoint.json", e.checkpoint().dump() + "\n");
    write_file(root_ / "manifest.json",
               manifest_json(e, s.generation, false, nlohmann::ordered_json::object()).dump(2) + "\n");
  }

  void finalize(const Engine& e) {
    const auto& members = e.state().archive.members();
    write_file(root_ / "archive.front", front_table(members));
    const auto summary = compute_summary(snapshots_, evaluated_, e.initial_best_error());
    write_file(root_ / "summary.json", summary.dump(2) + "\n");

    std::string hv = "# generation normalized_hv\n";
    char buf[160];
    const auto& series = summary["hv_series"];
    for (std::size_t g = 0; g < series.size(); ++g) {
      std::snprintf(buf, sizeof buf, "%zu %.17g\n", g, series[g].get<double>());
      hv += buf;
    }
    write_file(root_ / "hv_series.dat", hv);
    std::string scatter = "# generation id f1 madds_millions\n";
    for (std::size_t g = 0; g < snapshots_.size(); ++g)
      for (const auto& m : snapshots_[g]) {
        std::snprintf(buf, sizeof buf, "%zu %llu %.17g %.6f\n", g, static_cast<unsigned long long>(m.id),
                      m.objectives.error, m.objectives.madds / 1e6);
        scatter += buf;
      }
    write_file(root_ / "front_scatter.dat", scatter);

    fs::create_directories(root_ / "selections");
    fs::create_directories(root_ / "exports");
    std::string csv = "role,id,f1,f2,params,madds_millions,mobile_feasible\n";
    nlohmann::ordered_json sel = nlohmann::ordered_json::object();
    for (const auto& r : select_roles(members)) {
      const auto j = entry_json(r.entry);
      std::snprintf(buf, sizeof buf, "%s,%llu,%.17g,%.17g,%llu,%.6f,%d\n", r.role.c_str(),
                    static_cast<unsigned long long>(r.entry.id), r.entry.objectives.error, r.entry.objectives.madds,
                    static_cast<unsigned long long>(r.entry.params), r.entry.objectives.madds / 1e6,
                    j["mobile_feasible"].get<bool>() ? 1 : 0);
      csv += buf;
      const Genotype g = e.codec().decode(reals_.at(r.entry.id));
      const ArchitectureGraph graph = e.architecture(g);
      write_file(root_ / "exports" / (r.role + ".arch.json"), to_json(graph).dump(2) + "\n");
      write_file(root_ / "exports" / (r.role + ".dot"), to_dot(graph));
      sel[r.role] = {{"id", r.entry.id}, {"export", "exports/" + r.role + ".arch.json"}, {"architecture", to_json(graph)}};
    }
    write_file(root_ / "selections" / "selections.csv", csv);
    write_file(root_ / "manifest.json", manifest_json(e, e.state().generation, true, sel).dump(2) + "\n");
  }

 private:
  static void append(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::app);
    if (!out || !(out << text).flush()) throw IoError("cannot append to '" + p.string() + "'");
  }

  fs::path root_;
  std::vector<std::vector<ArchiveEntry>> snapshots_;
  std::vector<ObjectiveVector> evaluated_;
  std::map<std::uint64_t, RealGenome> reals_;
};

}  // namespace cgpnas
