#pragma once

// Run configuration: a flat `key = value` file whose keys mirror the
// parameter names used throughout the engine. Every key is optional; the
// defaults are the published settings for each variant.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cgpnas/moea.hpp"
#include "cgpnas/phenotype.hpp"
#include "cgpnas/search_space.hpp"

namespace cgpnas {

struct EvaluatorSettings {
  std::string kind = "surrogate";  // surrogate | external
  std::vector<std::string> command;
  int timeout_ms = 0;
  unsigned parallelism = 1;
};

// Splits a command line on whitespace; double quotes group words.
inline std::vector<std::string> split_command(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  bool have = false;
  for (char c : s) {
    if (c == '"') {
      quoted = !quoted;
      have = true;
    } else if (!quoted && (c == ' ' || c == '\t')) {
      if (have) out.push_back(cur);
      cur.clear();
      have = false;
    } else {
      cur += c;
      have = true;
    }
  }
  if (quoted) throw ConfigError("unterminated quote in evaluator command");
  if (have) out.push_back(cur);
  return out;
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw ConfigError("invalid value '" + std::string(v) + "' for " + std::string(key));
  return out;
}

inline double parse_real(std::string_view key, std::string_view v) {
  std::string s(v);
  std::size_t used = 0;
  double x = 0;
  try {
    x = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw ConfigError("invalid value '" + s + "' for " + std::string(key));
  return x;
}

inline std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace detail

struct RunConfig {
  Variant variant = Variant::v2;
  ChannelMode channel_mode = ChannelMode::per_stage;
  std::optional<int> rows;
  std::optional<int> columns;
  std::optional<int> level_back;
  TensorShape input_shape{3, 32, 32};
  int n_classes = 10;
  int epochs = 36;
  std::string dataset = "cifar10";
  double madds_cap = 1e12;  // f2 assigned when an architecture has no valid shape
  SearchConfig search;
  EvaluatorSettings evaluator;

  GridConfig grid() const {
    GridConfig g = default_grid(variant);
    if (rows) g.rows = *rows;
    if (columns) g.cols = *columns;
    if (level_back) g.level_back = *level_back;
    return g;
  }

  BlockTemplate block_template() const { return make_template(variant, grid(), channel_mode); }

  void set(std::string_view key, std::string_view value) {
    using detail::parse_number;
    using detail::parse_real;
    const std::string v = detail::trim(value);
    if (key == "variant") variant = parse_variant(v);
    else if (key == "channel_mode") channel_mode = parse_channel_mode(v);
    else if (key == "rows") rows = parse_number<int>(key, v);
    else if (key == "columns") columns = parse_number<int>(key, v);
    else if (key == "level_back") level_back = parse_number<int>(key, v);
    else if (key == "pm") search.pm = parse_real(key, v);
    else if (key == "pc") search.pc = parse_real(key, v);
    else if (key == "sbx_eta") search.sbx_eta = parse_real(key, v);
    else if (key == "pm_eta") search.pm_eta = parse_real(key, v);
    else if (key == "population") search.population_size = parse_number<std::size_t>(key, v);
    else if (key == "generations") search.generations = parse_number<int>(key, v);
    else if (key == "algorithm") search.algorithm = parse_algorithm(v);
    else if (key == "seed") search.seed = parse_number<std::uint64_t>(key, v);
    else if (key == "de_cr") search.de_cr = parse_real(key, v);
    else if (key == "de_f") search.de_f = parse_real(key, v);
    else if (key == "moead_neighborhood") search.moead_neighborhood = parse_number<std::size_t>(key, v);
    else if (key == "moead_max_replacements") search.moead_max_replacements = parse_number<std::size_t>(key, v);
    else if (key == "evaluator") {
      if (v != "surrogate" && v != "external") throw ConfigError("evaluator must be surrogate or external");
      evaluator.kind = v;
    } else if (key == "evaluator_command") evaluator.command = split_command(v);
    else if (key == "evaluator_timeout_ms") evaluator.timeout_ms = parse_number<int>(key, v);
    else if (key == "parallelism") evaluator.parallelism = parse_number<unsigned>(key, v);
    else if (key == "input_shape") {
      int c = 0, h = 0, w = 0;
      char x1 = 0, x2 = 0;
      std::istringstream is(v);
      if (!(is >> c >> x1 >> h >> x2 >> w) || x1 != 'x' || x2 != 'x' || !is.eof() || c < 1 || h < 1 || w < 1)
        throw ConfigError("input_shape must look like 3x32x32");
      input_shape = {c, h, w};
    } else if (key == "n_classes") n_classes = parse_number<int>(key, v);
    else if (key == "epochs") epochs = parse_number<int>(key, v);
    else if (key == "dataset") dataset = v;
    else if (key == "madds_cap") madds_cap = parse_real(key, v);
    else throw ConfigError("unknown configuration key '" + std::string(key) + "'");
  }

  void check() const {
    search.check();
    grid().check();
    if (n_classes < 1) throw ConfigError("n_classes must be positive");
    if (evaluator.kind == "external" && evaluator.command.empty())
      throw ConfigError("external evaluator selected but evaluator_command is empty");
    if (evaluator.timeout_ms < 0) throw ConfigError("evaluator_timeout_ms must be non-negative");
  }

  static RunConfig parse(std::istream& in) {
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string t = detail::trim(line);
      if (t.empty()) continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
      cfg.set(detail::trim(std::string_view(t).substr(0, eq)), std::string_view(t).substr(eq + 1));
    }
    return cfg;
  }

  static RunConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open configuration file '" + path + "'");
    return parse(in);
  }

  // Snapshot with every effective value, typed; `from_json` reads it back.
  nlohmann::ordered_json to_json() const {
    const GridConfig g = grid();
    nlohmann::ordered_json j;
    j["variant"] = variant_name(variant);
    j["channel_mode"] = channel_mode_name(channel_mode);
    j["rows"] = g.rows;
    j["columns"] = g.cols;
    j["level_back"] = g.level_back;
    j["pm"] = search.pm;
    j["pc"] = search.pc;
    j["sbx_eta"] = search.sbx_eta;
    j["pm_eta"] = search.pm_eta;
    j["population"] = search.population_size;
    j["generations"] = search.generations;
    j["algorithm"] = algorithm_name(search.algorithm);
    j["seed"] = search.seed;
    j["de_cr"] = search.de_cr;
    j["de_f"] = search.de_f;
    j["moead_neighborhood"] = search.moead_neighborhood;
    j["moead_max_replacements"] = search.moead_max_replacements;
    j["evaluator"] = evaluator.kind;
    std::string cmd;
    for (const auto& a : evaluator.command) {
      if (!cmd.empty()) cmd += ' ';
      cmd += a.find_first_of(" \t") == std::string::npos ? a : "\"" + a + "\"";
    }
    j["evaluator_command"] = cmd;
    j["evaluator_timeout_ms"] = evaluator.timeout_ms;
    j["parallelism"] = evaluator.parallelism;
    j["input_shape"] = std::to_string(input_shape.channels) + "x" + std::to_string(input_shape.height) + "x" +
                       std::to_string(input_shape.width);
    j["n_classes"] = n_classes;
    j["epochs"] = epochs;
    j["dataset"] = dataset;
    j["madds_cap"] = madds_cap;
    return j;
  }

  static RunConfig from_json(const nlohmann::ordered_json& j) {
    RunConfig cfg;
    for (const auto& [key, value] : j.items()) {
      if (value.is_string()) cfg.set(key, value.get<std::string>());
      else if (value.is_number_float()) cfg.set(key, detail::format_real(value.get<double>()));
      else cfg.set(key, value.dump());
    }
    return cfg;
  }
};

}  // namespace cgpnas
