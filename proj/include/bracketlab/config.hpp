#pragma once

// Run configuration: one JSON document, overridable from the command line.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "bracketlab/bracket.hpp"
#include "bracketlab/dataio.hpp"
#include "bracketlab/errors.hpp"

namespace bracketlab {

struct RunConfig {
  std::string stats_csv;
  std::string games_csv;
  std::string bracket_csv;
  std::string actual_csv;
  std::string model_file;  // empty: <output_dir>/model.txt
  std::string output_dir = "out";

  Schema schema;
  double lambda = 0.01;
  double test_fraction = 0.2;
  std::uint64_t split_seed = 42;
  bool augment = true;
  bool zero_intercept = false;
  int max_iter = 10000;
  double tol = 1e-6;

  double selection_threshold = 0.45;

  std::uint64_t mc_iterations = 100;
  std::uint64_t mc_base_seed = 1;
  unsigned threads = 1;
  std::vector<RegionPair> region_semis;

  std::filesystem::path model_path() const {
    return model_file.empty() ? std::filesystem::path(output_dir) / "model.txt"
                              : std::filesystem::path(model_file);
  }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// "South-Midwest" -> {South, Midwest}
inline RegionPair parse_region_pair(const std::string& s) {
  const auto dash = s.find('-');
  if (dash == std::string::npos) throw ConfigError("region pair '" + s + "' must look like South-Midwest");
  const auto a = parse_region(s.substr(0, dash));
  const auto b = parse_region(s.substr(dash + 1));
  if (!a || !b) throw ConfigError("unknown region in pair '" + s + "'");
  return {*a, *b};
}

inline std::vector<RegionPair> parse_region_semis(const std::string& s) {
  std::vector<RegionPair> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_region_pair(item));
  return out;
}

/// Checks every numeric field against the preconditions of the operation it feeds.
inline void validate(const RunConfig& c) {
  if (!(c.lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
  if (c.max_iter < 0) throw ConfigError("max_iter must be >= 0");
  if (!(c.tol > 0.0)) throw ConfigError("tol must be > 0");
  if (!(c.selection_threshold >= 0.0)) throw ConfigError("selection_threshold must be >= 0");
  if (c.mc_iterations < 1) throw ConfigError("mc_iterations must be >= 1");
  if (c.threads < 1) throw ConfigError("threads must be >= 1");
  if (c.schema.season_min > c.schema.season_max) throw ConfigError("season_min exceeds season_max");
  if (c.schema.feature_columns.empty()) throw ConfigError("no feature columns configured");
  std::set<std::string> seen;
  for (const auto& f : c.schema.feature_columns) {
    if (!seen.insert(f).second) throw ConfigError("feature column listed twice: " + f);
  }
  for (const auto& f : mandatory_feature_columns()) {
    if (!seen.count(f)) throw ConfigError("feature column " + f + " is required");
  }
  if (!c.region_semis.empty()) {
    std::set<Region> used;
    for (const auto& p : c.region_semis) {
      used.insert(p.first);
      used.insert(p.second);
    }
    if (c.region_semis.size() != 2 || used.size() != 4) {
      throw ConfigError("region_semis must pair up all four regions");
    }
  }
}

inline nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json semis = nlohmann::ordered_json::array();
  for (const auto& p : c.region_semis) {
    semis.push_back({std::string(to_string(p.first)), std::string(to_string(p.second))});
  }
  return {
      {"stats_csv", c.stats_csv},
      {"games_csv", c.games_csv},
      {"bracket_csv", c.bracket_csv},
      {"actual_csv", c.actual_csv},
      {"model_file", c.model_file},
      {"output_dir", c.output_dir},
      {"team_column", c.schema.team_column},
      {"season_column", c.schema.season_column},
      {"features", c.schema.feature_columns},
      {"seed_column", c.schema.seed_column},
      {"season_min", c.schema.season_min},
      {"season_max", c.schema.season_max},
      {"lambda", c.lambda},
      {"test_fraction", c.test_fraction},
      {"split_seed", c.split_seed},
      {"augment", c.augment},
      {"zero_intercept", c.zero_intercept},
      {"max_iter", c.max_iter},
      {"tol", c.tol},
      {"selection_threshold", c.selection_threshold},
      {"mc_iterations", c.mc_iterations},
      {"mc_base_seed", c.mc_base_seed},
      {"threads", c.threads},
      {"region_semis", semis},
  };
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "stats_csv") c.stats_csv = v.get<std::string>();
      else if (key == "games_csv") c.games_csv = v.get<std::string>();
      else if (key == "bracket_csv") c.bracket_csv = v.get<std::string>();
      else if (key == "actual_csv") c.actual_csv = v.get<std::string>();
      else if (key == "model_file") c.model_file = v.get<std::string>();
      else if (key == "output_dir") c.output_dir = v.get<std::string>();
      else if (key == "team_column") c.schema.team_column = v.get<std::string>();
      else if (key == "season_column") c.schema.season_column = v.get<std::string>();
      else if (key == "features") c.schema.feature_columns = v.get<std::vector<std::string>>();
      else if (key == "seed_column") c.schema.seed_column = v.get<std::string>();
      else if (key == "season_min") c.schema.season_min = v.get<int>();
      else if (key == "season_max") c.schema.season_max = v.get<int>();
      else if (key == "lambda") c.lambda = v.get<double>();
      else if (key == "test_fraction") c.test_fraction = v.get<double>();
      else if (key == "split_seed") c.split_seed = v.get<std::uint64_t>();
      else if (key == "augment") c.augment = v.get<bool>();
      else if (key == "zero_intercept") c.zero_intercept = v.get<bool>();
      else if (key == "max_iter") c.max_iter = v.get<int>();
      else if (key == "tol") c.tol = v.get<double>();
      else if (key == "selection_threshold") c.selection_threshold = v.get<double>();
      else if (key == "mc_iterations") c.mc_iterations = v.get<std::uint64_t>();
      else if (key == "mc_base_seed") c.mc_base_seed = v.get<std::uint64_t>();
      else if (key == "threads") c.threads = v.get<unsigned>();
      else if (key == "region_semis") {
        c.region_semis.clear();
        for (const auto& pair : v) {
          const auto names = pair.get<std::vector<std::string>>();
          if (names.size() != 2) throw ConfigError("each region_semis entry needs two regions");
          c.region_semis.push_back(parse_region_pair(names[0] + "-" + names[1]));
        }
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  try {
    return config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace bracketlab
