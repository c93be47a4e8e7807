#pragma once

// Ingestion and cleaning of team-season statistics and game results, and
// construction of difference-feature training examples.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bracketlab/csv.hpp"
#include "bracketlab/errors.hpp"
#include "bracketlab/rng.hpp"
#include "bracketlab/text.hpp"

namespace bracketlab {

enum class Region { East, West, Midwest, South };

inline constexpr std::string_view to_string(Region r) {
  switch (r) {
    case Region::East: return "East";
    case Region::West: return "West";
    case Region::Midwest: return "Midwest";
    case Region::South: return "South";
  }
  return "?";
}

inline std::optional<Region> parse_region(std::string_view s) {
  auto lower = [](std::string_view v) {
    std::string out(v);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
  };
  const auto l = lower(s);
  if (l == "east") return Region::East;
  if (l == "west") return Region::West;
  if (l == "midwest") return Region::Midwest;
  if (l == "south") return Region::South;
  return std::nullopt;
}

struct Feature {
  std::string name;
  std::optional<double> value;

  friend bool operator==(const Feature&, const Feature&) = default;
};

/// One team's statistical profile for one season.
struct TeamSeason {
  std::string team_name;
  int season = 0;
  std::vector<Feature> features;  // order shared by every record of a dataset
  std::optional<int> seed;
  std::optional<Region> region;

  const Feature* find(std::string_view name) const {
    for (const auto& f : features) {
      if (f.name == name) return &f;
    }
    return nullptr;
  }

  bool complete() const {
    return std::all_of(features.begin(), features.end(),
                       [](const Feature& f) { return f.value.has_value(); });
  }

  friend bool operator==(const TeamSeason&, const TeamSeason&) = default;
};

/// A historical matchup; label is 1 iff team_a won.
struct GameRecord {
  int season = 0;
  std::string team_a;
  std::string team_b;
  int label = 0;
  std::optional<int> round;
};

/// Difference features (team_a - team_b) with the game outcome. Examples that
/// share a group come from the same game (original and its mirror).
struct PairExample {
  std::vector<double> x;
  int y = 0;
  std::size_t group = 0;
};

/// Default explanatory columns of the Kaggle college-basketball tables.
inline std::vector<std::string> default_feature_columns() {
  return {"ADJOE", "ADJDE", "BARTHAG", "EFG_O", "EFG_D", "TOR",  "TORD", "ORB",
          "DRB",   "FTR",   "FTRD",    "2P_O",  "2P_D",  "3P_O", "3P_D", "ADJ_T"};
}

/// Features every model configuration must include.
inline std::vector<std::string> mandatory_feature_columns() {
  return {"ADJOE", "ADJDE", "BARTHAG", "2P_D"};
}

struct Schema {
  std::string team_column = "TEAM";
  std::string season_column = "YEAR";
  std::vector<std::string> feature_columns = default_feature_columns();
  std::string seed_column;  // empty: seeds not read from the stats file
  int season_min = 2013;
  int season_max = 2023;

  friend bool operator==(const Schema&, const Schema&) = default;
};

namespace detail {

inline bool is_missing_cell(std::string_view cell) {
  return cell.empty() || cell == "NA" || cell == "N/A";
}

inline std::string where(const csv::Table& t, const csv::Row& row, std::string_view column) {
  return t.source + ":" + std::to_string(row.line) + " (column " + std::string(column) + ")";
}

}  // namespace detail

/// Reads team-season rows. Empty (or NA) feature cells become missing values.
inline std::vector<TeamSeason> load_team_seasons(const csv::Table& table, const Schema& schema) {
  const auto team_col = table.require_column(schema.team_column);
  const auto season_col = table.require_column(schema.season_column);
  std::vector<std::size_t> feature_cols;
  for (const auto& name : schema.feature_columns) feature_cols.push_back(table.require_column(name));
  std::optional<std::size_t> seed_col;
  if (!schema.seed_column.empty()) seed_col = table.require_column(schema.seed_column);

  std::vector<TeamSeason> out;
  out.reserve(table.rows.size());
  std::map<std::pair<int, std::string>, std::size_t> seen;
  for (const auto& row : table.rows) {
    TeamSeason ts;
    ts.team_name = row.cells[team_col];
    if (ts.team_name.empty()) {
      throw DataError(detail::where(table, row, schema.team_column) + ": empty team name");
    }
    const auto season = text::parse_int(row.cells[season_col]);
    if (!season) {
      throw DataError(detail::where(table, row, schema.season_column) + ": cannot parse '" +
                      row.cells[season_col] + "' as a season");
    }
    if (*season < schema.season_min || *season > schema.season_max) {
      throw DataError(detail::where(table, row, schema.season_column) + ": season " +
                      std::to_string(*season) + " outside " + std::to_string(schema.season_min) +
                      "-" + std::to_string(schema.season_max));
    }
    ts.season = static_cast<int>(*season);
    ts.features.reserve(feature_cols.size());
    for (std::size_t i = 0; i < feature_cols.size(); ++i) {
      const auto& cell = row.cells[feature_cols[i]];
      Feature f{schema.feature_columns[i], std::nullopt};
      if (!detail::is_missing_cell(cell)) {
        f.value = text::parse_double(cell);
        if (!f.value) {
          throw DataError(detail::where(table, row, schema.feature_columns[i]) +
                          ": cannot parse '" + cell + "' as a number");
        }
      }
      ts.features.push_back(std::move(f));
    }
    if (seed_col && !detail::is_missing_cell(row.cells[*seed_col])) {
      const auto seed = text::parse_int(row.cells[*seed_col]);
      if (!seed || *seed < 1 || *seed > 16) {
        throw DataError(detail::where(table, row, schema.seed_column) + ": invalid seed '" +
                        row.cells[*seed_col] + "'");
      }
      ts.seed = static_cast<int>(*seed);
    }
    const auto key = std::make_pair(ts.season, ts.team_name);
    if (auto it = seen.find(key); it != seen.end()) {
      throw DataError(table.source + ":" + std::to_string(row.line) + ": duplicate team-season " +
                      ts.team_name + " " + std::to_string(ts.season));
    }
    seen.emplace(key, out.size());
    out.push_back(std::move(ts));
  }
  return out;
}

inline std::vector<TeamSeason> load_team_seasons(const std::filesystem::path& path,
                                                 const Schema& schema) {
  return load_team_seasons(csv::read_file(path), schema);
}

/// Reads `YEAR,TEAM_A,TEAM_B,WINNER` (WINNER in {A,B}); an optional ROUND
/// column is kept when present.
inline std::vector<GameRecord> load_games(const csv::Table& table) {
  const auto year_col = table.require_column("YEAR");
  const auto a_col = table.require_column("TEAM_A");
  const auto b_col = table.require_column("TEAM_B");
  const auto w_col = table.require_column("WINNER");
  const auto round_col = table.column("ROUND");

  std::vector<GameRecord> games;
  games.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    GameRecord g;
    const auto year = text::parse_int(row.cells[year_col]);
    if (!year) {
      throw DataError(detail::where(table, row, "YEAR") + ": cannot parse '" +
                      row.cells[year_col] + "' as a season");
    }
    g.season = static_cast<int>(*year);
    g.team_a = row.cells[a_col];
    g.team_b = row.cells[b_col];
    if (g.team_a.empty() || g.team_b.empty()) {
      throw DataError(table.source + ":" + std::to_string(row.line) + ": empty team name");
    }
    if (g.team_a == g.team_b) {
      throw DataError(table.source + ":" + std::to_string(row.line) + ": team plays itself (" +
                      g.team_a + ")");
    }
    const auto& w = row.cells[w_col];
    if (w == "A") g.label = 1;
    else if (w == "B") g.label = 0;
    else throw DataError(detail::where(table, row, "WINNER") + ": expected A or B, got '" + w + "'");
    if (round_col && !row.cells[*round_col].empty()) {
      const auto r = text::parse_int(row.cells[*round_col]);
      if (!r || *r < 1) {
        throw DataError(detail::where(table, row, "ROUND") + ": invalid round '" +
                        row.cells[*round_col] + "'");
      }
      g.round = static_cast<int>(*r);
    }
    games.push_back(std::move(g));
  }
  return games;
}

inline std::vector<GameRecord> load_games(const std::filesystem::path& path) {
  return load_games(csv::read_file(path));
}

struct DroppedTeam {
  std::string team_name;
  int season = 0;
  std::vector<std::string> missing_features;
};

struct ImputeResult {
  std::vector<TeamSeason> teams;
  std::vector<DroppedTeam> dropped;
};

/// Fills each missing value with the mean of that feature over the same
/// season's records that have it. Records still missing a value (the feature
/// is absent for the whole season) are dropped and reported.
inline ImputeResult impute_means(std::span<const TeamSeason> teams) {
  struct Acc {
    double sum = 0;
    std::size_t count = 0;
  };
  // (season, feature index) -> running sum over present values
  std::map<std::pair<int, std::size_t>, Acc> acc;
  for (const auto& t : teams) {
    for (std::size_t j = 0; j < t.features.size(); ++j) {
      if (t.features[j].value) {
        auto& a = acc[{t.season, j}];
        a.sum += *t.features[j].value;
        ++a.count;
      }
    }
  }

  ImputeResult result;
  result.teams.reserve(teams.size());
  for (const auto& t : teams) {
    TeamSeason filled = t;
    DroppedTeam drop{t.team_name, t.season, {}};
    for (std::size_t j = 0; j < filled.features.size(); ++j) {
      auto& f = filled.features[j];
      if (f.value) continue;
      const auto it = acc.find({t.season, j});
      if (it != acc.end() && it->second.count > 0) {
        f.value = it->second.sum / static_cast<double>(it->second.count);
      } else {
        drop.missing_features.push_back(f.name);
      }
    }
    if (drop.missing_features.empty()) {
      result.teams.push_back(std::move(filled));
    } else {
      result.dropped.push_back(std::move(drop));
    }
  }
  return result;
}

/// x = a.features - b.features; both records must be complete, same season,
/// same feature list.
inline PairExample make_pair_example(const TeamSeason& a, const TeamSeason& b, int label) {
  if (a.season != b.season) {
    throw DataError("pair " + a.team_name + " vs " + b.team_name + ": seasons differ (" +
                    std::to_string(a.season) + " vs " + std::to_string(b.season) + ")");
  }
  if (a.features.size() != b.features.size()) {
    throw DataError("pair " + a.team_name + " vs " + b.team_name + ": feature sets differ");
  }
  PairExample ex;
  ex.y = label;
  ex.x.resize(a.features.size());
  for (std::size_t j = 0; j < a.features.size(); ++j) {
    const auto& fa = a.features[j];
    const auto& fb = b.features[j];
    if (fa.name != fb.name) {
      throw DataError("pair " + a.team_name + " vs " + b.team_name + ": feature '" + fa.name +
                      "' does not line up with '" + fb.name + "'");
    }
    if (!fa.value || !fb.value) {
      throw DataError("pair " + a.team_name + " vs " + b.team_name + ": missing value for " +
                      fa.name + " (impute first)");
    }
    ex.x[j] = *fa.value - *fb.value;
  }
  return ex;
}

struct SkippedGame {
  GameRecord game;
  std::string reason;
};

struct DatasetBuild {
  std::vector<std::string> feature_names;
  std::vector<PairExample> examples;
  std::vector<SkippedGame> skipped;
};

/// One example per resolvable game (group = game index); with augment, each is
/// followed by its mirror (negated x, flipped y) in the same group.
inline DatasetBuild build_dataset(std::span<const GameRecord> games,
                                  std::span<const TeamSeason> teams, bool augment) {
  DatasetBuild out;
  if (!teams.empty()) {
    for (const auto& f : teams.front().features) out.feature_names.push_back(f.name);
  }
  std::map<std::pair<int, std::string_view>, const TeamSeason*> index;
  for (const auto& t : teams) index.emplace(std::make_pair(t.season, std::string_view(t.team_name)), &t);

  out.examples.reserve(games.size() * (augment ? 2 : 1));
  for (std::size_t g = 0; g < games.size(); ++g) {
    const auto& game = games[g];
    const auto a = index.find({game.season, game.team_a});
    const auto b = index.find({game.season, game.team_b});
    if (a == index.end() || b == index.end()) {
      const auto& missing = a == index.end() ? game.team_a : game.team_b;
      out.skipped.push_back({game, "no usable stats for " + missing + " in " +
                                       std::to_string(game.season)});
      continue;
    }
    auto ex = make_pair_example(*a->second, *b->second, game.label);
    ex.group = g;
    if (augment) {
      PairExample mirror;
      mirror.x.resize(ex.x.size());
      std::transform(ex.x.begin(), ex.x.end(), mirror.x.begin(), [](double v) { return -v; });
      mirror.y = 1 - ex.y;
      mirror.group = g;
      out.examples.push_back(std::move(ex));
      out.examples.push_back(std::move(mirror));
    } else {
      out.examples.push_back(std::move(ex));
    }
  }
  return out;
}

struct Split {
  std::vector<PairExample> train;
  std::vector<PairExample> test;
};

/// Seeded partition by example group, so a game and its mirror never straddle
/// the split. The test side receives round(test_fraction * groups) groups,
/// clamped so both sides are nonempty; relative order is preserved.
inline Split train_test_split(std::span<const PairExample> examples, double test_fraction,
                              std::uint64_t rng_seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test fraction must lie in (0, 1), got " + text::exact(test_fraction));
  }
  if (examples.size() < 2) throw DataError("train/test split needs at least 2 examples");

  std::vector<std::size_t> groups;
  {
    std::map<std::size_t, bool> seen;
    for (const auto& e : examples) {
      if (seen.emplace(e.group, true).second) groups.push_back(e.group);
    }
  }
  if (groups.size() < 2) throw DataError("train/test split needs at least 2 distinct games");

  const auto n_groups = groups.size();
  auto n_test = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(n_groups)));
  n_test = std::clamp<std::size_t>(n_test, 1, n_groups - 1);

  // Fisher-Yates on the group list, then the first n_test groups go to test.
  SplitMix64 rng(rng_seed);
  for (std::size_t i = n_groups - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.bounded(i + 1));
    std::swap(groups[i], groups[j]);
  }
  std::map<std::size_t, bool> in_test;
  for (std::size_t i = 0; i < n_groups; ++i) in_test[groups[i]] = i < n_test;

  Split split;
  for (const auto& e : examples) {
    (in_test[e.group] ? split.test : split.train).push_back(e);
  }
  return split;
}

/// Line-oriented drop/skip report for a diagnostic stream.
inline void report_drops(std::ostream& os, std::span<const DroppedTeam> dropped) {
  for (const auto& d : dropped) {
    os << "dropped " << d.team_name << " " << d.season << ": no values for";
    for (const auto& f : d.missing_features) os << ' ' << f;
    os << '\n';
  }
}

inline void report_skips(std::ostream& os, std::span<const SkippedGame> skipped) {
  for (const auto& s : skipped) {
    os << "skipped game " << s.game.season << " " << s.game.team_a << " vs " << s.game.team_b
       << ": " << s.reason << '\n';
  }
}

/// Restricts examples to a subset of their columns, given by name.
inline std::vector<PairExample> project(std::span<const PairExample> examples,
                                        std::span<const std::string> from,
                                        std::span<const std::string> to) {
  std::vector<std::size_t> idx;
  for (const auto& name : to) {
    const auto it = std::find(from.begin(), from.end(), name);
    if (it == from.end()) throw DataError("unknown feature '" + name + "'");
    idx.push_back(static_cast<std::size_t>(it - from.begin()));
  }
  std::vector<PairExample> out;
  out.reserve(examples.size());
  for (const auto& e : examples) {
    PairExample p{{}, e.y, e.group};
    p.x.reserve(idx.size());
    for (auto i : idx) p.x.push_back(e.x[i]);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace bracketlab
