#pragma once

// File formats for brackets, results and simulation reports.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "bracketlab/bracket.hpp"
#include "bracketlab/csv.hpp"
#include "bracketlab/metrics.hpp"
#include "bracketlab/monte_carlo.hpp"
#include "bracketlab/text.hpp"

namespace bracketlab {

/// Maps (season, team name) to the entrant's statistics.
using TeamResolver = std::function<TeamSeason(int season, const std::string& team)>;

/// Resolver that carries names only; enough for scoring brackets.
inline TeamSeason name_only(int season, const std::string& team) {
  TeamSeason t;
  t.team_name = team;
  t.season = season;
  return t;
}

/// Reads `YEAR,REGION,SEED,TEAM`. Exactly 64 rows build an NCAA field from
/// regions and seeds (region_semis required); any other power-of-two count is
/// taken in file order as the first-round order.
inline Bracket load_bracket(const csv::Table& table, const std::vector<RegionPair>& region_semis,
                            const TeamResolver& resolve) {
  const auto year_col = table.require_column("YEAR");
  const auto region_col = table.require_column("REGION");
  const auto seed_col = table.require_column("SEED");
  const auto team_col = table.require_column("TEAM");
  if (table.rows.empty()) throw DataError(table.source + ": no entrants");

  const bool ncaa = table.rows.size() == 64;
  std::vector<TeamSeason> entrants;
  std::optional<int> season;
  for (const auto& row : table.rows) {
    const auto at = table.source + ":" + std::to_string(row.line);
    const auto year = text::parse_int(row.cells[year_col]);
    if (!year) throw DataError(at + ": cannot parse YEAR '" + row.cells[year_col] + "'");
    if (season && *season != *year) throw DataError(at + ": all entrants must share one YEAR");
    season = static_cast<int>(*year);
    const auto& name = row.cells[team_col];
    if (name.empty()) throw DataError(at + ": empty TEAM");
    auto team = resolve(*season, name);
    team.region = parse_region(row.cells[region_col]);
    if (ncaa && !team.region) throw DataError(at + ": unknown REGION '" + row.cells[region_col] + "'");
    const auto seed = text::parse_int(row.cells[seed_col]);
    if (seed && *seed >= 1 && *seed <= 16) team.seed = static_cast<int>(*seed);
    else if (ncaa || !row.cells[seed_col].empty()) {
      throw DataError(at + ": invalid SEED '" + row.cells[seed_col] + "'");
    }
    entrants.push_back(std::move(team));
  }
  if (ncaa) return build_bracket(std::move(entrants), region_semis);
  return make_bracket(*season, std::move(entrants));
}

inline Bracket load_bracket(const std::filesystem::path& path,
                            const std::vector<RegionPair>& region_semis,
                            const TeamResolver& resolve) {
  return load_bracket(csv::read_file(path), region_semis, resolve);
}

struct SlotLabel {
  std::string group;  // region, "South-Midwest" style half, "Final", or "ALL"
  std::size_t index = 1;  // 1-based within group
};

/// Results-file address of a game. NCAA fields use regions for rounds 1-4,
/// the half for the national semifinal and "Final" for the championship;
/// other brackets use "ALL" with the slot number.
inline SlotLabel slot_label(const Bracket& b, int round, std::size_t slot) {
  if (!b.is_ncaa_field()) return {"ALL", slot + 1};
  if (round == b.rounds()) return {"Final", 1};
  if (round == b.rounds() - 1) {
    const auto& p = b.region_semis[slot];
    return {std::string(to_string(p.first)) + "-" + std::string(to_string(p.second)), 1};
  }
  const std::array<Region, 4> order = {b.region_semis[0].first, b.region_semis[0].second,
                                       b.region_semis[1].first, b.region_semis[1].second};
  const auto per_region = b.games_in_round(round) / 4;
  return {std::string(to_string(order[slot / per_region])), slot % per_region + 1};
}

/// Writes `ROUND,REGION_OR_HALF,SLOT,WINNER` in structural order.
inline void write_results(std::ostream& os, const Bracket& b) {
  if (!b.complete()) throw DataError("cannot write results of an incomplete bracket");
  csv::write_row(os, {"ROUND", "REGION_OR_HALF", "SLOT", "WINNER"});
  for (const auto& round_games : b.games) {
    for (const auto& m : round_games) {
      const auto label = slot_label(b, m.round, m.slot);
      csv::write_row(os, {std::to_string(m.round), label.group, std::to_string(label.index),
                          b.name(*m.winner)});
    }
  }
}

/// Plays `layout` (entrants only) forward using the winners in a results
/// table. Every game needs exactly one row naming one of its two teams.
inline Bracket apply_results(const Bracket& layout, const csv::Table& table) {
  const auto round_col = table.require_column("ROUND");
  const auto group_col = table.require_column("REGION_OR_HALF");
  const auto slot_col = table.require_column("SLOT");
  const auto winner_col = table.require_column("WINNER");

  std::map<std::tuple<int, std::string, std::size_t>, std::size_t> address;
  for (int r = 1; r <= layout.rounds(); ++r) {
    for (std::size_t s = 0; s < layout.games_in_round(r); ++s) {
      auto l = slot_label(layout, r, s);
      address[{r, l.group, l.index}] = s;
    }
  }
  // (round, slot) -> row
  std::map<std::pair<int, std::size_t>, const csv::Row*> winners;
  for (const auto& row : table.rows) {
    const auto at = table.source + ":" + std::to_string(row.line);
    const auto r = text::parse_int(row.cells[round_col]);
    const auto idx = text::parse_int(row.cells[slot_col]);
    if (!r || !idx || *idx < 1) throw DataError(at + ": malformed ROUND or SLOT");
    const auto it = address.find({static_cast<int>(*r), row.cells[group_col],
                                  static_cast<std::size_t>(*idx)});
    if (it == address.end()) {
      throw DataError(at + ": no game round " + row.cells[round_col] + " " + row.cells[group_col] +
                      " slot " + row.cells[slot_col] + " in this bracket");
    }
    if (!winners.emplace(std::make_pair(static_cast<int>(*r), it->second), &row).second) {
      throw DataError(at + ": duplicate result for this game");
    }
  }
  Bracket out = layout;
  out.games.clear();
  play_out(out, [&](Matchup& m) {
    const auto it = winners.find({m.round, m.slot});
    if (it == winners.end()) {
      const auto l = slot_label(out, m.round, m.slot);
      throw DataError(table.source + ": missing result for round " + std::to_string(m.round) +
                      " " + l.group + " slot " + std::to_string(l.index));
    }
    const auto& name = it->second->cells[winner_col];
    if (name == out.name(m.team_a)) m.winner = m.team_a;
    else if (name == out.name(m.team_b)) m.winner = m.team_b;
    else {
      throw DataError(table.source + ":" + std::to_string(it->second->line) + ": structural mismatch: " +
                      name + " did not play in this game (" + out.name(m.team_a) + " vs " +
                      out.name(m.team_b) + ")");
    }
  });
  return out;
}

inline Bracket apply_results(const Bracket& layout, const std::filesystem::path& path) {
  return apply_results(layout, csv::read_file(path));
}

namespace detail {

inline std::string entrant_tag(const Bracket& b, std::size_t i) {
  const auto& t = b.entrants[i];
  return t.seed ? "(" + std::to_string(*t.seed) + ") " + t.team_name : t.team_name;
}

inline std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

}  // namespace detail

/// Human-readable listing of a completed bracket.
inline void write_bracket_text(std::ostream& os, const Bracket& b, std::uint64_t seed) {
  os << "season " << b.season << ", rng seed " << seed << '\n';
  for (const auto& round_games : b.games) {
    if (round_games.empty()) continue;
    os << "\nround " << round_games.front().round << '\n';
    for (const auto& m : round_games) {
      const auto l = slot_label(b, m.round, m.slot);
      os << "  " << l.group << ' ' << l.index << ": " << detail::entrant_tag(b, m.team_a) << " vs "
         << detail::entrant_tag(b, m.team_b);
      if (!std::isnan(m.p_a)) os << "  p=" << text::fixed(m.p_a, 4);
      os << "  -> " << b.name(*m.winner) << '\n';
    }
  }
  os << "\nchampion: " << b.name(b.champion()) << '\n';
}

/// Graphviz digraph; each game is a node with an edge to the game its winner
/// plays next. With verdicts, nodes and outgoing edges take the verdict color
/// (green, red, blue; wrong teams with wrong winner are dashed red).
inline void write_bracket_dot(std::ostream& os, const Bracket& b,
                              std::span<const SlotVerdict> verdicts = {}) {
  std::map<std::pair<int, std::size_t>, MatchupVerdict> by_slot;
  for (const auto& v : verdicts) by_slot[{v.round, v.slot}] = v.verdict;
  auto id = [](int r, std::size_t s) { return "g" + std::to_string(r) + "_" + std::to_string(s + 1); };

  os << "digraph bracket {\n  rankdir=LR;\n  node [shape=box, fontname=\"Helvetica\"];\n";
  for (const auto& round_games : b.games) {
    for (const auto& m : round_games) {
      const auto l = slot_label(b, m.round, m.slot);
      std::string label = "R" + std::to_string(m.round) + " " + l.group + " " + std::to_string(l.index) +
                          "\\n" + detail::dot_escape(detail::entrant_tag(b, m.team_a)) + "\\n" +
                          detail::dot_escape(detail::entrant_tag(b, m.team_b)) + "\\nwinner: " +
                          detail::dot_escape(b.name(*m.winner));
      std::string attrs;
      if (auto it = by_slot.find({m.round, m.slot}); it != by_slot.end()) {
        attrs = ", color=" + std::string(color(it->second));
        if (it->second == MatchupVerdict::WrongTeamsWrongWinner) attrs += ", style=dashed";
      }
      os << "  " << id(m.round, m.slot) << " [label=\"" << label << "\"" << attrs << "];\n";
    }
  }
  for (const auto& round_games : b.games) {
    for (const auto& m : round_games) {
      if (m.round == b.rounds()) continue;
      std::string attrs;
      if (auto it = by_slot.find({m.round, m.slot}); it != by_slot.end()) {
        attrs = " [color=" + std::string(color(it->second));
        if (it->second == MatchupVerdict::WrongTeamsWrongWinner) attrs += ", style=dashed";
        attrs += "]";
      }
      os << "  " << id(m.round, m.slot) << " -> " << id(m.round + 1, m.slot / 2) << attrs << ";\n";
    }
  }
  os << "}\n";
}

/// TEAM,REGION,SEED,ROUND_1..ROUND_R,CHAMPION
inline void write_advancement_csv(std::ostream& os, const Bracket& b, const SimulationReport& r) {
  std::vector<std::string> header = {"TEAM", "REGION", "SEED"};
  for (int k = 1; k <= b.rounds(); ++k) header.push_back("ROUND_" + std::to_string(k));
  header.push_back("CHAMPION");
  csv::write_row(os, header);
  for (std::size_t t = 0; t < b.entrants.size(); ++t) {
    const auto& e = b.entrants[t];
    std::vector<std::string> row = {e.team_name, e.region ? std::string(to_string(*e.region)) : "",
                                    e.seed ? std::to_string(*e.seed) : ""};
    for (double f : r.advancement[t]) row.push_back(text::exact(f));
    csv::write_row(os, row);
  }
}

/// TEAM,FREQUENCY by descending frequency, ties by name.
inline void write_champion_csv(std::ostream& os, const Bracket& b, const SimulationReport& r) {
  std::vector<std::size_t> order(b.entrants.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t rr) {
    if (r.champion_freq[l] != r.champion_freq[rr]) return r.champion_freq[l] > r.champion_freq[rr];
    return b.name(l) < b.name(rr);
  });
  csv::write_row(os, {"TEAM", "FREQUENCY"});
  for (auto t : order) csv::write_row(os, {b.name(t), text::exact(r.champion_freq[t])});
}

inline void write_metric_summary_csv(std::ostream& os, const SimulationReport& r) {
  csv::write_row(os, {"LABEL", "SCOPE", "SLOTS", "N", "NAIVE_ACCURACY_MEAN", "NAIVE_ACCURACY_SD",
                      "SPEARMAN_RHO_MEAN", "SPEARMAN_RHO_SD"});
  for (const auto& s : r.metric_summary) {
    csv::write_row(os, {s.label, scope_name(s.scope), std::to_string(s.slots), std::to_string(s.n),
                        text::exact(s.accuracy_mean), text::exact(s.accuracy_sd),
                        text::exact(s.rho_mean), text::exact(s.rho_sd)});
  }
}

/// ROUND,SLOT,TEAM_A,TEAM_B,PREDICTED_WINNER,ACTUAL_WINNER,VERDICT
inline void write_verdicts_csv(std::ostream& os, const Bracket& sim, const Bracket& actual,
                               std::span<const SlotVerdict> verdicts) {
  csv::write_row(os, {"ROUND", "SLOT", "TEAM_A", "TEAM_B", "PREDICTED_WINNER", "ACTUAL_WINNER",
                      "VERDICT"});
  for (const auto& v : verdicts) {
    csv::write_row(os, {std::to_string(v.round), std::to_string(v.slot + 1), sim.name(v.sim_a),
                        sim.name(v.sim_b), sim.name(v.predicted_winner),
                        actual.name(v.actual_winner), std::string(to_string(v.verdict))});
  }
}

/// key=value blocks, one per scope, separated by blank lines.
inline void write_metrics_kv(std::ostream& os, std::span<const ScopeScore> scores) {
  bool first = true;
  for (const auto& s : scores) {
    if (!first) os << '\n';
    first = false;
    os << "scope=" << scope_name(s.scope) << '\n'
       << "label=" << s.label << '\n'
       << "slots=" << s.slots << '\n'
       << "n=" << s.n << '\n'
       << "naive_accuracy_pct=" << text::exact(s.naive_accuracy_pct) << '\n'
       << "spearman_rho=" << text::exact(s.spearman_rho) << '\n'
       << "rank_ties=average_ranks_in_rank_difference_formula\n";
  }
}

}  // namespace bracketlab
