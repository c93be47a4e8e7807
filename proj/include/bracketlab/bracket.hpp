#pragma once

// Single-elimination brackets and their seeded simulation.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "bracketlab/dataio.hpp"
#include "bracketlab/errors.hpp"
#include "bracketlab/linmodel.hpp"
#include "bracketlab/rng.hpp"

namespace bracketlab {

/// Two regions whose champions meet in a national semifinal.
struct RegionPair {
  Region first;
  Region second;

  friend bool operator==(const RegionPair&, const RegionPair&) = default;
};

/// One game. Team fields are indices into Bracket::entrants.
struct Matchup {
  int round = 0;         // 1-based
  std::size_t slot = 0;  // 0-based position within the round
  std::size_t team_a = 0;
  std::size_t team_b = 0;
  double p_a = std::numeric_limits<double>::quiet_NaN();  // NaN for observed results
  std::optional<std::size_t> winner;

  friend bool operator==(const Matchup&, const Matchup&) = default;
};

/// First-round seed order inside a region: 1v16, 8v9, 5v12, 4v13, 6v11, 3v14, 7v10, 2v15.
inline constexpr std::array<int, 16> kSeedPairingOrder = {1, 16, 8, 9, 5, 12, 4, 13,
                                                          6, 11, 3, 14, 7, 10, 2, 15};

/// A single-elimination field of 2^k entrants listed in first-round order:
/// game s of round 1 is entrants[2s] vs entrants[2s+1], and game s of round
/// r > 1 is played by the winners of games 2s and 2s+1 of round r-1.
///
/// A 64-team NCAA field is laid out region by region in region_semis order
/// (first pair, then second pair), so the two 32-entrant halves are exactly
/// the two sides that meet in the championship.
struct Bracket {
  int season = 0;
  std::vector<TeamSeason> entrants;
  std::vector<RegionPair> region_semis;   // two pairs for a 64-team field, else empty
  std::vector<std::vector<Matchup>> games;  // games[r - 1]; filled as play proceeds

  int rounds() const { return static_cast<int>(std::bit_width(entrants.size())) - 1; }

  std::size_t games_in_round(int round) const { return entrants.size() >> round; }

  bool complete() const {
    if (static_cast<int>(games.size()) != rounds()) return false;
    for (int r = 1; r <= rounds(); ++r) {
      const auto& g = games[static_cast<std::size_t>(r - 1)];
      if (g.size() != games_in_round(r)) return false;
      if (!std::all_of(g.begin(), g.end(), [](const Matchup& m) { return m.winner.has_value(); })) {
        return false;
      }
    }
    return true;
  }

  std::size_t total_games() const {
    std::size_t n = 0;
    for (const auto& g : games) n += g.size();
    return n;
  }

  std::size_t champion() const {
    if (!complete()) throw DataError("bracket is not complete");
    return *games.back().front().winner;
  }

  const std::string& name(std::size_t entrant) const { return entrants[entrant].team_name; }

  bool is_ncaa_field() const { return entrants.size() == 64 && region_semis.size() == 2; }
};

/// Generic bracket from entrants already in first-round order.
inline Bracket make_bracket(int season, std::vector<TeamSeason> ordered,
                            std::vector<RegionPair> region_semis = {}) {
  if (ordered.size() < 2 || !std::has_single_bit(ordered.size())) {
    throw DataError("a bracket needs a power-of-two number of entrants (got " +
                    std::to_string(ordered.size()) + ")");
  }
  std::set<std::string> names;
  for (const auto& t : ordered) {
    if (!names.insert(t.team_name).second) throw DataError("team listed twice: " + t.team_name);
  }
  Bracket b;
  b.season = season;
  b.entrants = std::move(ordered);
  b.region_semis = std::move(region_semis);
  return b;
}

/// NCAA 64-team field: 4 regions x seeds 1..16, paired by kSeedPairingOrder,
/// region champions meeting per region_semis.
inline Bracket build_bracket(std::vector<TeamSeason> entrants,
                             const std::vector<RegionPair>& region_semis) {
  if (entrants.size() != 64) {
    throw DataError("a tournament field needs 64 entrants (got " + std::to_string(entrants.size()) +
                    ")");
  }
  if (region_semis.size() != 2) throw ConfigError("region_semis must declare exactly two pairs");
  {
    std::set<Region> used;
    for (const auto& p : region_semis) {
      used.insert(p.first);
      used.insert(p.second);
    }
    if (used.size() != 4) throw ConfigError("region_semis must pair up all four regions");
  }
  const int season = entrants.front().season;
  std::array<std::array<const TeamSeason*, 17>, 4> grid{};
  for (const auto& t : entrants) {
    if (t.season != season) {
      throw DataError("entrant " + t.team_name + " is from season " + std::to_string(t.season) +
                      ", expected " + std::to_string(season));
    }
    if (!t.region || !t.seed) throw DataError("entrant " + t.team_name + " lacks region or seed");
    if (*t.seed < 1 || *t.seed > 16) {
      throw DataError("entrant " + t.team_name + " has seed " + std::to_string(*t.seed));
    }
    auto& cell = grid[static_cast<std::size_t>(*t.region)][static_cast<std::size_t>(*t.seed)];
    if (cell) {
      throw DataError("duplicate " + std::string(to_string(*t.region)) + " seed " +
                      std::to_string(*t.seed) + ": " + cell->team_name + " and " + t.team_name);
    }
    cell = &t;
  }
  std::vector<TeamSeason> ordered;
  ordered.reserve(64);
  for (const auto& pair : region_semis) {
    for (Region r : {pair.first, pair.second}) {
      for (int seed : kSeedPairingOrder) {
        ordered.push_back(*grid[static_cast<std::size_t>(r)][static_cast<std::size_t>(seed)]);
      }
    }
  }
  return make_bracket(season, std::move(ordered), region_semis);
}

/// Any callable giving P(first team beats second).
template <class M>
concept WinProbabilityModel =
    std::is_invocable_r_v<double, const M&, const TeamSeason&, const TeamSeason&>;

/// Adapts a fitted model to WinProbabilityModel.
struct LogisticMatchupModel {
  const FitModel* model;

  double operator()(const TeamSeason& a, const TeamSeason& b) const {
    return predict_proba(*model, a, b);
  }
};

/// Plays every remaining game in structural order. `decide` receives a
/// Matchup with round, slot and teams set and must fill p_a and winner.
template <class Decide>
void play_out(Bracket& b, Decide&& decide) {
  const int rounds = b.rounds();
  b.games.resize(static_cast<std::size_t>(rounds));
  for (int r = 1; r <= rounds; ++r) {
    auto& round_games = b.games[static_cast<std::size_t>(r - 1)];
    const auto n = b.games_in_round(r);
    for (std::size_t s = round_games.size(); s < n; ++s) {
      Matchup m;
      m.round = r;
      m.slot = s;
      if (r == 1) {
        m.team_a = 2 * s;
        m.team_b = 2 * s + 1;
      } else {
        const auto& prev = b.games[static_cast<std::size_t>(r - 2)];
        m.team_a = *prev[2 * s].winner;
        m.team_b = *prev[2 * s + 1].winner;
      }
      decide(m);
      if (!m.winner || (*m.winner != m.team_a && *m.winner != m.team_b)) {
        throw DataError("round " + std::to_string(r) + " slot " + std::to_string(s + 1) +
                        ": winner is not one of the two teams");
      }
      round_games.push_back(m);
    }
  }
}

/// Draws u ~ U[0,1); team_a wins iff u < p_a.
template <WinProbabilityModel M>
Matchup simulate_game(Matchup m, const TeamSeason& a, const TeamSeason& b, const M& model,
                      SplitMix64& rng) {
  const double p = model(a, b);
  if (!(p >= 0.0 && p <= 1.0)) {
    throw DataError("win probability for " + a.team_name + " vs " + b.team_name +
                    " is not in [0, 1]");
  }
  m.p_a = p;
  m.winner = rng.uniform() < p ? m.team_a : m.team_b;
  return m;
}

inline Matchup simulate_game(Matchup m, const TeamSeason& a, const TeamSeason& b,
                             const FitModel& model, SplitMix64& rng) {
  return simulate_game(m, a, b, LogisticMatchupModel{&model}, rng);
}

/// Resolves all games round by round; one uniform draw per game, in
/// structural order, from SplitMix64(rng_seed).
template <WinProbabilityModel M>
Bracket simulate_tournament(const Bracket& bracket, const M& model, std::uint64_t rng_seed) {
  Bracket out = bracket;
  out.games.clear();
  SplitMix64 rng(rng_seed);
  play_out(out, [&](Matchup& m) {
    m = simulate_game(m, out.entrants[m.team_a], out.entrants[m.team_b], model, rng);
  });
  return out;
}

inline Bracket simulate_tournament(const Bracket& bracket, const FitModel& model,
                                   std::uint64_t rng_seed) {
  return simulate_tournament(bracket, LogisticMatchupModel{&model}, rng_seed);
}

/// Last round each entrant played in (1..rounds); the champion's value is
/// rounds + 1.
inline std::vector<int> last_rounds(const Bracket& b) {
  if (!b.complete()) throw DataError("bracket is not complete");
  std::vector<int> last(b.entrants.size(), 0);
  for (const auto& round_games : b.games) {
    for (const auto& m : round_games) {
      last[m.team_a] = m.round;
      last[m.team_b] = m.round;
    }
  }
  last[b.champion()] = b.rounds() + 1;
  return last;
}

/// Label of half h (0 or 1): "South vs. Midwest" for an NCAA field.
inline std::string half_label(const Bracket& b, int half) {
  if (b.region_semis.size() == 2) {
    const auto& p = b.region_semis[static_cast<std::size_t>(half)];
    return std::string(to_string(p.first)) + " vs. " + std::string(to_string(p.second));
  }
  return "Half " + std::to_string(half + 1);
}

/// Whether game (round, slot) is scored for half h. Each half owns its side of
/// rounds 1..R-1; the championship game belongs to both halves.
inline bool slot_in_half(const Bracket& b, int half, int round, std::size_t slot) {
  if (round == b.rounds()) return true;
  const auto per_half = b.games_in_round(round) / 2;
  return slot / per_half == static_cast<std::size_t>(half);
}

inline bool entrant_in_half(const Bracket& b, int half, std::size_t entrant) {
  return entrant / (b.entrants.size() / 2) == static_cast<std::size_t>(half);
}

}  // namespace bracketlab
