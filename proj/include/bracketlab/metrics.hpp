#pragma once

// Scoring a simulated bracket against the observed one.

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bracketlab/bracket.hpp"
#include "bracketlab/errors.hpp"

namespace bracketlab {

enum class MatchupVerdict {
  CorrectPair,              // green: same teams, same winner
  IncorrectWinner,          // red: same teams, other winner
  WrongTeamsCorrectWinner,  // blue: different teams, winner matches the slot's actual winner
  WrongTeamsWrongWinner,
};

inline constexpr std::string_view to_string(MatchupVerdict v) {
  switch (v) {
    case MatchupVerdict::CorrectPair: return "CorrectPair";
    case MatchupVerdict::IncorrectWinner: return "IncorrectWinner";
    case MatchupVerdict::WrongTeamsCorrectWinner: return "WrongTeamsCorrectWinner";
    case MatchupVerdict::WrongTeamsWrongWinner: return "WrongTeamsWrongWinner";
  }
  return "?";
}

inline constexpr std::string_view color(MatchupVerdict v) {
  switch (v) {
    case MatchupVerdict::CorrectPair: return "green";
    case MatchupVerdict::WrongTeamsCorrectWinner: return "blue";
    default: return "red";
  }
}

struct SlotVerdict {
  int round = 0;
  std::size_t slot = 0;
  std::size_t sim_a = 0;
  std::size_t sim_b = 0;
  std::size_t predicted_winner = 0;
  std::size_t actual_winner = 0;
  MatchupVerdict verdict = MatchupVerdict::CorrectPair;
};

/// Which part of a bracket is scored.
struct Scope {
  enum class Kind { Full, Half };
  Kind kind = Kind::Full;
  int half = 0;

  static Scope full() { return {}; }
  static Scope of_half(int h) { return {Kind::Half, h}; }

  friend bool operator==(const Scope&, const Scope&) = default;
};

inline std::string scope_name(const Scope& s) {
  return s.kind == Scope::Kind::Full ? "full" : "half" + std::to_string(s.half + 1);
}

inline std::string scope_label(const Bracket& b, const Scope& s) {
  return s.kind == Scope::Kind::Full ? std::string("Full") : half_label(b, s.half);
}

/// Throws unless both brackets are complete and share entrants and layout.
inline void check_same_structure(const Bracket& sim, const Bracket& actual) {
  if (!sim.complete() || !actual.complete()) throw DataError("structural mismatch: incomplete bracket");
  if (sim.entrants.size() != actual.entrants.size()) {
    throw DataError("structural mismatch: entrant counts differ");
  }
  for (std::size_t i = 0; i < sim.entrants.size(); ++i) {
    if (sim.name(i) != actual.name(i)) {
      throw DataError("structural mismatch: entrant " + std::to_string(i + 1) + " is " +
                      sim.name(i) + " in one bracket and " + actual.name(i) + " in the other");
    }
  }
  if (sim.region_semis != actual.region_semis) {
    throw DataError("structural mismatch: region pairings differ");
  }
}

/// One verdict per game slot, in structural order (round, then slot).
inline std::vector<SlotVerdict> classify_matchups(const Bracket& sim, const Bracket& actual) {
  check_same_structure(sim, actual);
  std::vector<SlotVerdict> out;
  out.reserve(sim.total_games());
  for (std::size_t r = 0; r < sim.games.size(); ++r) {
    for (std::size_t s = 0; s < sim.games[r].size(); ++s) {
      const auto& p = sim.games[r][s];
      const auto& a = actual.games[r][s];
      SlotVerdict v{p.round, p.slot, p.team_a, p.team_b, *p.winner, *a.winner,
                    MatchupVerdict::CorrectPair};
      const bool same_pair = (p.team_a == a.team_a && p.team_b == a.team_b) ||
                             (p.team_a == a.team_b && p.team_b == a.team_a);
      const bool same_winner = *p.winner == *a.winner;
      if (same_pair) {
        v.verdict = same_winner ? MatchupVerdict::CorrectPair : MatchupVerdict::IncorrectWinner;
      } else {
        v.verdict = same_winner ? MatchupVerdict::WrongTeamsCorrectWinner
                                : MatchupVerdict::WrongTeamsWrongWinner;
      }
      out.push_back(v);
    }
  }
  return out;
}

inline std::vector<SlotVerdict> in_scope(const Bracket& b, std::span<const SlotVerdict> verdicts,
                                         const Scope& scope) {
  std::vector<SlotVerdict> out;
  for (const auto& v : verdicts) {
    if (scope.kind == Scope::Kind::Full || slot_in_half(b, scope.half, v.round, v.slot)) {
      out.push_back(v);
    }
  }
  return out;
}

/// 100 * (green + blue / 2) / slots.
inline double naive_accuracy(std::span<const MatchupVerdict> verdicts) {
  if (verdicts.empty()) throw DataError("naive accuracy of an empty verdict list");
  double credit = 0.0;
  for (auto v : verdicts) {
    if (v == MatchupVerdict::CorrectPair) credit += 1.0;
    else if (v == MatchupVerdict::WrongTeamsCorrectWinner) credit += 0.5;
  }
  return 100.0 * credit / static_cast<double>(verdicts.size());
}

inline double naive_accuracy(std::span<const SlotVerdict> verdicts) {
  std::vector<MatchupVerdict> v;
  v.reserve(verdicts.size());
  for (const auto& s : verdicts) v.push_back(s.verdict);
  return naive_accuracy(std::span<const MatchupVerdict>(v));
}

/// Final round reached per team of a scope.
struct RankVector {
  std::vector<std::string> teams;
  std::vector<int> values;
};

/// Full scope: last round played, champion gets rounds + 1. Half scope: the
/// half's 2^(R-1) teams, rounds 1..R-1, with the half's winner at R.
inline RankVector final_round_ranks(const Bracket& b, const Scope& scope) {
  const auto last = last_rounds(b);
  RankVector rv;
  for (std::size_t i = 0; i < b.entrants.size(); ++i) {
    if (scope.kind == Scope::Kind::Half) {
      if (b.rounds() < 2) throw DataError("a bracket of two teams has no halves");
      if (!entrant_in_half(b, scope.half, i)) continue;
      rv.values.push_back(std::min(last[i], b.rounds()));
    } else {
      rv.values.push_back(last[i]);
    }
    rv.teams.push_back(b.name(i));
  }
  return rv;
}

/// Ranks 1..n by ascending value; tied values share the mean of their ranks.
template <class T>
std::vector<double> average_ranks(std::span<const T> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return values[l] < values[r]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

/// rho = 1 - 6 * sum(d_i^2) / (n (n^2 - 1)) on two rank vectors.
inline double spearman_rho(std::span<const double> ranks_a, std::span<const double> ranks_b) {
  if (ranks_a.size() != ranks_b.size()) throw DataError("rank vectors differ in length");
  const auto n = static_cast<double>(ranks_a.size());
  if (ranks_a.size() < 2) throw DataError("spearman rho needs at least two observations");
  double sum_d2 = 0.0;
  for (std::size_t i = 0; i < ranks_a.size(); ++i) {
    const double d = ranks_a[i] - ranks_b[i];
    sum_d2 += d * d;
  }
  return 1.0 - 6.0 * sum_d2 / (n * (n * n - 1.0));
}

/// Round values are turned into average ranks, then the formula above is
/// applied. Teams are matched by name.
inline double spearman_rho(const RankVector& sim, const RankVector& actual) {
  if (sim.teams.size() != actual.teams.size()) throw DataError("rank vectors cover different teams");
  std::map<std::string_view, std::size_t> where;
  for (std::size_t i = 0; i < actual.teams.size(); ++i) where.emplace(actual.teams[i], i);
  std::vector<int> aligned(sim.teams.size());
  for (std::size_t i = 0; i < sim.teams.size(); ++i) {
    const auto it = where.find(sim.teams[i]);
    if (it == where.end()) throw DataError("team " + sim.teams[i] + " missing from actual ranks");
    aligned[i] = actual.values[it->second];
  }
  const auto ra = average_ranks(std::span<const int>(sim.values));
  const auto rb = average_ranks(std::span<const int>(aligned));
  return spearman_rho(std::span<const double>(ra), std::span<const double>(rb));
}

struct ScopeScore {
  Scope scope;
  std::string label;
  std::size_t slots = 0;
  std::size_t n = 0;
  double naive_accuracy_pct = 0.0;
  double spearman_rho = 0.0;
};

/// Accuracy and rho for one scope of a simulated/actual pair.
inline ScopeScore score(const Bracket& sim, const Bracket& actual,
                        std::span<const SlotVerdict> verdicts, const Scope& scope) {
  const auto scoped = in_scope(sim, verdicts, scope);
  const auto sim_ranks = final_round_ranks(sim, scope);
  const auto actual_ranks = final_round_ranks(actual, scope);
  return {scope,
          scope_label(sim, scope),
          scoped.size(),
          sim_ranks.teams.size(),
          naive_accuracy(std::span<const SlotVerdict>(scoped)),
          spearman_rho(sim_ranks, actual_ranks)};
}

/// Scopes scored by default: each half (when the bracket has them), then full.
inline std::vector<Scope> default_scopes(const Bracket& b) {
  std::vector<Scope> scopes;
  if (b.rounds() >= 2) {
    scopes.push_back(Scope::of_half(0));
    scopes.push_back(Scope::of_half(1));
  }
  scopes.push_back(Scope::full());
  return scopes;
}

}  // namespace bracketlab
