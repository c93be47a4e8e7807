#pragma once

// Test helpers: temporary directories and a synthetic league whose game
// outcomes follow a latent team strength.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "bracketlab/bracket.hpp"
#include "bracketlab/bracket_io.hpp"
#include "bracketlab/dataio.hpp"
#include "bracketlab/rng.hpp"

namespace fixtures {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("bracketlab_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Standard normal via Box-Muller on the library generator (portable).
inline double normal(bracketlab::SplitMix64& rng) {
  double u1 = rng.uniform();
  while (u1 <= 0.0) u1 = rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline bracketlab::TeamSeason team(const std::string& name, int season,
                                   const std::vector<std::pair<std::string, double>>& values) {
  bracketlab::TeamSeason t;
  t.team_name = name;
  t.season = season;
  for (const auto& [k, v] : values) t.features.push_back({k, v});
  return t;
}

struct League {
  std::string stats_csv;
  std::string games_csv;
  std::map<std::pair<int, std::string>, double> strength;
};

/// Teams named T<season>_<k>; the 16 default feature columns are noisy
/// functions of strength. Winner of each game ~ logistic(1.2 * (s_a - s_b)).
inline League synthetic_league(std::uint64_t seed, int first_season, int last_season,
                               int teams_per_season, int games_per_season) {
  bracketlab::SplitMix64 rng(seed);
  League league;
  std::ostringstream stats;
  stats << "TEAM,YEAR";
  for (const auto& f : bracketlab::default_feature_columns()) stats << ',' << f;
  stats << '\n';
  std::ostringstream games;
  games << "YEAR,TEAM_A,TEAM_B,WINNER\n";
  for (int season = first_season; season <= last_season; ++season) {
    std::vector<double> s(static_cast<std::size_t>(teams_per_season));
    for (int k = 0; k < teams_per_season; ++k) {
      const double st = normal(rng);
      s[static_cast<std::size_t>(k)] = st;
      const auto name = "T" + std::to_string(season) + "_" + std::to_string(k);
      league.strength[{season, name}] = st;
      auto n = [&] { return normal(rng); };
      const double vals[16] = {
          105 + 6 * st + 2 * n(),                 // ADJOE
          100 - 5 * st + 2 * n(),                 // ADJDE
          1.0 / (1.0 + std::exp(-1.6 * st - 0.3 * n())),  // BARTHAG
          50 + 1.5 * st + 2 * n(),                // EFG_O
          50 - 1.2 * st + 2 * n(),                // EFG_D
          18 + 2 * n(),                           // TOR
          18 + 2 * n(),                           // TORD
          29 + 0.5 * st + 3 * n(),                // ORB
          29 - 0.3 * st + 3 * n(),                // DRB
          33 + 5 * n(),                           // FTR
          33 + 5 * n(),                           // FTRD
          50 + 1.5 * st + 2 * n(),                // 2P_O
          48 - 1.5 * st + 1.5 * n(),              // 2P_D
          34 + 0.6 * st + 2 * n(),                // 3P_O
          34 - 0.6 * st + 2 * n(),                // 3P_D
          68 + 3 * n(),                           // ADJ_T
      };
      stats << name << ',' << season;
      for (double v : vals) stats << ',' << bracketlab::text::exact(v);
      stats << '\n';
    }
    for (int g = 0; g < games_per_season; ++g) {
      const auto a = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(teams_per_season)));
      auto b = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(teams_per_season - 1)));
      if (b >= a) ++b;
      const double p = 1.0 / (1.0 + std::exp(-1.2 * (s[static_cast<std::size_t>(a)] -
                                                     s[static_cast<std::size_t>(b)])));
      games << season << ",T" << season << '_' << a << ",T" << season << '_' << b << ','
            << (rng.uniform() < p ? 'A' : 'B') << '\n';
    }
  }
  league.stats_csv = stats.str();
  league.games_csv = games.str();
  return league;
}

/// 64-entrant bracket CSV for one season: the 64 strongest teams, seeded by
/// strength (overall rank r -> seed r/4 + 1, regions rotating).
inline std::string bracket_csv(const League& league, int season) {
  std::vector<std::pair<double, std::string>> teams;
  for (const auto& [key, s] : league.strength) {
    if (key.first == season) teams.emplace_back(s, key.second);
  }
  std::sort(teams.rbegin(), teams.rend());
  const char* regions[4] = {"South", "East", "Midwest", "West"};
  std::ostringstream out;
  out << "YEAR,REGION,SEED,TEAM\n";
  for (int r = 0; r < 64; ++r) {
    out << season << ',' << regions[r % 4] << ',' << r / 4 + 1 << ','
        << teams[static_cast<std::size_t>(r)].second << '\n';
  }
  return out.str();
}

/// Bracket whose entrants carry only names, with regions and seeds set.
inline bracketlab::Bracket ncaa_field(int season = 2023,
                                      std::vector<bracketlab::RegionPair> semis = {
                                          {bracketlab::Region::South, bracketlab::Region::Midwest},
                                          {bracketlab::Region::East, bracketlab::Region::West}}) {
  using namespace bracketlab;
  std::vector<TeamSeason> entrants;
  for (Region r : {Region::East, Region::West, Region::Midwest, Region::South}) {
    for (int seed = 1; seed <= 16; ++seed) {
      TeamSeason t;
      t.team_name = std::string(to_string(r)) + "_" + std::to_string(seed);
      t.season = season;
      t.region = r;
      t.seed = seed;
      // Rating decreasing in seed with a region offset so values are distinct.
      t.features.push_back({"BARTHAG", 1.0 - 0.05 * seed - 0.001 * static_cast<int>(r)});
      entrants.push_back(std::move(t));
    }
  }
  return build_bracket(std::move(entrants), semis);
}

/// P(a beats b) = 1 if a has the higher BARTHAG, else 0.
struct DominanceModel {
  double operator()(const bracketlab::TeamSeason& a, const bracketlab::TeamSeason& b) const {
    return *a.find("BARTHAG")->value > *b.find("BARTHAG")->value ? 1.0 : 0.0;
  }
};

/// Constant probability for team_a.
struct ConstantModel {
  double p;
  double operator()(const bracketlab::TeamSeason&, const bracketlab::TeamSeason&) const { return p; }
};

inline bracketlab::Bracket small_bracket(std::vector<std::string> names, int season = 2023) {
  std::vector<bracketlab::TeamSeason> entrants;
  for (auto& n : names) entrants.push_back(bracketlab::name_only(season, n));
  return bracketlab::make_bracket(season, std::move(entrants));
}

/// Completes a bracket with the given winners, listed round by round.
inline bracketlab::Bracket play(const bracketlab::Bracket& layout, const std::vector<std::string>& winners) {
  bracketlab::Bracket b = layout;
  b.games.clear();
  std::size_t k = 0;
  bracketlab::play_out(b, [&](bracketlab::Matchup& m) {
    const auto& w = winners.at(k++);
    m.winner = b.name(m.team_a) == w ? m.team_a : m.team_b;
  });
  return b;
}

}  // namespace fixtures
