#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "bracketlab/bracket.hpp"
#include "bracketlab/metrics.hpp"

namespace bracketlab {

struct MetricSummary {
  Scope scope;
  std::string label;  // e.g. "2023 South vs. Midwest"
  std::size_t slots = 0;
  std::size_t n = 0;
  double accuracy_mean = 0.0;
  double accuracy_sd = 0.0;
  double rho_mean = 0.0;
  double rho_sd = 0.0;
};

struct SimulationReport {
  std::size_t iterations = 0;
  std::uint64_t base_seed = 0;
  // advancement[team][r - 1] = fraction of iterations the team played in
  // round r (r = 1..R); index R holds the championship frequency.
  std::vector<std::vector<double>> advancement;
  std::vector<double> champion_freq;
  std::vector<Scope> scopes;
  std::vector<MetricSummary> metric_summary;  // empty without actual results
  // per_iteration[i][k]: scores of iteration i for scopes[k]
  std::vector<std::vector<ScopeScore>> per_iteration;
  Bracket exemplar;
  std::uint64_t exemplar_seed = 0;
};

namespace detail {

inline std::pair<double, double> mean_sd(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

}  // namespace detail

/// Runs simulate_tournament with seeds base_seed + i for i in [0, iterations).
///
/// Iterations may be spread over `threads` workers; counts are integers and
/// per-iteration scores are stored by index, so the report does not depend on
/// the thread count. When `actual` is given, every iteration is scored on
/// default_scopes() and the exemplar is the iteration with the median
/// full-bracket accuracy (lower median, ties to the lower index). Without it
/// the exemplar is iteration 0.
template <WinProbabilityModel M>
SimulationReport monte_carlo(const Bracket& bracket, const M& model, std::size_t iterations,
                             std::uint64_t base_seed, const Bracket* actual = nullptr,
                             unsigned threads = 1) {
  if (iterations < 1) throw ConfigError("monte carlo needs at least one iteration");
  if (actual) {
    // Borrow the actual games so only entrants and layout are compared.
    Bracket probe = bracket;
    probe.games = actual->games;
    check_same_structure(probe, *actual);
  }
  const auto teams = bracket.entrants.size();
  const auto rounds = static_cast<std::size_t>(bracket.rounds());

  SimulationReport report;
  report.iterations = iterations;
  report.base_seed = base_seed;
  if (actual) {
    report.scopes = default_scopes(bracket);
    report.per_iteration.resize(iterations);
  }

  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(iterations)));
  std::vector<std::vector<std::uint64_t>> counts(
      threads, std::vector<std::uint64_t>(teams * (rounds + 1), 0));
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&](unsigned w) {
    try {
      auto& c = counts[w];
      for (std::size_t i = w; i < iterations; i += threads) {
        const auto sim = simulate_tournament(bracket, model, base_seed + i);
        const auto last = last_rounds(sim);
        for (std::size_t t = 0; t < teams; ++t) {
          for (std::size_t r = 0; r < static_cast<std::size_t>(last[t]); ++r) ++c[t * (rounds + 1) + r];
        }
        if (actual) {
          const auto verdicts = classify_matchups(sim, *actual);
          auto& row = report.per_iteration[i];
          for (const auto& scope : report.scopes) row.push_back(score(sim, *actual, verdicts, scope));
        }
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker, w);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  const auto n = static_cast<double>(iterations);
  report.advancement.assign(teams, std::vector<double>(rounds + 1, 0.0));
  report.champion_freq.assign(teams, 0.0);
  for (std::size_t t = 0; t < teams; ++t) {
    for (std::size_t r = 0; r <= rounds; ++r) {
      std::uint64_t total = 0;
      for (const auto& c : counts) total += c[t * (rounds + 1) + r];
      report.advancement[t][r] = static_cast<double>(total) / n;
    }
    report.champion_freq[t] = report.advancement[t][rounds];
  }

  std::size_t exemplar = 0;
  if (actual) {
    for (std::size_t k = 0; k < report.scopes.size(); ++k) {
      std::vector<double> acc, rho;
      acc.reserve(iterations);
      rho.reserve(iterations);
      for (const auto& row : report.per_iteration) {
        acc.push_back(row[k].naive_accuracy_pct);
        rho.push_back(row[k].spearman_rho);
      }
      MetricSummary s;
      s.scope = report.scopes[k];
      s.label = std::to_string(bracket.season) + " " + scope_label(bracket, s.scope);
      s.slots = report.per_iteration.front()[k].slots;
      s.n = report.per_iteration.front()[k].n;
      std::tie(s.accuracy_mean, s.accuracy_sd) = detail::mean_sd(acc);
      std::tie(s.rho_mean, s.rho_sd) = detail::mean_sd(rho);
      report.metric_summary.push_back(std::move(s));
    }
    const auto full = report.scopes.size() - 1;
    std::vector<std::size_t> order(iterations);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
      const double al = report.per_iteration[l][full].naive_accuracy_pct;
      const double ar = report.per_iteration[r][full].naive_accuracy_pct;
      return al != ar ? al < ar : l < r;
    });
    exemplar = order[(iterations - 1) / 2];
  }
  report.exemplar_seed = base_seed + exemplar;
  report.exemplar = simulate_tournament(bracket, model, report.exemplar_seed);
  return report;
}

inline SimulationReport monte_carlo(const Bracket& bracket, const FitModel& model,
                                    std::size_t iterations, std::uint64_t base_seed,
                                    const Bracket* actual = nullptr, unsigned threads = 1) {
  return monte_carlo(bracket, LogisticMatchupModel{&model}, iterations, base_seed, actual, threads);
}

}  // namespace bracketlab
