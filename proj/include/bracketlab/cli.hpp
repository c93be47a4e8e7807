#pragma once

// Subcommands wiring ingestion, fitting, selection, simulation and scoring
// into reproducible runs. Include from exactly one translation unit that
// links OpenSSL::Crypto.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "bracketlab/bracket_io.hpp"
#include "bracketlab/config.hpp"
#include "bracketlab/dataio.hpp"
#include "bracketlab/linmodel.hpp"
#include "bracketlab/manifest.hpp"
#include "bracketlab/metrics.hpp"
#include "bracketlab/monte_carlo.hpp"

namespace bracketlab::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNonConvergence = 3 };

namespace fs = std::filesystem;

struct PreparedData {
  std::vector<std::string> feature_names;
  Split split;
  nlohmann::ordered_json manifest;
};

inline std::string require_path(const std::string& value, const char* what) {
  if (value.empty()) throw ConfigError(std::string("no ") + what + " configured");
  return value;
}

inline fs::path output_file(const RunConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.output_dir);
  return fs::path(cfg.output_dir) / name;
}

inline std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

inline std::vector<TeamSeason> load_imputed_teams(const RunConfig& cfg, std::ostream& diag,
                                                  std::size_t* loaded = nullptr,
                                                  std::size_t* dropped = nullptr) {
  const auto teams = load_team_seasons(fs::path(require_path(cfg.stats_csv, "stats_csv")), cfg.schema);
  auto imputed = impute_means(teams);
  report_drops(diag, imputed.dropped);
  if (loaded) *loaded = teams.size();
  if (dropped) *dropped = imputed.dropped.size();
  return std::move(imputed.teams);
}

/// ingest -> impute -> build -> split
inline PreparedData prepare(const RunConfig& cfg, std::ostream& diag) {
  std::size_t loaded = 0, dropped = 0;
  const auto teams = load_imputed_teams(cfg, diag, &loaded, &dropped);
  const auto games = load_games(fs::path(require_path(cfg.games_csv, "games_csv")));
  auto build = build_dataset(games, teams, cfg.augment);
  report_skips(diag, build.skipped);
  if (build.examples.empty()) throw DataError("no usable games after cleaning");
  PreparedData data;
  data.feature_names = cfg.schema.feature_columns;
  data.split = train_test_split(build.examples, cfg.test_fraction, cfg.split_seed);
  data.manifest = {{"teams_loaded", loaded},
                   {"teams_dropped", dropped},
                   {"games_loaded", games.size()},
                   {"games_skipped", build.skipped.size()},
                   {"examples", build.examples.size()},
                   {"train_examples", data.split.train.size()},
                   {"test_examples", data.split.test.size()},
                   {"augment", cfg.augment},
                   {"test_fraction", cfg.test_fraction},
                   {"split_seed", cfg.split_seed}};
  return data;
}

inline FitOptions fit_options(const RunConfig& cfg) {
  FitOptions o;
  o.zero_intercept = cfg.zero_intercept;
  o.max_iter = cfg.max_iter;
  o.tol = cfg.tol;
  return o;
}

inline void write_manifest(const RunConfig& cfg, const std::string& command,
                           std::vector<fs::path> inputs) {
  write_json(output_file(cfg, "manifest_" + command + ".json"),
             run_manifest(command, to_json(cfg), inputs));
}

inline int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& diag) {
  const auto data = prepare(cfg, diag);
  const auto model = fit(data.split.train, data.feature_names, cfg.lambda, fit_options(cfg));
  const double train_acc = accuracy(model, data.split.train);
  const double test_acc = accuracy(model, data.split.test);

  fs::create_directories(cfg.output_dir);
  if (cfg.model_path().has_parent_path()) fs::create_directories(cfg.model_path().parent_path());
  save_model(cfg.model_path(), model);
  {
    auto report = open_output(output_file(cfg, "accuracy.csv"));
    csv::write_row(report, {"SET", "ACCURACY_PCT", "EXAMPLES"});
    csv::write_row(report, {"train", text::exact(train_acc), std::to_string(data.split.train.size())});
    csv::write_row(report, {"test", text::exact(test_acc), std::to_string(data.split.test.size())});
  }
  write_json(output_file(cfg, "dataset_manifest.json"), data.manifest);
  write_manifest(cfg, "train", {cfg.stats_csv, cfg.games_csv});

  out << "model: " << cfg.model_path().string() << " (" << model.feature_names().size()
      << " features, " << model.meta.iterations << " iterations)\n"
      << "train accuracy: " << text::fixed(train_acc, 2) << "%\n"
      << "test accuracy:  " << text::fixed(test_acc, 2) << "%\n";
  if (!model.meta.converged) {
    diag << "warning: optimizer stopped at gradient norm " << text::exact(model.meta.gradient_norm)
         << " (tol " << text::exact(cfg.tol) << ")\n";
    return kNonConvergence;
  }
  return kOk;
}

inline int cmd_importance(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const auto model = load_model(cfg.model_path());
  const auto ranked = feature_importance(model);
  write_importance(out, ranked);
  auto file = open_output(output_file(cfg, "importance.txt"));
  write_importance(file, ranked);
  write_manifest(cfg, "importance", {cfg.model_path()});
  return kOk;
}

inline int cmd_select(const RunConfig& cfg, std::ostream& out, std::ostream& diag) {
  const auto original = load_model(cfg.model_path());
  const auto data = prepare(cfg, diag);
  const auto& names = original.feature_names();
  const auto train = project(data.split.train, data.feature_names, names);
  const auto test = project(data.split.test, data.feature_names, names);

  const auto ranked = feature_importance(original);
  write_importance(out, ranked);
  {
    auto file = open_output(output_file(cfg, "importance.txt"));
    write_importance(file, ranked);
  }

  const auto selected = select_features(original, cfg.selection_threshold);
  if (selected.empty()) {
    throw ConfigError("no features selected at threshold " + text::exact(cfg.selection_threshold));
  }
  const auto reduced_train = project(train, names, selected);
  const auto reduced_test = project(test, names, selected);
  const auto reduced = fit(reduced_train, selected, original.lambda, original.options);

  const double orig_train = accuracy(original, train);
  const double orig_test = accuracy(original, test);
  const double red_train = accuracy(reduced, reduced_train);
  const double red_test = accuracy(reduced, reduced_test);

  save_model(output_file(cfg, "model_selected.txt"), reduced);
  {
    auto report = open_output(output_file(cfg, "selection_report.csv"));
    csv::write_row(report, {"MODEL", "FEATURES", "TRAIN_ACCURACY_PCT", "TEST_ACCURACY_PCT"});
    csv::write_row(report, {"original", std::to_string(names.size()), text::exact(orig_train),
                            text::exact(orig_test)});
    csv::write_row(report, {"selected", std::to_string(selected.size()), text::exact(red_train),
                            text::exact(red_test)});
  }
  write_json(output_file(cfg, "dataset_manifest.json"), data.manifest);
  write_manifest(cfg, "select", {cfg.stats_csv, cfg.games_csv, cfg.model_path()});

  out << "\nselected (|coef| >= " << text::exact(cfg.selection_threshold) << "):";
  for (const auto& s : selected) out << ' ' << s;
  out << "\nmodel                  train %   test %\n"
      << "original (" << names.size() << ")" << std::string(names.size() < 10 ? 11 : 10, ' ')
      << text::fixed(orig_train, 2) << "    " << text::fixed(orig_test, 2) << '\n'
      << "selected (" << selected.size() << ")" << std::string(selected.size() < 10 ? 11 : 10, ' ')
      << text::fixed(red_train, 2) << "    " << text::fixed(red_test, 2) << '\n';
  if (!reduced.meta.converged) {
    diag << "warning: refit stopped at gradient norm " << text::exact(reduced.meta.gradient_norm) << '\n';
    return kNonConvergence;
  }
  return kOk;
}

inline int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& diag) {
  const auto model = load_model(cfg.model_path());
  const auto teams = load_imputed_teams(cfg, diag);
  std::map<std::pair<int, std::string>, const TeamSeason*> index;
  for (const auto& t : teams) index.emplace(std::make_pair(t.season, t.team_name), &t);
  const TeamResolver resolve = [&](int season, const std::string& name) {
    const auto it = index.find({season, name});
    if (it == index.end()) {
      throw DataError("entrant " + name + " (" + std::to_string(season) + ") missing from stats");
    }
    return *it->second;
  };
  const auto bracket =
      load_bracket(fs::path(require_path(cfg.bracket_csv, "bracket_csv")), cfg.region_semis, resolve);
  std::optional<Bracket> actual;
  if (!cfg.actual_csv.empty()) actual = apply_results(bracket, fs::path(cfg.actual_csv));

  const auto report = monte_carlo(bracket, model, cfg.mc_iterations, cfg.mc_base_seed,
                                  actual ? &*actual : nullptr, cfg.threads);
  {
    auto f = open_output(output_file(cfg, "advancement.csv"));
    write_advancement_csv(f, bracket, report);
  }
  {
    auto f = open_output(output_file(cfg, "champions.csv"));
    write_champion_csv(f, bracket, report);
  }
  {
    auto f = open_output(output_file(cfg, "exemplar.txt"));
    write_bracket_text(f, report.exemplar, report.exemplar_seed);
  }
  {
    auto f = open_output(output_file(cfg, "exemplar_results.csv"));
    write_results(f, report.exemplar);
  }
  std::vector<SlotVerdict> verdicts;
  if (actual) verdicts = classify_matchups(report.exemplar, *actual);
  {
    auto f = open_output(output_file(cfg, "exemplar.dot"));
    write_bracket_dot(f, report.exemplar, verdicts);
  }
  std::vector<fs::path> inputs = {cfg.stats_csv, cfg.bracket_csv, cfg.model_path()};
  if (actual) {
    auto f = open_output(output_file(cfg, "metric_summary.csv"));
    write_metric_summary_csv(f, report);
    inputs.emplace_back(cfg.actual_csv);
  }
  write_manifest(cfg, "simulate", inputs);

  std::vector<std::size_t> order(bracket.entrants.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    return report.champion_freq[l] > report.champion_freq[r];
  });
  out << report.iterations << " iterations from seed " << report.base_seed << "\ntop champions:\n";
  for (std::size_t i = 0; i < std::min<std::size_t>(5, order.size()); ++i) {
    out << "  " << bracket.name(order[i]) << "  " << text::fixed(100.0 * report.champion_freq[order[i]], 1)
        << "%\n";
  }
  for (const auto& s : report.metric_summary) {
    out << s.label << ": accuracy " << text::fixed(s.accuracy_mean, 2) << " +/- "
        << text::fixed(s.accuracy_sd, 2) << " %, rho " << text::fixed(s.rho_mean, 4) << " +/- "
        << text::fixed(s.rho_sd, 4) << '\n';
  }
  return kOk;
}

inline int cmd_evaluate(const RunConfig& cfg, const std::string& sim_results, std::ostream& out,
                        std::ostream&) {
  const auto layout = load_bracket(fs::path(require_path(cfg.bracket_csv, "bracket_csv")),
                                   cfg.region_semis, name_only);
  const auto sim = apply_results(layout, fs::path(require_path(sim_results, "simulated results file")));
  const auto actual = apply_results(layout, fs::path(require_path(cfg.actual_csv, "actual_csv")));
  const auto verdicts = classify_matchups(sim, actual);
  std::vector<ScopeScore> scores;
  for (const auto& scope : default_scopes(sim)) scores.push_back(score(sim, actual, verdicts, scope));
  {
    auto f = open_output(output_file(cfg, "verdicts.csv"));
    write_verdicts_csv(f, sim, actual, verdicts);
  }
  {
    auto f = open_output(output_file(cfg, "metrics.txt"));
    write_metrics_kv(f, scores);
  }
  {
    auto f = open_output(output_file(cfg, "evaluation.dot"));
    write_bracket_dot(f, sim, verdicts);
  }
  write_manifest(cfg, "evaluate", {cfg.bracket_csv, sim_results, cfg.actual_csv});
  write_metrics_kv(out, scores);
  return kOk;
}

/// Parses arguments, runs one subcommand and maps errors to exit codes.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Logistic-regression bracket modeling: train, select, simulate, evaluate"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  app.add_option("-c,--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);

  // Flag overrides; applied on top of the config file.
  std::vector<std::function<void(RunConfig&)>> overrides;
  auto str_opt = [&](const std::string& flags, std::string RunConfig::*field, const std::string& help) {
    app.add_option_function<std::string>(
        flags, [&overrides, field](const std::string& v) {
          overrides.push_back([field, v](RunConfig& c) { c.*field = v; });
        },
        help);
  };
  str_opt("--stats", &RunConfig::stats_csv, "team statistics CSV");
  str_opt("--games", &RunConfig::games_csv, "games CSV (YEAR,TEAM_A,TEAM_B,WINNER)");
  str_opt("--bracket", &RunConfig::bracket_csv, "bracket CSV (YEAR,REGION,SEED,TEAM)");
  str_opt("--actual", &RunConfig::actual_csv, "actual results CSV (ROUND,REGION_OR_HALF,SLOT,WINNER)");
  str_opt("--model", &RunConfig::model_file, "model file");
  str_opt("-o,--out", &RunConfig::output_dir, "output directory");
  auto num_opt = [&](const std::string& flags, auto RunConfig::*field, const std::string& help) {
    using T = std::remove_reference_t<decltype(std::declval<RunConfig&>().*field)>;
    app.add_option_function<T>(
        flags, [&overrides, field](const T& v) {
          overrides.push_back([field, v](RunConfig& c) { c.*field = v; });
        },
        help);
  };
  num_opt("--lambda", &RunConfig::lambda, "L2 penalty strength");
  num_opt("--test-fraction", &RunConfig::test_fraction, "held-out fraction of games");
  num_opt("--split-seed", &RunConfig::split_seed, "train/test shuffle seed");
  num_opt("--max-iter", &RunConfig::max_iter, "optimizer iteration cap");
  num_opt("--tol", &RunConfig::tol, "gradient infinity-norm tolerance");
  num_opt("--threshold", &RunConfig::selection_threshold, "feature selection threshold on |coef|");
  num_opt("--iterations", &RunConfig::mc_iterations, "Monte Carlo iterations");
  num_opt("--base-seed", &RunConfig::mc_base_seed, "seed of the first Monte Carlo iteration");
  num_opt("--threads", &RunConfig::threads, "Monte Carlo worker threads");
  app.add_option_function<std::string>(
      "--semis",
      [&overrides](const std::string& v) {
        auto semis = parse_region_semis(v);
        overrides.push_back([semis](RunConfig& c) { c.region_semis = semis; });
      },
      "final-four region pairs, e.g. South-Midwest,East-West");
  app.add_flag_function(
      "--zero-intercept",
      [&overrides](std::int64_t) { overrides.push_back([](RunConfig& c) { c.zero_intercept = true; }); },
      "fit without an intercept");
  app.add_flag_function(
      "--no-augment",
      [&overrides](std::int64_t) { overrides.push_back([](RunConfig& c) { c.augment = false; }); },
      "do not add mirrored examples");
  app.add_option_function<std::string>(
      "--features",
      [&overrides](const std::string& v) {
        std::vector<std::string> names;
        std::stringstream ss(v);
        std::string item;
        while (std::getline(ss, item, ',')) names.push_back(csv::trim(item));
        overrides.push_back([names](RunConfig& c) { c.schema.feature_columns = names; });
      },
      "comma-separated feature columns");

  auto* train = app.add_subcommand("train", "fit the model and report train/test accuracy");
  auto* select = app.add_subcommand("select", "rank features, select by threshold and refit");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo simulation of a bracket");
  auto* evaluate = app.add_subcommand("evaluate", "score a simulated bracket against actual results");
  auto* importance = app.add_subcommand("importance", "print feature importance of a model");
  std::string sim_results;
  evaluate->add_option("--sim", sim_results, "simulated results CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    for (const auto& apply : overrides) apply(cfg);
    validate(cfg);
    if (*train) return cmd_train(cfg, out, err);
    if (*select) return cmd_select(cfg, out, err);
    if (*simulate) return cmd_simulate(cfg, out, err);
    if (*evaluate) return cmd_evaluate(cfg, sim_results, out, err);
    if (*importance) return cmd_importance(cfg, out, err);
    return kUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kNonConvergence;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  }
}

}  // namespace bracketlab::cli
