#pragma once

// L2-regularized logistic regression on standardized difference features.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bracketlab/dataio.hpp"
#include "bracketlab/errors.hpp"
#include "bracketlab/text.hpp"

namespace bracketlab {

/// Per-feature affine standardization (x - mean) / std.
struct Scaler {
  std::vector<double> means;
  std::vector<double> stds;
  std::vector<std::string> feature_names;

  std::size_t size() const { return feature_names.size(); }
};

/// Fits means and population standard deviations. With center = false the
/// means are fixed at zero and the scale is the root mean square, which keeps
/// the transform odd: transform(-x) == -transform(x) bit for bit.
inline Scaler fit_scaler(std::span<const PairExample> examples,
                         std::vector<std::string> feature_names, bool center = true) {
  if (examples.empty()) throw DataError("cannot fit a scaler to an empty example set");
  const auto p = feature_names.size();
  for (const auto& e : examples) {
    if (e.x.size() != p) {
      throw DataError("example has " + std::to_string(e.x.size()) + " features, expected " +
                      std::to_string(p));
    }
  }
  const auto m = static_cast<double>(examples.size());
  Scaler s;
  s.means.assign(p, 0.0);
  s.stds.assign(p, 0.0);
  if (center) {
    for (const auto& e : examples) {
      for (std::size_t j = 0; j < p; ++j) s.means[j] += e.x[j];
    }
    for (auto& mu : s.means) mu /= m;
  }
  for (const auto& e : examples) {
    for (std::size_t j = 0; j < p; ++j) {
      const double d = e.x[j] - s.means[j];
      s.stds[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < p; ++j) {
    s.stds[j] = std::sqrt(s.stds[j] / m);
    if (!(s.stds[j] > 0.0) || !std::isfinite(s.stds[j])) {
      throw DataError("feature '" + feature_names[j] + "' has zero variance");
    }
  }
  s.feature_names = std::move(feature_names);
  return s;
}

inline std::vector<double> transform(const Scaler& scaler, std::span<const double> x) {
  if (x.size() != scaler.size()) {
    throw DataError("transform: got " + std::to_string(x.size()) + " values for " +
                    std::to_string(scaler.size()) + " features");
  }
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - scaler.means[j]) / scaler.stds[j];
  return out;
}

inline std::vector<PairExample> standardize(const Scaler& scaler,
                                            std::span<const PairExample> examples) {
  std::vector<PairExample> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back({transform(scaler, e.x), e.y, e.group});
  return out;
}

/// 1 / (1 + e^-t), evaluated without overflow for either sign of t.
inline double logistic(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

inline constexpr double kProbabilityClamp = 1e-12;

struct Params {
  double intercept = 0.0;
  std::vector<double> coefficients;
};

namespace detail {

inline double linear(const Params& params, std::span<const double> z) {
  double eta = params.intercept;
  for (std::size_t j = 0; j < z.size(); ++j) eta += params.coefficients[j] * z[j];
  return eta;
}

inline double penalty(const Params& params, double lambda) {
  double sq = 0.0;
  for (double c : params.coefficients) sq += c * c;
  return lambda * sq;
}

inline void check_problem(const Params& params, std::span<const PairExample> examples,
                          double lambda) {
  if (examples.empty()) throw DataError("cost is undefined on an empty example set");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be nonnegative");
  for (const auto& e : examples) {
    if (e.x.size() != params.coefficients.size()) {
      throw DataError("example dimension does not match the parameter vector");
    }
  }
}

}  // namespace detail

/// Mean cross-entropy plus lambda * sum of squared coefficients. The intercept
/// is not penalized; h is clamped to [1e-12, 1 - 1e-12] before the logs.
inline double cost(const Params& params, std::span<const PairExample> examples, double lambda) {
  detail::check_problem(params, examples, lambda);
  double total = 0.0;
  for (const auto& e : examples) {
    double h = logistic(detail::linear(params, e.x));
    h = std::clamp(h, kProbabilityClamp, 1.0 - kProbabilityClamp);
    total += e.y ? -std::log(h) : -std::log(1.0 - h);
  }
  return total / static_cast<double>(examples.size()) + detail::penalty(params, lambda);
}

/// Analytic gradient of `cost`, in the same layout as Params.
inline Params gradient(const Params& params, std::span<const PairExample> examples,
                       double lambda) {
  detail::check_problem(params, examples, lambda);
  const auto p = params.coefficients.size();
  Params g{0.0, std::vector<double>(p, 0.0)};
  for (const auto& e : examples) {
    const double r = logistic(detail::linear(params, e.x)) - e.y;
    g.intercept += r;
    for (std::size_t j = 0; j < p; ++j) g.coefficients[j] += r * e.x[j];
  }
  const auto m = static_cast<double>(examples.size());
  g.intercept /= m;
  for (std::size_t j = 0; j < p; ++j) {
    g.coefficients[j] = g.coefficients[j] / m + 2.0 * lambda * params.coefficients[j];
  }
  return g;
}

struct FitOptions {
  bool zero_intercept = false;
  int max_iter = 10000;
  double tol = 1e-6;
  // Fixed step size; when unset, backtracking (Armijo) line search is used.
  std::optional<double> learning_rate;
};

struct FitMeta {
  int iterations = 0;
  double final_cost = 0.0;
  double gradient_norm = 0.0;  // infinity norm at the returned parameters
  bool converged = false;
};

struct FitModel {
  Params params;
  Scaler scaler;
  double lambda = 0.0;
  FitOptions options;
  FitMeta meta;

  const std::vector<double>& coefficients() const { return params.coefficients; }
  double intercept() const { return params.intercept; }
  const std::vector<std::string>& feature_names() const { return scaler.feature_names; }
};

namespace detail {

inline double inf_norm(const Params& g) {
  double n = std::abs(g.intercept);
  for (double c : g.coefficients) n = std::max(n, std::abs(c));
  return n;
}

inline double sq_norm(const Params& g) {
  double n = g.intercept * g.intercept;
  for (double c : g.coefficients) n += c * c;
  return n;
}

inline Params step(const Params& from, const Params& dir, double t) {
  Params out = from;
  out.intercept -= t * dir.intercept;
  for (std::size_t j = 0; j < out.coefficients.size(); ++j) out.coefficients[j] -= t * dir.coefficients[j];
  return out;
}

}  // namespace detail

/// Full-batch gradient descent from zero on the standardized training set.
/// Non-convergence within max_iter is reported through meta.converged, not
/// thrown.
inline FitModel fit(std::span<const PairExample> train, std::vector<std::string> feature_names,
                    double lambda, const FitOptions& options = {}) {
  if (train.empty()) throw DataError("cannot fit on an empty training set");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be a finite nonnegative number");
  if (options.max_iter < 0 || !(options.tol > 0.0)) throw ConfigError("invalid optimizer settings");
  if (options.learning_rate && !(*options.learning_rate > 0.0)) {
    throw ConfigError("learning rate must be positive");
  }
  const bool has_pos = std::any_of(train.begin(), train.end(), [](const auto& e) { return e.y == 1; });
  const bool has_neg = std::any_of(train.begin(), train.end(), [](const auto& e) { return e.y == 0; });
  if (!(has_pos && has_neg) && !options.zero_intercept) {
    throw DataError("training data contains a single class; enable mirroring or zero_intercept");
  }

  FitModel model;
  model.lambda = lambda;
  model.options = options;
  model.scaler = fit_scaler(train, std::move(feature_names), !options.zero_intercept);
  const auto z = standardize(model.scaler, train);
  const auto p = model.scaler.size();

  Params theta{0.0, std::vector<double>(p, 0.0)};
  double f = cost(theta, z, lambda);
  double t = 1.0;
  constexpr double kArmijo = 1e-4;
  constexpr double kMinStep = 1e-16;
  int iter = 0;
  bool converged = false;
  Params g;
  for (;; ++iter) {
    g = gradient(theta, z, lambda);
    if (options.zero_intercept) g.intercept = 0.0;
    if (detail::inf_norm(g) <= options.tol) {
      converged = true;
      break;
    }
    if (iter >= options.max_iter) break;
    if (options.learning_rate) {
      theta = detail::step(theta, g, *options.learning_rate);
      f = cost(theta, z, lambda);
      continue;
    }
    const double g2 = detail::sq_norm(g);
    t = std::min(t * 2.0, 1e3);
    Params trial = detail::step(theta, g, t);
    double ft = cost(trial, z, lambda);
    while (ft > f - kArmijo * t * g2 && t > kMinStep) {
      t *= 0.5;
      trial = detail::step(theta, g, t);
      ft = cost(trial, z, lambda);
    }
    if (t <= kMinStep) break;  // no descent possible at double precision
    theta = std::move(trial);
    f = ft;
  }
  model.params = std::move(theta);
  model.meta.iterations = iter;
  model.meta.final_cost = f;
  model.meta.gradient_norm = detail::inf_norm(g);
  model.meta.converged = converged;
  return model;
}

/// P(team_a wins) for a raw (unstandardized) difference vector.
inline double predict_diff(const FitModel& model, std::span<const double> raw_diff) {
  const auto z = transform(model.scaler, raw_diff);
  return logistic(detail::linear(model.params, z));
}

/// Raw difference a - b over the model's features, looked up by name.
inline std::vector<double> model_difference(const FitModel& model, const TeamSeason& a,
                                            const TeamSeason& b) {
  const auto& names = model.feature_names();
  std::vector<double> diff(names.size());
  auto value = [&](const TeamSeason& t, std::size_t j) {
    const Feature* f = j < t.features.size() && t.features[j].name == names[j]
                           ? &t.features[j]
                           : t.find(names[j]);
    if (!f) throw DataError(t.team_name + ": unknown feature '" + names[j] + "'");
    if (!f->value) throw DataError(t.team_name + ": missing value for '" + names[j] + "'");
    return *f->value;
  };
  for (std::size_t j = 0; j < names.size(); ++j) diff[j] = value(a, j) - value(b, j);
  return diff;
}

inline double predict_proba(const FitModel& model, const TeamSeason& a, const TeamSeason& b) {
  return predict_diff(model, model_difference(model, a, b));
}

/// Percentage of examples whose thresholded prediction (p >= 0.5 -> 1) equals y.
inline double accuracy(const FitModel& model, std::span<const PairExample> examples) {
  if (examples.empty()) throw DataError("accuracy of an empty example set");
  std::size_t correct = 0;
  for (const auto& e : examples) {
    const int predicted = predict_diff(model, e.x) >= 0.5 ? 1 : 0;
    if (predicted == e.y) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(examples.size());
}

struct Importance {
  std::string feature;
  double magnitude = 0.0;
};

/// Features by descending |standardized coefficient|, ties by name.
inline std::vector<Importance> feature_importance(const FitModel& model) {
  std::vector<Importance> out;
  for (std::size_t j = 0; j < model.scaler.size(); ++j) {
    out.push_back({model.scaler.feature_names[j], std::abs(model.params.coefficients[j])});
  }
  std::sort(out.begin(), out.end(), [](const Importance& l, const Importance& r) {
    if (l.magnitude != r.magnitude) return l.magnitude > r.magnitude;
    return l.feature < r.feature;
  });
  return out;
}

/// Features with |coefficient| >= threshold, in model order.
inline std::vector<std::string> select_features(const FitModel& model, double threshold) {
  if (!(threshold >= 0.0)) throw ConfigError("selection threshold must be nonnegative");
  std::vector<std::string> out;
  for (std::size_t j = 0; j < model.scaler.size(); ++j) {
    if (std::abs(model.params.coefficients[j]) >= threshold) out.push_back(model.scaler.feature_names[j]);
  }
  return out;
}

inline void write_importance(std::ostream& os, std::span<const Importance> ranked) {
  std::size_t width = 7;
  for (const auto& r : ranked) width = std::max(width, r.feature.size());
  os << "feature" << std::string(width - 7 + 2, ' ') << "|coef|\n";
  for (const auto& r : ranked) {
    os << r.feature << std::string(width - r.feature.size() + 2, ' ') << text::fixed(r.magnitude, 6)
       << '\n';
  }
}

// Model file. Line-oriented, tab-separated; every real is written in shortest
// round-trip decimal so a load restores the exact bits.

inline constexpr std::string_view kModelMagic = "bracketlab-model";
inline constexpr int kModelVersion = 1;

inline void save_model(std::ostream& os, const FitModel& m) {
  using text::exact;
  os << kModelMagic << '\t' << kModelVersion << '\n';
  os << "lambda\t" << exact(m.lambda) << '\n';
  os << "zero_intercept\t" << (m.options.zero_intercept ? 1 : 0) << '\n';
  os << "max_iter\t" << m.options.max_iter << '\n';
  os << "tol\t" << exact(m.options.tol) << '\n';
  os << "learning_rate\t"
     << (m.options.learning_rate ? exact(*m.options.learning_rate) : std::string("line_search")) << '\n';
  os << "iterations\t" << m.meta.iterations << '\n';
  os << "final_cost\t" << exact(m.meta.final_cost) << '\n';
  os << "gradient_norm\t" << exact(m.meta.gradient_norm) << '\n';
  os << "converged\t" << (m.meta.converged ? 1 : 0) << '\n';
  os << "intercept\t" << exact(m.params.intercept) << '\n';
  os << "features\t" << m.scaler.size() << '\n';
  for (std::size_t j = 0; j < m.scaler.size(); ++j) {
    os << "feature\t" << m.scaler.feature_names[j] << '\t' << exact(m.scaler.means[j]) << '\t'
       << exact(m.scaler.stds[j]) << '\t' << exact(m.params.coefficients[j]) << '\n';
  }
}

inline FitModel load_model(std::istream& is, const std::string& source = "model") {
  auto fail = [&](std::size_t line, const std::string& what) -> DataError {
    return DataError(source + ":" + std::to_string(line) + ": " + what);
  };
  std::vector<std::vector<std::string>> lines;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    lines.push_back(std::move(fields));
  }
  if (lines.empty() || lines[0].size() != 2 || lines[0][0] != kModelMagic) {
    throw fail(1, "not a bracketlab model file");
  }
  if (lines[0][1] != std::to_string(kModelVersion)) throw fail(1, "unsupported model version " + lines[0][1]);

  FitModel m;
  std::optional<std::size_t> declared;
  auto real = [&](const std::vector<std::string>& f, std::size_t i, std::size_t ln) {
    if (f.size() <= i) throw fail(ln, "missing value");
    const auto v = text::parse_double(f[i]);
    if (!v) throw fail(ln, "bad number '" + f[i] + "'");
    return *v;
  };
  auto integer = [&](const std::vector<std::string>& f, std::size_t ln) {
    if (f.size() != 2) throw fail(ln, "missing value");
    const auto v = text::parse_int(f[1]);
    if (!v) throw fail(ln, "bad integer '" + f[1] + "'");
    return *v;
  };
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& f = lines[i];
    const auto ln = i + 1;
    const auto& key = f[0];
    if (key.empty()) continue;
    if (key == "lambda") m.lambda = real(f, 1, ln);
    else if (key == "zero_intercept") m.options.zero_intercept = integer(f, ln) != 0;
    else if (key == "max_iter") m.options.max_iter = static_cast<int>(integer(f, ln));
    else if (key == "tol") m.options.tol = real(f, 1, ln);
    else if (key == "learning_rate") {
      if (f.size() == 2 && f[1] == "line_search") m.options.learning_rate.reset();
      else m.options.learning_rate = real(f, 1, ln);
    } else if (key == "iterations") m.meta.iterations = static_cast<int>(integer(f, ln));
    else if (key == "final_cost") m.meta.final_cost = real(f, 1, ln);
    else if (key == "gradient_norm") m.meta.gradient_norm = real(f, 1, ln);
    else if (key == "converged") m.meta.converged = integer(f, ln) != 0;
    else if (key == "intercept") m.params.intercept = real(f, 1, ln);
    else if (key == "features") declared = static_cast<std::size_t>(integer(f, ln));
    else if (key == "feature") {
      if (f.size() != 5) throw fail(ln, "feature line needs name, mean, std, coefficient");
      m.scaler.feature_names.push_back(f[1]);
      m.scaler.means.push_back(real(f, 2, ln));
      m.scaler.stds.push_back(real(f, 3, ln));
      m.params.coefficients.push_back(real(f, 4, ln));
    } else {
      throw fail(ln, "unknown key '" + key + "'");
    }
  }
  if (!declared || *declared != m.scaler.size()) {
    throw DataError(source + ": feature count does not match the 'features' line");
  }
  if (m.scaler.size() == 0) throw DataError(source + ": model has no features");
  for (double s : m.scaler.stds) {
    if (!(s > 0.0)) throw DataError(source + ": non-positive feature scale");
  }
  if (!(m.lambda >= 0.0)) throw DataError(source + ": negative lambda");
  return m;
}

inline void save_model(const std::filesystem::path& path, const FitModel& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file: " + path.string());
  save_model(out, m);
}

inline FitModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + path.string());
  return load_model(in, path.string());
}

}  // namespace bracketlab
