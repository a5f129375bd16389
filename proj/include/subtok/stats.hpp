#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "subtok/types.hpp"

namespace subtok {

inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("pearson: need two equal-length samples");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw std::invalid_argument("pearson: constant sample");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// 1-based ranks; tied values share the mean of their positions.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double spearman(std::span<const double> x, std::span<const double> y) {
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

// Uniform integer in [0, bound) by rejection, so permutations depend only on
// the 64-bit engine output.
inline std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  for (;;) {
    const std::uint64_t v = rng();
    if (v < limit) return v % bound;
  }
}

template <typename T>
void fisher_yates(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[bounded_draw(rng, i)]);
}

struct CorrelationResult {
  std::string metric_name;
  std::size_t n_languages = 0;
  double pearson_r_loghours = 0.0;
  double spearman_rho = 0.0;
  double p_value_permutation = 1.0;
  std::size_t n_permutations = 0;
  std::uint64_t seed = 0;
};

// Pearson r against log10(training hours), Spearman rho against hours, and a
// two-sided permutation p-value for rho: (1 + #{|rho_perm| >= |rho_obs|}) / (N + 1).
inline CorrelationResult correlate(const std::map<std::string, double>& metric_by_language,
                                   const LanguageManifest& manifest, std::size_t n_permutations,
                                   std::uint64_t seed, std::string metric_name = "metric") {
  if (metric_by_language.size() < 5) throw std::invalid_argument("correlate needs at least 5 languages");
  if (n_permutations < 1000) throw std::invalid_argument("correlate needs at least 1000 permutations");
  std::vector<double> metric, log_hours, hours;
  for (const auto& [code, value] : metric_by_language) {
    if (!std::isfinite(value)) throw std::invalid_argument("metric for '" + code + "' is not finite");
    const auto& info = manifest.at(code);
    metric.push_back(value);
    hours.push_back(info.training_hours);
    log_hours.push_back(std::log10(info.training_hours));
  }
  if (std::all_of(metric.begin(), metric.end(), [&](double v) { return v == metric.front(); }))
    throw std::invalid_argument("degenerate metric: constant across languages");

  CorrelationResult r;
  r.metric_name = std::move(metric_name);
  r.n_languages = metric.size();
  r.pearson_r_loghours = pearson(metric, log_hours);
  auto metric_ranks = average_ranks(metric);
  const auto hour_ranks = average_ranks(hours);
  r.spearman_rho = pearson(metric_ranks, hour_ranks);

  // Ties within floating-point noise of the observed statistic count as extreme.
  const double threshold = std::abs(r.spearman_rho) - 1e-12;
  std::mt19937_64 rng(seed);
  std::size_t extreme = 0;
  for (std::size_t p = 0; p < n_permutations; ++p) {
    fisher_yates(metric_ranks, rng);
    if (std::abs(pearson(metric_ranks, hour_ranks)) >= threshold) ++extreme;
  }
  r.n_permutations = n_permutations;
  r.seed = seed;
  r.p_value_permutation = static_cast<double>(1 + extreme) / static_cast<double>(n_permutations + 1);
  return r;
}

}  // namespace subtok
