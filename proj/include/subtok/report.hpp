#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "subtok/csv.hpp"
#include "subtok/embedding.hpp"
#include "subtok/metrics.hpp"
#include "subtok/stats.hpp"
#include "subtok/types.hpp"

namespace subtok {

inline constexpr const char* kMetricsHeader =
    "language,training_hours,tier,wer,avg_rank,avg_confidence,avg_entropy_bits,diversity_ttr,"
    "n_utterances,n_hyp_tokens,n_ref_tokens";

// Metric columns of metrics.csv that are correlated against training hours.
inline const std::vector<std::string>& correlated_metric_names() {
  static const std::vector<std::string> names{"wer", "avg_rank", "avg_confidence", "avg_entropy_bits",
                                              "diversity_ttr"};
  return names;
}

inline double metric_value(const LanguageMetrics& m, const std::string& name) {
  if (name == "wer") return m.wer;
  if (name == "avg_rank") return m.avg_rank;
  if (name == "avg_confidence") return m.avg_confidence;
  if (name == "avg_entropy_bits") return m.avg_entropy_bits;
  if (name == "diversity_ttr") return m.diversity_ttr;
  throw std::invalid_argument("unknown metric '" + name + "'");
}

// Rows in the given order; hours and tier are empty for languages missing
// from the manifest.
inline void write_metrics_csv(std::ostream& os, const std::vector<LanguageMetrics>& rows,
                              const LanguageManifest& manifest) {
  os << kMetricsHeader << '\n';
  for (const auto& m : rows) {
    const auto* info = manifest.find(m.language);
    os << csv_escape(m.language) << ',' << (info ? format_number(info->training_hours) : "") << ','
       << (info ? to_string(info->tier) : "") << ',' << format_number(m.wer) << ',' << format_number(m.avg_rank)
       << ',' << format_number(m.avg_confidence) << ',' << format_number(m.avg_entropy_bits) << ','
       << format_number(m.diversity_ttr) << ',' << m.n_utterances << ',' << m.n_hyp_tokens << ','
       << m.n_ref_tokens << '\n';
  }
}

inline double parse_number(const std::string& text, const std::string& what) {
  if (text == "nan" || text == "NaN" || text.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size()) throw std::invalid_argument(what + ": '" + text + "' is not a number");
  return v;
}

// Reads metric columns back from a metrics CSV: metric name -> language -> value.
inline std::map<std::string, std::map<std::string, double>> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open metrics file " + path.string());
  std::string line;
  std::vector<std::string> header;
  std::map<std::string, std::map<std::string, double>> out;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_csv_line(line);
    if (header.empty()) {
      header = std::move(fields);
      if (header.empty() || header[0] != "language")
        throw std::invalid_argument(path.string() + ": first column must be 'language'");
      continue;
    }
    if (fields.size() != header.size())
      throw std::invalid_argument(path.string() + " line " + std::to_string(lineno) + ": wrong field count");
    for (std::size_t c = 1; c < header.size(); ++c) {
      const auto& name = header[c];
      if (std::find(correlated_metric_names().begin(), correlated_metric_names().end(), name) ==
          correlated_metric_names().end())
        continue;
      out[name][fields[0]] =
          parse_number(trim(fields[c]), path.string() + " line " + std::to_string(lineno) + " column " + name);
    }
  }
  return out;
}

inline constexpr const char* kStatsHeader =
    "metric,n_languages,pearson_r_loghours,spearman_rho,p_value_permutation,n_permutations,seed";

inline void write_stats_row(std::ostream& os, const CorrelationResult& r) {
  os << r.metric_name << ',' << r.n_languages << ',' << format_number(r.pearson_r_loghours) << ','
     << format_number(r.spearman_rho) << ',' << format_number(r.p_value_permutation) << ',' << r.n_permutations
     << ',' << r.seed << '\n';
}

// Correlates every metric column and writes stats CSV rows. Metrics that
// cannot be tested are recorded as comment lines.
inline void write_stats_csv(std::ostream& os, const std::map<std::string, std::map<std::string, double>>& metrics,
                            const LanguageManifest& manifest, std::size_t n_permutations, std::uint64_t seed) {
  os << kStatsHeader << '\n';
  for (const auto& name : correlated_metric_names()) {
    auto it = metrics.find(name);
    if (it == metrics.end()) continue;
    std::map<std::string, double> values;
    for (const auto& [code, v] : it->second)
      if (std::isfinite(v) && manifest.find(code)) values[code] = v;
    try {
      write_stats_row(os, correlate(values, manifest, n_permutations, seed, name));
    } catch (const std::invalid_argument& e) {
      os << "# skipped " << name << ": " << e.what() << '\n';
    }
  }
}

struct EmbeddingCsvInfo {
  std::size_t k_pca = 10;
  FrequencyScale scale = FrequencyScale::Relative;
  std::size_t n_columns = 0;
  double perplexity = 20.0;
};

inline void write_embedding_csv(std::ostream& os, const std::vector<std::string>& languages,
                                const EmbeddingResult& r, const EmbeddingCsvInfo& info) {
  os << "# method=" << to_string(r.method) << '\n';
  os << "# k_pca=" << info.k_pca << '\n';
  os << "# scale=" << (info.scale == FrequencyScale::Relative ? "relative" : "counts") << '\n';
  os << "# standardized_columns=" << info.n_columns << '\n';
  if (r.explained_variance_ratio)
    os << "# explained_variance_ratio=" << format_number((*r.explained_variance_ratio)[0]) << ','
       << format_number((*r.explained_variance_ratio)[1]) << '\n';
  if (r.method == EmbeddingMethod::Tsne) {
    os << "# perplexity=" << format_number(info.perplexity) << '\n';
    if (r.effective_perplexity) os << "# effective_perplexity=" << format_number(*r.effective_perplexity) << '\n';
    os << "# seed=" << r.seed << '\n';
    if (r.kl_after_exaggeration) os << "# kl_after_exaggeration=" << format_number(*r.kl_after_exaggeration) << '\n';
    if (r.final_kl) os << "# final_kl=" << format_number(*r.final_kl) << '\n';
  }
  for (const auto& w : r.warnings) os << "# warning: " << w << '\n';
  os << "language,dim1,dim2\n";
  for (std::size_t i = 0; i < languages.size(); ++i)
    os << csv_escape(languages[i]) << ',' << format_number(r.coordinates[i][0]) << ','
       << format_number(r.coordinates[i][1]) << '\n';
}

inline void write_coverage_csv(std::ostream& os, const std::vector<CoveragePoint>& points) {
  os << "cumulative_sec,unique_tokens,fraction_of_final\n";
  for (const auto& p : points)
    os << format_number(p.cumulative_sec) << ',' << p.unique_tokens << ',' << format_number(p.fraction_of_final)
       << '\n';
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace subtok
