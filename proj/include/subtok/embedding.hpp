#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "subtok/types.hpp"

namespace subtok {

enum class FrequencyScale { Relative, Counts };

// Rows are languages (sorted by code); columns are the token ids that occur
// in at least one row. Ids absent everywhere would be all-zero columns.
struct FrequencyMatrix {
  std::vector<std::string> languages;
  std::vector<TokenId> token_ids;
  Eigen::MatrixXd values;
};

using TracesByLanguage = std::map<std::string, std::vector<UtteranceTrace>>;

// Occurrences of each token among the top-k candidates of every step.
inline std::map<TokenId, std::size_t> candidate_counts(std::span<const UtteranceTrace> traces, std::size_t k,
                                                        const TokenFilter& filter = {}) {
  std::map<TokenId, std::size_t> counts;
  for (const auto& t : traces)
    for (const auto& step : t.steps) {
      const std::size_t n = std::min(k, step.candidates.size());
      for (std::size_t i = 0; i < n; ++i)
        if (filter.counts(step.candidates[i].token_id)) ++counts[step.candidates[i].token_id];
    }
  return counts;
}

inline FrequencyMatrix build_frequency_matrix(const TracesByLanguage& by_language, std::size_t k_pca,
                                              FrequencyScale scale = FrequencyScale::Relative,
                                              const TokenFilter& filter = {}) {
  if (by_language.size() < 2) throw std::invalid_argument("frequency matrix needs at least 2 languages");
  std::vector<std::map<TokenId, std::size_t>> rows;
  std::set<TokenId> vocabulary;
  FrequencyMatrix fm;
  for (const auto& [code, traces] : by_language) {
    auto counts = candidate_counts(traces, k_pca, filter);
    if (counts.empty()) throw std::invalid_argument("language '" + code + "' has no decoding steps");
    for (const auto& [id, c] : counts) vocabulary.insert(id);
    fm.languages.push_back(code);
    rows.push_back(std::move(counts));
  }
  fm.token_ids.assign(vocabulary.begin(), vocabulary.end());
  std::map<TokenId, Eigen::Index> column;
  for (std::size_t c = 0; c < fm.token_ids.size(); ++c) column[fm.token_ids[c]] = static_cast<Eigen::Index>(c);

  fm.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(fm.token_ids.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::size_t total = 0;
    for (const auto& [id, c] : rows[r]) total += c;
    for (const auto& [id, c] : rows[r]) {
      const double v = static_cast<double>(c);
      fm.values(static_cast<Eigen::Index>(r), column[id]) =
          scale == FrequencyScale::Relative ? v / static_cast<double>(total) : v;
    }
  }
  return fm;
}

struct StandardizedMatrix {
  Eigen::MatrixXd values;
  std::vector<std::size_t> kept_columns;
};

// Column z-scores with the sample (n-1) standard deviation. Constant columns
// are dropped.
inline StandardizedMatrix standardize(const Eigen::MatrixXd& m) {
  if (m.rows() < 2) throw std::invalid_argument("standardize needs at least 2 rows");
  const double n = static_cast<double>(m.rows());
  StandardizedMatrix out;
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    if (m.col(c).maxCoeff() != m.col(c).minCoeff()) out.kept_columns.push_back(static_cast<std::size_t>(c));
  if (out.kept_columns.empty()) throw std::invalid_argument("all columns have zero variance");

  out.values.resize(m.rows(), static_cast<Eigen::Index>(out.kept_columns.size()));
  for (std::size_t k = 0; k < out.kept_columns.size(); ++k) {
    const auto col = m.col(static_cast<Eigen::Index>(out.kept_columns[k]));
    const double mean = col.mean();
    const Eigen::VectorXd centered = col.array() - mean;
    const double sd = std::sqrt(centered.squaredNorm() / (n - 1.0));
    out.values.col(static_cast<Eigen::Index>(k)) = centered / sd;
  }
  return out;
}

enum class EmbeddingMethod { Pca, Tsne };

inline const char* to_string(EmbeddingMethod m) { return m == EmbeddingMethod::Pca ? "pca" : "tsne"; }

using Point2 = std::array<double, 2>;

struct EmbeddingResult {
  EmbeddingMethod method = EmbeddingMethod::Pca;
  std::vector<Point2> coordinates;
  std::optional<std::array<double, 2>> explained_variance_ratio;  // PCA
  Eigen::MatrixXd components;                                     // PCA: columns x 2, orthonormal
  std::optional<double> final_kl;                                 // t-SNE
  std::optional<double> kl_after_exaggeration;                    // t-SNE
  std::optional<double> effective_perplexity;                     // t-SNE
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

// Explained-variance ratio of every principal component of the column-centred
// matrix, largest first.
inline Eigen::VectorXd explained_variance_ratios(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd centered = m.rowwise() - m.colwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
  const Eigen::VectorXd s2 = svd.singularValues().array().square();
  const double total = s2.sum();
  if (!(total > 0.0)) throw std::invalid_argument("matrix has no variance");
  return s2 / total;
}

// Projection onto the first two principal directions, computed by SVD of the
// column-centred matrix. Each component's largest-magnitude loading is made
// positive; if several tie, the first one decides.
inline EmbeddingResult pca_2d(const Eigen::MatrixXd& m) {
  if (m.rows() < 3) throw std::invalid_argument("PCA needs at least 3 rows");
  if (m.cols() < 1) throw std::invalid_argument("PCA needs at least 1 column");
  const Eigen::MatrixXd centered = m.rowwise() - m.colwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double total = s.array().square().sum();
  if (!(total > 0.0)) throw std::invalid_argument("PCA of a matrix without variance");

  EmbeddingResult r;
  r.method = EmbeddingMethod::Pca;
  r.components = Eigen::MatrixXd::Zero(m.cols(), 2);
  const Eigen::Index available = std::min<Eigen::Index>(2, s.size());
  const double rank_tol = s(0) * static_cast<double>(std::max(m.rows(), m.cols())) *
                          std::numeric_limits<double>::epsilon();
  std::array<double, 2> ratio{0.0, 0.0};
  for (Eigen::Index k = 0; k < available; ++k) {
    ratio[static_cast<std::size_t>(k)] = s(k) * s(k) / total;
    if (s(k) <= rank_tol) {
      r.warnings.push_back("rank < " + std::to_string(k + 1) + ": component " + std::to_string(k + 1) + " zeroed");
      continue;
    }
    Eigen::VectorXd v = svd.matrixV().col(k);
    Eigen::Index arg = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
      if (std::abs(v(i)) > std::abs(v(arg))) arg = i;
    if (v(arg) < 0.0) v = -v;
    r.components.col(k) = v;
  }
  if (available < 2) r.warnings.push_back("rank < 2: component 2 zeroed");
  r.explained_variance_ratio = ratio;

  const Eigen::MatrixXd proj = centered * r.components;
  r.coordinates.resize(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) r.coordinates[static_cast<std::size_t>(i)] = {proj(i, 0), proj(i, 1)};
  return r;
}

}  // namespace subtok
