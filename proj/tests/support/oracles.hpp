#pragma once

// Naive reference implementations used as test oracles. None of them call the
// library code they check.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "subtok/types.hpp"

namespace oracle {

using subtok::TokenId;

// Edit distance by plain recursion on prefixes, no memo. Only for tiny inputs.
template <typename T>
std::size_t brute_distance(const std::vector<T>& a, std::size_t i, const std::vector<T>& b, std::size_t j) {
  if (i == 0) return j;
  if (j == 0) return i;
  const std::size_t sub = brute_distance(a, i - 1, b, j - 1) + (a[i - 1] == b[j - 1] ? 0 : 1);
  const std::size_t del = brute_distance(a, i - 1, b, j) + 1;
  const std::size_t ins = brute_distance(a, i, b, j - 1) + 1;
  return std::min({sub, del, ins});
}

template <typename T>
std::size_t brute_distance(const std::vector<T>& a, const std::vector<T>& b) {
  return brute_distance(a, a.size(), b, b.size());
}

// Memoized suffix distance with a front-to-back walk that prefers
// equal, replace, delete, insert. Returns, for each reference index, the
// hypothesis index it is paired with (-1 when deleted).
template <typename T>
std::vector<long> pairing(const std::vector<T>& ref, const std::vector<T>& hyp) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  std::function<std::size_t(std::size_t, std::size_t)> d = [&](std::size_t i, std::size_t j) -> std::size_t {
    if (i == ref.size()) return hyp.size() - j;
    if (j == hyp.size()) return ref.size() - i;
    auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    const std::size_t v = std::min({d(i + 1, j + 1) + (ref[i] == hyp[j] ? 0 : 1), d(i + 1, j) + 1, d(i, j + 1) + 1});
    memo[key] = v;
    return v;
  };
  std::vector<long> out(ref.size(), -1);
  std::size_t i = 0, j = 0;
  while (i < ref.size() || j < hyp.size()) {
    const std::size_t here = d(i, j);
    if (i < ref.size() && j < hyp.size() && ref[i] == hyp[j] && here == d(i + 1, j + 1)) {
      out[i++] = static_cast<long>(j++);
    } else if (i < ref.size() && j < hyp.size() && here == d(i + 1, j + 1) + 1) {
      out[i++] = static_cast<long>(j++);
    } else if (i < ref.size() && here == d(i + 1, j) + 1) {
      ++i;
    } else {
      ++j;
    }
  }
  return out;
}

inline std::size_t rank_of(const subtok::DecodingStep& step, TokenId id, std::size_t k_cand) {
  for (std::size_t i = 0; i < step.candidates.size() && i < k_cand; ++i)
    if (step.candidates[i].token_id == id) return i + 1;
  return k_cand + 1;
}

inline double avg_rank(const std::vector<subtok::UtteranceTrace>& traces, std::size_t k_cand) {
  double sum = 0;
  double n = 0;
  for (const auto& t : traces) {
    const auto pair = pairing(t.reference_tokens, t.hypothesis_tokens);
    for (std::size_t k = 0; k < pair.size(); ++k) {
      sum += pair[k] < 0 ? double(k_cand + 1) : double(rank_of(t.steps[std::size_t(pair[k])], t.reference_tokens[k], k_cand));
      n += 1;
    }
  }
  return sum / n;
}

inline double confidence(const std::vector<subtok::UtteranceTrace>& traces) {
  double sum = 0;
  double n = 0;
  for (const auto& t : traces)
    for (const auto& s : t.steps) {
      sum += std::exp(s.chosen_log_prob);
      n += 1;
    }
  return sum / n;
}

inline double entropy(const subtok::DecodingStep& s, std::size_t k) {
  const std::size_t n = std::min(k, s.candidates.size());
  double z = 0;
  for (std::size_t i = 0; i < n; ++i) z += std::exp(s.candidates[i].log_prob);
  double h = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::exp(s.candidates[i].log_prob) / z;
    if (p > 0) h += -p * std::log(p) / std::log(2.0);
  }
  return h;
}

inline double mean_entropy(const std::vector<subtok::UtteranceTrace>& traces, std::size_t k) {
  double sum = 0;
  double n = 0;
  for (const auto& t : traces)
    for (const auto& s : t.steps) {
      sum += entropy(s, k);
      n += 1;
    }
  return sum / n;
}

// Returns NaN when no non-top-1 candidate exists.
inline double ttr(const std::vector<subtok::UtteranceTrace>& traces, std::size_t k) {
  std::vector<TokenId> pooled;
  for (const auto& t : traces)
    for (const auto& s : t.steps)
      for (std::size_t i = 1; i < s.candidates.size() && i < k; ++i) pooled.push_back(s.candidates[i].token_id);
  if (pooled.empty()) return std::nan("");
  std::set<TokenId> types(pooled.begin(), pooled.end());
  return double(types.size()) / double(pooled.size());
}

// ASCII-only normalization: lowercase, punctuation removed, whitespace split.
inline std::vector<std::string> ascii_words(const std::string& s) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) words.push_back(cur);
      cur.clear();
    } else if (!std::ispunct(static_cast<unsigned char>(c))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  if (!cur.empty()) words.push_back(cur);
  return words;
}

inline double pooled_wer(const std::vector<subtok::UtteranceTrace>& traces) {
  double errors = 0;
  double words = 0;
  for (const auto& t : traces) {
    const auto r = ascii_words(t.reference_text);
    const auto h = ascii_words(*t.hypothesis_text);
    std::vector<std::vector<std::size_t>> d(r.size() + 1, std::vector<std::size_t>(h.size() + 1));
    for (std::size_t i = 0; i <= r.size(); ++i)
      for (std::size_t j = 0; j <= h.size(); ++j)
        d[i][j] = i == 0 ? j : j == 0 ? i
                 : std::min({d[i - 1][j - 1] + (r[i - 1] == h[j - 1] ? 0u : 1u), d[i - 1][j] + 1, d[i][j - 1] + 1});
    errors += double(d[r.size()][h.size()]);
    words += double(r.size());
  }
  return errors / words;
}

// Cyclic Jacobi eigenvalue iteration for a symmetric matrix stored row-major.
inline std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> a,
                                              std::vector<std::vector<double>>* vectors = nullptr) {
  const std::size_t n = a.size();
  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a[x][x] > a[y][y]; });
  std::vector<double> values;
  for (std::size_t i : order) values.push_back(a[i][i]);
  if (vectors) {
    vectors->assign(n, std::vector<double>(n));
    for (std::size_t c = 0; c < n; ++c)
      for (std::size_t r = 0; r < n; ++r) (*vectors)[r][c] = v[r][order[c]];
  }
  return values;
}

// Sample covariance of the columns of a row-major matrix.
inline std::vector<std::vector<double>> covariance(const std::vector<std::vector<double>>& x) {
  const std::size_t n = x.size(), m = x[0].size();
  std::vector<double> mean(m, 0.0);
  for (const auto& row : x)
    for (std::size_t c = 0; c < m; ++c) mean[c] += row[c] / double(n);
  std::vector<std::vector<double>> cov(m, std::vector<double>(m, 0.0));
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a; b < m; ++b) {
      double s = 0;
      for (const auto& row : x) s += (row[a] - mean[a]) * (row[b] - mean[b]);
      cov[a][b] = cov[b][a] = s / double(n - 1);
    }
  return cov;
}

// Small random traces: up to 5 utterances, up to 8 steps, up to K candidates.
// Token ids are drawn from a tiny alphabet so alignments contain every kind
// of edit. Texts are ASCII so the ASCII normalizer above agrees with ICU.
inline std::vector<subtok::UtteranceTrace> random_language(std::mt19937_64& rng, std::size_t max_k = 5,
                                                           const std::string& code = "xx") {
  auto uni = [&](std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
  };
  std::uniform_real_distribution<double> lp(-9.0, 0.0);
  const std::vector<TokenId> alphabet{3, 5, 7, 11, 13, 17, 50257, 50258};
  const std::vector<std::string> lexicon{"alpha", "Beta", "gamma,", "delta.", "eps", "zeta!", "Eta", "theta"};
  const std::size_t k = uni(1, max_k);
  std::vector<subtok::UtteranceTrace> out;
  const std::size_t n_utt = uni(1, 5);
  for (std::size_t u = 0; u < n_utt; ++u) {
    subtok::UtteranceTrace t;
    t.utterance_id = code + "-" + std::to_string(u);
    t.language = code;
    t.audio_duration_sec = 0.5 + double(uni(0, 100)) / 10.0;
    const std::size_t n_ref = uni(u == 0 ? 1 : 0, 8);
    for (std::size_t i = 0; i < n_ref; ++i) t.reference_tokens.push_back(alphabet[uni(0, alphabet.size() - 1)]);
    const std::size_t n_steps = uni(u == 0 ? 1 : 0, 8);
    for (std::size_t s = 0; s < n_steps; ++s) {
      subtok::DecodingStep step;
      const std::size_t n_cand = uni(1, k);
      std::set<TokenId> used;
      while (step.candidates.size() < n_cand) {
        const TokenId id = uni(0, 4) == 0 ? alphabet[uni(0, alphabet.size() - 1)] : TokenId(uni(20, 40));
        if (!used.insert(id).second) continue;
        double v = lp(rng);
        if (uni(0, 9) == 0) v = 0.0;
        step.candidates.push_back({id, v});
      }
      subtok::canonicalize(step);
      if (uni(0, 9) == 0) {
        TokenId outside = TokenId(uni(41, 49));
        step.chosen_id = outside;
        step.chosen_log_prob = lp(rng);
      } else {
        const auto& c = step.candidates[uni(0, step.candidates.size() - 1)];
        step.chosen_id = c.token_id;
        step.chosen_log_prob = c.log_prob;
      }
      t.hypothesis_tokens.push_back(step.chosen_id);
      t.steps.push_back(step);
    }
    std::string ref, hyp;
    const std::size_t n_words = uni(1, 6);
    for (std::size_t w = 0; w < n_words; ++w) ref += (w ? " " : "") + lexicon[uni(0, lexicon.size() - 1)];
    const std::size_t n_hyp_words = uni(0, 6);
    for (std::size_t w = 0; w < n_hyp_words; ++w) hyp += (w ? "  " : "") + lexicon[uni(0, lexicon.size() - 1)];
    t.reference_text = ref;
    t.hypothesis_text = hyp;
    out.push_back(std::move(t));
  }
  return out;
}

inline std::filesystem::path data_dir() { return SUBTOK_DATA_DIR; }

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("subtok-test-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace oracle
