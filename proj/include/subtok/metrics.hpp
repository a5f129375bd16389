#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "subtok/alignment.hpp"
#include "subtok/text.hpp"
#include "subtok/types.hpp"
#include "subtok/vocab.hpp"

namespace subtok {

// Pooled mean rank over every counted reference token of every alignment.
inline double average_rank(std::span<const AlignmentResult> alignments, const TokenFilter& filter = {}) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& a : alignments) {
    for (const auto& r : a.ranked) {
      if (!filter.counts(r.token_id)) continue;
      sum += static_cast<double>(r.rank);
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("no reference tokens");
  return sum / static_cast<double>(count);
}

inline double chosen_probability(const DecodingStep& step) { return std::exp(step.chosen_log_prob); }

// Mean probability of the chosen token over all counted decoding steps.
inline double confidence(std::span<const UtteranceTrace> traces, const TokenFilter& filter = {}) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& t : traces) {
    for (const auto& step : t.steps) {
      if (!filter.counts(step.chosen_id)) continue;
      sum += chosen_probability(step);
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("no decoding steps");
  return sum / static_cast<double>(count);
}

// Shannon entropy in bits of the top-k candidates after renormalization.
// Steps with fewer than k candidates use what they have.
inline double entropy_bits(const DecodingStep& step, std::size_t k) {
  const std::size_t n = std::min(k, step.candidates.size());
  if (n == 0) throw std::invalid_argument("entropy of a step without candidates");
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) top = std::max(top, step.candidates[i].log_prob);
  std::vector<double> p(n);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = std::exp(step.candidates[i].log_prob - top);
    z += p[i];
  }
  double h = 0.0;
  for (double w : p) {
    const double q = w / z;
    if (q > 0.0) h -= q * std::log2(q);
  }
  return h > 0.0 ? h : 0.0;
}

inline double mean_entropy_bits(std::span<const UtteranceTrace> traces, std::size_t k,
                                const TokenFilter& filter = {}) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& t : traces) {
    for (const auto& step : t.steps) {
      if (!filter.counts(step.chosen_id)) continue;
      sum += entropy_bits(step, k);
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("no decoding steps");
  return sum / static_cast<double>(count);
}

// Type-token ratio of the candidates at positions 2..k, pooled over all steps.
inline double diversity_ttr(std::span<const UtteranceTrace> traces, std::size_t k,
                            const TokenFilter& filter = {}) {
  std::unordered_set<TokenId> types;
  std::size_t tokens = 0;
  for (const auto& t : traces) {
    for (const auto& step : t.steps) {
      const std::size_t n = std::min(k, step.candidates.size());
      for (std::size_t i = 1; i < n; ++i) {
        const TokenId id = step.candidates[i].token_id;
        if (!filter.counts(id)) continue;
        types.insert(id);
        ++tokens;
      }
    }
  }
  if (tokens == 0) throw std::invalid_argument("diversity undefined: no non-top-1 candidates");
  return static_cast<double>(types.size()) / static_cast<double>(tokens);
}

struct WordErrors {
  std::size_t errors = 0;
  std::size_t reference_words = 0;
};

inline WordErrors word_errors(std::string_view reference, std::string_view hypothesis, bool normalize = true) {
  const auto ref = split_words(normalize ? normalize_text(reference) : std::string(reference));
  const auto hyp = split_words(normalize ? normalize_text(hypothesis) : std::string(hypothesis));
  return {edit_distance(align(ref, hyp)), ref.size()};
}

inline double wer(std::string_view reference, std::string_view hypothesis, bool normalize = true) {
  const auto e = word_errors(reference, hypothesis, normalize);
  if (e.reference_words == 0) throw std::invalid_argument("empty reference after normalization");
  return static_cast<double>(e.errors) / static_cast<double>(e.reference_words);
}

// Hypothesis text for WER: the stored text, else the detokenized hypothesis.
inline std::optional<std::string> hypothesis_text(const UtteranceTrace& t, const Vocabulary* vocab,
                                                  const TokenFilter& special) {
  if (t.hypothesis_text) return t.hypothesis_text;
  if (vocab && !vocab->empty()) return vocab->detokenize(t.hypothesis_tokens, special);
  return std::nullopt;
}

// Word errors summed over all utterances with hypothesis text, divided by
// their summed reference words. NaN when no utterance has hypothesis text.
inline double corpus_wer(std::span<const UtteranceTrace> traces, const AnalysisConfig& config,
                         const Vocabulary* vocab = nullptr) {
  const TokenFilter special{false, config.special_token_begin};
  WordErrors total;
  for (const auto& t : traces) {
    auto hyp = hypothesis_text(t, vocab, special);
    if (!hyp) continue;
    const auto e = word_errors(t.reference_text, *hyp, config.normalize_wer_text);
    total.errors += e.errors;
    total.reference_words += e.reference_words;
  }
  if (total.reference_words == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(total.errors) / static_cast<double>(total.reference_words);
}

struct LanguageMetrics {
  std::string language;
  double avg_rank = 0.0;
  double avg_confidence = 0.0;
  double avg_entropy_bits = 0.0;
  double diversity_ttr = 0.0;
  double wer = std::numeric_limits<double>::quiet_NaN();  // NaN without hypothesis text
  std::size_t n_utterances = 0;
  std::size_t n_ref_tokens = 0;
  std::size_t n_hyp_tokens = 0;
};

// All metrics of one language, pooled over its tokens. `alignments` must be
// parallel to `traces`.
inline LanguageMetrics language_metrics(std::span<const UtteranceTrace> traces,
                                        std::span<const AlignmentResult> alignments,
                                        const AnalysisConfig& config, const Vocabulary* vocab = nullptr) {
  if (traces.empty()) throw std::invalid_argument("language has no utterances");
  if (traces.size() != alignments.size())
    throw std::invalid_argument("traces and alignments differ in length");
  const TokenFilter filter = TokenFilter::from(config);

  LanguageMetrics m;
  m.language = traces.front().language;
  for (const auto& t : traces)
    if (t.language != m.language)
      throw std::invalid_argument("mixed languages: '" + m.language + "' and '" + t.language + "'");
  m.n_utterances = traces.size();
  for (const auto& a : alignments)
    for (const auto& r : a.ranked) m.n_ref_tokens += filter.counts(r.token_id);
  for (const auto& t : traces)
    for (const auto& s : t.steps) m.n_hyp_tokens += filter.counts(s.chosen_id);

  m.avg_rank = average_rank(alignments, filter);
  m.avg_confidence = confidence(traces, filter);
  m.avg_entropy_bits = mean_entropy_bits(traces, config.k_entropy, filter);
  m.diversity_ttr = diversity_ttr(traces, config.k_diversity, filter);

  m.wer = corpus_wer(traces, config, vocab);
  return m;
}

struct CoveragePoint {
  double cumulative_sec = 0.0;
  std::size_t unique_tokens = 0;
  double fraction_of_final = 0.0;
};

// Distinct hypothesis tokens seen as audio accumulates. A point is emitted
// each time the running duration reaches the next multiple of `window_sec`,
// plus a final point for a trailing partial window.
inline std::vector<CoveragePoint> coverage_curve(std::span<const UtteranceTrace> traces, double window_sec,
                                                 const TokenFilter& filter = {}) {
  if (traces.empty()) throw std::invalid_argument("coverage of an empty trace list");
  if (!(window_sec > 0.0)) throw std::invalid_argument("window_sec must be positive");

  std::unordered_set<TokenId> seen;
  std::vector<CoveragePoint> points;
  double elapsed = 0.0;
  double next_boundary = window_sec;
  for (const auto& t : traces) {
    for (TokenId id : t.hypothesis_tokens)
      if (filter.counts(id)) seen.insert(id);
    elapsed += t.audio_duration_sec;
    if (elapsed >= next_boundary) {
      points.push_back({elapsed, seen.size(), 0.0});
      while (next_boundary <= elapsed) next_boundary += window_sec;
    }
  }
  if (points.empty() || points.back().cumulative_sec != elapsed) points.push_back({elapsed, seen.size(), 0.0});

  const double total = static_cast<double>(seen.size());
  for (auto& p : points) p.fraction_of_final = total > 0.0 ? static_cast<double>(p.unique_tokens) / total : 1.0;
  return points;
}

}  // namespace subtok
