#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace subtok {

using TokenId = std::uint32_t;

// Size of the multilingual decoder vocabulary.
inline constexpr std::size_t kDefaultVocabSize = 51865;

// First special token in the multilingual vocabulary (<|endoftext|>).
// Everything at or above it is a control token: start-of-transcript,
// language IDs, task tokens and timestamps.
inline constexpr TokenId kDefaultSpecialTokenBegin = 50257;

struct CandidateEntry {
  TokenId token_id = 0;
  double log_prob = 0.0;  // natural log

  friend bool operator==(const CandidateEntry&, const CandidateEntry&) = default;
};

// Canonical candidate order: descending log-probability, ties by ascending id.
inline bool canonical_before(const CandidateEntry& a, const CandidateEntry& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  return a.token_id < b.token_id;
}

struct DecodingStep {
  TokenId chosen_id = 0;
  double chosen_log_prob = 0.0;
  std::vector<CandidateEntry> candidates;

  // 1-based position of `id` in the candidate list, if present.
  std::optional<std::size_t> position_of(TokenId id) const {
    auto it = std::find_if(candidates.begin(), candidates.end(),
                           [id](const CandidateEntry& c) { return c.token_id == id; });
    if (it == candidates.end()) return std::nullopt;
    return static_cast<std::size_t>(it - candidates.begin()) + 1;
  }

  friend bool operator==(const DecodingStep&, const DecodingStep&) = default;
};

inline void canonicalize(DecodingStep& step) {
  std::sort(step.candidates.begin(), step.candidates.end(), canonical_before);
}

struct UtteranceTrace {
  std::string utterance_id;
  std::string language;
  double audio_duration_sec = 0.0;
  std::string reference_text;
  std::vector<TokenId> reference_tokens;
  std::vector<TokenId> hypothesis_tokens;
  std::vector<DecodingStep> steps;
  // Not produced by every extractor; needed for WER when no vocabulary is given.
  std::optional<std::string> hypothesis_text;

  friend bool operator==(const UtteranceTrace&, const UtteranceTrace&) = default;
};

enum class ResourceTier { High, Medium, Low };

inline const char* to_string(ResourceTier tier) {
  switch (tier) {
    case ResourceTier::High: return "High";
    case ResourceTier::Medium: return "Medium";
    case ResourceTier::Low: return "Low";
  }
  return "?";
}

// High > 4000 h, Medium 100..4000 h, Low < 100 h.
inline ResourceTier tier_for_hours(double hours) {
  if (hours > 4000.0) return ResourceTier::High;
  if (hours >= 100.0) return ResourceTier::Medium;
  return ResourceTier::Low;
}

struct LanguageInfo {
  std::string code;
  double training_hours = 0.0;
  ResourceTier tier = ResourceTier::Low;
};

class LanguageManifest {
 public:
  LanguageManifest() = default;

  // Throws std::invalid_argument on duplicate codes or non-positive hours.
  void add(LanguageInfo info) {
    if (!(info.training_hours > 0.0))
      throw std::invalid_argument("language '" + info.code + "': non-positive training hours");
    if (find(info.code))
      throw std::invalid_argument("duplicate language code '" + info.code + "'");
    entries_.push_back(std::move(info));
  }

  const LanguageInfo* find(const std::string& code) const {
    for (const auto& e : entries_)
      if (e.code == code) return &e;
    return nullptr;
  }

  const LanguageInfo& at(const std::string& code) const {
    if (const auto* e = find(code)) return *e;
    throw std::out_of_range("language '" + code + "' not in manifest");
  }

  const std::vector<LanguageInfo>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<LanguageInfo> entries_;
};

struct AnalysisConfig {
  std::size_t k_cand = 50;
  std::size_t k_entropy = 50;
  std::size_t k_diversity = 50;
  std::size_t k_pca = 10;
  bool include_special_tokens = true;
  bool normalize_wer_text = true;
  std::uint64_t seed = 42;
  std::size_t vocab_size = kDefaultVocabSize;
  TokenId special_token_begin = kDefaultSpecialTokenBegin;

  void validate() const {
    if (k_cand == 0) throw std::invalid_argument("k_cand must be positive");
    auto check = [this](std::size_t k, const char* name) {
      if (k == 0 || k > k_cand)
        throw std::invalid_argument(std::string(name) + " must be in [1, k_cand]");
    };
    check(k_entropy, "k_entropy");
    check(k_diversity, "k_diversity");
    check(k_pca, "k_pca");
  }
};

// Decides which token ids take part in token-level metrics.
struct TokenFilter {
  bool include_special = true;
  TokenId special_begin = kDefaultSpecialTokenBegin;

  static TokenFilter from(const AnalysisConfig& config) {
    return {config.include_special_tokens, config.special_token_begin};
  }

  bool is_special(TokenId id) const { return id >= special_begin; }
  bool counts(TokenId id) const { return include_special || !is_special(id); }
};

}  // namespace subtok
