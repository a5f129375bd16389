#pragma once

// Deterministic synthetic traces for demos and tests. Languages with more
// training hours get sharper candidate distributions and fewer edits, so the
// generated data show the usual resource trends.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "subtok/types.hpp"

namespace subtok::synthetic {

inline constexpr TokenId kEndOfText = 50257;
inline constexpr TokenId kStartOfTranscript = 50258;

struct Options {
  std::size_t utterances = 12;
  std::size_t min_content_tokens = 5;
  std::size_t max_content_tokens = 14;
  std::size_t k_cand = 50;
  std::size_t pool_size = 300;   // language-specific token pool
  std::size_t shared_pool = 120; // tokens common to every language
  std::uint64_t seed = 42;
};

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string token_word(TokenId id) { return fmt::format("w{}", id); }

inline std::string text_of(const std::vector<TokenId>& ids) {
  std::string out;
  for (TokenId id : ids) {
    if (id >= kEndOfText) continue;
    if (!out.empty()) out += ' ';
    out += token_word(id);
  }
  return out;
}

inline std::vector<UtteranceTrace> generate_language(const std::string& code, double training_hours,
                                                     const Options& opt = {}) {
  std::mt19937_64 rng(opt.seed ^ fnv1a(code));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double skill = std::clamp(std::log10(training_hours) / std::log10(20000.0), 0.05, 1.0);
  const double error_rate = 0.04 + 0.45 * (1.0 - skill);
  const double sharpness = 1.0 + 5.0 * skill;

  // Token pool: a shared block plus a language-specific block.
  std::vector<TokenId> pool;
  for (std::size_t i = 0; i < opt.shared_pool; ++i) pool.push_back(static_cast<TokenId>(100 + i));
  const TokenId base = static_cast<TokenId>(1000 + (fnv1a(code) % 40) * 1000);
  for (std::size_t i = 0; i < opt.pool_size; ++i) pool.push_back(base + static_cast<TokenId>(i));
  if (opt.k_cand > pool.size()) throw std::invalid_argument("k_cand exceeds the synthetic token pool");
  auto draw = [&] {
    const double u = unit(rng);
    return pool[static_cast<std::size_t>(u * u * static_cast<double>(pool.size()))];
  };

  std::vector<UtteranceTrace> out;
  for (std::size_t u = 0; u < opt.utterances; ++u) {
    UtteranceTrace t;
    t.utterance_id = fmt::format("{}-{:04d}", code, u);
    t.language = code;
    const std::size_t len = opt.min_content_tokens +
                            static_cast<std::size_t>(unit(rng) * static_cast<double>(opt.max_content_tokens -
                                                                                     opt.min_content_tokens + 1));
    t.reference_tokens.push_back(kStartOfTranscript);
    for (std::size_t i = 0; i < len; ++i) t.reference_tokens.push_back(draw());
    t.reference_tokens.push_back(kEndOfText);

    // Hypothesis with the reference token each position was meant to produce.
    std::vector<std::pair<TokenId, std::optional<TokenId>>> hyp;
    hyp.push_back({kStartOfTranscript, kStartOfTranscript});
    for (std::size_t i = 1; i + 1 < t.reference_tokens.size(); ++i) {
      const TokenId ref = t.reference_tokens[i];
      if (unit(rng) >= error_rate) {
        hyp.push_back({ref, ref});
        continue;
      }
      const double kind = unit(rng);
      if (kind < 0.6) {
        TokenId sub = draw();
        while (sub == ref) sub = draw();
        hyp.push_back({sub, ref});
      } else if (kind < 0.8) {
        hyp.push_back({ref, ref});
        hyp.push_back({draw(), std::nullopt});
      }  // else: deletion
    }
    hyp.push_back({kEndOfText, kEndOfText});

    for (const auto& [chosen, intended] : hyp) {
      DecodingStep step;
      step.chosen_id = chosen;
      std::vector<TokenId> ids{chosen};
      std::unordered_set<TokenId> used{chosen};
      if (intended && *intended != chosen && unit(rng) < 0.6 + 0.35 * skill) {
        ids.push_back(*intended);
        used.insert(*intended);
      }
      while (ids.size() < opt.k_cand) {
        const TokenId id = draw();
        if (used.insert(id).second) ids.push_back(id);
      }
      std::vector<double> score(ids.size());
      for (std::size_t i = 0; i < ids.size(); ++i)
        score[i] = -sharpness * std::log1p(static_cast<double>(i)) + 0.8 * normal(rng);
      score[0] += sharpness;  // chosen token usually on top
      if (ids.size() > 1 && ids[1] != chosen) score[1] += 0.6 * sharpness;
      if (chosen >= kEndOfText) score[0] += 8.0;
      // Mass outside the recorded window.
      double z = std::exp(-2.0 - sharpness);
      for (double s : score) z += std::exp(s);
      const double log_z = std::log(z);
      for (std::size_t i = 0; i < ids.size(); ++i) step.candidates.push_back({ids[i], score[i] - log_z});
      step.chosen_log_prob = score[0] - log_z;
      canonicalize(step);
      t.hypothesis_tokens.push_back(chosen);
      t.steps.push_back(std::move(step));
    }

    t.reference_text = text_of(t.reference_tokens);
    t.hypothesis_text = text_of(t.hypothesis_tokens);
    t.audio_duration_sec = 0.5 + 0.32 * static_cast<double>(len) + 0.2 * unit(rng);
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace subtok::synthetic
