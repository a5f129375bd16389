#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "subtok/types.hpp"

namespace subtok {

// Raised for malformed or invalid trace records. `line` is 1-based and 0 when
// the record did not come from a file.
class TraceError : public std::runtime_error {
 public:
  TraceError(std::size_t line, std::string field, std::string utterance_id, const std::string& what)
      : std::runtime_error(compose(line, field, utterance_id, what)),
        line_(line),
        field_(std::move(field)),
        utterance_id_(std::move(utterance_id)) {}

  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }
  const std::string& utterance_id() const { return utterance_id_; }

 private:
  static std::string compose(std::size_t line, const std::string& field, const std::string& id,
                             const std::string& what) {
    std::string msg;
    if (line) msg += "line " + std::to_string(line) + ": ";
    if (!id.empty()) msg += "utterance '" + id + "': ";
    if (!field.empty()) msg += "field '" + field + "': ";
    return msg + what;
  }

  std::size_t line_;
  std::string field_;
  std::string utterance_id_;
};

struct ValidationReport {
  // Steps whose chosen token lies outside the recorded candidate window.
  std::size_t chosen_outside_candidates = 0;
};

// Checks every UtteranceTrace invariant. Throws TraceError naming the
// utterance on the first violation.
inline ValidationReport validate_trace(const UtteranceTrace& t,
                                       std::size_t vocab_size = kDefaultVocabSize,
                                       std::size_t line = 0) {
  auto fail = [&](const std::string& field, const std::string& what) {
    throw TraceError(line, field, t.utterance_id, what);
  };
  auto check_id = [&](TokenId id, const char* field) {
    if (id >= vocab_size)
      fail(field, "token id " + std::to_string(id) + " outside vocabulary of size " +
                      std::to_string(vocab_size));
  };

  ValidationReport report;
  if (t.utterance_id.empty()) fail("utterance_id", "empty utterance id");
  if (!(t.audio_duration_sec > 0.0) || !std::isfinite(t.audio_duration_sec))
    fail("audio_duration_sec", "duration must be a positive finite number");
  for (TokenId id : t.reference_tokens) check_id(id, "reference_tokens");
  for (TokenId id : t.hypothesis_tokens) check_id(id, "hypothesis_tokens");
  if (t.steps.size() != t.hypothesis_tokens.size())
    fail("steps", "has " + std::to_string(t.steps.size()) + " steps but " +
                      std::to_string(t.hypothesis_tokens.size()) + " hypothesis tokens");

  for (std::size_t s = 0; s < t.steps.size(); ++s) {
    const auto& step = t.steps[s];
    const std::string where = "steps[" + std::to_string(s) + "]";
    if (step.chosen_id != t.hypothesis_tokens[s])
      fail(where + ".chosen_id", "chosen id " + std::to_string(step.chosen_id) +
                                     " differs from hypothesis token " +
                                     std::to_string(t.hypothesis_tokens[s]));
    if (!std::isfinite(step.chosen_log_prob) || step.chosen_log_prob > 0.0)
      fail(where + ".chosen_log_prob", "log-probability must be finite and <= 0");

    std::unordered_set<TokenId> seen;
    for (std::size_t i = 0; i < step.candidates.size(); ++i) {
      const auto& c = step.candidates[i];
      check_id(c.token_id, "candidates");
      if (!std::isfinite(c.log_prob) || c.log_prob > 0.0)
        fail(where + ".candidates", "log-probability must be finite and <= 0");
      if (!seen.insert(c.token_id).second)
        fail(where + ".candidates", "duplicate token id " + std::to_string(c.token_id));
      if (i > 0 && !canonical_before(step.candidates[i - 1], c))
        fail(where + ".candidates", "not in canonical order at position " + std::to_string(i + 1));
    }

    if (auto pos = step.position_of(step.chosen_id)) {
      if (step.candidates[*pos - 1].log_prob != step.chosen_log_prob)
        fail(where + ".chosen_log_prob", "disagrees with the chosen token's candidate entry");
    } else {
      ++report.chosen_outside_candidates;
    }
  }
  return report;
}

namespace detail {

template <typename Json>
bool is_token(const Json& v) {
  return v.is_number_unsigned() && v.template get<std::uint64_t>() <= 0xFFFFFFFFull;
}

template <typename Json>
const Json& require(const Json& obj, const char* key, std::size_t line, const std::string& id) {
  auto it = obj.find(key);
  if (it == obj.end()) throw TraceError(line, key, id, "missing");
  return *it;
}

template <typename Json>
std::vector<TokenId> token_list(const Json& arr, const char* key, std::size_t line,
                                const std::string& id) {
  if (!arr.is_array()) throw TraceError(line, key, id, "expected an array");
  std::vector<TokenId> out;
  out.reserve(arr.size());
  for (const auto& v : arr) {
    if (!is_token(v)) throw TraceError(line, key, id, "expected non-negative integer token ids");
    out.push_back(v.template get<TokenId>());
  }
  return out;
}

}  // namespace detail

// Parses one trace record (one line of a trace file) and validates it.
inline UtteranceTrace parse_trace_record(const std::string& text, std::size_t line = 0,
                                         std::size_t vocab_size = kDefaultVocabSize,
                                         ValidationReport* report = nullptr) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw TraceError(line, "<record>", "", std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw TraceError(line, "<record>", "", "expected a JSON object");

  UtteranceTrace t;
  const auto& id = detail::require(j, "utterance_id", line, "");
  if (!id.is_string()) throw TraceError(line, "utterance_id", "", "expected a string");
  t.utterance_id = id.get<std::string>();
  const std::string& uid = t.utterance_id;

  auto string_field = [&](const char* key) {
    const auto& v = detail::require(j, key, line, uid);
    if (!v.is_string()) throw TraceError(line, key, uid, "expected a string");
    return v.get<std::string>();
  };
  auto number = [&](const json& v, const std::string& key) {
    if (!v.is_number()) throw TraceError(line, key, uid, "expected a number");
    return v.get<double>();
  };

  t.language = string_field("language");
  t.audio_duration_sec = number(detail::require(j, "audio_duration_sec", line, uid), "audio_duration_sec");
  t.reference_text = string_field("reference_text");
  t.reference_tokens =
      detail::token_list(detail::require(j, "reference_tokens", line, uid), "reference_tokens", line, uid);
  t.hypothesis_tokens =
      detail::token_list(detail::require(j, "hypothesis_tokens", line, uid), "hypothesis_tokens", line, uid);
  if (auto it = j.find("hypothesis_text"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw TraceError(line, "hypothesis_text", uid, "expected a string");
    t.hypothesis_text = it->get<std::string>();
  }

  const auto& steps = detail::require(j, "steps", line, uid);
  if (!steps.is_array()) throw TraceError(line, "steps", uid, "expected an array");
  t.steps.reserve(steps.size());
  for (std::size_t s = 0; s < steps.size(); ++s) {
    const std::string where = "steps[" + std::to_string(s) + "]";
    const auto& js = steps[s];
    if (!js.is_object()) throw TraceError(line, where, uid, "expected an object");
    DecodingStep step;
    auto cid = js.find("chosen_id");
    if (cid == js.end() || !detail::is_token(*cid))
      throw TraceError(line, where + ".chosen_id", uid, "missing or not a non-negative integer");
    step.chosen_id = cid->get<TokenId>();
    auto clp = js.find("chosen_log_prob");
    if (clp == js.end()) throw TraceError(line, where + ".chosen_log_prob", uid, "missing");
    step.chosen_log_prob = number(*clp, where + ".chosen_log_prob");
    auto cands = js.find("candidates");
    if (cands == js.end() || !cands->is_array())
      throw TraceError(line, where + ".candidates", uid, "missing or not an array");
    step.candidates.reserve(cands->size());
    for (const auto& pair : *cands) {
      if (!pair.is_array() || pair.size() != 2 || !detail::is_token(pair[0]) || !pair[1].is_number())
        throw TraceError(line, where + ".candidates", uid, "expected [id, log_prob] pairs");
      step.candidates.push_back({pair[0].get<TokenId>(), pair[1].get<double>()});
    }
    t.steps.push_back(std::move(step));
  }

  auto r = validate_trace(t, vocab_size, line);
  if (report) report->chosen_outside_candidates += r.chosen_outside_candidates;
  return t;
}

// Serializes one trace as a single line (no trailing newline). Key order is
// fixed and doubles use shortest round-trip formatting, so output is stable.
inline std::string format_trace_record(const UtteranceTrace& t) {
  nlohmann::ordered_json j;
  j["utterance_id"] = t.utterance_id;
  j["language"] = t.language;
  j["audio_duration_sec"] = t.audio_duration_sec;
  j["reference_text"] = t.reference_text;
  j["reference_tokens"] = t.reference_tokens;
  j["hypothesis_tokens"] = t.hypothesis_tokens;
  if (t.hypothesis_text) j["hypothesis_text"] = *t.hypothesis_text;
  auto steps = nlohmann::ordered_json::array();
  for (const auto& step : t.steps) {
    nlohmann::ordered_json js;
    js["chosen_id"] = step.chosen_id;
    js["chosen_log_prob"] = step.chosen_log_prob;
    auto cands = nlohmann::ordered_json::array();
    for (const auto& c : step.candidates) cands.push_back({c.token_id, c.log_prob});
    js["candidates"] = std::move(cands);
    steps.push_back(std::move(js));
  }
  j["steps"] = std::move(steps);
  return j.dump();
}

// Streams trace records from a newline-delimited file. Blank lines are skipped.
class TraceReader {
 public:
  explicit TraceReader(const std::filesystem::path& path, std::size_t vocab_size = kDefaultVocabSize)
      : in_(path), vocab_size_(vocab_size) {
    if (!in_) throw std::runtime_error("cannot open trace file " + path.string());
  }

  // Next trace, or nullopt at end of file. Throws TraceError on a bad record;
  // reading may continue with the following line afterwards.
  std::optional<UtteranceTrace> next() {
    std::string text;
    while (std::getline(in_, text)) {
      ++line_;
      if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
      return parse_trace_record(text, line_, vocab_size_, &report_);
    }
    return std::nullopt;
  }

  std::size_t line() const { return line_; }
  const ValidationReport& report() const { return report_; }

 private:
  std::ifstream in_;
  std::size_t vocab_size_;
  std::size_t line_ = 0;
  ValidationReport report_;
};

inline std::vector<UtteranceTrace> read_traces(const std::filesystem::path& path,
                                               std::size_t vocab_size = kDefaultVocabSize,
                                               ValidationReport* report = nullptr) {
  TraceReader reader(path, vocab_size);
  std::vector<UtteranceTrace> out;
  while (auto t = reader.next()) out.push_back(std::move(*t));
  if (report) *report = reader.report();
  return out;
}

// Reads every valid record; bad records are skipped and their errors collected.
inline std::vector<UtteranceTrace> read_traces_lenient(const std::filesystem::path& path,
                                                       std::vector<TraceError>& errors,
                                                       std::size_t vocab_size = kDefaultVocabSize) {
  TraceReader reader(path, vocab_size);
  std::vector<UtteranceTrace> out;
  for (;;) {
    try {
      auto t = reader.next();
      if (!t) break;
      out.push_back(std::move(*t));
    } catch (const TraceError& e) {
      errors.push_back(e);
    }
  }
  return out;
}

inline void write_traces(const std::vector<UtteranceTrace>& traces, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (const auto& t : traces) out << format_trace_record(t) << '\n';
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace subtok
