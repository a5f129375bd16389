#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "subtok/types.hpp"
#include "subtok/vocab.hpp"

namespace subtok {

enum class EditKind { Equal, Replace, Delete, Insert };

inline const char* to_string(EditKind kind) {
  switch (kind) {
    case EditKind::Equal: return "equal";
    case EditKind::Replace: return "replace";
    case EditKind::Delete: return "delete";
    case EditKind::Insert: return "insert";
  }
  return "?";
}

struct EditOp {
  EditKind kind = EditKind::Equal;
  std::optional<std::size_t> ref_index;
  std::optional<std::size_t> hyp_index;

  friend bool operator==(const EditOp&, const EditOp&) = default;
};

// Minimal unit-cost Levenshtein alignment of `ref` onto `hyp`.
//
// The DP table holds suffix distances, so the path is read off front to back.
// Among minimal paths the walk prefers Equal, then Replace, then Delete, then
// Insert at every cell: substitutions stay at the start of a gap and surplus
// insertions or deletions collect at its end.
template <typename T>
std::vector<EditOp> align(std::span<const T> ref, std::span<const T> hyp) {
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  const std::size_t width = m + 1;
  std::vector<std::size_t> dist((n + 1) * width);
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return dist[i * width + j]; };

  for (std::size_t i = n + 1; i-- > 0;) {
    for (std::size_t j = m + 1; j-- > 0;) {
      if (i == n) {
        at(i, j) = m - j;
      } else if (j == m) {
        at(i, j) = n - i;
      } else {
        const std::size_t diag = at(i + 1, j + 1) + (ref[i] == hyp[j] ? 0 : 1);
        const std::size_t del = at(i + 1, j) + 1;
        const std::size_t ins = at(i, j + 1) + 1;
        at(i, j) = std::min({diag, del, ins});
      }
    }
  }

  std::vector<EditOp> ops;
  ops.reserve(n + m);
  std::size_t i = 0, j = 0;
  while (i < n || j < m) {
    const std::size_t here = at(i, j);
    if (i < n && j < m && ref[i] == hyp[j] && here == at(i + 1, j + 1)) {
      ops.push_back({EditKind::Equal, i++, j++});
    } else if (i < n && j < m && here == at(i + 1, j + 1) + 1) {
      ops.push_back({EditKind::Replace, i++, j++});
    } else if (i < n && here == at(i + 1, j) + 1) {
      ops.push_back({EditKind::Delete, i++, std::nullopt});
    } else {
      ops.push_back({EditKind::Insert, std::nullopt, j++});
    }
  }
  return ops;
}

template <typename T>
std::vector<EditOp> align(const std::vector<T>& ref, const std::vector<T>& hyp) {
  return align(std::span<const T>(ref), std::span<const T>(hyp));
}

inline std::size_t edit_distance(std::span<const EditOp> ops) {
  std::size_t d = 0;
  for (const auto& op : ops) d += op.kind != EditKind::Equal;
  return d;
}

struct RankedToken {
  std::size_t ref_index = 0;
  TokenId token_id = 0;
  std::size_t rank = 1;
  EditKind op_kind = EditKind::Equal;
  std::optional<std::size_t> hyp_index;
};

struct AlignmentResult {
  std::vector<EditOp> ops;
  std::vector<RankedToken> ranked;  // one per reference token, in reference order
  std::size_t edit_distance = 0;
};

// Ranks every reference token against the candidate list of the step it was
// aligned to. Positions beyond k_cand, absent tokens and deletions all get
// the penalty rank k_cand + 1.
inline AlignmentResult rank_reference_tokens(const UtteranceTrace& trace, const AnalysisConfig& config) {
  AlignmentResult result;
  result.ops = align(trace.reference_tokens, trace.hypothesis_tokens);
  result.edit_distance = edit_distance(result.ops);
  const std::size_t penalty = config.k_cand + 1;
  result.ranked.reserve(trace.reference_tokens.size());
  for (const auto& op : result.ops) {
    if (op.kind == EditKind::Insert) continue;
    RankedToken r;
    r.ref_index = *op.ref_index;
    r.token_id = trace.reference_tokens[r.ref_index];
    r.op_kind = op.kind;
    r.hyp_index = op.hyp_index;
    r.rank = penalty;
    if (op.hyp_index) {
      if (auto pos = trace.steps[*op.hyp_index].position_of(r.token_id); pos && *pos <= config.k_cand)
        r.rank = *pos;
    }
    result.ranked.push_back(r);
  }
  return result;
}

// Renders the alignment as a Position/GT/Output/Operation/Rank table.
inline std::string format_alignment_table(const UtteranceTrace& trace, const AlignmentResult& result,
                                          const Vocabulary* vocab = nullptr) {
  auto label = [&](TokenId id) { return vocab ? vocab->label(id) : std::to_string(id); };
  std::vector<std::string> rank_by_ref(trace.reference_tokens.size(), "--");
  for (const auto& r : result.ranked) rank_by_ref[r.ref_index] = std::to_string(r.rank);

  struct Row {
    std::string pos, gt, out, op, rank;
  };
  std::vector<Row> rows{{"Position", "GT", "Output", "Operation", "Rank"}};
  for (std::size_t row = 0; row < result.ops.size(); ++row) {
    const auto& op = result.ops[row];
    rows.push_back({std::to_string(row), op.ref_index ? label(trace.reference_tokens[*op.ref_index]) : "",
                    op.hyp_index ? label(trace.hypothesis_tokens[*op.hyp_index]) : "(deleted)",
                    std::string(to_string(op.kind)), op.ref_index ? rank_by_ref[*op.ref_index] : "--"});
  }
  std::size_t w_gt = 0, w_out = 0;
  for (const auto& r : rows) {
    w_gt = std::max(w_gt, r.gt.size());
    w_out = std::max(w_out, r.out.size());
  }
  std::ostringstream os;
  for (const auto& r : rows)
    os << fmt::format("{:<9}  {:<{}}  {:<{}}  {:<9}  {}\n", r.pos, r.gt, w_gt, r.out, w_out, r.op, r.rank);
  return os.str();
}

}  // namespace subtok
