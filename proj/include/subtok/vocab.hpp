#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "subtok/types.hpp"

namespace subtok {

// Token id to surface string, loaded from `token_id<TAB>token_string` rows.
class Vocabulary {
 public:
  void set(TokenId id, std::string text) { pieces_[id] = std::move(text); }

  const std::string* find(TokenId id) const {
    auto it = pieces_.find(id);
    return it == pieces_.end() ? nullptr : &it->second;
  }

  // Surface string, or the bracketed id when unknown.
  std::string label(TokenId id) const {
    if (const auto* s = find(id)) return *s;
    return "<" + std::to_string(id) + ">";
  }

  // Concatenates the pieces of non-special tokens. Unknown ids are skipped.
  std::string detokenize(std::span<const TokenId> ids, const TokenFilter& special) const {
    std::string out;
    for (TokenId id : ids) {
      if (special.is_special(id)) continue;
      if (const auto* s = find(id)) out += *s;
    }
    return out;
  }

  std::size_t size() const { return pieces_.size(); }
  bool empty() const { return pieces_.empty(); }

 private:
  std::unordered_map<TokenId, std::string> pieces_;
};

// Pieces may use \t, \n and \\ escapes.
inline Vocabulary load_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocabulary " + path.string());
  Vocabulary vocab;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::invalid_argument("vocabulary line " + std::to_string(lineno) + ": missing tab");
    const std::string id_text = line.substr(0, tab);
    char* end = nullptr;
    const unsigned long id = std::strtoul(id_text.c_str(), &end, 10);
    if (id_text.empty() || *end != '\0')
      throw std::invalid_argument("vocabulary line " + std::to_string(lineno) + ": bad token id");
    std::string piece;
    for (std::size_t i = tab + 1; i < line.size(); ++i) {
      if (line[i] == '\\' && i + 1 < line.size()) {
        const char n = line[++i];
        piece += n == 't' ? '\t' : n == 'n' ? '\n' : n;
      } else {
        piece += line[i];
      }
    }
    vocab.set(static_cast<TokenId>(id), std::move(piece));
  }
  return vocab;
}

}  // namespace subtok
