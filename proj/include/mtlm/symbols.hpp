// symbols.hpp
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Hybrid word/character symbol inventory. The alphabet is the disjoint
// union of full-word symbols W, single-character symbols C (including
// the unknown character ★) and the markers {EOW, EOS}. A one-character
// word in W is a different symbol from the same character in C. Every
// word is generatable as its character spell-out followed by EOW, so
// the model is open-vocabulary: no string has probability zero.

#ifndef MTLM_SYMBOLS_HPP_
#define MTLM_SYMBOLS_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mtlm/alphabet.hpp"
#include "mtlm/error.hpp"
#include "mtlm/utf8.hpp"

namespace mtlm {

using SymId = std::int32_t;
using SymVec = std::vector<SymId>;

enum class SymClass : char { kWord = 'W', kChar = 'C', kSpecial = 'S' };

struct SymbolInfo {
  std::string text;
  SymClass cls;
};

// Symbol ids are dense; 0 and 1 are reserved for EOW and EOS.
class SymbolTable {
 public:
  static constexpr SymId kEow = 0;
  static constexpr SymId kEos = 1;

  SymbolTable() {
    symbols_.push_back({"<eow>", SymClass::kSpecial});
    symbols_.push_back({"<eos>", SymClass::kSpecial});
  }

  SymId AddWord(const std::string& text) {
    auto [it, inserted] = word_ids_.try_emplace(text, Size());
    if (inserted) symbols_.push_back({text, SymClass::kWord});
    return it->second;
  }

  SymId AddChar(char32_t cp) {
    auto [it, inserted] = char_ids_.try_emplace(cp, Size());
    if (inserted) symbols_.push_back({EncodeUtf8(cp), SymClass::kChar});
    return it->second;
  }

  SymId WordId(const std::string& text) const {
    auto it = word_ids_.find(text);
    return it == word_ids_.end() ? -1 : it->second;
  }

  SymId CharId(char32_t cp) const {
    auto it = char_ids_.find(cp);
    return it == char_ids_.end() ? -1 : it->second;
  }

  SymId Size() const { return static_cast<SymId>(symbols_.size()); }
  const SymbolInfo& Info(SymId id) const { return symbols_[id]; }
  SymClass ClassOf(SymId id) const { return symbols_[id].cls; }
  bool IsWord(SymId id) const { return ClassOf(id) == SymClass::kWord; }
  bool IsChar(SymId id) const { return ClassOf(id) == SymClass::kChar; }

  std::size_t num_words() const { return word_ids_.size(); }
  std::size_t num_chars() const { return char_ids_.size(); }

 private:
  std::vector<SymbolInfo> symbols_;
  std::map<std::string, SymId> word_ids_;
  std::map<char32_t, SymId> char_ids_;
};

class HybridVocabulary {
 public:
  HybridVocabulary() = default;

  const SymbolTable& table() const { return table_; }
  SymbolTable& mutable_table() { return table_; }

  bool InVocab(const std::string& token) const {
    return table_.WordId(token) >= 0;
  }

  // Character spell-out of a token, without the trailing EOW. Every
  // character must already be in C; run tokens through the CharAlphabet
  // first.
  SymVec SpellOut(const std::string& token) const {
    SymVec out;
    for (char32_t cp : DecodeUtf8(token, "token")) {
      const SymId id = table_.CharId(cp);
      if (id < 0) {
        ThrowInternal("token character outside C; text not passed through "
                      "the character alphabet: '" + EncodeUtf8(cp) + "'");
      }
      out.push_back(id);
    }
    return out;
  }

  // Encodes a token sequence as a symbol stream. In-vocabulary tokens
  // become word symbols unless force_chars is set; everything else is
  // spelled out character by character and closed with EOW. The stream
  // always ends with EOS.
  SymVec Encode(const std::vector<std::string>& tokens,
                bool force_chars = false) const {
    std::vector<bool> spell(tokens.size(), force_chars);
    return EncodeWithChoices(tokens, spell);
  }

  // Per-token control over word-vs-spell-out realization; the choice is
  // only honored for in-vocabulary tokens (out-of-vocabulary tokens have
  // a single realization). This enumerates one derivation of the
  // utterance.
  SymVec EncodeWithChoices(const std::vector<std::string>& tokens,
                           const std::vector<bool>& spell_out) const {
    SymVec out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const SymId word = table_.WordId(tokens[i]);
      if (word >= 0 && !spell_out[i]) {
        out.push_back(word);
      } else {
        SymVec chars = SpellOut(tokens[i]);
        out.insert(out.end(), chars.begin(), chars.end());
        out.push_back(SymbolTable::kEow);
      }
    }
    out.push_back(SymbolTable::kEos);
    return out;
  }

 private:
  SymbolTable table_;
};

struct VocabBuildResult {
  HybridVocabulary vocab;
  std::vector<SymVec> streams;  // one per training utterance
};

// Establishes W and C from training token sequences and emits the
// training symbol streams. Exactly one occurrence of each word type --
// the first in stream order -- is replaced by its spelled-out form, so
// character statistics of every type enter training and singleton
// types are excluded from W.
//
// Tokens must already be character-encoded through the CharAlphabet;
// `alphabet` fixes C (★ included) independently of which characters
// happen to occur inside tokens.
inline VocabBuildResult BuildVocab(
    const std::vector<std::vector<std::string>>& train_tokens,
    const CharAlphabet& alphabet) {
  if (train_tokens.empty()) ThrowData("vocabulary build needs training data");
  VocabBuildResult result;
  SymbolTable& table = result.vocab.mutable_table();
  for (char32_t cp : alphabet.chars()) {
    if (!IsSpace(cp)) table.AddChar(cp);
  }
  table.AddChar(kUnknownChar);

  std::map<std::string, std::uint64_t> type_count;
  for (const auto& utt : train_tokens) {
    for (const auto& tok : utt) ++type_count[tok];
  }
  for (const auto& [type, count] : type_count) {
    if (count >= 2) table.AddWord(type);
  }

  std::map<std::string, bool> spelled;
  for (const auto& utt : train_tokens) {
    SymVec stream;
    for (const auto& tok : utt) {
      const SymId word = table.WordId(tok);
      bool& was_spelled = spelled[tok];
      if (word >= 0 && was_spelled) {
        stream.push_back(word);
      } else {
        SymVec chars = result.vocab.SpellOut(tok);
        stream.insert(stream.end(), chars.begin(), chars.end());
        stream.push_back(SymbolTable::kEow);
        was_spelled = true;
      }
    }
    stream.push_back(SymbolTable::kEos);
    result.streams.push_back(std::move(stream));
  }
  return result;
}

}  // namespace mtlm

#endif  // MTLM_SYMBOLS_HPP_
