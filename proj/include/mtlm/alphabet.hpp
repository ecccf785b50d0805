// alphabet.hpp
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
// Character alphabet with rare-character replacement: characters seen
// fewer than `threshold` times in training text are folded into the
// distinguished unknown-character symbol ★, as is anything unseen.

#ifndef MTLM_ALPHABET_HPP_
#define MTLM_ALPHABET_HPP_

#include <cstdint>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mtlm/error.hpp"
#include "mtlm/utf8.hpp"

namespace mtlm {

inline constexpr char32_t kUnknownChar = U'★';  // ★

class CharAlphabet {
 public:
  CharAlphabet() { chars_.insert(kUnknownChar); }

  // Builds from training text: characters with frequency >= threshold
  // are kept, ★ is always a member.
  template <typename TextRange>
  static CharAlphabet Build(const TextRange& train_texts,
                            std::uint64_t threshold) {
    if (threshold < 1) ThrowConfig("alphabet threshold must be >= 1");
    CharAlphabet a;
    std::map<char32_t, std::uint64_t> raw;
    for (const std::string& text : train_texts) {
      for (char32_t cp : DecodeUtf8(text, "train text")) ++raw[cp];
    }
    for (const auto& [cp, count] : raw) {
      if (count >= threshold) {
        a.chars_.insert(cp);
        a.counts_[cp] = count;
      }
    }
    a.counts_.try_emplace(kUnknownChar, 0);
    return a;
  }

  bool Contains(char32_t cp) const { return chars_.count(cp) != 0; }

  // Maps any string over this alphabet; out-of-alphabet characters
  // become ★.
  std::vector<char32_t> Encode(std::string_view text,
                               const char* where = "input") const {
    std::vector<char32_t> cps = DecodeUtf8(text, where);
    for (char32_t& cp : cps) {
      if (!chars_.count(cp)) cp = kUnknownChar;
    }
    return cps;
  }

  std::string EncodeToString(std::string_view text,
                             const char* where = "input") const {
    return EncodeUtf8(Encode(text, where));
  }

  const std::set<char32_t>& chars() const { return chars_; }
  const std::map<char32_t, std::uint64_t>& counts() const { return counts_; }

  void Save(std::ostream& out) const {
    for (char32_t cp : chars_) {
      auto it = counts_.find(cp);
      const std::uint64_t count = it == counts_.end() ? 0 : it->second;
      std::ostringstream hex;
      hex << "U+" << std::uppercase << std::hex << std::setw(4)
          << std::setfill('0') << static_cast<std::uint32_t>(cp);
      out << hex.str() << '\t' << count << '\n';
    }
  }

  static CharAlphabet Load(std::istream& in) {
    CharAlphabet a;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos || line.rfind("U+", 0) != 0) {
        ThrowData("malformed alphabet line " + std::to_string(lineno));
      }
      const char32_t cp = static_cast<char32_t>(
          std::stoul(line.substr(2, tab - 2), nullptr, 16));
      a.chars_.insert(cp);
      a.counts_[cp] = std::stoull(line.substr(tab + 1));
    }
    return a;
  }

 private:
  std::set<char32_t> chars_;
  std::map<char32_t, std::uint64_t> counts_;
};

}  // namespace mtlm

#endif  // MTLM_ALPHABET_HPP_
