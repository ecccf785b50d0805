// tokenizer.hpp
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

#ifndef MTLM_TOKENIZER_HPP_
#define MTLM_TOKENIZER_HPP_

#include <string>
#include <string_view>
#include <vector>

#include "mtlm/utf8.hpp"

namespace mtlm {

// Splits text into tokens: runs of whitespace collapse into boundaries,
// every punctuation character (Unicode category P*) becomes a token of
// its own. Idempotent on its own space-joined output.
inline std::vector<std::string> Tokenize(std::string_view raw,
                                         const char* where = "input") {
  std::vector<std::string> tokens;
  std::string cur;
  std::size_t pos = 0;
  auto flush = [&]() {
    if (!cur.empty()) {
      tokens.push_back(cur);
      cur.clear();
    }
  };
  while (pos < raw.size()) {
    const char32_t cp = DecodeOne(raw, pos, where);
    if (IsSpace(cp)) {
      flush();
    } else if (IsPunct(cp)) {
      flush();
      tokens.push_back(EncodeUtf8(cp));
    } else {
      AppendUtf8(cur, cp);
    }
  }
  flush();
  return tokens;
}

inline std::string JoinTokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

// The single form of an utterance all models and metrics agree on:
// tokens separated by single spaces.
inline std::string CanonicalText(std::string_view raw,
                                 const char* where = "input") {
  return JoinTokens(Tokenize(raw, where));
}

}  // namespace mtlm

#endif  // MTLM_TOKENIZER_HPP_
