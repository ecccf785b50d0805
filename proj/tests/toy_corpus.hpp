// toy_corpus.hpp
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
// Seeded random toy corpora for oracle tests: small word inventory,
// short utterances, occasional rare characters so ★ handling gets
// exercised.

#ifndef MTLM_TESTS_TOY_CORPUS_HPP_
#define MTLM_TESTS_TOY_CORPUS_HPP_

#include <string>
#include <vector>

#include "mtlm/alphabet.hpp"
#include "mtlm/rng.hpp"
#include "mtlm/symbols.hpp"
#include "mtlm/tokenizer.hpp"

namespace mtlm::testing {

struct ToyCorpus {
  std::vector<std::vector<std::string>> tokens;  // already ★-encoded
  VocabBuildResult built;
};

// Roughly `budget` stream symbols of random text (worst-case overshoot
// is one short utterance, ~25 symbols). Threshold 2 on the alphabet
// makes the rarest characters fold into ★.
inline ToyCorpus MakeToyCorpus(Rng& rng, std::size_t budget = 160,
                               std::uint64_t threshold = 2) {
  static const std::vector<std::string> pool{
      "a", "b", "c", "ab", "ba", "ac", "abc", "bc", "cab", "q", "zq"};
  std::vector<std::vector<std::string>> raw_utts;
  std::size_t symbols = 0;
  while (symbols < budget) {
    std::vector<std::string> utt;
    const std::size_t len = rng.NextIndex(6);
    for (std::size_t i = 0; i < len; ++i) {
      const std::string& tok = pool[rng.NextIndex(pool.size())];
      utt.push_back(tok);
      symbols += tok.size() + 1;
    }
    ++symbols;  // EOS
    raw_utts.push_back(std::move(utt));
    if (raw_utts.size() > 60) break;
  }

  std::vector<std::string> texts;
  for (const auto& utt : raw_utts) texts.push_back(JoinTokens(utt));
  ToyCorpus out;
  CharAlphabet alphabet = CharAlphabet::Build(texts, threshold);
  out.tokens = raw_utts;
  for (auto& utt : out.tokens) {
    for (auto& tok : utt) tok = alphabet.EncodeToString(tok);
  }
  out.built = BuildVocab(out.tokens, alphabet);
  return out;
}

}  // namespace mtlm::testing

#endif  // MTLM_TESTS_TOY_CORPUS_HPP_
