// corpus.hpp
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
// Utterance-aligned multi-text: per-language files of `id<TAB>text`
// lines sharing utterance ids across languages. Ingestion keeps the
// ids present in every configured language, assigns seeded
// train/dev/test splits, and reports what was dropped.

#ifndef MTLM_CORPUS_HPP_
#define MTLM_CORPUS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mtlm/error.hpp"
#include "mtlm/rng.hpp"
#include "mtlm/tokenizer.hpp"

namespace mtlm {

struct Utterance {
  std::string id;
  std::string lang;
  std::string raw;
  std::vector<std::string> tokens;

  std::string canonical() const { return JoinTokens(tokens); }
};

enum class Split { kTrain, kDev, kTest };

inline const char* SplitName(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "?";
}

inline Split SplitFromName(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "dev") return Split::kDev;
  if (name == "test") return Split::kTest;
  ThrowData("unknown split label '" + name + "'");
}

struct SplitRatios {
  double train = 0.8;
  double dev = 0.1;
  double test = 0.1;

  void Validate() const {
    if (train <= 0 || dev <= 0 || test <= 0) {
      ThrowConfig("split ratios must all be positive");
    }
    if (std::abs(train + dev + test - 1.0) > 1e-9) {
      ThrowConfig("split ratios must sum to 1");
    }
  }
};

struct AlignedCorpus {
  std::vector<std::string> languages;
  // id -> lang -> utterance; only fully aligned ids are retained.
  std::map<std::string, std::map<std::string, Utterance>> utterances;
  std::map<std::string, Split> split;
  // utterances read per language but dropped for lacking counterparts.
  std::map<std::string, std::size_t> dropped;

  std::vector<std::string> IdsInSplit(Split s) const {
    std::vector<std::string> out;
    for (const auto& [id, label] : split) {
      if (label == s) out.push_back(id);
    }
    return out;
  }
};

// Reads one multi-text file. Lines are `id<TAB>text`; the first tab
// separates the fields, so text may itself contain tabs. Blank lines
// are skipped. Duplicate ids and invalid UTF-8 are hard errors.
inline std::vector<Utterance> ReadMultitextFile(const std::string& path,
                                                const std::string& lang) {
  std::ifstream in(path, std::ios::binary);
  if (!in) ThrowData("cannot open multi-text file " + path);
  std::vector<Utterance> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      ThrowData(where + ": expected id<TAB>text");
    }
    Utterance utt;
    utt.id = line.substr(0, tab);
    utt.lang = lang;
    utt.raw = line.substr(tab + 1);
    if (utt.id.empty()) ThrowData(where + ": empty utterance id");
    if (!seen.insert(utt.id).second) {
      ThrowData(where + ": duplicate utterance id '" + utt.id + "' in " +
                lang);
    }
    utt.tokens = Tokenize(utt.raw, where.c_str());
    out.push_back(std::move(utt));
  }
  return out;
}

// Joins per-language utterance lists on shared ids. Only ids present in
// every language survive; everything else is tallied in `dropped`.
inline AlignedCorpus Align(
    const std::map<std::string, std::vector<Utterance>>& by_lang) {
  if (by_lang.empty()) ThrowConfig("alignment requires at least one language");
  AlignedCorpus corpus;
  std::map<std::string, std::set<std::string>> ids;
  for (const auto& [lang, utts] : by_lang) {
    corpus.languages.push_back(lang);
    auto& lang_ids = ids[lang];
    for (const auto& u : utts) {
      if (!lang_ids.insert(u.id).second) {
        ThrowData("duplicate utterance id '" + u.id + "' in " + lang);
      }
    }
  }
  std::set<std::string> shared = ids.begin()->second;
  for (const auto& [lang, lang_ids] : ids) {
    std::set<std::string> next;
    std::set_intersection(shared.begin(), shared.end(), lang_ids.begin(),
                          lang_ids.end(), std::inserter(next, next.begin()));
    shared.swap(next);
  }
  for (const auto& [lang, utts] : by_lang) {
    corpus.dropped[lang] = utts.size() - shared.size();
    for (const auto& u : utts) {
      if (shared.count(u.id)) corpus.utterances[u.id][lang] = u;
    }
  }
  return corpus;
}

// Deterministic split assignment: sort ids, shuffle with the seeded
// engine, then cut contiguously by ratio. Every split gets at least one
// id; counts stay within one utterance of the exact ratios.
inline std::map<std::string, Split> AssignSplits(
    const std::set<std::string>& ids, const SplitRatios& ratios,
    std::uint64_t seed) {
  ratios.Validate();
  const std::size_t n = ids.size();
  if (n < 3) {
    ThrowData("need at least 3 utterances to form nonempty splits, got " +
              std::to_string(n));
  }
  std::vector<std::string> order(ids.begin(), ids.end());
  std::sort(order.begin(), order.end());
  Rng rng(seed);
  rng.Shuffle(order);

  auto clamp = [](std::size_t v, std::size_t lo, std::size_t hi) {
    return std::max(lo, std::min(v, hi));
  };
  std::size_t n_train = clamp(
      static_cast<std::size_t>(std::llround(ratios.train * n)), 1, n - 2);
  std::size_t n_dev =
      clamp(static_cast<std::size_t>(std::llround(ratios.dev * n)), 1,
            n - n_train - 1);

  std::map<std::string, Split> out;
  for (std::size_t i = 0; i < n; ++i) {
    Split s = i < n_train              ? Split::kTrain
              : i < n_train + n_dev    ? Split::kDev
                                       : Split::kTest;
    out[order[i]] = s;
  }
  return out;
}

inline void WriteSplitManifest(std::ostream& out,
                               const std::map<std::string, Split>& split) {
  for (const auto& [id, s] : split) {
    out << id << '\t' << SplitName(s) << '\n';
  }
}

inline std::map<std::string, Split> ReadSplitManifest(std::istream& in) {
  std::map<std::string, Split> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) ThrowData("malformed split manifest line");
    out[line.substr(0, tab)] = SplitFromName(line.substr(tab + 1));
  }
  return out;
}

}  // namespace mtlm

#endif  // MTLM_CORPUS_HPP_
