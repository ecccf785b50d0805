// morphology.hpp
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
// Morphological lexicon parsing and counting complexity: the number of
// distinct inflectional feature bundles attested in a lexicon. Bundle
// identity is exact canonical tag-set equality; the metric is crude on
// purpose.

#ifndef MTLM_MORPHOLOGY_HPP_
#define MTLM_MORPHOLOGY_HPP_

#include <fstream>
#include <istream>
#include <set>
#include <string>
#include <vector>

#include "mtlm/error.hpp"

namespace mtlm {

struct LexiconEntry {
  std::string lemma;
  std::string form;
  std::set<std::string> features;  // canonical: sorted, deduplicated
};

// Lines are `lemma<TAB>form<TAB>feat;feat;...`; blank lines skipped.
inline std::vector<LexiconEntry> ParseLexicon(std::istream& in,
                                              const std::string& name) {
  std::vector<LexiconEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = name + ":" + std::to_string(lineno);
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == '\t') {
        fields.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    if (fields.size() != 3) {
      ThrowData(where + ": expected 3 tab-separated fields, found " +
                std::to_string(fields.size()));
    }
    LexiconEntry e;
    e.lemma = fields[0];
    e.form = fields[1];
    start = 0;
    const std::string& feats = fields[2];
    for (std::size_t i = 0; i <= feats.size(); ++i) {
      if (i == feats.size() || feats[i] == ';') {
        std::string tag = feats.substr(start, i - start);
        if (!tag.empty()) e.features.insert(std::move(tag));
        start = i + 1;
      }
    }
    if (e.features.empty()) {
      ThrowData(where + ": entry has no feature tags");
    }
    out.push_back(std::move(e));
  }
  return out;
}

inline std::vector<LexiconEntry> ParseLexiconFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) ThrowData("cannot open lexicon file " + path);
  return ParseLexicon(in, path);
}

// Number of distinct canonical feature bundles across all entries.
inline std::size_t CountingComplexity(
    const std::vector<LexiconEntry>& entries) {
  std::set<std::set<std::string>> bundles;
  for (const auto& e : entries) bundles.insert(e.features);
  return bundles.size();
}

}  // namespace mtlm

#endif  // MTLM_MORPHOLOGY_HPP_
