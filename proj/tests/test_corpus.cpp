// test_corpus.cpp
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

#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mtlm/alphabet.hpp"
#include "mtlm/corpus.hpp"

using namespace mtlm;

namespace {

Utterance U(const std::string& id, const std::string& lang,
            const std::string& raw) {
  return Utterance{id, lang, raw, Tokenize(raw)};
}

}  // namespace

TEST_CASE("alignment keeps ids present in every language") {
  std::map<std::string, std::vector<Utterance>> files;
  files["en"] = {U("1", "en", "one"), U("2", "en", "two"),
                 U("3", "en", "three")};
  files["de"] = {U("1", "de", "eins"), U("3", "de", "drei")};
  AlignedCorpus c = Align(files);
  CHECK(c.utterances.size() == 2);
  CHECK(c.utterances.count("1") == 1);
  CHECK(c.utterances.count("3") == 1);
  CHECK(c.dropped.at("en") == 1);
  CHECK(c.dropped.at("de") == 0);
  for (const auto& [id, per_lang] : c.utterances) {
    CHECK(per_lang.size() == c.languages.size());
  }
}

TEST_CASE("alignment with an empty language yields an empty corpus") {
  std::map<std::string, std::vector<Utterance>> files;
  files["en"] = {U("1", "en", "one"), U("2", "en", "two")};
  files["de"] = {};
  AlignedCorpus c = Align(files);
  CHECK(c.utterances.empty());
  CHECK(c.dropped.at("en") == 2);
  CHECK(c.dropped.at("de") == 0);
}

TEST_CASE("duplicate utterance id is rejected with the offending id") {
  std::map<std::string, std::vector<Utterance>> files;
  files["en"] = {U("7", "en", "a"), U("7", "en", "b")};
  CHECK_THROWS_WITH(Align(files), Catch::Matchers::ContainsSubstring("7"));
}

TEST_CASE("multitext reader parses id<TAB>text and rejects duplicates") {
  {
    std::istringstream in("1\thello there\n2\tbye\n");
    std::ofstream dummy;  // reader wants a path; go through a temp file
  }
  const std::string path = "mtlm_test_multitext.tsv";
  {
    std::ofstream out(path, std::ios::binary);
    out << "1\thello there\n\n2\tbye , now\n";
  }
  auto utts = ReadMultitextFile(path, "en");
  REQUIRE(utts.size() == 2);
  CHECK(utts[0].id == "1");
  CHECK(utts[0].tokens == std::vector<std::string>{"hello", "there"});
  CHECK(utts[1].tokens == std::vector<std::string>{"bye", ",", "now"});
  {
    std::ofstream out(path, std::ios::binary);
    out << "1\ta\n1\tb\n";
  }
  CHECK_THROWS_AS(ReadMultitextFile(path, "en"), Error);
  std::remove(path.c_str());
}

TEST_CASE("split counts follow the ratios") {
  std::set<std::string> ids;
  for (int i = 0; i < 10; ++i) ids.insert("id" + std::to_string(i));
  auto split = AssignSplits(ids, {0.8, 0.1, 0.1}, 7);
  std::map<Split, int> counts;
  for (const auto& [id, s] : split) ++counts[s];
  CHECK(counts[Split::kTrain] == 8);
  CHECK(counts[Split::kDev] == 1);
  CHECK(counts[Split::kTest] == 1);
}

TEST_CASE("split assignment is deterministic and a bijection") {
  std::set<std::string> ids;
  for (int i = 0; i < 100; ++i) ids.insert("u" + std::to_string(i));
  auto a = AssignSplits(ids, {0.8, 0.1, 0.1}, 42);
  auto b = AssignSplits(ids, {0.8, 0.1, 0.1}, 42);
  CHECK(a == b);
  CHECK(a.size() == ids.size());
  for (const auto& id : ids) CHECK(a.count(id) == 1);
}

TEST_CASE("different seeds permute but keep the same counts") {
  std::set<std::string> ids;
  for (int i = 0; i < 100; ++i) ids.insert("u" + std::to_string(i));
  auto a = AssignSplits(ids, {0.8, 0.1, 0.1}, 1);
  auto b = AssignSplits(ids, {0.8, 0.1, 0.1}, 2);
  CHECK(a != b);
  std::map<Split, int> ca, cb;
  for (const auto& [id, s] : a) ++ca[s];
  for (const auto& [id, s] : b) ++cb[s];
  CHECK(ca == cb);
  CHECK(ca[Split::kTrain] == 80);
  CHECK(ca[Split::kDev] == 10);
  CHECK(ca[Split::kTest] == 10);
}

TEST_CASE("fewer than 3 ids cannot be split") {
  CHECK_THROWS_AS(AssignSplits({"a", "b"}, {0.8, 0.1, 0.1}, 1), Error);
}

TEST_CASE("every split is nonempty even under extreme ratios") {
  std::set<std::string> ids{"a", "b", "c"};
  auto split = AssignSplits(ids, {0.98, 0.01, 0.01}, 3);
  std::map<Split, int> counts;
  for (const auto& [id, s] : split) ++counts[s];
  CHECK(counts[Split::kTrain] >= 1);
  CHECK(counts[Split::kDev] >= 1);
  CHECK(counts[Split::kTest] >= 1);
}

TEST_CASE("split manifest round trips") {
  std::set<std::string> ids{"a", "b", "c", "d"};
  auto split = AssignSplits(ids, {0.5, 0.25, 0.25}, 9);
  std::ostringstream out;
  WriteSplitManifest(out, split);
  std::istringstream in(out.str());
  CHECK(ReadSplitManifest(in) == split);
}

TEST_CASE("alphabet keeps frequent characters and encodes the rest as ★") {
  std::vector<std::string> train{"aab"};
  CharAlphabet a = CharAlphabet::Build(train, 2);
  CHECK(a.Contains(U'a'));
  CHECK_FALSE(a.Contains(U'b'));
  CHECK(a.Contains(kUnknownChar));
  CHECK(a.Encode("aab") ==
        std::vector<char32_t>{U'a', U'a', kUnknownChar});
}

TEST_CASE("threshold 1 keeps every observed character") {
  std::vector<std::string> train{"xyz"};
  CharAlphabet a = CharAlphabet::Build(train, 1);
  CHECK(a.Contains(U'x'));
  CHECK(a.Contains(U'y'));
  CHECK(a.Contains(U'z'));
  CHECK(a.Contains(kUnknownChar));
}

TEST_CASE("unseen characters encode as ★") {
  std::vector<std::string> train{"abc abc"};
  CharAlphabet a = CharAlphabet::Build(train, 1);
  const auto enc = a.Encode("abʒ");  // ʒ never seen
  CHECK(enc == std::vector<char32_t>{U'a', U'b', kUnknownChar});
  // No symbol outside the alphabet survives encoding.
  for (char32_t cp : enc) CHECK(a.Contains(cp));
}

TEST_CASE("alphabet serialization round trips") {
  std::vector<std::string> train{"hello world", "hello again"};
  CharAlphabet a = CharAlphabet::Build(train, 2);
  std::ostringstream out;
  a.Save(out);
  std::istringstream in(out.str());
  CharAlphabet b = CharAlphabet::Load(in);
  CHECK(a.chars() == b.chars());
  CHECK(a.counts() == b.counts());
}
