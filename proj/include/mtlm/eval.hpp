// eval.hpp
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
// Bits-per-character metrics. BPC divides an utterance's total bits by
// its own character count plus one (the EOS position); BPEC divides the
// same bits by the aligned original-English length instead, which makes
// scores comparable across orthographies: any re-spelling that leaves
// the assigned probability unchanged leaves BPEC unchanged. Corpus
// aggregation sums numerators and denominators over utterances before
// dividing; it is not the mean of per-utterance ratios.
//
// Characters are counted on the canonical (token-joined) text, spaces
// included; ★-substituted characters still occupy their positions. The
// English side is always the original forms, never lemmatized.

#ifndef MTLM_EVAL_HPP_
#define MTLM_EVAL_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "mtlm/corpus.hpp"
#include "mtlm/error.hpp"
#include "mtlm/utf8.hpp"

namespace mtlm {

enum class ModelKind { kNgram, kLstm };
enum class TextVariant { kForm, kLemma };

inline const char* ModelKindName(ModelKind k) {
  return k == ModelKind::kNgram ? "ngram" : "lstm";
}
inline const char* VariantName(TextVariant v) {
  return v == TextVariant::kForm ? "form" : "lemma";
}
inline ModelKind ModelKindFromName(const std::string& s) {
  if (s == "ngram") return ModelKind::kNgram;
  if (s == "lstm") return ModelKind::kLstm;
  ThrowConfig("unknown model kind '" + s + "' (expected ngram or lstm)");
}
inline TextVariant VariantFromName(const std::string& s) {
  if (s == "form") return TextVariant::kForm;
  if (s == "lemma") return TextVariant::kLemma;
  ThrowConfig("unknown variant '" + s + "' (expected form or lemma)");
}

struct UtteranceScore {
  std::string id;
  double bits = 0.0;          // -log2 p(utterance)
  std::uint64_t own_len = 1;  // |c| + 1
  std::uint64_t en_len = 1;   // |c_English| + 1, original forms
};

// `bits_of` returns -log2 p for the utterance under some model. The
// English utterance supplies the reference length and must be aligned
// (same id).
inline UtteranceScore ScoreUtterance(
    const std::function<double(const Utterance&)>& bits_of,
    const Utterance& utt, const Utterance& english) {
  if (utt.id != english.id) {
    ThrowData("utterance " + utt.id + " has no aligned English reference");
  }
  UtteranceScore s;
  s.id = utt.id;
  s.bits = bits_of(utt);
  s.own_len = CpLength(utt.canonical()) + 1;
  s.en_len = CpLength(english.canonical()) + 1;
  return s;
}

struct EvalRecord {
  std::string lang;
  ModelKind model_kind = ModelKind::kNgram;
  TextVariant variant = TextVariant::kForm;
  double bits_total = 0.0;
  std::uint64_t own_chars = 0;
  std::uint64_t en_chars = 0;
  double bpc = 0.0;
  double bpec = 0.0;
  double delta_bpc = 0.0;  // bpec - bpc
};

inline EvalRecord Aggregate(const std::string& lang, ModelKind kind,
                            TextVariant variant,
                            const std::vector<UtteranceScore>& scores) {
  if (scores.empty()) ThrowData("cannot aggregate an empty score list");
  EvalRecord r;
  r.lang = lang;
  r.model_kind = kind;
  r.variant = variant;
  for (const auto& s : scores) {
    r.bits_total += s.bits;
    r.own_chars += s.own_len;
    r.en_chars += s.en_len;
  }
  r.bpc = r.bits_total / static_cast<double>(r.own_chars);
  r.bpec = r.bits_total / static_cast<double>(r.en_chars);
  r.delta_bpc = r.bpec - r.bpc;
  return r;
}

enum class DeltaSign { kPositive, kNegative, kZero };

struct DeltaBpcReport {
  int value_e2 = 0;  // (bpec - bpc) in 0.01-bit units, rounded
  DeltaSign sign = DeltaSign::kZero;
};

// Sign class follows the rounded display value, so a row printed as 0
// is classed zero.
inline DeltaBpcReport DeltaReport(double delta_bpc) {
  DeltaBpcReport d;
  d.value_e2 = static_cast<int>(std::llround(delta_bpc * 100.0));
  d.sign = d.value_e2 > 0   ? DeltaSign::kPositive
           : d.value_e2 < 0 ? DeltaSign::kNegative
                            : DeltaSign::kZero;
  return d;
}

inline DeltaBpcReport DeltaReport(const EvalRecord& r) {
  return DeltaReport(r.delta_bpc);
}

inline constexpr char kEvalCsvHeader[] =
    "lang,model,variant,bits_total,own_chars,en_chars,bpc,bpec,delta_bpc_e2";

inline void WriteEvalCsv(std::ostream& out,
                         const std::vector<EvalRecord>& records) {
  out << kEvalCsvHeader << '\n';
  char buf[64];
  auto f6 = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf);
  };
  for (const auto& r : records) {
    out << r.lang << ',' << ModelKindName(r.model_kind) << ','
        << VariantName(r.variant) << ',' << f6(r.bits_total) << ','
        << r.own_chars << ',' << r.en_chars << ',' << f6(r.bpc) << ','
        << f6(r.bpec) << ',' << DeltaReport(r).value_e2 << '\n';
  }
}

inline std::vector<EvalRecord> ReadEvalCsv(std::istream& in) {
  std::vector<EvalRecord> out;
  std::string line;
  if (!std::getline(in, line)) ThrowData("empty eval CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kEvalCsvHeader) ThrowData("unexpected eval CSV header");
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        f.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    if (f.size() != 9) ThrowData("malformed eval CSV row: " + line);
    EvalRecord r;
    r.lang = f[0];
    r.model_kind = ModelKindFromName(f[1]);
    r.variant = VariantFromName(f[2]);
    r.bits_total = std::strtod(f[3].c_str(), nullptr);
    r.own_chars = std::stoull(f[4]);
    r.en_chars = std::stoull(f[5]);
    r.bpc = std::strtod(f[6].c_str(), nullptr);
    r.bpec = std::strtod(f[7].c_str(), nullptr);
    r.delta_bpc = r.bpec - r.bpc;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace mtlm

#endif  // MTLM_EVAL_HPP_
