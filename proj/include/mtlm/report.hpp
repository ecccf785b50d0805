// report.hpp
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
// Result assembly and rendering: the per-language results table
// (BPEC with ΔBPC in 0.01-bit units per model and text variant),
// rank-correlation statistics against counting complexity, and the
// scatter data behind the BPEC-vs-MCC and forms-vs-lemmata plots.
// Everything here renders to strings; callers decide where files go.

#ifndef MTLM_REPORT_HPP_
#define MTLM_REPORT_HPP_

#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mtlm/error.hpp"
#include "mtlm/eval.hpp"
#include "mtlm/stats.hpp"

namespace mtlm {

struct ResultCell {
  double bpec = 0.0;
  int dbpc_e2 = 0;
};

struct LangResults {
  double mcc = 0.0;
  // indexed [model kind][text variant]
  std::optional<ResultCell> cells[2][2];
};

using ResultsTable = std::map<std::string, LangResults>;

struct LanguagePoint {
  std::string lang;
  double mcc = 0.0;
  double bpec_form = 0.0;
  double bpec_lemma = 0.0;
};

namespace report_detail {

inline std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

inline std::string F2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string F6(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline std::string SignedDelta(int e2) {
  if (e2 == 0) return "0";
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%+d", e2);
  return buf;
}

}  // namespace report_detail

inline constexpr char kResultsCsvHeader[] =
    "lang,words_m,chars_m,mcc,ngram_form_bpec,ngram_form_dbpc_e2,"
    "ngram_lemma_bpec,ngram_lemma_dbpc_e2,lstm_form_bpec,lstm_form_dbpc_e2,"
    "lstm_lemma_bpec,lstm_lemma_dbpc_e2";

// Reads the per-language results fixture (the words_m/chars_m data
// sizes are informational and ignored here).
inline ResultsTable LoadResultsCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) ThrowData("empty results CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kResultsCsvHeader) ThrowData("unexpected results CSV header");
  ResultsTable out;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = report_detail::SplitCsvLine(line);
    if (f.size() != 12) ThrowData("malformed results CSV row: " + line);
    LangResults r;
    r.mcc = std::strtod(f[3].c_str(), nullptr);
    std::size_t col = 4;
    for (int kind = 0; kind < 2; ++kind) {
      for (int variant = 0; variant < 2; ++variant) {
        ResultCell cell;
        cell.bpec = std::strtod(f[col].c_str(), nullptr);
        cell.dbpc_e2 = std::stoi(f[col + 1]);
        r.cells[kind][variant] = cell;
        col += 2;
      }
    }
    out[f[0]] = r;
  }
  if (out.empty()) ThrowData("results CSV has no data rows");
  return out;
}

// Assembles results from evaluation records plus a counting-complexity
// map. Every requested (lang, model, variant) must be present.
inline ResultsTable BuildResults(const std::vector<EvalRecord>& records,
                                 const std::map<std::string, double>& mcc,
                                 bool want_lemma) {
  ResultsTable out;
  for (const auto& r : records) {
    auto it = mcc.find(r.lang);
    if (it == mcc.end()) {
      ThrowData("no counting complexity value for language " + r.lang);
    }
    LangResults& row = out[r.lang];
    row.mcc = it->second;
    ResultCell cell;
    cell.bpec = r.bpec;
    cell.dbpc_e2 = DeltaReport(r).value_e2;
    row.cells[static_cast<int>(r.model_kind)][static_cast<int>(r.variant)] =
        cell;
  }
  std::string missing;
  for (const auto& [lang, row] : out) {
    for (int kind = 0; kind < 2; ++kind) {
      for (int variant = 0; variant < (want_lemma ? 2 : 1); ++variant) {
        if (!row.cells[kind][variant]) {
          missing += " (" + lang + ", " +
                     ModelKindName(static_cast<ModelKind>(kind)) + ", " +
                     VariantName(static_cast<TextVariant>(variant)) + ")";
        }
      }
    }
  }
  if (!missing.empty()) ThrowData("missing evaluation cells:" + missing);
  return out;
}

inline std::vector<LanguagePoint> PointsFor(const ResultsTable& results,
                                            ModelKind kind) {
  std::vector<LanguagePoint> out;
  for (const auto& [lang, row] : results) {
    const auto& form = row.cells[static_cast<int>(kind)][0];
    const auto& lemma = row.cells[static_cast<int>(kind)][1];
    if (!form) continue;
    LanguagePoint p;
    p.lang = lang;
    p.mcc = row.mcc;
    p.bpec_form = form->bpec;
    p.bpec_lemma = lemma ? lemma->bpec : 0.0;
    out.push_back(std::move(p));
  }
  return out;
}

// Plain-text table in the layout of the published results: one row per
// language, `BPEC/ΔBPC(e-2)` per model and variant.
inline std::string RenderTable(const ResultsTable& results) {
  std::ostringstream out;
  out << "lang  mcc   ngram form   ngram lemma  lstm form    lstm lemma\n";
  for (const auto& [lang, row] : results) {
    char head[32];
    std::snprintf(head, sizeof(head), "%-5s %-5.0f ", lang.c_str(), row.mcc);
    out << head;
    for (int kind = 0; kind < 2; ++kind) {
      for (int variant = 0; variant < 2; ++variant) {
        const auto& cell = row.cells[kind][variant];
        std::string text =
            cell ? report_detail::F2(cell->bpec) + "/" +
                       report_detail::SignedDelta(cell->dbpc_e2)
                 : std::string("-");
        char padded[32];
        std::snprintf(padded, sizeof(padded), "%-13s", text.c_str());
        out << padded;
      }
    }
    out << '\n';
  }
  return out.str();
}

struct AnalysisStats {
  ModelKind kind = ModelKind::kLstm;
  bool has_lemma = false;
  double rho_form = 0.0;
  double p_form = 1.0;
  double std_form = 0.0;
  double rho_lemma = 0.0;
  double p_lemma = 1.0;
  double std_lemma = 0.0;
};

inline AnalysisStats ComputeStats(const ResultsTable& results, ModelKind kind,
                                  std::size_t permutations,
                                  std::uint64_t seed) {
  const auto points = PointsFor(results, kind);
  if (points.size() < 3) {
    ThrowData("analysis needs at least 3 languages with results");
  }
  std::vector<double> mcc, form, lemma;
  bool has_lemma = true;
  for (const auto& p : points) {
    mcc.push_back(p.mcc);
    form.push_back(p.bpec_form);
    lemma.push_back(p.bpec_lemma);
    if (!results.at(p.lang).cells[static_cast<int>(kind)][1]) {
      has_lemma = false;
    }
  }
  AnalysisStats s;
  s.kind = kind;
  s.has_lemma = has_lemma;
  s.rho_form = SpearmanRho(mcc, form);
  s.p_form = SpearmanPermutationPValue(mcc, form, permutations, seed);
  s.std_form = SampleStdDev(form);
  if (has_lemma) {
    s.rho_lemma = SpearmanRho(mcc, lemma);
    s.p_lemma = SpearmanPermutationPValue(mcc, lemma, permutations, seed);
    s.std_lemma = SampleStdDev(lemma);
  }
  return s;
}

inline std::string RenderStatsCsv(const std::vector<AnalysisStats>& stats) {
  std::ostringstream out;
  out << "model,rho_form,p_form,std_form_bpec,rho_lemma,p_lemma,"
         "std_lemma_bpec\n";
  for (const auto& s : stats) {
    out << ModelKindName(s.kind) << ',' << report_detail::F6(s.rho_form)
        << ',' << report_detail::F6(s.p_form) << ','
        << report_detail::F6(s.std_form) << ',';
    if (s.has_lemma) {
      out << report_detail::F6(s.rho_lemma) << ','
          << report_detail::F6(s.p_lemma) << ','
          << report_detail::F6(s.std_lemma);
    } else {
      out << ",,";
    }
    out << '\n';
  }
  return out.str();
}

enum class ScatterSeries { kForm, kLemma, kDifference };

// BPEC-vs-MCC scatter data for one model kind; y is the form BPEC, the
// lemma BPEC, or their per-language difference.
inline std::string RenderScatterCsv(const ResultsTable& results,
                                    ModelKind kind, ScatterSeries series) {
  const auto points = PointsFor(results, kind);
  std::ostringstream out;
  out << "lang,mcc,bpec\n";
  for (const auto& p : points) {
    double y = 0.0;
    switch (series) {
      case ScatterSeries::kForm: y = p.bpec_form; break;
      case ScatterSeries::kLemma: y = p.bpec_lemma; break;
      case ScatterSeries::kDifference: y = p.bpec_form - p.bpec_lemma; break;
    }
    out << p.lang << ',' << report_detail::F6(p.mcc) << ','
        << report_detail::F6(y) << '\n';
  }
  return out.str();
}

// Forms-vs-lemmata scatter: each language's two BPEC values under one
// model, with MCC carried along for shading.
inline std::string RenderFormsVsLemmataCsv(const ResultsTable& results,
                                           ModelKind kind) {
  const auto points = PointsFor(results, kind);
  std::ostringstream out;
  out << "lang,bpec_form,bpec_lemma,mcc\n";
  for (const auto& p : points) {
    out << p.lang << ',' << report_detail::F6(p.bpec_form) << ','
        << report_detail::F6(p.bpec_lemma) << ','
        << report_detail::F6(p.mcc) << '\n';
  }
  return out.str();
}

// OLS lines for each scatter series of each model kind.
inline std::string RenderRegressionsCsv(const ResultsTable& results) {
  std::ostringstream out;
  out << "model,series,slope,intercept,r\n";
  for (int kind = 0; kind < 2; ++kind) {
    const auto points = PointsFor(results, static_cast<ModelKind>(kind));
    if (points.size() < 2) continue;
    std::vector<double> mcc, form, lemma, diff;
    bool has_lemma = true;
    for (const auto& p : points) {
      mcc.push_back(p.mcc);
      form.push_back(p.bpec_form);
      lemma.push_back(p.bpec_lemma);
      diff.push_back(p.bpec_form - p.bpec_lemma);
      if (!results.at(p.lang).cells[kind][1]) has_lemma = false;
    }
    const char* name = ModelKindName(static_cast<ModelKind>(kind));
    auto emit = [&](const char* series, const std::vector<double>& y) {
      const LinReg reg = LinearRegression(mcc, y);
      out << name << ',' << series << ',' << report_detail::F6(reg.slope)
          << ',' << report_detail::F6(reg.intercept) << ','
          << report_detail::F6(reg.r) << '\n';
    };
    emit("form", form);
    if (has_lemma) {
      emit("lemma", lemma);
      emit("difference", diff);
    }
  }
  return out.str();
}

}  // namespace mtlm

#endif  // MTLM_REPORT_HPP_
