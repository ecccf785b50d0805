// pipeline.hpp
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
// The run pipeline: ingest -> train -> eval -> analyze/report. Commands
// validate and read all inputs before producing output, and every file
// is written to a temporary name and renamed into place, so a failed
// run leaves no partial artifacts. Given the same config and seeds,
// reruns produce byte-identical files.

#ifndef MTLM_PIPELINE_HPP_
#define MTLM_PIPELINE_HPP_

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mtlm/alphabet.hpp"
#include "mtlm/config.hpp"
#include "mtlm/corpus.hpp"
#include "mtlm/error.hpp"
#include "mtlm/eval.hpp"
#include "mtlm/lstm.hpp"
#include "mtlm/morphology.hpp"
#include "mtlm/ngram.hpp"
#include "mtlm/report.hpp"
#include "mtlm/symbols.hpp"

namespace mtlm {

inline void WriteFileAtomic(const std::filesystem::path& path,
                            const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) ThrowData("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) ThrowData("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string ReadWholeFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) ThrowData("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Output-directory layout.
struct ArtifactPaths {
  std::filesystem::path root;

  explicit ArtifactPaths(const RunConfig& cfg) : root(cfg.output_dir) {}

  std::filesystem::path CorpusFile(const std::string& lang,
                                   TextVariant variant, Split split) const {
    return root / "corpus" /
           (lang + "." + VariantName(variant) + "." + SplitName(split) +
            ".tsv");
  }
  std::filesystem::path SplitManifest() const {
    return root / "corpus" / "split_manifest.tsv";
  }
  std::filesystem::path DropReport() const {
    return root / "corpus" / "drop_report.tsv";
  }
  std::filesystem::path AlphabetFile(const std::string& lang,
                                     TextVariant variant) const {
    return root / "corpus" /
           ("alphabet." + lang + "." + VariantName(variant) + ".tsv");
  }
  std::filesystem::path ModelFile(const std::string& lang, ModelKind kind,
                                  TextVariant variant) const {
    const char* ext = kind == ModelKind::kNgram ? ".arpa" : ".lstm";
    return root / "models" /
           (lang + "." + std::string(ModelKindName(kind)) + "." +
            VariantName(variant) + ext);
  }
  std::filesystem::path TrainLog(const std::string& lang,
                                 TextVariant variant) const {
    return root / "models" / (lang + ".lstm." + VariantName(variant) + ".log");
  }
  std::filesystem::path EvalCsv() const {
    return root / "eval" / "records.csv";
  }
  std::filesystem::path ReportDir() const { return root / "report"; }
};

namespace pipeline_detail {

inline std::vector<TextVariant> Variants(const RunConfig& cfg) {
  std::vector<TextVariant> v{TextVariant::kForm};
  if (cfg.has_lemma_track()) v.push_back(TextVariant::kLemma);
  return v;
}

// id -> canonical text, from a corpus artifact.
inline std::map<std::string, std::string> ReadCorpusArtifact(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    ThrowData("missing corpus artifact " + path.string() +
              "; run `ingest` first");
  }
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      ThrowData("malformed corpus artifact line in " + path.string());
    }
    out[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return out;
}

inline CharAlphabet LoadAlphabet(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    ThrowData("missing alphabet artifact " + path.string() +
              "; run `ingest` first");
  }
  return CharAlphabet::Load(in);
}

inline std::vector<std::vector<std::string>> EncodedTokenStreams(
    const std::map<std::string, std::string>& texts,
    const CharAlphabet& alphabet) {
  std::vector<std::vector<std::string>> out;
  out.reserve(texts.size());
  for (const auto& [id, canonical] : texts) {
    std::vector<std::string> tokens = Tokenize(canonical);
    for (std::string& tok : tokens) tok = alphabet.EncodeToString(tok);
    out.push_back(std::move(tokens));
  }
  return out;
}

inline std::vector<std::vector<char32_t>> EncodedCharStreams(
    const std::map<std::string, std::string>& texts,
    const CharAlphabet& alphabet) {
  std::vector<std::vector<char32_t>> out;
  out.reserve(texts.size());
  for (const auto& [id, canonical] : texts) {
    out.push_back(alphabet.Encode(canonical));
  }
  return out;
}

inline std::map<std::string, double> LoadMccCsv(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) ThrowData("cannot open MCC file " + path.string());
  std::map<std::string, double> out;
  std::string line;
  if (!std::getline(in, line)) ThrowData("empty MCC file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "lang,mcc") ThrowData("MCC file must start with `lang,mcc`");
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) ThrowData("malformed MCC row: " + line);
    out[line.substr(0, comma)] =
        std::strtod(line.c_str() + comma + 1, nullptr);
  }
  return out;
}

}  // namespace pipeline_detail

// Reads and aligns the configured multi-text, assigns splits and writes
// the corpus artifacts (per-language per-variant split files, the split
// manifest, the drop report and the character alphabets).
inline void CmdIngest(const RunConfig& cfg) {
  cfg.Validate();
  const ArtifactPaths paths(cfg);

  std::map<std::string, std::vector<Utterance>> forms;
  for (const auto& lang : cfg.languages) {
    forms[lang] = ReadMultitextFile(cfg.form_files.at(lang), lang);
  }
  AlignedCorpus corpus = Align(forms);
  if (corpus.utterances.empty()) {
    ThrowData("alignment produced an empty corpus: no utterance id occurs "
              "in every configured language");
  }

  // The lemma track must mirror the form track id-for-id.
  std::map<std::string, std::map<std::string, Utterance>> lemma_by_lang;
  if (cfg.has_lemma_track()) {
    for (const auto& lang : cfg.languages) {
      auto utts = ReadMultitextFile(cfg.lemma_files.at(lang), lang);
      auto& index = lemma_by_lang[lang];
      for (auto& u : utts) index.emplace(u.id, std::move(u));
      for (const auto& [id, per_lang] : corpus.utterances) {
        if (!index.count(id)) {
          ThrowData("lemma file for " + lang + " is missing utterance id " +
                    id);
        }
      }
    }
  }

  std::set<std::string> ids;
  for (const auto& [id, per_lang] : corpus.utterances) ids.insert(id);
  corpus.split = AssignSplits(ids, cfg.split, cfg.split_seed);

  // All inputs validated; now produce artifacts.
  {
    std::ostringstream manifest;
    WriteSplitManifest(manifest, corpus.split);
    WriteFileAtomic(paths.SplitManifest(), manifest.str());
  }
  {
    std::ostringstream drop;
    for (const auto& [lang, count] : corpus.dropped) {
      drop << lang << '\t' << count << '\n';
    }
    WriteFileAtomic(paths.DropReport(), drop.str());
  }
  for (const auto& lang : cfg.languages) {
    for (TextVariant variant : pipeline_detail::Variants(cfg)) {
      std::map<Split, std::ostringstream> files;
      std::vector<std::string> train_texts;
      for (const auto& [id, per_lang] : corpus.utterances) {
        const std::string canonical =
            variant == TextVariant::kForm
                ? per_lang.at(lang).canonical()
                : lemma_by_lang.at(lang).at(id).canonical();
        const Split split = corpus.split.at(id);
        files[split] << id << '\t' << canonical << '\n';
        if (split == Split::kTrain) train_texts.push_back(canonical);
      }
      for (Split split : {Split::kTrain, Split::kDev, Split::kTest}) {
        WriteFileAtomic(paths.CorpusFile(lang, variant, split),
                        files[split].str());
      }
      const CharAlphabet alphabet =
          CharAlphabet::Build(train_texts, cfg.alphabet_threshold);
      std::ostringstream alpha;
      alphabet.Save(alpha);
      WriteFileAtomic(paths.AlphabetFile(lang, variant), alpha.str());
    }
  }
  std::cout << "ingest: " << corpus.utterances.size()
            << " aligned utterances across " << cfg.languages.size()
            << " languages";
  for (const auto& [lang, count] : corpus.dropped) {
    if (count) std::cout << "; dropped " << count << " from " << lang;
  }
  std::cout << "\n";
}

// Trains one model and writes its artifact (plus the per-epoch dev BPC
// log for the LSTM).
inline void TrainOne(const RunConfig& cfg, const std::string& lang,
                     ModelKind kind, TextVariant variant) {
  const ArtifactPaths paths(cfg);
  const CharAlphabet alphabet =
      pipeline_detail::LoadAlphabet(paths.AlphabetFile(lang, variant));
  const auto train = pipeline_detail::ReadCorpusArtifact(
      paths.CorpusFile(lang, variant, Split::kTrain));
  const auto dev = pipeline_detail::ReadCorpusArtifact(
      paths.CorpusFile(lang, variant, Split::kDev));
  if (train.empty() || dev.empty()) {
    ThrowData("empty train or dev split for " + lang);
  }

  if (kind == ModelKind::kNgram) {
    const auto streams =
        pipeline_detail::EncodedTokenStreams(train, alphabet);
    VocabBuildResult built = BuildVocab(streams, alphabet);
    const NgramModel model =
        TrainKneserNey(built.streams, built.vocab, cfg.ngram.order,
                       cfg.ngram.prune_all_word_span);
    std::ostringstream out;
    model.Save(out);
    WriteFileAtomic(paths.ModelFile(lang, kind, variant), out.str());
    std::cout << "train: " << lang << " ngram " << VariantName(variant)
              << " order " << cfg.ngram.order << " on " << train.size()
              << " utterances\n";
  } else {
    std::vector<char32_t> chars(alphabet.chars().begin(),
                                alphabet.chars().end());
    LstmTrainLog log;
    const LstmModel model = TrainLstm(
        cfg.lstm, pipeline_detail::EncodedCharStreams(train, alphabet),
        pipeline_detail::EncodedCharStreams(dev, alphabet), chars, &log);
    std::ostringstream out;
    model.Save(out);
    WriteFileAtomic(paths.ModelFile(lang, kind, variant), out.str());
    std::ostringstream lg;
    for (std::size_t e = 0; e < log.dev_bpc.size(); ++e) {
      lg << e << '\t' << FormatG17(log.dev_bpc[e]) << '\n';
    }
    lg << "best\t" << log.best_epoch << '\t' << FormatG17(log.best_dev_bpc)
       << '\n';
    WriteFileAtomic(paths.TrainLog(lang, variant), lg.str());
    std::cout << "train: " << lang << " lstm " << VariantName(variant)
              << " best dev bpc " << log.best_dev_bpc << " at epoch "
              << log.best_epoch << "\n";
  }
}

// Empty filters mean "all".
inline void CmdTrain(const RunConfig& cfg, const std::string& lang_filter,
                     const std::string& model_filter,
                     const std::string& variant_filter) {
  cfg.Validate();
  for (const auto& lang : cfg.languages) {
    if (!lang_filter.empty() && lang != lang_filter) continue;
    for (ModelKind kind : {ModelKind::kNgram, ModelKind::kLstm}) {
      if (!model_filter.empty() && ModelKindName(kind) != model_filter) {
        continue;
      }
      for (TextVariant variant : pipeline_detail::Variants(cfg)) {
        if (!variant_filter.empty() && VariantName(variant) != variant_filter) {
          continue;
        }
        TrainOne(cfg, lang, kind, variant);
      }
    }
  }
}

// Scores the test split of every configured (language, model, variant)
// and writes the evaluation records CSV. BPEC denominators always come
// from the reference language's original forms.
inline void CmdEval(const RunConfig& cfg) {
  cfg.Validate();
  const ArtifactPaths paths(cfg);
  const auto ref_texts = pipeline_detail::ReadCorpusArtifact(
      paths.CorpusFile(cfg.reference, TextVariant::kForm, Split::kTest));

  std::vector<EvalRecord> records;
  for (const auto& lang : cfg.languages) {
    for (ModelKind kind : {ModelKind::kNgram, ModelKind::kLstm}) {
      for (TextVariant variant : pipeline_detail::Variants(cfg)) {
        const auto model_path = paths.ModelFile(lang, kind, variant);
        if (!std::filesystem::exists(model_path)) {
          ThrowData("model file " + model_path.string() +
                    " does not exist; run `train --lang " + lang +
                    " --model " + ModelKindName(kind) + " --variant " +
                    VariantName(variant) + "` first");
        }
        const CharAlphabet alphabet =
            pipeline_detail::LoadAlphabet(paths.AlphabetFile(lang, variant));
        const auto texts = pipeline_detail::ReadCorpusArtifact(
            paths.CorpusFile(lang, variant, Split::kTest));

        std::function<double(const Utterance&)> bits_of;
        std::optional<NgramModel> ngram;
        std::optional<LstmModel> lstm;
        if (kind == ModelKind::kNgram) {
          std::istringstream in(ReadWholeFile(model_path));
          ngram.emplace(NgramModel::Load(in));
          bits_of = [&](const Utterance& u) {
            std::vector<std::string> tokens = u.tokens;
            for (std::string& tok : tokens) {
              tok = alphabet.EncodeToString(tok);
            }
            return -ngram->UtteranceLogProb(tokens);
          };
        } else {
          std::istringstream in(ReadWholeFile(model_path));
          lstm.emplace(LstmModel::Load(in));
          bits_of = [&](const Utterance& u) {
            return lstm->NllBits(
                lstm->EncodeChars(alphabet.Encode(u.canonical())));
          };
        }

        std::vector<UtteranceScore> scores;
        for (const auto& [id, canonical] : texts) {
          auto ref = ref_texts.find(id);
          if (ref == ref_texts.end()) {
            ThrowData("utterance " + id + " has no aligned " + cfg.reference +
                      " reference");
          }
          Utterance utt{id, lang, canonical, Tokenize(canonical)};
          Utterance en{id, cfg.reference, ref->second,
                       Tokenize(ref->second)};
          scores.push_back(ScoreUtterance(bits_of, utt, en));
        }
        records.push_back(Aggregate(lang, kind, variant, scores));
      }
    }
  }
  std::ostringstream out;
  WriteEvalCsv(out, records);
  WriteFileAtomic(paths.EvalCsv(), out.str());
  std::cout << "eval: wrote " << records.size() << " records to "
            << paths.EvalCsv().string() << "\n";
}

namespace pipeline_detail {

inline ResultsTable AssembleResults(const RunConfig& cfg,
                                    const ArtifactPaths& paths,
                                    std::string* mcc_csv_out) {
  if (!cfg.analysis.fixture_csv.empty()) {
    std::istringstream in(ReadWholeFile(cfg.analysis.fixture_csv));
    return LoadResultsCsv(in);
  }
  std::istringstream rec_in(ReadWholeFile(paths.EvalCsv()));
  const auto records = ReadEvalCsv(rec_in);
  std::map<std::string, double> mcc;
  if (!cfg.analysis.mcc_csv.empty()) {
    mcc = LoadMccCsv(cfg.analysis.mcc_csv);
  } else if (!cfg.lexicon_files.empty()) {
    for (const auto& [lang, path] : cfg.lexicon_files) {
      mcc[lang] = static_cast<double>(
          CountingComplexity(ParseLexiconFile(path)));
    }
    if (mcc_csv_out) {
      std::ostringstream out;
      out << "lang,mcc\n";
      for (const auto& [lang, value] : mcc) {
        out << lang << ',' << static_cast<long long>(value) << '\n';
      }
      *mcc_csv_out = out.str();
    }
  } else {
    ThrowConfig("analysis needs either analysis.mcc_csv or input lexicons "
                "to obtain counting complexity");
  }
  return BuildResults(records, mcc, cfg.has_lemma_track());
}

inline void WriteBundle(const ArtifactPaths& paths,
                        const ResultsTable& results, bool with_stats,
                        const RunConfig& cfg) {
  const auto dir = paths.ReportDir();
  WriteFileAtomic(dir / "table.txt", RenderTable(results));
  WriteFileAtomic(dir / "regressions.csv", RenderRegressionsCsv(results));
  for (ModelKind kind : {ModelKind::kNgram, ModelKind::kLstm}) {
    const std::string name = ModelKindName(kind);
    if (PointsFor(results, kind).empty()) continue;
    WriteFileAtomic(dir / ("scatter_" + name + "_form.csv"),
                    RenderScatterCsv(results, kind, ScatterSeries::kForm));
    const bool lemma_present = [&] {
      for (const auto& [lang, row] : results) {
        if (!row.cells[static_cast<int>(kind)][1]) return false;
      }
      return true;
    }();
    if (lemma_present) {
      WriteFileAtomic(dir / ("scatter_" + name + "_lemma.csv"),
                      RenderScatterCsv(results, kind, ScatterSeries::kLemma));
      WriteFileAtomic(
          dir / ("scatter_" + name + "_diff.csv"),
          RenderScatterCsv(results, kind, ScatterSeries::kDifference));
      WriteFileAtomic(dir / ("forms_vs_lemmata_" + name + ".csv"),
                      RenderFormsVsLemmataCsv(results, kind));
    }
  }
  if (with_stats) {
    std::vector<AnalysisStats> stats;
    for (ModelKind kind : {ModelKind::kNgram, ModelKind::kLstm}) {
      if (PointsFor(results, kind).size() >= 3) {
        stats.push_back(ComputeStats(results, kind, cfg.analysis.permutations,
                                     cfg.analysis.seed));
      }
    }
    WriteFileAtomic(dir / "stats.csv", RenderStatsCsv(stats));
    for (const auto& s : stats) {
      std::cout << "analyze: " << ModelKindName(s.kind)
                << " rho(mcc, bpec_form) = " << s.rho_form
                << " (p = " << s.p_form << ", std = " << s.std_form << ")";
      if (s.has_lemma) {
        std::cout << "; rho(mcc, bpec_lemma) = " << s.rho_lemma
                  << " (p = " << s.p_lemma << ", std = " << s.std_lemma
                  << ")";
      }
      std::cout << "\n";
    }
  }
}

}  // namespace pipeline_detail

// Statistics plus the full report bundle, from either the configured
// fixture or a live evaluation run.
inline void CmdAnalyze(const RunConfig& cfg) {
  cfg.Validate();
  const ArtifactPaths paths(cfg);
  std::string mcc_csv;
  const ResultsTable results =
      pipeline_detail::AssembleResults(cfg, paths, &mcc_csv);
  if (!mcc_csv.empty()) {
    WriteFileAtomic(paths.ReportDir() / "mcc.csv", mcc_csv);
  }
  pipeline_detail::WriteBundle(paths, results, /*with_stats=*/true, cfg);
}

// Table and plot data only (no significance testing).
inline void CmdReport(const RunConfig& cfg) {
  cfg.Validate();
  const ArtifactPaths paths(cfg);
  std::string mcc_csv;
  const ResultsTable results =
      pipeline_detail::AssembleResults(cfg, paths, &mcc_csv);
  if (!mcc_csv.empty()) {
    WriteFileAtomic(paths.ReportDir() / "mcc.csv", mcc_csv);
  }
  pipeline_detail::WriteBundle(paths, results, /*with_stats=*/false, cfg);
}

}  // namespace mtlm

#endif  // MTLM_PIPELINE_HPP_
