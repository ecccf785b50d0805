// test_pipeline.cpp
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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtlm/config.hpp"
#include "mtlm/pipeline.hpp"

using namespace mtlm;
namespace fs = std::filesystem;

namespace {

fs::path MakeTempDir(const std::string& tag) {
  static int counter = 0;
  const fs::path dir = fs::temp_directory_path() /
                       ("mtlm_" + tag + "_" + std::to_string(::getpid()) +
                        "_" + std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

// Two tiny parallel "languages": en and a suffixed variant xx, with a
// lemma track that strips the suffixes again.
void WriteToyDataset(const fs::path& dir, int n_utts = 40) {
  const std::vector<std::string> en_words{"the", "cat", "dog",  "sat",
                                          "ran", "saw", "tree", "bird"};
  std::ofstream en(dir / "en.tsv"), xx(dir / "xx.tsv");
  std::ofstream enl(dir / "en.lemma.tsv"), xxl(dir / "xx.lemma.tsv");
  Rng rng(606);
  for (int i = 0; i < n_utts; ++i) {
    const std::string id = "u" + std::to_string(100 + i);
    std::string ens, xxs;
    const std::size_t len = 2 + rng.NextIndex(4);
    for (std::size_t w = 0; w < len; ++w) {
      const std::string& word = en_words[rng.NextIndex(en_words.size())];
      if (w) {
        ens += ' ';
        xxs += ' ';
      }
      ens += word;
      xxs += word + (rng.NextIndex(2) ? "os" : "in");
    }
    en << id << '\t' << ens << '\n';
    xx << id << '\t' << xxs << '\n';
    enl << id << '\t' << ens << '\n';
    xxl << id << '\t' << ens << '\n';  // lemmata = unsuffixed words
  }
}

RunConfig ToyConfig(const fs::path& data_dir, const fs::path& out_dir,
                    bool with_lemma = true) {
  nlohmann::json j;
  j["languages"] = {"en", "xx"};
  j["reference"] = "en";
  j["output_dir"] = out_dir.string();
  j["inputs"]["forms"]["en"] = (data_dir / "en.tsv").string();
  j["inputs"]["forms"]["xx"] = (data_dir / "xx.tsv").string();
  if (with_lemma) {
    j["inputs"]["lemmata"]["en"] = (data_dir / "en.lemma.tsv").string();
    j["inputs"]["lemmata"]["xx"] = (data_dir / "xx.lemma.tsv").string();
  }
  j["split"] = {{"train", 0.8}, {"dev", 0.1}, {"test", 0.1}, {"seed", 11}};
  j["alphabet"] = {{"min_char_count", 1}};
  j["ngram"] = {{"order", 3}, {"prune_all_word_span", 4}};
  j["lstm"] = {{"embed_dim", 4},   {"hidden_dim", 6}, {"layers", 1},
               {"clip", 5.0},      {"learning_rate", 0.3},
               {"max_epochs", 2},  {"patience", 2},   {"seed", 3}};
  j["analysis"] = {{"permutations", 500}, {"seed", 7}};
  const fs::path cfg_path = data_dir / "run.json";
  std::ofstream out(cfg_path);
  out << j.dump(2);
  out.close();
  return LoadRunConfig(cfg_path.string());
}

std::map<std::string, std::string> SnapshotTree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) {
      out[fs::relative(entry.path(), root).string()] =
          ReadWholeFile(entry.path());
    }
  }
  return out;
}

}  // namespace

TEST_CASE("ingest writes aligned splits, manifest and alphabets") {
  const fs::path dir = MakeTempDir("ingest");
  WriteToyDataset(dir);
  const RunConfig cfg = ToyConfig(dir, dir / "out");
  CmdIngest(cfg);

  const ArtifactPaths paths(cfg);
  std::ifstream manifest(paths.SplitManifest());
  REQUIRE(manifest);
  const auto split = ReadSplitManifest(manifest);
  CHECK(split.size() == 40);
  std::map<Split, int> counts;
  for (const auto& [id, s] : split) ++counts[s];
  CHECK(counts[Split::kTrain] == 32);
  CHECK(counts[Split::kDev] == 4);
  CHECK(counts[Split::kTest] == 4);
  for (const auto& lang : cfg.languages) {
    for (TextVariant v : {TextVariant::kForm, TextVariant::kLemma}) {
      for (Split s : {Split::kTrain, Split::kDev, Split::kTest}) {
        CHECK(fs::exists(paths.CorpusFile(lang, v, s)));
      }
      CHECK(fs::exists(paths.AlphabetFile(lang, v)));
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("ingest reruns are byte-identical") {
  const fs::path dir = MakeTempDir("ingest_det");
  WriteToyDataset(dir);
  const RunConfig cfg1 = ToyConfig(dir, dir / "out1");
  CmdIngest(cfg1);
  const RunConfig cfg2 = ToyConfig(dir, dir / "out2");
  CmdIngest(cfg2);
  CHECK(SnapshotTree(dir / "out1") == SnapshotTree(dir / "out2"));
  fs::remove_all(dir);
}

TEST_CASE("mismatched ids produce a nonzero drop report") {
  const fs::path dir = MakeTempDir("drop");
  WriteToyDataset(dir);
  {
    std::ofstream extra(dir / "en.tsv", std::ios::app);
    extra << "only_en\tlonely sentence\n";
  }
  {
    std::ofstream extra(dir / "en.lemma.tsv", std::ios::app);
    extra << "only_en\tlonely sentence\n";
  }
  const RunConfig cfg = ToyConfig(dir, dir / "out");
  CmdIngest(cfg);
  const std::string report =
      ReadWholeFile(ArtifactPaths(cfg).DropReport());
  CHECK(report.find("en\t1") != std::string::npos);
  CHECK(report.find("xx\t0") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("trained ngram artifact parses back and lstm training is "
          "seed-stable") {
  const fs::path dir = MakeTempDir("train");
  WriteToyDataset(dir);
  const RunConfig cfg = ToyConfig(dir, dir / "out");
  CmdIngest(cfg);
  const ArtifactPaths paths(cfg);

  TrainOne(cfg, "xx", ModelKind::kNgram, TextVariant::kForm);
  {
    std::istringstream in(ReadWholeFile(
        paths.ModelFile("xx", ModelKind::kNgram, TextVariant::kForm)));
    const NgramModel m = NgramModel::Load(in);
    CHECK(m.order() == 3);
  }

  TrainOne(cfg, "xx", ModelKind::kLstm, TextVariant::kForm);
  const std::string first = ReadWholeFile(
      paths.ModelFile("xx", ModelKind::kLstm, TextVariant::kForm));
  TrainOne(cfg, "xx", ModelKind::kLstm, TextVariant::kForm);
  const std::string second = ReadWholeFile(
      paths.ModelFile("xx", ModelKind::kLstm, TextVariant::kForm));
  CHECK(first == second);
  CHECK(fs::exists(paths.TrainLog("xx", TextVariant::kForm)));
  fs::remove_all(dir);
}

TEST_CASE("lemma routing trains on the lemma files") {
  const fs::path dir = MakeTempDir("route");
  WriteToyDataset(dir);
  const RunConfig cfg = ToyConfig(dir, dir / "out");
  CmdIngest(cfg);
  const ArtifactPaths paths(cfg);
  // xx lemma text equals en text, so the lemma alphabet lacks the
  // suffix-only characters... both variants share letters here; check
  // instead that the corpus artifacts differ and the model trains.
  const std::string form_train = ReadWholeFile(
      paths.CorpusFile("xx", TextVariant::kForm, Split::kTrain));
  const std::string lemma_train = ReadWholeFile(
      paths.CorpusFile("xx", TextVariant::kLemma, Split::kTrain));
  CHECK(form_train != lemma_train);
  TrainOne(cfg, "xx", ModelKind::kNgram, TextVariant::kLemma);
  CHECK(fs::exists(
      paths.ModelFile("xx", ModelKind::kNgram, TextVariant::kLemma)));
  fs::remove_all(dir);
}

TEST_CASE("eval emits one record per configured cell") {
  const fs::path dir = MakeTempDir("eval");
  WriteToyDataset(dir);
  const RunConfig cfg = ToyConfig(dir, dir / "out");
  CmdIngest(cfg);
  CmdTrain(cfg, "", "", "");
  CmdEval(cfg);
  const ArtifactPaths paths(cfg);
  std::istringstream in(ReadWholeFile(paths.EvalCsv()));
  const auto records = ReadEvalCsv(in);
  CHECK(records.size() == 8);  // 2 langs x 2 models x 2 variants
  for (const auto& r : records) {
    CHECK(r.bits_total > 0.0);
    if (r.lang == "en" && r.variant == TextVariant::kForm) {
      CHECK(r.bpc == r.bpec);  // self-reference
      CHECK(r.own_chars == r.en_chars);
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("eval without a model file names the missing artifact") {
  const fs::path dir = MakeTempDir("missing");
  WriteToyDataset(dir);
  const RunConfig cfg = ToyConfig(dir, dir / "out");
  CmdIngest(cfg);
  CHECK_THROWS_WITH(CmdEval(cfg),
                    Catch::Matchers::ContainsSubstring("train"));
  fs::remove_all(dir);
}

TEST_CASE("analyze on the shipped fixture reproduces the statistics") {
  const fs::path dir = MakeTempDir("analyze");
  WriteToyDataset(dir);
  nlohmann::json j;
  j["languages"] = {"en"};
  j["reference"] = "en";
  j["output_dir"] = (dir / "out").string();
  j["inputs"]["forms"]["en"] = (dir / "en.tsv").string();
  j["analysis"] = {{"permutations", 20000},
                   {"seed", 7},
                   {"fixture_csv",
                    std::string(MTLM_DATA_DIR) + "/table1_fixture.csv"}};
  const fs::path cfg_path = dir / "run.json";
  {
    std::ofstream out(cfg_path);
    out << j.dump(2);
  }
  const RunConfig cfg = LoadRunConfig(cfg_path.string());
  CmdAnalyze(cfg);
  const ArtifactPaths paths(cfg);
  const std::string stats = ReadWholeFile(paths.ReportDir() / "stats.csv");
  CHECK(stats.find("lstm,") != std::string::npos);
  CHECK(fs::exists(paths.ReportDir() / "table.txt"));
  CHECK(fs::exists(paths.ReportDir() / "scatter_lstm_form.csv"));
  CHECK(fs::exists(paths.ReportDir() / "forms_vs_lemmata_lstm.csv"));
  CHECK(fs::exists(paths.ReportDir() / "regressions.csv"));
  // Rendered numbers: rho lives in [.56, .62] per the fixture.
  std::istringstream sin(stats);
  std::string line;
  std::getline(sin, line);  // header
  bool found_lstm = false;
  while (std::getline(sin, line)) {
    if (line.rfind("lstm,", 0) == 0) {
      const double rho = std::strtod(line.c_str() + 5, nullptr);
      CHECK_THAT(rho, Catch::Matchers::WithinAbs(0.59, 0.03));
      found_lstm = true;
    }
  }
  CHECK(found_lstm);
  fs::remove_all(dir);
}

TEST_CASE("full pipeline rerun is byte-identical") {
  const fs::path dir = MakeTempDir("determinism");
  WriteToyDataset(dir, 30);
  auto run = [&](const fs::path& out) {
    RunConfig cfg = ToyConfig(dir, out);
    cfg.analysis.mcc_csv.clear();
    CmdIngest(cfg);
    CmdTrain(cfg, "", "", "");
    CmdEval(cfg);
    // Report without stats: the toy run has only 2 languages, below the
    // 3-point minimum for correlation.
    std::ofstream mcc(dir / "mcc.csv");
    mcc << "lang,mcc\nen,6\nxx,48\n";
    mcc.close();
    cfg.analysis.mcc_csv = (dir / "mcc.csv").string();
    CmdReport(cfg);
  };
  run(dir / "o1");
  run(dir / "o2");
  CHECK(SnapshotTree(dir / "o1") == SnapshotTree(dir / "o2"));
  fs::remove_all(dir);
}

TEST_CASE("a lemma file missing an aligned id is rejected") {
  const fs::path dir = MakeTempDir("lemma_ids");
  WriteToyDataset(dir);
  // Drop one id from the xx lemma file.
  const std::string all = ReadWholeFile(dir / "xx.lemma.tsv");
  {
    std::ofstream out(dir / "xx.lemma.tsv", std::ios::trunc);
    out << all.substr(all.find('\n') + 1);
  }
  const RunConfig cfg = ToyConfig(dir, dir / "out");
  CHECK_THROWS_WITH(CmdIngest(cfg),
                    Catch::Matchers::ContainsSubstring("u100"));
  fs::remove_all(dir);
}

TEST_CASE("counting complexity comes from lexicons when configured") {
  const fs::path dir = MakeTempDir("lexicons");
  WriteToyDataset(dir, 30);
  {
    std::ofstream lex(dir / "en.lex.tsv");
    lex << "cat\tcats\tN;PL\ncat\tcat\tN;SG\nrun\tran\tV;PST\n";
  }
  {
    std::ofstream lex(dir / "xx.lex.tsv");
    lex << "kato\tkatos\tN;PL\n";
  }
  RunConfig cfg = ToyConfig(dir, dir / "out");
  cfg.lexicon_files["en"] = (dir / "en.lex.tsv").string();
  cfg.lexicon_files["xx"] = (dir / "xx.lex.tsv").string();
  CmdIngest(cfg);
  CmdTrain(cfg, "", "", "");
  CmdEval(cfg);
  CmdReport(cfg);
  const std::string mcc =
      ReadWholeFile(ArtifactPaths(cfg).ReportDir() / "mcc.csv");
  CHECK(mcc == "lang,mcc\nen,3\nxx,1\n");
  fs::remove_all(dir);
}

TEST_CASE("cli binary drives the pipeline and reports config errors") {
  const fs::path dir = MakeTempDir("cli");
  WriteToyDataset(dir, 30);
  ToyConfig(dir, dir / "out");  // writes run.json
  const std::string cli = MTLM_CLI_PATH;
  auto run_cli = [&](const std::string& args) {
    const std::string cmd = cli + " " + args + " >" +
                            (dir / "cli.log").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
  };
  CHECK(run_cli("ingest --config " + (dir / "run.json").string()) == 0);
  CHECK(run_cli("train --config " + (dir / "run.json").string() +
                " --lang en --model ngram --variant form") == 0);
  // Unknown subcommand and missing config file both fail nonzero.
  CHECK(run_cli("frobnicate") != 0);
  CHECK(run_cli("ingest --config " + (dir / "nope.json").string()) != 0);
  fs::remove_all(dir);
}
