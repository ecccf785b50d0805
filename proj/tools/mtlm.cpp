// mtlm.cpp
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
// Command-line front end for the multi-text language-modeling toolkit.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mtlm/config.hpp"
#include "mtlm/pipeline.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string lang;
  std::string model;
  std::string variant;
  std::optional<std::uint64_t> seed;
};

mtlm::RunConfig LoadConfig(const CommonOpts& opts) {
  mtlm::RunConfig cfg = mtlm::LoadRunConfig(opts.config_path);
  if (opts.seed) {
    cfg.split_seed = *opts.seed;
    cfg.lstm.seed = *opts.seed;
    cfg.analysis.seed = *opts.seed;
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"open-vocabulary language modeling over utterance-aligned "
               "multi-text"};
  app.require_subcommand(1);

  CommonOpts opts;
  auto add_common = [&](CLI::App* cmd, bool with_selectors) {
    cmd->add_option("--config", opts.config_path, "run configuration (JSON)")
        ->required();
    cmd->add_option("--seed", opts.seed,
                    "override every seed in the configuration");
    if (with_selectors) {
      cmd->add_option("--lang", opts.lang, "restrict to one language");
      cmd->add_option("--model", opts.model, "restrict to one model kind")
          ->check(CLI::IsMember({"ngram", "lstm"}));
      cmd->add_option("--variant", opts.variant, "restrict to one variant")
          ->check(CLI::IsMember({"form", "lemma"}));
    }
  };

  auto* ingest = app.add_subcommand(
      "ingest", "align multi-text, assign splits, build alphabets");
  add_common(ingest, false);
  auto* train = app.add_subcommand("train", "train configured models");
  add_common(train, true);
  auto* eval = app.add_subcommand("eval", "score test splits, write records");
  add_common(eval, false);
  auto* analyze = app.add_subcommand(
      "analyze", "correlation statistics and the full report bundle");
  add_common(analyze, false);
  auto* report =
      app.add_subcommand("report", "results table and plot data only");
  add_common(report, false);

  CLI11_PARSE(app, argc, argv);

  try {
    const mtlm::RunConfig cfg = LoadConfig(opts);
    if (ingest->parsed()) {
      mtlm::CmdIngest(cfg);
    } else if (train->parsed()) {
      mtlm::CmdTrain(cfg, opts.lang, opts.model, opts.variant);
    } else if (eval->parsed()) {
      mtlm::CmdEval(cfg);
    } else if (analyze->parsed()) {
      mtlm::CmdAnalyze(cfg);
    } else if (report->parsed()) {
      mtlm::CmdReport(cfg);
    }
  } catch (const mtlm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return static_cast<int>(mtlm::ErrorKind::kInternal);
  }
  return 0;
}
