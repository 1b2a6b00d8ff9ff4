// Copyright (c) 2026 The PUP Authors. All Rights Reserved.
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


// Command-line entry point: preprocessing, training, generation, scoring
// and evaluation. Exit codes: 0 success, 2 invalid input, 3 runtime error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "pup/config.hpp"
#include "pup/error.hpp"
#include "pup/pipeline.hpp"
#include "pup/toy_corpus.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct ConfigArgs {
  std::string path;
  std::vector<std::string> overrides;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("-c,--config", args.path, "key = value configuration file");
  cmd->add_option("-s,--set", args.overrides, "override a configuration key (key=value), repeatable");
}

pup::RunConfig resolve(const ConfigArgs& args) {
  pup::RunConfig cfg = args.path.empty() ? pup::RunConfig{} : pup::load_config(args.path);
  for (const auto& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw pup::ValidationError("--set expects key=value, got '" + kv + "'");
    cfg.set(pup::config_detail::trim(kv.substr(0, eq)), pup::config_detail::trim(kv.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

void write_toy_corpus(const std::string& dir, std::uint64_t seed, std::size_t n_train, std::size_t n_valid,
                      std::size_t n_test) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto corpus = pup::toy::make_toy_corpus(seed, n_train, n_valid, n_test);
  auto write = [&](const std::string& name, auto&& body) {
    std::ofstream out(fs::path(dir) / name);
    if (!out) throw pup::RuntimeError("cannot write '" + (fs::path(dir) / name).string() + "'");
    body(out);
  };
  write("train.txt", [&](std::ostream& o) {
    for (const auto& s : corpus.train) o << s << '\n';
  });
  write("valid.txt", [&](std::ostream& o) {
    for (const auto& s : corpus.valid) o << s << '\n';
  });
  write("test.tsv", [&](std::ostream& o) {
    for (const auto& row : corpus.test) {
      for (std::size_t k = 0; k < row.size(); ++k) o << (k ? "\t" : "") << row[k];
      o << '\n';
    }
  });
  write("test_sources.txt", [&](std::ostream& o) {
    for (const auto& row : corpus.test) o << row[0] << '\n';
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Progressive unsupervised paraphrasing"};
  app.require_subcommand(1);

  ConfigArgs pre_args, vae_args, pup_args, abl_args, para_args, score_args;
  auto* pre = app.add_subcommand("preprocess", "build the vocabulary, encode corpora, fit the scorers");
  add_config_options(pre, pre_args);
  auto* tvae = app.add_subcommand("train-vae", "train the VAE on the encoded corpus");
  add_config_options(tvae, vae_args);
  auto* tpup = app.add_subcommand("train-pup", "pre-train, transition and DRL phases");
  add_config_options(tpup, pup_args);
  auto* abl = app.add_subcommand("ablation", "PUP against the no-transition and no-pretrain variants");
  add_config_options(abl, abl_args);

  std::string checkpoint, input, output;
  auto* para = app.add_subcommand("paraphrase", "paraphrase every line of a file");
  add_config_options(para, para_args);
  para->add_option("--checkpoint", checkpoint, "policy checkpoint")->required();
  para->add_option("-i,--input", input, "one sentence per line")->required();
  para->add_option("-o,--output", output, "paraphrases, one per line")->required();

  std::string outputs, test, method = "pup", csv, per_sentence;
  auto* eval = app.add_subcommand("evaluate", "BLEU, i-BLEU and ROUGE against test references");
  eval->add_option("--outputs", outputs, "generated sentences, one per line")->required();
  eval->add_option("--test", test, "source<TAB>ref1<TAB>ref2... rows")->required();
  eval->add_option("--method", method, "method name for the table");
  eval->add_option("--csv", csv, "metrics table")->required();
  eval->add_option("--per-sentence", per_sentence, "per-sentence metrics");

  std::string pairs, score_csv;
  auto* score = app.add_subcommand("score", "reward breakdown for source<TAB>candidate pairs");
  add_config_options(score, score_args);
  score->add_option("--pairs", pairs, "source<TAB>candidate rows")->required();
  score->add_option("--csv", score_csv, "breakdown table")->required();

  std::string toy_dir;
  std::uint64_t toy_seed = 1;
  std::size_t toy_train = 1000, toy_valid = 100, toy_test = 100;
  auto* toy = app.add_subcommand("make-toy-corpus", "write the synthetic question corpus");
  toy->add_option("-o,--out-dir", toy_dir, "output directory")->required();
  toy->add_option("--seed", toy_seed, "generator seed");
  toy->add_option("--train", toy_train, "training sentences");
  toy->add_option("--valid", toy_valid, "validation sentences");
  toy->add_option("--test", toy_test, "test rows");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*pre) pup::pipeline::cmd_preprocess(resolve(pre_args), std::cout);
    else if (*tvae) pup::pipeline::cmd_train_vae(resolve(vae_args), std::cout);
    else if (*tpup) pup::pipeline::cmd_train_pup(resolve(pup_args), std::cout);
    else if (*abl) pup::pipeline::cmd_ablation(resolve(abl_args), std::cout);
    else if (*para) pup::pipeline::cmd_paraphrase(resolve(para_args), checkpoint, input, output);
    else if (*eval) pup::pipeline::cmd_evaluate(outputs, test, method, csv, per_sentence);
    else if (*score) pup::pipeline::cmd_score(resolve(score_args), pairs, score_csv);
    else if (*toy) write_toy_corpus(toy_dir, toy_seed, toy_train, toy_valid, toy_test);
  } catch (const pup::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
