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

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "pup/config.hpp"
#include "pup/decoding.hpp"
#include "pup/embedding.hpp"
#include "pup/error.hpp"
#include "pup/metrics.hpp"
#include "pup/ngram_lm.hpp"
#include "pup/nn.hpp"
#include "pup/reward.hpp"
#include "pup/text.hpp"
#include "pup/trainer.hpp"
#include "pup/vae.hpp"

namespace pup::pipeline {

namespace fs = std::filesystem;

// Files produced under RunConfig::work_dir.
struct Artifacts {
  fs::path dir;
  fs::path vocab() const { return dir / "vocab.tsv"; }
  fs::path train_ids() const { return dir / "train.ids"; }
  fs::path valid_ids() const { return dir / "valid.ids"; }
  fs::path lm() const { return dir / "lm.bin"; }
  fs::path embeddings() const { return dir / "embeddings.txt"; }
  fs::path vae() const { return dir / "vae.bin"; }
  fs::path vae_log() const { return dir / "vae_log.csv"; }
  fs::path policy() const { return dir / "policy.bin"; }
  fs::path best_policy() const { return dir / "policy_best.bin"; }
  fs::path curve() const { return dir / "curve.csv"; }
  fs::path epoch_policy(std::size_t epoch) const { return dir / ("policy_epoch_" + std::to_string(epoch) + ".bin"); }
};

inline Artifacts artifacts(const RunConfig& cfg) { return {fs::path(cfg.work_dir)}; }

inline void require_file(const fs::path& p, const std::string& hint) {
  if (!fs::exists(p)) throw ValidationError("missing '" + p.string() + "'; " + hint);
}

inline std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw RuntimeError("cannot write '" + p.string() + "'");
  return out;
}

inline std::vector<std::string> read_lines(const fs::path& p, bool keep_blank = true) {
  std::ifstream in(p);
  if (!in) throw ValidationError("cannot open '" + p.string() + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (keep_blank || !line.empty()) lines.push_back(line);
  }
  return lines;
}

inline std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Encoded corpus: a "#vocab <hash>" header, then one id list per line.
inline void write_ids(const fs::path& p, const std::vector<EncodedSequence>& corpus, std::uint64_t vocab_hash) {
  auto out = open_out(p);
  out << "#vocab " << hex(vocab_hash) << '\n';
  for (const auto& s : corpus) {
    for (std::size_t i = 0; i < s.ids.size(); ++i) out << (i ? " " : "") << s.ids[i];
    out << '\n';
  }
}

inline std::vector<EncodedSequence> read_ids(const fs::path& p, const Vocabulary& vocab) {
  const auto lines = read_lines(p);
  if (lines.empty() || lines[0] != "#vocab " + hex(vocab.hash()))
    throw ValidationError("'" + p.string() + "' was encoded with another vocabulary; rerun preprocess");
  std::vector<EncodedSequence> out;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    std::istringstream in(lines[k]);
    EncodedSequence s;
    long long id;
    while (in >> id) {
      if (id < 0 || static_cast<std::size_t>(id) >= vocab.size())
        throw ParseError("token id out of range in '" + p.string() + "'", k + 1);
      s.ids.push_back(static_cast<TokenId>(id));
    }
    if (s.ids.size() < 2 || s.ids.front() != kSosId || s.ids.back() != kEosId)
      throw ParseError("encoded sentence must start with sos and end with eos", k + 1);
    out.push_back(std::move(s));
  }
  return out;
}

inline Vocabulary load_vocab(const Artifacts& a) {
  require_file(a.vocab(), "run the preprocess command first");
  std::ifstream in(a.vocab());
  return Vocabulary::from_tsv(in);
}

inline std::vector<TokenSequence> decode_corpus(const Vocabulary& vocab, const std::vector<EncodedSequence>& corpus) {
  std::vector<TokenSequence> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus) out.push_back(decode_ids(vocab, s.ids));
  return out;
}

/// Reward model from the preprocessed scorer artifacts.
inline RewardModel load_reward(const RunConfig& cfg, const Vocabulary& vocab) {
  const Artifacts a = artifacts(cfg);
  require_file(a.lm(), "run the preprocess command first");
  require_file(a.train_ids(), "run the preprocess command first");
  auto lm = NGramLM::load(a.lm().string(), vocab.hash());
  const fs::path emb_path = cfg.embeddings_path.empty() ? a.embeddings() : fs::path(cfg.embeddings_path);
  require_file(emb_path, "run the preprocess command first");
  std::vector<std::string> warnings;
  auto table = load_embeddings(emb_path.string(), &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  table.compute_idf(decode_corpus(vocab, read_ids(a.train_ids(), vocab)));
  return RewardModel{std::make_shared<EmbeddingSimilarityScorer>(std::move(table)),
                     std::make_shared<NGramFluencyScorer>(vocab, std::move(lm)), cfg.weights, cfg.thresholds};
}

/// Builds the vocabulary, encodes the corpora and fits the fluency LM and
/// the similarity embeddings.
inline void cmd_preprocess(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  if (cfg.train_path.empty()) throw ValidationError("train_path is not set");
  const auto train_tokens = read_corpus(cfg.train_path);
  if (train_tokens.empty()) throw ValidationError("training corpus '" + cfg.train_path + "' is empty");
  const Artifacts a = artifacts(cfg);
  fs::create_directories(a.dir);

  const auto vocab = Vocabulary::build(train_tokens, cfg.min_freq, cfg.vocab_size);
  open_out(a.vocab()) << vocab.to_tsv();
  std::vector<EncodedSequence> train;
  for (const auto& t : train_tokens) train.push_back(encode(vocab, t, cfg.max_len));
  write_ids(a.train_ids(), train, vocab.hash());
  std::size_t n_valid = 0;
  if (!cfg.valid_path.empty()) {
    std::vector<EncodedSequence> valid;
    for (const auto& t : read_corpus(cfg.valid_path)) valid.push_back(encode(vocab, t, cfg.max_len));
    if (valid.empty()) throw ValidationError("validation corpus '" + cfg.valid_path + "' is empty");
    write_ids(a.valid_ids(), valid, vocab.hash());
    n_valid = valid.size();
  }

  const auto lm = NGramLM::train(train, vocab.size(), vocab.hash(), static_cast<int>(cfg.lm_order), cfg.lm_discount);
  lm.save(a.lm().string());
  if (cfg.embeddings_path.empty()) {
    // Embeddings see the corpus as the models do: truncated, OOV as unk.
    const auto table = train_ppmi_svd(decode_corpus(vocab, train), cfg.embedding_dim, cfg.embedding_window);
    auto out = open_out(a.embeddings());
    table.save(out);
  }
  log << "vocabulary " << vocab.size() << " (hash " << hex(vocab.hash()) << "), " << train.size()
      << " training and " << n_valid << " validation sentences\n";
}

inline void cmd_train_vae(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Artifacts a = artifacts(cfg);
  const auto vocab = load_vocab(a);
  require_file(a.train_ids(), "run the preprocess command first");
  const auto train = read_ids(a.train_ids(), vocab);
  auto csv = open_out(a.vae_log());
  csv << "epoch,total,recon,kl\n";
  auto result = vae::train_vae(train, vocab.size(), vocab.hash(), cfg.vae_config(), [&](const vae::VaeEpochStats& s) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f,%.6f", s.epoch, s.total, s.recon, s.kl);
    csv << buf << '\n';
    log << "vae epoch " << s.epoch << ": elbo " << s.total << " (recon " << s.recon << ", kl " << s.kl << ")\n";
  });
  vae::save_vae(a.vae().string(), result.params);
}

struct PupInputs {
  Vocabulary vocab;
  std::vector<EncodedSequence> train, valid;
  vae::VaeParams vae;
  RewardModel reward;
};

inline PupInputs load_pup_inputs(const RunConfig& cfg) {
  const Artifacts a = artifacts(cfg);
  PupInputs in{load_vocab(a), {}, {}, {}, {}};
  require_file(a.train_ids(), "run the preprocess command first");
  require_file(a.valid_ids(), "set valid_path and rerun the preprocess command");
  require_file(a.vae(), "run the train-vae command first");
  in.train = read_ids(a.train_ids(), in.vocab);
  in.valid = read_ids(a.valid_ids(), in.vocab);
  in.vae = vae::load_vae(a.vae().string(), in.vocab.hash());
  in.reward = load_reward(cfg, in.vocab);
  return in;
}

inline trainer::PupResult run_pup(const RunConfig& cfg, const PupInputs& in, std::ostream& curve,
                                  std::ostream& log, const Artifacts* save_to) {
  curve << trainer::curve_csv_header() << '\n';
  trainer::PupHooks hooks;
  hooks.on_epoch = [&](const trainer::CurveRow& r) {
    curve << trainer::curve_csv_row(r) << '\n';
    log << "epoch " << r.epoch << " [" << r.phase << "] validation reward " << r.mean_reward << '\n';
    if (r.aborted_batches) log << "epoch " << r.epoch << " aborted: non-finite policy gradient\n";
  };
  if (save_to && cfg.checkpoint_every) {
    hooks.checkpoint_every = cfg.checkpoint_every;
    hooks.on_checkpoint = [&](std::size_t epoch, const nn::Seq2SeqParams& p) {
      nn::save_policy(save_to->epoch_policy(epoch).string(), p, in.vocab.hash());
    };
  }
  return trainer::train_pup(in.vocab, in.train, in.valid, in.vae, in.reward, cfg.train_config(), hooks);
}

inline void cmd_train_pup(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Artifacts a = artifacts(cfg);
  const auto in = load_pup_inputs(cfg);
  auto curve = open_out(a.curve());
  const auto result = run_pup(cfg, in, curve, log, &a);
  nn::save_policy(a.policy().string(), result.policy, in.vocab.hash());
  nn::save_policy(a.best_policy().string(), result.best_policy, in.vocab.hash());
  log << "VAE sample reward " << result.vae_baseline_reward << ", best validation reward " << result.best_reward
      << " at epoch " << result.best_epoch << '\n';
}

/// Runs PUP and the two ablations (no transition, no pre-training) on the
/// same data and VAE; writes one curve per variant plus a combined table.
inline void cmd_ablation(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Artifacts a = artifacts(cfg);
  const auto in = load_pup_inputs(cfg);
  struct Variant {
    std::string name;
    bool no_pretrain, no_transition;
  };
  const std::vector<Variant> variants = {{"pup", false, false}, {"no_transition", false, true}, {"no_pretrain", true, false}};
  auto table = open_out(a.dir / "ablation.csv");
  table << "variant," << trainer::curve_csv_header() << '\n';
  for (const auto& v : variants) {
    RunConfig c = cfg;
    c.no_pretrain = v.no_pretrain;
    c.no_transition = v.no_transition;
    std::ostringstream curve;
    const auto result = run_pup(c, in, curve, log, nullptr);
    open_out(a.dir / ("curve_" + v.name + ".csv")) << curve.str();
    for (const auto& r : result.curve) table << v.name << ',' << trainer::curve_csv_row(r) << '\n';
    log << v.name << ": final validation reward " << (result.curve.empty() ? 0.0 : result.curve.back().mean_reward)
        << '\n';
  }
}

/// One paraphrase per input line.
inline void cmd_paraphrase(const RunConfig& cfg, const std::string& checkpoint, const std::string& input,
                           const std::string& output) {
  cfg.validate();
  const Artifacts a = artifacts(cfg);
  const auto vocab = load_vocab(a);
  const auto policy = nn::load_policy(checkpoint, vocab.hash());
  nn::Rng rng(cfg.seed);
  auto out = open_out(output);
  for (const auto& line : read_lines(input)) {
    const auto x = encode(vocab, tokenize(line), cfg.max_len);
    const auto hyp = decoding::decode(decoding::PolicyModel(policy, x), cfg.decode, rng);
    out << join(decode_ids(vocab, hyp.tokens)) << '\n';
  }
}

struct TestPair {
  TokenSequence source;
  std::vector<TokenSequence> references;
};

/// "source<TAB>ref1<TAB>ref2..." per line.
inline std::vector<TestPair> read_test_tsv(const std::string& path) {
  std::vector<TestPair> rows;
  const auto lines = read_lines(path);
  for (std::size_t k = 0; k < lines.size(); ++k) {
    if (lines[k].empty()) continue;
    std::istringstream in(lines[k]);
    std::string field;
    TestPair row;
    bool first = true;
    while (std::getline(in, field, '\t')) {
      if (first) row.source = tokenize(field);
      else row.references.push_back(tokenize(field));
      first = false;
    }
    if (row.references.empty()) throw ParseError("test row needs a source and at least one reference", k + 1);
    rows.push_back(std::move(row));
  }
  return rows;
}

struct EvaluationRow {
  std::string method;
  double i_bleu = 0.0, bleu = 0.0, rouge1 = 0.0, rouge2 = 0.0;  // x100
};

inline std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

/// Corpus BLEU / i-BLEU and mean sentence ROUGE of `outputs` against the
/// test references; per-sentence scores go to `per_sentence` when given.
inline EvaluationRow evaluate(const std::string& method, const std::vector<TokenSequence>& outputs,
                              const std::vector<TestPair>& test, std::ostream* per_sentence = nullptr) {
  if (outputs.size() != test.size())
    throw ValidationError("outputs have " + std::to_string(outputs.size()) + " lines but the test set has " +
                          std::to_string(test.size()) + " rows (misaligned at line " +
                          std::to_string(std::min(outputs.size(), test.size()) + 1) + ")");
  std::vector<std::vector<TokenSequence>> refs, srcs;
  double r1 = 0.0, r2 = 0.0;
  if (per_sentence) *per_sentence << "line,i_bleu,bleu,rouge1,rouge2\n";
  for (std::size_t k = 0; k < test.size(); ++k) {
    refs.push_back(test[k].references);
    srcs.push_back({test[k].source});
    const double s1 = metrics::rouge_n(outputs[k], test[k].references, 1);
    const double s2 = metrics::rouge_n(outputs[k], test[k].references, 2);
    r1 += s1;
    r2 += s2;
    if (per_sentence) {
      const double b = metrics::bleu(outputs[k], test[k].references);
      const double ib = metrics::i_bleu(outputs[k], test[k].references, test[k].source);
      *per_sentence << (k + 1) << ',' << fixed2(100 * ib) << ',' << fixed2(100 * b) << ',' << fixed2(100 * s1) << ','
                    << fixed2(100 * s2) << '\n';
    }
  }
  EvaluationRow row;
  row.method = method;
  const double n = test.empty() ? 1.0 : static_cast<double>(test.size());
  const double b = test.empty() ? 0.0 : metrics::corpus_bleu(outputs, refs);
  const double bs = test.empty() ? 0.0 : metrics::corpus_bleu(outputs, srcs);
  row.bleu = 100 * b;
  row.i_bleu = 100 * (metrics::kIBleuAlpha * b - (1.0 - metrics::kIBleuAlpha) * bs);
  row.rouge1 = 100 * r1 / n;
  row.rouge2 = 100 * r2 / n;
  return row;
}

inline std::string evaluation_csv(const std::vector<EvaluationRow>& rows) {
  std::string out = "method,i_bleu,bleu,rouge1,rouge2\n";
  for (const auto& r : rows)
    out += r.method + ',' + fixed2(r.i_bleu) + ',' + fixed2(r.bleu) + ',' + fixed2(r.rouge1) + ',' + fixed2(r.rouge2) + '\n';
  return out;
}

inline void cmd_evaluate(const std::string& outputs_path, const std::string& test_path, const std::string& method,
                         const std::string& csv_path, const std::string& per_sentence_path) {
  std::vector<TokenSequence> outputs;
  for (const auto& line : read_lines(outputs_path)) outputs.push_back(tokenize(line));
  const auto test = read_test_tsv(test_path);
  std::ostringstream per;
  const auto row = evaluate(method, outputs, test, per_sentence_path.empty() ? nullptr : &per);
  open_out(csv_path) << evaluation_csv({row});
  if (!per_sentence_path.empty()) open_out(per_sentence_path) << per.str();
}

/// Reward breakdown per "source<TAB>candidate" row, followed by a "mean"
/// row.
inline void cmd_score(const RunConfig& cfg, const std::string& pairs_path, const std::string& csv_path) {
  cfg.validate();
  const auto vocab = load_vocab(artifacts(cfg));
  const auto reward = load_reward(cfg, vocab);
  auto out = open_out(csv_path);
  out << "line,raw_sim,raw_flu,raw_div,gated_sim,gated_flu,gated_div,reward\n";
  RewardBreakdown sum;
  std::size_t n = 0;
  const auto lines = read_lines(pairs_path);
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf);
  };
  auto row = [&](const std::string& label, const RewardBreakdown& r) {
    out << label << ',' << fmt(r.raw_sim) << ',' << fmt(r.raw_flu) << ',' << fmt(r.raw_div) << ','
        << fmt(r.gated_sim) << ',' << fmt(r.gated_flu) << ',' << fmt(r.gated_div) << ',' << fmt(r.total) << '\n';
  };
  for (std::size_t k = 0; k < lines.size(); ++k) {
    if (lines[k].empty()) continue;
    const auto tab = lines[k].find('\t');
    if (tab == std::string::npos) throw ParseError("expected source<TAB>candidate", k + 1);
    // Both sides go through the vocabulary so OOV words score as unk.
    const auto src = decode_ids(vocab, encode(vocab, tokenize(lines[k].substr(0, tab)), cfg.max_len).ids);
    const auto cand = decode_ids(vocab, encode(vocab, tokenize(lines[k].substr(tab + 1)), cfg.max_len).ids);
    const auto r = reward(src, cand);
    row(std::to_string(k + 1), r);
    sum.raw_sim += r.raw_sim;
    sum.raw_flu += r.raw_flu;
    sum.raw_div += r.raw_div;
    sum.gated_sim += r.gated_sim;
    sum.gated_flu += r.gated_flu;
    sum.gated_div += r.gated_div;
    sum.total += r.total;
    ++n;
  }
  if (n) {
    const double d = static_cast<double>(n);
    row("mean", {sum.raw_sim / d, sum.raw_flu / d, sum.raw_div / d, sum.gated_sim / d, sum.gated_flu / d,
                 sum.gated_div / d, sum.total / d});
  }
}

}  // namespace pup::pipeline
