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

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pup/decoding.hpp"
#include "pup/error.hpp"
#include "pup/reward.hpp"
#include "pup/trainer.hpp"
#include "pup/vae.hpp"

namespace pup {

/// Every knob of a run. Loaded from a flat `key = value` file; lines
/// starting with '#' are comments.
struct RunConfig {
  // Data.
  std::string dataset = "quora";
  std::string train_path;
  std::string valid_path;
  std::string test_path;
  std::string work_dir = "run";
  std::size_t min_freq = 4;
  std::size_t vocab_size = 8000;
  std::size_t max_len = kMaxSentenceLength;

  // Scorers.
  std::size_t lm_order = 3;
  double lm_discount = 0.75;
  std::size_t embedding_dim = 100;
  std::size_t embedding_window = 5;
  std::string embeddings_path;  // optional pretrained table
  RewardWeights weights;
  RewardThresholds thresholds;

  // Models.
  nn::ModelDims dims;
  std::size_t latent_dim = 64;
  double init_scale = 0.08;

  // VAE training.
  std::size_t vae_epochs = 15;
  std::size_t vae_batch_size = 32;
  double vae_lr = 1e-3;
  double kl_anneal_epochs = 2.0;
  double word_dropout = 0.25;
  vae::SampleMode vae_sample_mode = vae::SampleMode::kStochastic;

  // PUP training.
  std::size_t pretrain_epochs = 15;
  std::size_t main_epochs = 2000;
  double lr_pretrain = 0.15;
  double lr_transition = 1e-3;
  double lr_drl = 1e-4;
  double drl_epsilon = 0.5;
  std::size_t batch_size = 32;
  double clip_norm = 2.0;
  double slowdown = 8.0;
  double kappa = 0.9995;
  trainer::BaselineMode baseline = trainer::BaselineMode::kDrlPhase;
  bool no_pretrain = false;
  bool no_transition = false;
  std::size_t checkpoint_every = 0;

  // Decoding.
  decoding::DecodeConfig decode;

  std::uint64_t seed = 1;

  /// Sets one key from its textual value; throws ValidationError for
  /// unknown keys and malformed values.
  void set(const std::string& key, const std::string& value);
  void validate() const;

  vae::VaeTrainConfig vae_config() const {
    vae::VaeTrainConfig c;
    c.dims = dims;
    c.latent_dim = latent_dim;
    c.epochs = vae_epochs;
    c.batch_size = vae_batch_size;
    c.lr = vae_lr;
    c.clip_norm = clip_norm;
    c.kl_anneal_epochs = kl_anneal_epochs;
    c.word_dropout = word_dropout;
    c.init_scale = init_scale;
    c.seed = seed;
    return c;
  }

  trainer::TrainConfig train_config() const {
    trainer::TrainConfig c;
    c.dims = dims;
    c.init_scale = init_scale;
    c.pretrain_epochs = pretrain_epochs;
    c.main_epochs = main_epochs;
    c.lr_pretrain = lr_pretrain;
    c.lr_transition = lr_transition;
    c.lr_drl = lr_drl;
    c.drl_epsilon = drl_epsilon;
    c.batch_size = batch_size;
    c.clip_norm = clip_norm;
    c.slowdown = slowdown;
    c.kappa = kappa;
    c.max_len = max_len;
    c.baseline = baseline;
    c.vae_mode = vae_sample_mode;
    c.no_pretrain = no_pretrain;
    c.no_transition = no_transition;
    c.seed = seed;
    return c;
  }
};

namespace config_detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::size_t to_count(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ValidationError("config key '" + key + "' expects a non-negative integer, got '" + v + "'");
  return out;
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ValidationError("config key '" + key + "' expects an unsigned integer, got '" + v + "'");
  return out;
}

inline double to_real(const std::string& key, const std::string& v) {
  // from_chars for doubles is not available in every libstdc++ we target.
  std::istringstream in(v);
  in.imbue(std::locale::classic());
  double out = 0.0;
  char extra;
  if (!(in >> out) || (in >> extra)) throw ValidationError("config key '" + key + "' expects a number, got '" + v + "'");
  return out;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ValidationError("config key '" + key + "' expects true or false, got '" + v + "'");
}

template <class Enum>
Enum to_enum(const std::string& key, const std::string& v, const std::map<std::string, Enum>& names) {
  const auto it = names.find(v);
  if (it != names.end()) return it->second;
  std::string allowed;
  for (const auto& [name, value] : names) allowed += (allowed.empty() ? "" : ", ") + name;
  throw ValidationError("config key '" + key + "' expects one of {" + allowed + "}, got '" + v + "'");
}

}  // namespace config_detail

/// Vocabulary caps for the dataset presets.
inline std::size_t dataset_vocab_size(const std::string& dataset) {
  static const std::map<std::string, std::size_t> caps = {
      {"quora", 8000}, {"wikianswers", 8000}, {"mscoco", 10000}, {"twitter", 8000}};
  const auto it = caps.find(dataset);
  if (it == caps.end()) throw ValidationError("unknown dataset preset '" + dataset + "'");
  return it->second;
}

inline void RunConfig::set(const std::string& key, const std::string& value) {
  using namespace config_detail;
  const std::string& v = value;
  static const std::map<std::string, std::function<void(RunConfig&, const std::string&, const std::string&)>> table = {
      {"dataset", [](RunConfig& c, auto&, auto& v) { c.vocab_size = dataset_vocab_size(v); c.dataset = v; }},
      {"train_path", [](RunConfig& c, auto&, auto& v) { c.train_path = v; }},
      {"valid_path", [](RunConfig& c, auto&, auto& v) { c.valid_path = v; }},
      {"test_path", [](RunConfig& c, auto&, auto& v) { c.test_path = v; }},
      {"work_dir", [](RunConfig& c, auto&, auto& v) { c.work_dir = v; }},
      {"min_freq", [](RunConfig& c, auto& k, auto& v) { c.min_freq = to_count(k, v); }},
      {"vocab_size", [](RunConfig& c, auto& k, auto& v) { c.vocab_size = to_count(k, v); }},
      {"max_len", [](RunConfig& c, auto& k, auto& v) { c.max_len = to_count(k, v); }},
      {"lm_order", [](RunConfig& c, auto& k, auto& v) { c.lm_order = to_count(k, v); }},
      {"lm_discount", [](RunConfig& c, auto& k, auto& v) { c.lm_discount = to_real(k, v); }},
      {"embedding_dim", [](RunConfig& c, auto& k, auto& v) { c.embedding_dim = to_count(k, v); }},
      {"embedding_window", [](RunConfig& c, auto& k, auto& v) { c.embedding_window = to_count(k, v); }},
      {"embeddings_path", [](RunConfig& c, auto&, auto& v) { c.embeddings_path = v; }},
      {"alpha", [](RunConfig& c, auto& k, auto& v) { c.weights.alpha = to_real(k, v); }},
      {"beta", [](RunConfig& c, auto& k, auto& v) { c.weights.beta = to_real(k, v); }},
      {"gamma", [](RunConfig& c, auto& k, auto& v) { c.weights.gamma = to_real(k, v); }},
      {"tau_min", [](RunConfig& c, auto& k, auto& v) { c.thresholds.tau_min = to_real(k, v); }},
      {"tau_max", [](RunConfig& c, auto& k, auto& v) { c.thresholds.tau_max = to_real(k, v); }},
      {"lambda_min", [](RunConfig& c, auto& k, auto& v) { c.thresholds.lambda_min = to_real(k, v); }},
      {"emb_dim", [](RunConfig& c, auto& k, auto& v) { c.dims.emb_dim = to_count(k, v); }},
      {"hid_dim", [](RunConfig& c, auto& k, auto& v) { c.dims.hid_dim = to_count(k, v); }},
      {"layers", [](RunConfig& c, auto& k, auto& v) { c.dims.layers = to_count(k, v); }},
      {"latent_dim", [](RunConfig& c, auto& k, auto& v) { c.latent_dim = to_count(k, v); }},
      {"init_scale", [](RunConfig& c, auto& k, auto& v) { c.init_scale = to_real(k, v); }},
      {"vae_epochs", [](RunConfig& c, auto& k, auto& v) { c.vae_epochs = to_count(k, v); }},
      {"vae_batch_size", [](RunConfig& c, auto& k, auto& v) { c.vae_batch_size = to_count(k, v); }},
      {"vae_lr", [](RunConfig& c, auto& k, auto& v) { c.vae_lr = to_real(k, v); }},
      {"kl_anneal_epochs", [](RunConfig& c, auto& k, auto& v) { c.kl_anneal_epochs = to_real(k, v); }},
      {"word_dropout", [](RunConfig& c, auto& k, auto& v) { c.word_dropout = to_real(k, v); }},
      {"vae_sample_mode",
       [](RunConfig& c, auto& k, auto& v) {
         c.vae_sample_mode = to_enum<vae::SampleMode>(
             k, v, {{"greedy", vae::SampleMode::kGreedy}, {"stochastic", vae::SampleMode::kStochastic}});
       }},
      {"pretrain_epochs", [](RunConfig& c, auto& k, auto& v) { c.pretrain_epochs = to_count(k, v); }},
      {"main_epochs", [](RunConfig& c, auto& k, auto& v) { c.main_epochs = to_count(k, v); }},
      {"lr_pretrain", [](RunConfig& c, auto& k, auto& v) { c.lr_pretrain = to_real(k, v); }},
      {"lr_transition", [](RunConfig& c, auto& k, auto& v) { c.lr_transition = to_real(k, v); }},
      {"lr_drl", [](RunConfig& c, auto& k, auto& v) { c.lr_drl = to_real(k, v); }},
      {"drl_epsilon", [](RunConfig& c, auto& k, auto& v) { c.drl_epsilon = to_real(k, v); }},
      {"batch_size", [](RunConfig& c, auto& k, auto& v) { c.batch_size = to_count(k, v); }},
      {"clip_norm", [](RunConfig& c, auto& k, auto& v) { c.clip_norm = to_real(k, v); }},
      {"slowdown", [](RunConfig& c, auto& k, auto& v) { c.slowdown = to_real(k, v); }},
      {"kappa", [](RunConfig& c, auto& k, auto& v) { c.kappa = to_real(k, v); }},
      {"baseline",
       [](RunConfig& c, auto& k, auto& v) {
         c.baseline = to_enum<trainer::BaselineMode>(k, v,
                                                     {{"drl_phase", trainer::BaselineMode::kDrlPhase},
                                                      {"after_pretrain", trainer::BaselineMode::kAfterPretrain},
                                                      {"never", trainer::BaselineMode::kNever}});
       }},
      {"no_pretrain", [](RunConfig& c, auto& k, auto& v) { c.no_pretrain = to_bool(k, v); }},
      {"no_transition", [](RunConfig& c, auto& k, auto& v) { c.no_transition = to_bool(k, v); }},
      {"checkpoint_every", [](RunConfig& c, auto& k, auto& v) { c.checkpoint_every = to_count(k, v); }},
      {"decode_strategy",
       [](RunConfig& c, auto& k, auto& v) {
         c.decode.strategy = to_enum<decoding::Strategy>(k, v,
                                                         {{"greedy", decoding::Strategy::kGreedy},
                                                          {"sample", decoding::Strategy::kSample},
                                                          {"beam", decoding::Strategy::kBeam}});
       }},
      {"beam_width", [](RunConfig& c, auto& k, auto& v) { c.decode.beam_width = to_count(k, v); }},
      {"temperature", [](RunConfig& c, auto& k, auto& v) { c.decode.temperature = to_real(k, v); }},
      {"length_penalty", [](RunConfig& c, auto& k, auto& v) { c.decode.length_penalty = to_real(k, v); }},
      {"seed", [](RunConfig& c, auto& k, auto& v) { c.seed = to_u64(k, v); }},
  };
  const auto it = table.find(key);
  if (it == table.end()) throw ValidationError("unknown config key '" + key + "'");
  it->second(*this, key, v);
}

inline void RunConfig::validate() const {
  if (min_freq < 1) throw ValidationError("min_freq must be at least 1");
  if (vocab_size < 1) throw ValidationError("vocab_size must be positive");
  if (max_len < 1) throw ValidationError("max_len must be positive");
  if (lm_order < 1 || lm_order > 4) throw ValidationError("lm_order must lie in [1, 4]");
  if (!(lm_discount > 0.0 && lm_discount < 1.0)) throw ValidationError("lm_discount must lie in (0, 1)");
  if (embedding_dim < 1 || embedding_window < 1) throw ValidationError("embedding_dim and embedding_window must be positive");
  pup::validate(weights);
  pup::validate(thresholds);
  if (dims.emb_dim < 1 || dims.hid_dim < 1 || dims.layers < 1 || latent_dim < 1)
    throw ValidationError("model dimensions must be positive");
  if (!(init_scale > 0.0)) throw ValidationError("init_scale must be positive");
  if (vae_batch_size < 1) throw ValidationError("vae_batch_size must be positive");
  if (!(vae_lr > 0.0)) throw ValidationError("vae_lr must be positive");
  if (kl_anneal_epochs < 0.0) throw ValidationError("kl_anneal_epochs must be non-negative");
  if (!(word_dropout >= 0.0 && word_dropout <= 1.0)) throw ValidationError("word_dropout must lie in [0, 1]");
  if (!(drl_epsilon >= 0.0 && drl_epsilon <= 1.0)) throw ValidationError("drl_epsilon must lie in [0, 1]");
  trainer::validate(train_config());
  decoding::validate(decode);
}

/// Parses `key = value` lines. Later keys override earlier ones; the result
/// is validated.
inline RunConfig parse_config(std::istream& in, RunConfig base = {}) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = config_detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", lineno);
    const std::string key = config_detail::trim(t.substr(0, eq));
    const std::string value = config_detail::trim(t.substr(eq + 1));
    try {
      base.set(key, value);
    } catch (const ParseError&) {
      throw;
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  base.validate();
  return base;
}

inline RunConfig load_config(const std::string& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  return parse_config(in, std::move(base));
}

/// The configuration as `key = value` lines, readable by parse_config.
inline std::string to_string(const RunConfig& c) {
  std::ostringstream o;
  o.precision(17);
  auto mode = [](vae::SampleMode m) { return m == vae::SampleMode::kGreedy ? "greedy" : "stochastic"; };
  auto base = [](trainer::BaselineMode m) {
    return m == trainer::BaselineMode::kAfterPretrain ? "after_pretrain" : m == trainer::BaselineMode::kNever ? "never" : "drl_phase";
  };
  auto strat = [](decoding::Strategy s) {
    return s == decoding::Strategy::kGreedy ? "greedy" : s == decoding::Strategy::kSample ? "sample" : "beam";
  };
  o << "dataset = " << c.dataset << "\n"
    << "train_path = " << c.train_path << "\n"
    << "valid_path = " << c.valid_path << "\n"
    << "test_path = " << c.test_path << "\n"
    << "work_dir = " << c.work_dir << "\n"
    << "min_freq = " << c.min_freq << "\n"
    << "vocab_size = " << c.vocab_size << "\n"
    << "max_len = " << c.max_len << "\n"
    << "lm_order = " << c.lm_order << "\n"
    << "lm_discount = " << c.lm_discount << "\n"
    << "embedding_dim = " << c.embedding_dim << "\n"
    << "embedding_window = " << c.embedding_window << "\n"
    << "embeddings_path = " << c.embeddings_path << "\n"
    << "alpha = " << c.weights.alpha << "\n"
    << "beta = " << c.weights.beta << "\n"
    << "gamma = " << c.weights.gamma << "\n"
    << "tau_min = " << c.thresholds.tau_min << "\n"
    << "tau_max = " << c.thresholds.tau_max << "\n"
    << "lambda_min = " << c.thresholds.lambda_min << "\n"
    << "emb_dim = " << c.dims.emb_dim << "\n"
    << "hid_dim = " << c.dims.hid_dim << "\n"
    << "layers = " << c.dims.layers << "\n"
    << "latent_dim = " << c.latent_dim << "\n"
    << "init_scale = " << c.init_scale << "\n"
    << "vae_epochs = " << c.vae_epochs << "\n"
    << "vae_batch_size = " << c.vae_batch_size << "\n"
    << "vae_lr = " << c.vae_lr << "\n"
    << "kl_anneal_epochs = " << c.kl_anneal_epochs << "\n"
    << "word_dropout = " << c.word_dropout << "\n"
    << "vae_sample_mode = " << mode(c.vae_sample_mode) << "\n"
    << "pretrain_epochs = " << c.pretrain_epochs << "\n"
    << "main_epochs = " << c.main_epochs << "\n"
    << "lr_pretrain = " << c.lr_pretrain << "\n"
    << "lr_transition = " << c.lr_transition << "\n"
    << "lr_drl = " << c.lr_drl << "\n"
    << "drl_epsilon = " << c.drl_epsilon << "\n"
    << "batch_size = " << c.batch_size << "\n"
    << "clip_norm = " << c.clip_norm << "\n"
    << "slowdown = " << c.slowdown << "\n"
    << "kappa = " << c.kappa << "\n"
    << "baseline = " << base(c.baseline) << "\n"
    << "no_pretrain = " << (c.no_pretrain ? "true" : "false") << "\n"
    << "no_transition = " << (c.no_transition ? "true" : "false") << "\n"
    << "checkpoint_every = " << c.checkpoint_every << "\n"
    << "decode_strategy = " << strat(c.decode.strategy) << "\n"
    << "beam_width = " << c.decode.beam_width << "\n"
    << "temperature = " << c.decode.temperature << "\n"
    << "length_penalty = " << c.decode.length_penalty << "\n"
    << "seed = " << c.seed << "\n";
  return o.str();
}

}  // namespace pup
