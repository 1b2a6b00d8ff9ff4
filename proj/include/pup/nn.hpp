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

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "pup/autodiff.hpp"
#include "pup/binary_io.hpp"
#include "pup/error.hpp"
#include "pup/text.hpp"

namespace pup::nn {

using ad::Tape;
using ad::Tensor;
using ad::Var;
using Rng = std::mt19937_64;

inline void init_uniform(Tensor& t, Rng& rng, double scale) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (auto& v : t.data) v = dist(rng);
}

/// One LSTM layer: gate weights over [x; h] in the order input, forget,
/// cell candidate, output.
struct LstmLayer {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  Tensor weight;  // 4H x (in + H)
  Tensor bias;    // 4H

  LstmLayer() = default;
  LstmLayer(std::size_t in, std::size_t hidden)
      : input_dim(in), hidden_dim(hidden), weight({4 * hidden, in + hidden}), bias({4 * hidden}) {}
};

/// (h', c') = LSTM(x, h, c).
inline std::pair<Var, Var> lstm_step(LstmLayer& layer, Var x, Var h, Var c) {
  const std::size_t hd = layer.hidden_dim;
  if (x.size() != layer.input_dim || h.size() != hd || c.size() != hd)
    throw ad::ShapeError("lstm_step: expected x " + std::to_string(layer.input_dim) + ", h/c " +
                         std::to_string(hd) + ", got " + std::to_string(x.size()) + ", " +
                         std::to_string(h.size()) + ", " + std::to_string(c.size()));
  Tape& t = *x.tape;
  Var gates = ad::affine(t.param(layer.weight), ad::concat(x, h), t.param(layer.bias));
  Var i = ad::sigmoid(ad::slice(gates, 0, hd));
  Var f = ad::sigmoid(ad::slice(gates, hd, hd));
  Var g = ad::tanh(ad::slice(gates, 2 * hd, hd));
  Var o = ad::sigmoid(ad::slice(gates, 3 * hd, hd));
  Var c_next = f * c + i * g;
  Var h_next = o * ad::tanh(c_next);
  return {h_next, c_next};
}

/// Untaped twin of lstm_step; bit-identical values.
inline void lstm_step_plain(const LstmLayer& layer, const std::vector<double>& x, std::vector<double>& h,
                            std::vector<double>& c) {
  const std::size_t hd = layer.hidden_dim;
  std::vector<double> xh(x);
  xh.insert(xh.end(), h.begin(), h.end());
  std::vector<double> gates(4 * hd);
  ad::kernels::affine(layer.weight.data.data(), xh.data(), layer.bias.data.data(), gates.data(), 4 * hd,
                      layer.input_dim + hd);
  std::vector<double> h2(hd), c2(hd);
  ad::kernels::lstm_cell(gates.data(), c.data(), h2.data(), c2.data(), hd);
  h = std::move(h2);
  c = std::move(c2);
}

struct TapedState {
  std::vector<Var> h, c;
};

struct PlainState {
  std::vector<std::vector<double>> h, c;
  bool operator==(const PlainState&) const = default;
};

struct ModelDims {
  std::size_t vocab_size = 0;
  std::size_t emb_dim = 64;
  std::size_t hid_dim = 64;
  std::size_t layers = 2;
  bool operator==(const ModelDims&) const = default;
};

/// Embedding, stacked LSTM encoder and decoder, and the output projection.
/// One embedding table serves both encoder and decoder.
struct Seq2SeqParams {
  ModelDims dims;
  Tensor embedding;  // V x E
  std::vector<LstmLayer> encoder, decoder;
  Tensor out_w;  // V x H
  Tensor out_b;  // V

  Seq2SeqParams() = default;
  Seq2SeqParams(const ModelDims& d, Rng& rng, double init_scale = 0.08) : dims(d) {
    if (d.vocab_size == 0 || d.emb_dim == 0 || d.hid_dim == 0 || d.layers == 0)
      throw ValidationError("model dimensions must be positive");
    embedding = Tensor({d.vocab_size, d.emb_dim});
    for (std::size_t l = 0; l < d.layers; ++l) {
      encoder.emplace_back(l == 0 ? d.emb_dim : d.hid_dim, d.hid_dim);
      decoder.emplace_back(l == 0 ? d.emb_dim : d.hid_dim, d.hid_dim);
    }
    out_w = Tensor({d.vocab_size, d.hid_dim});
    out_b = Tensor({d.vocab_size});
    for (Tensor* p : parameters()) init_uniform(*p, rng, init_scale);
    // Forget gates start open so state (and the VAE's latent code) survives
    // across steps early in training.
    for (auto* layers : {&encoder, &decoder})
      for (auto& l : *layers) std::fill_n(l.bias.data.begin() + l.hidden_dim, l.hidden_dim, 1.0);
  }

  std::vector<Tensor*> parameters() {
    std::vector<Tensor*> out{&embedding};
    for (auto& l : encoder) {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
    }
    for (auto& l : decoder) {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
    }
    out.push_back(&out_w);
    out.push_back(&out_b);
    return out;
  }
  std::vector<const Tensor*> parameters() const {
    std::vector<const Tensor*> out;
    for (Tensor* p : const_cast<Seq2SeqParams*>(this)->parameters()) out.push_back(p);
    return out;
  }
};

inline void check_token(const Seq2SeqParams& p, TokenId id) {
  if (id < 0 || static_cast<std::size_t>(id) >= p.dims.vocab_size)
    throw std::out_of_range("token id " + std::to_string(id) + " outside model vocabulary");
}

/// Runs the encoder over `tokens` from a zero state.
inline TapedState encode_taped(Tape& t, Seq2SeqParams& p, const std::vector<TokenId>& tokens) {
  TapedState s;
  for (std::size_t l = 0; l < p.dims.layers; ++l) {
    s.h.push_back(t.constant(std::vector<double>(p.dims.hid_dim, 0.0)));
    s.c.push_back(t.constant(std::vector<double>(p.dims.hid_dim, 0.0)));
  }
  Var emb = t.param(p.embedding);
  for (TokenId id : tokens) {
    check_token(p, id);
    Var x = ad::row(emb, static_cast<std::size_t>(id));
    for (std::size_t l = 0; l < p.dims.layers; ++l) {
      auto [h, c] = lstm_step(p.encoder[l], x, s.h[l], s.c[l]);
      s.h[l] = h;
      s.c[l] = c;
      x = h;
    }
  }
  return s;
}

inline PlainState encode_plain(const Seq2SeqParams& p, const std::vector<TokenId>& tokens) {
  PlainState s;
  s.h.assign(p.dims.layers, std::vector<double>(p.dims.hid_dim, 0.0));
  s.c = s.h;
  for (TokenId id : tokens) {
    check_token(p, id);
    const double* e = p.embedding.data.data() + static_cast<std::size_t>(id) * p.dims.emb_dim;
    std::vector<double> x(e, e + p.dims.emb_dim);
    for (std::size_t l = 0; l < p.dims.layers; ++l) {
      lstm_step_plain(p.encoder[l], x, s.h[l], s.c[l]);
      x = s.h[l];
    }
  }
  return s;
}

/// Feeds `prev` to the decoder, advances `s` and returns next-token logits.
inline Var decode_step_taped(Tape& t, Seq2SeqParams& p, TapedState& s, TokenId prev) {
  check_token(p, prev);
  Var x = ad::row(t.param(p.embedding), static_cast<std::size_t>(prev));
  for (std::size_t l = 0; l < p.dims.layers; ++l) {
    auto [h, c] = lstm_step(p.decoder[l], x, s.h[l], s.c[l]);
    s.h[l] = h;
    s.c[l] = c;
    x = h;
  }
  return ad::affine(t.param(p.out_w), x, t.param(p.out_b));
}

inline std::vector<double> decode_step_plain(const Seq2SeqParams& p, PlainState& s, TokenId prev) {
  check_token(p, prev);
  const double* e = p.embedding.data.data() + static_cast<std::size_t>(prev) * p.dims.emb_dim;
  std::vector<double> x(e, e + p.dims.emb_dim);
  for (std::size_t l = 0; l < p.dims.layers; ++l) {
    lstm_step_plain(p.decoder[l], x, s.h[l], s.c[l]);
    x = s.h[l];
  }
  std::vector<double> logits(p.dims.vocab_size);
  ad::kernels::affine(p.out_w.data.data(), x.data(), p.out_b.data.data(), logits.data(), p.dims.vocab_size,
                      p.dims.hid_dim);
  return logits;
}

/// Encoder input for a sentence: its ids after the leading sos.
inline std::vector<TokenId> encoder_input(const EncodedSequence& seq) {
  if (seq.ids.empty()) return {};
  return {seq.ids.begin() + 1, seq.ids.end()};
}

/// Teacher-forced cross-entropy of `target` (an encoded sentence) given
/// `source`, summed over every target position after sos.
inline Var seq2seq_loss(Tape& t, Seq2SeqParams& p, const EncodedSequence& source, const EncodedSequence& target) {
  TapedState s = encode_taped(t, p, encoder_input(source));
  Var total = t.scalar(0.0);
  for (std::size_t i = 1; i < target.ids.size(); ++i) {
    Var logits = decode_step_taped(t, p, s, target.ids[i - 1]);
    total = total + ad::cross_entropy(logits, static_cast<std::size_t>(target.ids[i]));
  }
  return total;
}

// ---------------------------------------------------------------------------
// Optimisation utilities.

inline void zero_grad(const std::vector<Tensor*>& params) {
  for (Tensor* p : params) p->zero_grad();
}

inline double global_grad_norm(const std::vector<Tensor*>& params) {
  double sq = 0.0;
  for (const Tensor* p : params)
    for (double g : p->grad) sq += g * g;
  return std::sqrt(sq);
}

inline bool grads_finite(const std::vector<Tensor*>& params) {
  for (const Tensor* p : params)
    for (double g : p->grad)
      if (!std::isfinite(g)) return false;
  return true;
}

/// Rescales all gradients by max_norm / norm when their joint L2 norm
/// exceeds max_norm. Returns the norm before clipping.
inline double clip_by_global_norm(const std::vector<Tensor*>& params, double max_norm = 2.0) {
  const double norm = global_grad_norm(params);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (Tensor* p : params)
      for (double& g : p->grad) g *= s;
  }
  return norm;
}

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam moments for a fixed parameter list.
class Adam {
 public:
  explicit Adam(const std::vector<Tensor*>& params, AdamConfig config = {}) : config_(config) {
    for (const Tensor* p : params) {
      m_.emplace_back(p->size(), 0.0);
      v_.emplace_back(p->size(), 0.0);
    }
  }

  std::uint64_t steps() const { return t_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }

  void step(const std::vector<Tensor*>& params, double lr) {
    if (params.size() != m_.size()) throw ValidationError("Adam: parameter list changed");
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      Tensor& p = *params[k];
      if (p.grad.size() != p.size()) continue;
      auto& m = m_[k];
      auto& v = v_[k];
      if (m.size() != p.size()) throw ValidationError("Adam: parameter shape changed");
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double g = p.grad[i];
        m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
        v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
        p.data[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.eps);
      }
    }
  }

 private:
  AdamConfig config_;
  std::vector<std::vector<double>> m_, v_;
  std::uint64_t t_ = 0;
};

/// Largest relative error between the taped gradient and a five-point
/// central difference, |a - n| / max(|a|, |n|, 1e-8), over the coordinates
/// of `params` (a seeded random subset of `max_coords` per tensor when
/// nonzero). `tamper` may alter the analytic gradients before comparison.
inline double finite_difference_check(const std::function<Var(Tape&)>& loss_fn, const std::vector<Tensor*>& params,
                                      double eps = 3e-3, std::size_t max_coords = 0, std::uint64_t seed = 7,
                                      const std::function<void(const std::vector<Tensor*>&)>& tamper = {}) {
  zero_grad(params);
  {
    Tape t;
    Var loss = loss_fn(t);
    t.backward(loss);
  }
  if (tamper) tamper(params);
  std::vector<std::vector<double>> analytic;
  for (Tensor* p : params) {
    p->ensure_grad();
    analytic.push_back(p->grad);
  }
  auto eval = [&] {
    Tape t(false);
    return loss_fn(t).item();
  };
  Rng rng(seed);
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    std::vector<std::size_t> coords(p.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (max_coords > 0 && coords.size() > max_coords) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(max_coords);
    }
    for (std::size_t i : coords) {
      const double saved = p.data[i];
      auto at = [&](double h) {
        p.data[i] = saved + h;
        return eval();
      };
      const double numeric = (at(-2 * eps) - 8 * at(-eps) + 8 * at(eps) - at(2 * eps)) / (12 * eps);
      p.data[i] = saved;
      const double a = analytic[k][i];
      const double err = std::abs(a - numeric) / std::max({1e-8, std::abs(a), std::abs(numeric)});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// PUPNN1 checkpoints: magic, header, then every tensor as rank, dims and
// row-major float64 values.

enum class CheckpointKind : std::uint64_t { kPolicy = 0, kVae = 1 };

struct CheckpointHeader {
  CheckpointKind kind = CheckpointKind::kPolicy;
  std::uint64_t vocab_hash = 0;
  ModelDims dims;
  std::uint64_t latent_dim = 0;
  bool operator==(const CheckpointHeader&) const = default;
};

inline void write_checkpoint(std::ostream& out, const CheckpointHeader& h, const std::vector<const Tensor*>& tensors) {
  out.write("PUPNN1", 6);
  binio::write_u64(out, static_cast<std::uint64_t>(h.kind));
  binio::write_u64(out, h.vocab_hash);
  binio::write_u64(out, h.dims.vocab_size);
  binio::write_u64(out, h.dims.emb_dim);
  binio::write_u64(out, h.dims.hid_dim);
  binio::write_u64(out, h.dims.layers);
  binio::write_u64(out, h.latent_dim);
  binio::write_u64(out, tensors.size());
  for (const Tensor* t : tensors) {
    binio::write_u64(out, t->shape.size());
    for (std::size_t d : t->shape) binio::write_u64(out, d);
    out.write(reinterpret_cast<const char*>(t->data.data()), static_cast<std::streamsize>(t->size() * sizeof(double)));
  }
  if (!out) throw RuntimeError("failed writing checkpoint");
}

inline CheckpointHeader read_checkpoint_header(std::istream& in) {
  char magic[6];
  in.read(magic, 6);
  if (!in || std::memcmp(magic, "PUPNN1", 6) != 0) throw ValidationError("not a PUPNN1 checkpoint");
  CheckpointHeader h;
  const auto kind = binio::read_u64(in);
  if (kind > 1) throw ValidationError("unknown checkpoint kind");
  h.kind = static_cast<CheckpointKind>(kind);
  h.vocab_hash = binio::read_u64(in);
  h.dims.vocab_size = binio::read_u64(in);
  h.dims.emb_dim = binio::read_u64(in);
  h.dims.hid_dim = binio::read_u64(in);
  h.dims.layers = binio::read_u64(in);
  h.latent_dim = binio::read_u64(in);
  return h;
}

/// Reads tensor payloads into `tensors`, whose shapes must already match.
inline void read_checkpoint_tensors(std::istream& in, const std::vector<Tensor*>& tensors) {
  const auto count = binio::read_u64(in);
  if (count != tensors.size())
    throw ValidationError("checkpoint holds " + std::to_string(count) + " tensors, model expects " +
                          std::to_string(tensors.size()));
  for (Tensor* t : tensors) {
    const auto rank = binio::read_u64(in);
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = binio::read_u64(in);
    if (shape != t->shape) throw ValidationError("checkpoint tensor shape does not match the model");
    in.read(reinterpret_cast<char*>(t->data.data()), static_cast<std::streamsize>(t->size() * sizeof(double)));
    if (!in) throw ValidationError("truncated checkpoint");
  }
}

inline void save_policy(const std::string& path, const Seq2SeqParams& p, std::uint64_t vocab_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot write '" + path + "'");
  write_checkpoint(out, {CheckpointKind::kPolicy, vocab_hash, p.dims, 0}, p.parameters());
}

/// Loads a policy checkpoint, rejecting a vocabulary hash other than
/// `expected_hash`.
inline Seq2SeqParams load_policy(const std::string& path, std::uint64_t expected_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint '" + path + "'");
  const auto h = read_checkpoint_header(in);
  if (h.kind != CheckpointKind::kPolicy) throw ValidationError("'" + path + "' is not a policy checkpoint");
  if (h.vocab_hash != expected_hash) throw ValidationError("checkpoint '" + path + "' was built for another vocabulary");
  Rng rng(0);
  Seq2SeqParams p(h.dims, rng);
  read_checkpoint_tensors(in, p.parameters());
  return p;
}

}  // namespace pup::nn
