// Copyright (c) 2026 mtlab contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtlab/model.hpp"

#include <algorithm>
#include <cmath>

namespace mtlab {

void ModelConfig::validate() const {
  if (n_layers_enc < 1 || n_layers_dec < 1 || d_model < 1 || n_heads < 1 ||
      d_ffn < 1 || max_len < 2 || vocab_size < 5)
    throw std::invalid_argument("model config: all dimensions must be positive");
  if (d_model % n_heads != 0)
    throw std::invalid_argument("model config: d_model " + std::to_string(d_model) +
                                " not divisible by n_heads " +
                                std::to_string(n_heads));
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw std::invalid_argument("model config: dropout_rate must be in [0,1)");
}

namespace {

Mat sinusoidal_positions(int max_len, int d) {
  Mat p(max_len, d);
  for (int pos = 0; pos < max_len; ++pos) {
    for (int i = 0; i < d; i += 2) {
      const double angle =
          pos / std::pow(10000.0, static_cast<double>(i) / static_cast<double>(d));
      p(pos, i) = std::sin(angle);
      if (i + 1 < d) p(pos, i + 1) = std::cos(angle);
    }
  }
  return p;
}

Var dropout(Tape& tape, Var x, const ModelConfig& cfg, const ForwardOptions& opt) {
  if (!opt.training || cfg.dropout_rate <= 0.0) return x;
  if (!opt.dropout_rng)
    throw std::invalid_argument("forward: training with dropout needs an rng");
  const auto& v = tape.value(x);
  const double keep = 1.0 - cfg.dropout_rate;
  Mat mask(v.rows(), v.cols());
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    for (Eigen::Index j = 0; j < v.cols(); ++j)
      mask(i, j) = opt.dropout_rng->uniform() < cfg.dropout_rate ? 0.0 : 1.0 / keep;
  return mul(x, tape.constant(std::move(mask)));
}

Var residual(Var x, Var branch, const ModelConfig& cfg) {
  if (cfg.residual_scale != 1.0) branch = scale(branch, cfg.residual_scale);
  return add(x, branch);
}

struct Fwd {
  Tape& tape;
  ParamBinder& bind;
  const ModelParams& m;
  const ForwardOptions& opt;

  Var layer_norm(Var x, Tensor* g, Tensor* b) {
    return layer_norm_rows(x, bind(g), bind(b), kLayerNormEps);
  }

  Var embed(const std::vector<int>& ids, Tensor* ln_g, Tensor* ln_b) {
    if (static_cast<int>(ids.size()) > m.cfg.max_len)
      throw std::invalid_argument("sequence of " + std::to_string(ids.size()) +
                                  " tokens exceeds max_len " +
                                  std::to_string(m.cfg.max_len));
    Var e = embedding_rows(bind(m.embedding), ids);
    e = scale(e, std::sqrt(static_cast<double>(m.cfg.d_model)));
    Var x = add(e, tape.constant(m.positions.topRows(
                      static_cast<Eigen::Index>(ids.size()))));
    x = layer_norm(x, ln_g, ln_b);
    return dropout(tape, x, m.cfg, opt);
  }

  Var attention(const AttnParams& p, Var q_in, Var kv_in, bool causal) {
    const int dh = m.cfg.d_model / m.cfg.n_heads;
    Var q = add_rowwise(matmul(q_in, bind(p.wq)), bind(p.bq));
    Var k = add_rowwise(matmul(kv_in, bind(p.wk)), bind(p.bk));
    Var v = add_rowwise(matmul(kv_in, bind(p.wv)), bind(p.bv));
    const Eigen::Index n = tape.value(q).rows();
    const Eigen::Index mm = tape.value(k).rows();
    Var mask_var{};
    if (causal) {
      Mat cm = Mat::Zero(n, mm);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < mm; ++j) cm(i, j) = -1e30;
      mask_var = tape.constant(std::move(cm));
    }
    std::vector<Var> heads;
    heads.reserve(m.cfg.n_heads);
    for (int h = 0; h < m.cfg.n_heads; ++h) {
      Var qh = slice_cols(q, h * dh, dh);
      Var kh = slice_cols(k, h * dh, dh);
      Var vh = slice_cols(v, h * dh, dh);
      Var scores = scale(matmul(qh, transpose(kh)),
                         1.0 / std::sqrt(static_cast<double>(dh)));
      if (causal) scores = add(scores, mask_var);
      Var attn = softmax_rows(scores);
      attn = dropout(tape, attn, m.cfg, opt);
      heads.push_back(matmul(attn, vh));
    }
    Var ctx = concat_cols(heads);
    return add_rowwise(matmul(ctx, bind(p.wo)), bind(p.bo));
  }

  Var ffn(Var x, Tensor* w1, Tensor* b1, Tensor* w2, Tensor* b2) {
    Var h = relu(add_rowwise(matmul(x, bind(w1)), bind(b1)));
    h = dropout(tape, h, m.cfg, opt);
    return add_rowwise(matmul(h, bind(w2)), bind(b2));
  }

  Var encoder_stack(Var x) {
    for (const auto& L : m.enc) {
      Var y = layer_norm(x, L.ln1_g, L.ln1_b);
      Var a = attention(L.self, y, y, /*causal=*/false);
      x = residual(x, a, m.cfg);
      Var f = ffn(layer_norm(x, L.ln2_g, L.ln2_b), L.ffn_w1, L.ffn_b1, L.ffn_w2,
                  L.ffn_b2);
      x = residual(x, f, m.cfg);
    }
    return layer_norm(x, m.enc_ln_g, m.enc_ln_b);
  }

  Var decoder_stack(Var x, Var enc_states) {
    for (const auto& L : m.dec) {
      Var y = layer_norm(x, L.ln1_g, L.ln1_b);
      x = residual(x, attention(L.self, y, y, /*causal=*/true), m.cfg);
      Var z = layer_norm(x, L.ln2_g, L.ln2_b);
      x = residual(x, attention(L.cross, z, enc_states, /*causal=*/false),
                   m.cfg);
      Var f = ffn(layer_norm(x, L.ln3_g, L.ln3_b), L.ffn_w1, L.ffn_b1, L.ffn_w2,
                  L.ffn_b2);
      x = residual(x, f, m.cfg);
    }
    return layer_norm(x, m.dec_ln_g, m.dec_ln_b);
  }
};

std::vector<int> row_prefix(const IntMat& ids, const IntMat& mask, int b) {
  const int len = mask.row(b).sum();
  std::vector<int> out(len);
  for (int j = 0; j < len; ++j) out[j] = ids(b, j);
  return out;
}

}  // namespace

ModelParams::ModelParams(ModelConfig config, uint64_t seed) : cfg(config) {
  cfg.validate();
  const int d = cfg.d_model;
  embedding = &add("embedding", cfg.vocab_size, d, seed, true);
  enc_emb_ln_g = &add("enc.emb_ln.gain", 1, d, seed, false);
  enc_emb_ln_b = &add("enc.emb_ln.bias", 1, d, seed, false);
  for (int l = 0; l < cfg.n_layers_enc; ++l) {
    const std::string p = "enc." + std::to_string(l) + ".";
    EncLayerParams L;
    L.ln1_g = &add(p + "ln1.gain", 1, d, seed, false);
    L.ln1_b = &add(p + "ln1.bias", 1, d, seed, false);
    L.self = add_attn(p + "self.", seed);
    L.ln2_g = &add(p + "ln2.gain", 1, d, seed, false);
    L.ln2_b = &add(p + "ln2.bias", 1, d, seed, false);
    L.ffn_w1 = &add(p + "ffn.w1", d, cfg.d_ffn, seed, true);
    L.ffn_b1 = &add(p + "ffn.b1", 1, cfg.d_ffn, seed, false);
    L.ffn_w2 = &add(p + "ffn.w2", cfg.d_ffn, d, seed, true);
    L.ffn_b2 = &add(p + "ffn.b2", 1, d, seed, false);
    enc.push_back(L);
  }
  enc_ln_g = &add("enc.final_ln.gain", 1, d, seed, false);
  enc_ln_b = &add("enc.final_ln.bias", 1, d, seed, false);

  dec_emb_ln_g = &add("dec.emb_ln.gain", 1, d, seed, false);
  dec_emb_ln_b = &add("dec.emb_ln.bias", 1, d, seed, false);
  for (int l = 0; l < cfg.n_layers_dec; ++l) {
    const std::string p = "dec." + std::to_string(l) + ".";
    DecLayerParams L;
    L.ln1_g = &add(p + "ln1.gain", 1, d, seed, false);
    L.ln1_b = &add(p + "ln1.bias", 1, d, seed, false);
    L.self = add_attn(p + "self.", seed);
    L.ln2_g = &add(p + "ln2.gain", 1, d, seed, false);
    L.ln2_b = &add(p + "ln2.bias", 1, d, seed, false);
    L.cross = add_attn(p + "cross.", seed);
    L.ln3_g = &add(p + "ln3.gain", 1, d, seed, false);
    L.ln3_b = &add(p + "ln3.bias", 1, d, seed, false);
    L.ffn_w1 = &add(p + "ffn.w1", d, cfg.d_ffn, seed, true);
    L.ffn_b1 = &add(p + "ffn.b1", 1, cfg.d_ffn, seed, false);
    L.ffn_w2 = &add(p + "ffn.w2", cfg.d_ffn, d, seed, true);
    L.ffn_b2 = &add(p + "ffn.b2", 1, d, seed, false);
    dec.push_back(L);
  }
  dec_ln_g = &add("dec.final_ln.gain", 1, d, seed, false);
  dec_ln_b = &add("dec.final_ln.bias", 1, d, seed, false);

  positions = sinusoidal_positions(cfg.max_len, d);
}

// Glorot-style scaled uniform for weight matrices; layer-norm gains start at
// 1, every bias at 0.
Tensor& ModelParams::add(const std::string& name, int rows, int cols,
                         uint64_t seed, bool glorot) {
  Mat v;
  if (glorot) {
    const double a =
        std::sqrt(6.0 / (static_cast<double>(rows) + static_cast<double>(cols)));
    Rng rng(mix_seed({seed, fnv1a64(name)}));
    v.resize(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) v(i, j) = rng.uniform(-a, a);
  } else if (name.size() > 4 && name.substr(name.size() - 4) == "gain") {
    v = Mat::Ones(rows, cols);
  } else {
    v = Mat::Zero(rows, cols);
  }
  store_.emplace_back(name, std::move(v));
  order_.push_back(&store_.back());
  return store_.back();
}

AttnParams ModelParams::add_attn(const std::string& prefix, uint64_t seed) {
  const int d = cfg.d_model;
  AttnParams a;
  a.wq = &add(prefix + "wq", d, d, seed, true);
  a.bq = &add(prefix + "bq", 1, d, seed, false);
  a.wk = &add(prefix + "wk", d, d, seed, true);
  a.bk = &add(prefix + "bk", 1, d, seed, false);
  a.wv = &add(prefix + "wv", d, d, seed, true);
  a.bv = &add(prefix + "bv", 1, d, seed, false);
  a.wo = &add(prefix + "wo", d, d, seed, true);
  a.bo = &add(prefix + "bo", 1, d, seed, false);
  return a;
}

Tensor* ModelParams::find(const std::string& name) {
  for (Tensor* t : order_)
    if (t->name == name) return t;
  return nullptr;
}

void ModelParams::zero_grads() {
  for (Tensor* t : order_) t->zero_grad();
}

long ModelParams::parameter_count() const {
  long n = 0;
  for (const Tensor* t : order_) n += t->value.size();
  return n;
}

EncodedBatch encode(Tape& tape, ParamBinder& bind, const ModelParams& params,
                    const IntMat& ids, const IntMat& mask,
                    const ForwardOptions& opt) {
  Fwd f{tape, bind, params, opt};
  EncodedBatch out;
  for (int b = 0; b < ids.rows(); ++b) {
    const std::vector<int> row = row_prefix(ids, mask, b);
    if (row.empty()) throw std::invalid_argument("encode: empty row in batch");
    Var x = f.embed(row, params.enc_emb_ln_g, params.enc_emb_ln_b);
    Var states = f.encoder_stack(x);
    out.states.push_back(states);
    std::vector<Scalar> pool_mask(row.size(), 1.0);
    if (params.cfg.pool_skip_language_token && row.size() > 1)
      pool_mask[0] = 0.0;
    out.pooled.push_back(masked_mean_rows(states, std::move(pool_mask)));
    out.lens.push_back(static_cast<int>(row.size()));
  }
  return out;
}

std::vector<Var> decode_train(Tape& tape, ParamBinder& bind,
                              const ModelParams& params,
                              const EncodedBatch& encoded, const Batch& batch,
                              const ForwardOptions& opt) {
  Fwd f{tape, bind, params, opt};
  Var proj = transpose(bind(params.embedding));  // tied output projection
  std::vector<Var> logits;
  for (int b = 0; b < batch.rows(); ++b) {
    const std::vector<int> row = row_prefix(batch.tgt_input, batch.tgt_mask, b);
    if (row.empty())
      throw std::invalid_argument("decode_train: empty target row");
    Var x = f.embed(row, params.dec_emb_ln_g, params.dec_emb_ln_b);
    Var h = f.decoder_stack(x, encoded.states[b]);
    logits.push_back(matmul(h, proj));
  }
  return logits;
}

std::vector<int> beam_search(const StepFn& step, int start_id, int eos_id,
                             int beam, int max_len, double alpha) {
  if (beam < 1) throw std::invalid_argument("beam_search: beam must be >= 1");
  struct Hyp {
    std::vector<int> toks;  // includes start token
    double logp = 0.0;
  };
  const auto norm_score = [alpha](const Hyp& h) {
    const double len = static_cast<double>(h.toks.size()) - 1.0;
    return h.logp / std::pow(std::max(len, 1.0), alpha);
  };

  std::vector<Hyp> alive{{{start_id}, 0.0}};
  std::vector<Hyp> finished;
  for (int t = 0; t < max_len && !alive.empty(); ++t) {
    struct Cand {
      double logp;
      int tok;
      size_t parent;
    };
    std::vector<Cand> cands;
    for (size_t i = 0; i < alive.size(); ++i) {
      const std::vector<double> logits = step(alive[i].toks);
      // log-softmax, stabilized
      double m = logits[0];
      for (double v : logits) m = std::max(m, v);
      double z = 0.0;
      for (double v : logits) z += std::exp(v - m);
      const double lse = std::log(z) + m;
      for (size_t tok = 0; tok < logits.size(); ++tok)
        cands.push_back({alive[i].logp + logits[tok] - lse,
                         static_cast<int>(tok), i});
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.logp != b.logp) return a.logp > b.logp;
      if (a.tok != b.tok) return a.tok < b.tok;
      return a.parent < b.parent;
    });
    std::vector<Hyp> next;
    int taken = 0;
    for (const Cand& c : cands) {
      if (taken >= beam) break;
      ++taken;
      Hyp h = alive[c.parent];
      h.toks.push_back(c.tok);
      h.logp = c.logp;
      if (c.tok == eos_id)
        finished.push_back(std::move(h));
      else
        next.push_back(std::move(h));
    }
    alive = std::move(next);
    if (static_cast<int>(finished.size()) >= beam) break;
  }
  for (Hyp& h : alive) finished.push_back(std::move(h));
  if (finished.empty()) return {};
  const Hyp* best = &finished[0];
  for (const Hyp& h : finished)
    if (norm_score(h) > norm_score(*best)) best = &h;

  std::vector<int> out;
  for (size_t i = 1; i < best->toks.size(); ++i)
    if (best->toks[i] != eos_id) out.push_back(best->toks[i]);
  return out;
}

namespace {

Mat encoder_states_value(const ModelParams& params, const std::vector<int>& ids) {
  Tape tape;
  ParamBinder bind(tape);
  Fwd f{tape, bind, params, ForwardOptions{}};
  Var x = f.embed(ids, params.enc_emb_ln_g, params.enc_emb_ln_b);
  return tape.value(f.encoder_stack(x));
}

}  // namespace

std::vector<std::string> translate(const ModelParams& params,
                                   const Vocabulary& vocab,
                                   const std::vector<std::string>& src_tokens,
                                   const std::string& src_lang,
                                   const std::string& tgt_lang, int beam) {
  const std::vector<int> src = vocab.encode_tokens(src_tokens, src_lang, true);
  const Mat enc = encoder_states_value(params, src);
  const ForwardOptions opt{};
  const StepFn step = [&](const std::vector<int>& prefix) {
    Tape tape;
    ParamBinder bind(tape);
    Fwd f{tape, bind, params, opt};
    Var x = f.embed(prefix, params.dec_emb_ln_g, params.dec_emb_ln_b);
    Var h = f.decoder_stack(x, tape.constant(enc));
    Var logits = matmul(h, transpose(bind(params.embedding)));
    const Mat& v = tape.value(logits);
    const Eigen::Index last = v.rows() - 1;
    std::vector<double> out(static_cast<size_t>(v.cols()));
    for (Eigen::Index j = 0; j < v.cols(); ++j) out[j] = v(last, j);
    return out;
  };
  const std::vector<int> ids =
      beam_search(step, vocab.lang_id(tgt_lang), Vocabulary::kEos, beam,
                  params.cfg.max_len - 1);
  return vocab.decode_tokens(ids);
}

Mat pooled_representation(const ModelParams& params, const Vocabulary& vocab,
                          const std::vector<std::string>& tokens,
                          const std::string& lang) {
  Tape tape;
  ParamBinder bind(tape);
  Fwd f{tape, bind, params, ForwardOptions{}};
  const std::vector<int> ids = vocab.encode_tokens(tokens, lang, true);
  Var x = f.embed(ids, params.enc_emb_ln_g, params.enc_emb_ln_b);
  Var states = f.encoder_stack(x);
  std::vector<Scalar> pool_mask(ids.size(), 1.0);
  if (params.cfg.pool_skip_language_token && ids.size() > 1) pool_mask[0] = 0.0;
  return tape.value(masked_mean_rows(states, std::move(pool_mask)));
}

}  // namespace mtlab
