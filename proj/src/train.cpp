// Copyright (c) 2026 mtlab contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtlab/train.hpp"

#include "mtlab/kvfile.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;

namespace mtlab {

void TrainConfig::validate() const {
  if (lr_peak <= 0.0)
    throw std::invalid_argument("train config: lr_peak must be > 0");
  if (warmup_steps < 0 || warmup_steps >= total_steps)
    throw std::invalid_argument("train config: need 0 <= warmup_steps < total_steps");
  if (clip_norm <= 0.0)
    throw std::invalid_argument("train config: clip_norm must be > 0");
  if (tau <= 0.0) throw std::invalid_argument("train config: tau must be > 0");
  if (p_replace < 0.0 || p_replace > 1.0)
    throw std::invalid_argument("train config: p_replace must be in [0,1]");
  if (batch_tokens < 4)
    throw std::invalid_argument("train config: batch_tokens too small");
}

void apply_mode(TrainConfig& cfg, const std::string& mode) {
  if (mode == "baseline") {
    cfg.use_ctl = cfg.use_aa = cfg.use_mono = false;
  } else if (mode == "ctl") {
    cfg.use_ctl = true;
    cfg.use_aa = cfg.use_mono = false;
  } else if (mode == "aa") {
    cfg.use_aa = true;
    cfg.use_ctl = cfg.use_mono = false;
  } else if (mode == "aa-ctl") {
    cfg.use_ctl = cfg.use_aa = true;
    cfg.use_mono = false;
  } else if (mode == "full") {
    cfg.use_ctl = cfg.use_aa = cfg.use_mono = true;
  } else {
    throw std::invalid_argument("unknown mode '" + mode +
                                "' (baseline|ctl|aa|aa-ctl|full)");
  }
}

std::vector<std::string> known_modes() {
  return {"baseline", "ctl", "aa", "aa-ctl", "full"};
}

double lr_schedule(long step, const TrainConfig& cfg) {
  if (step < 1) throw std::invalid_argument("lr_schedule: step must be >= 1");
  if (step <= cfg.warmup_steps)
    return cfg.lr_peak * static_cast<double>(step) /
           static_cast<double>(cfg.warmup_steps);
  if (step >= cfg.total_steps) return 0.0;
  return cfg.lr_peak *
         static_cast<double>(cfg.total_steps - step) /
         static_cast<double>(cfg.total_steps - cfg.warmup_steps);
}

double clip_gradients(ModelParams& params, double clip_norm) {
  if (clip_norm <= 0.0)
    throw std::invalid_argument("clip_gradients: clip_norm must be > 0");
  double sq = 0.0;
  for (const Tensor* t : params.tensors()) {
    if (!t->grad.allFinite())
      throw NumericError("non-finite gradient in parameter '" + t->name + "'");
    sq += t->grad.squaredNorm();
  }
  const double norm = std::sqrt(sq);
  if (norm > clip_norm) {
    const double s = clip_norm / norm;
    for (Tensor* t : params.tensors()) t->grad *= s;
  }
  return norm;
}

OptimizerState OptimizerState::init(const ModelParams& params) {
  OptimizerState o;
  for (const Tensor* t : params.tensors()) {
    o.m.push_back(Mat::Zero(t->value.rows(), t->value.cols()));
    o.v.push_back(Mat::Zero(t->value.rows(), t->value.cols()));
  }
  return o;
}

void adam_step(ModelParams& params, OptimizerState& opt, const TrainConfig& cfg,
               double lr) {
  const auto& tensors = params.tensors();
  if (opt.m.size() != tensors.size())
    throw std::invalid_argument("adam_step: optimizer state size mismatch");
  opt.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(opt.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(opt.step));
  for (size_t i = 0; i < tensors.size(); ++i) {
    Tensor& t = *tensors[i];
    opt.m[i] = cfg.beta1 * opt.m[i] + (1.0 - cfg.beta1) * t.grad;
    opt.v[i] = cfg.beta2 * opt.v[i].array() +
               (1.0 - cfg.beta2) * t.grad.array().square();
    const auto mhat = opt.m[i].array() / bc1;
    const auto vhat = opt.v[i].array() / bc2;
    t.value.array() -= lr * mhat / (vhat.sqrt() + cfg.eps_adam);
  }
}

Trainer::Trainer(ModelParams& params, OptimizerState& opt,
                 const Batcher& batcher, const TrainConfig& cfg)
    : params_(params), opt_(opt), batcher_(batcher), cfg_(cfg) {
  cfg_.validate();
}

StepInfo Trainer::step(long step_index) {
  const Batch batch = batcher_.make(step_index);
  params_.zero_grads();

  Tape tape;
  ParamBinder bind(tape);
  Rng dropout_rng(mix_seed({cfg_.seed, fnv1a64("dropout"),
                            static_cast<uint64_t>(step_index)}));
  ForwardOptions fo{true, &dropout_rng};

  EncodedBatch enc = encode(tape, bind, params_, batch, fo);
  const std::vector<Var> logits = decode_train(tape, bind, params_, enc, batch, fo);
  Var mt = mt_loss(logits, batch);

  const double avg_len = batch.mean_target_len();
  long tokens = 0;
  for (int b = 0; b < batch.rows(); ++b) tokens += batch.tgt_len(b);

  double ctl_value = 0.0;
  Var combined = mt;
  if (cfg_.use_ctl) {
    EncodedBatch enc_tgt =
        encode(tape, bind, params_, batch.tgt_enc_ids, batch.tgt_enc_mask, fo);
    Var ctl = contrastive_loss(enc.pooled, enc_tgt.pooled,
                               {cfg_.tau, cfg_.ctl_include_positive});
    ctl_value = tape.value(ctl)(0, 0);
    combined = add(mt, scale(ctl, cfg_.lambda * avg_len));
  }

  const double combined_value = tape.value(combined)(0, 0);
  const double mt_value = tape.value(mt)(0, 0);
  if (!std::isfinite(combined_value))
    throw NumericError("step " + std::to_string(step_index) +
                       ": non-finite loss (mt=" + std::to_string(mt_value) +
                       ", ctl=" + std::to_string(ctl_value) + ")");

  tape.backward(combined);
  StepInfo info;
  info.grad_norm = clip_gradients(params_, cfg_.clip_norm);
  info.lr = lr_schedule(step_index, cfg_);
  adam_step(params_, opt_, cfg_, info.lr);
  info.report = make_loss_report(mt_value, ctl_value,
                                 cfg_.use_ctl ? cfg_.lambda : 0.0, avg_len,
                                 tokens, batch.rows());
  return info;
}

// --- config serialization ---

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw DataError("config: bad number for " + key + ": '" + v + "'");
  }
}

long parse_long(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw DataError("config: bad integer for " + key + ": '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw DataError("config: bad flag for " + key + ": '" + v + "'");
}

}  // namespace

std::vector<std::pair<std::string, std::string>> train_config_to_kv(
    const TrainConfig& c) {
  return {{"lr_peak", fmt_double(c.lr_peak)},
          {"warmup_steps", std::to_string(c.warmup_steps)},
          {"total_steps", std::to_string(c.total_steps)},
          {"beta1", fmt_double(c.beta1)},
          {"beta2", fmt_double(c.beta2)},
          {"eps_adam", fmt_double(c.eps_adam)},
          {"clip_norm", fmt_double(c.clip_norm)},
          {"lambda", fmt_double(c.lambda)},
          {"tau", fmt_double(c.tau)},
          {"p_replace", fmt_double(c.p_replace)},
          {"seed", std::to_string(c.seed)},
          {"use_ctl", c.use_ctl ? "1" : "0"},
          {"use_aa", c.use_aa ? "1" : "0"},
          {"use_mono", c.use_mono ? "1" : "0"},
          {"ctl_include_positive", c.ctl_include_positive ? "1" : "0"},
          {"batch_tokens", std::to_string(c.batch_tokens)},
          {"temperature", fmt_double(c.temperature)},
          {"bidirectional", c.bidirectional ? "1" : "0"},
          {"checkpoint_every", std::to_string(c.checkpoint_every)},
          {"eval_beam", std::to_string(c.eval_beam)}};
}

std::vector<std::pair<std::string, std::string>> model_config_to_kv(
    const ModelConfig& c) {
  return {{"n_layers_enc", std::to_string(c.n_layers_enc)},
          {"n_layers_dec", std::to_string(c.n_layers_dec)},
          {"d_model", std::to_string(c.d_model)},
          {"n_heads", std::to_string(c.n_heads)},
          {"d_ffn", std::to_string(c.d_ffn)},
          {"max_len", std::to_string(c.max_len)},
          {"dropout_rate", fmt_double(c.dropout_rate)},
          {"vocab_size", std::to_string(c.vocab_size)},
          {"residual_scale", fmt_double(c.residual_scale)},
          {"pool_skip_language_token", c.pool_skip_language_token ? "1" : "0"}};
}

ParsedConfig parse_configs(const std::map<std::string, std::string>& kv,
                           const ModelConfig& model_base,
                           const TrainConfig& train_base) {
  ParsedConfig out;
  out.model = model_base;
  out.train = train_base;
  for (const auto& [k, v] : kv) {
    if (k == "n_layers_enc") out.model.n_layers_enc = static_cast<int>(parse_long(k, v));
    else if (k == "n_layers_dec") out.model.n_layers_dec = static_cast<int>(parse_long(k, v));
    else if (k == "d_model") out.model.d_model = static_cast<int>(parse_long(k, v));
    else if (k == "n_heads") out.model.n_heads = static_cast<int>(parse_long(k, v));
    else if (k == "d_ffn") out.model.d_ffn = static_cast<int>(parse_long(k, v));
    else if (k == "max_len") out.model.max_len = static_cast<int>(parse_long(k, v));
    else if (k == "dropout_rate") out.model.dropout_rate = parse_double(k, v);
    else if (k == "vocab_size") out.model.vocab_size = static_cast<int>(parse_long(k, v));
    else if (k == "residual_scale") out.model.residual_scale = parse_double(k, v);
    else if (k == "pool_skip_language_token")
      out.model.pool_skip_language_token = parse_bool(k, v);
    else if (k == "lr_peak") out.train.lr_peak = parse_double(k, v);
    else if (k == "warmup_steps") out.train.warmup_steps = parse_long(k, v);
    else if (k == "total_steps") out.train.total_steps = parse_long(k, v);
    else if (k == "beta1") out.train.beta1 = parse_double(k, v);
    else if (k == "beta2") out.train.beta2 = parse_double(k, v);
    else if (k == "eps_adam") out.train.eps_adam = parse_double(k, v);
    else if (k == "clip_norm") out.train.clip_norm = parse_double(k, v);
    else if (k == "lambda") out.train.lambda = parse_double(k, v);
    else if (k == "tau") out.train.tau = parse_double(k, v);
    else if (k == "p_replace") out.train.p_replace = parse_double(k, v);
    else if (k == "seed") out.train.seed = static_cast<uint64_t>(parse_long(k, v));
    else if (k == "use_ctl") out.train.use_ctl = parse_bool(k, v);
    else if (k == "use_aa") out.train.use_aa = parse_bool(k, v);
    else if (k == "use_mono") out.train.use_mono = parse_bool(k, v);
    else if (k == "ctl_include_positive") out.train.ctl_include_positive = parse_bool(k, v);
    else if (k == "batch_tokens") out.train.batch_tokens = parse_long(k, v);
    else if (k == "temperature") out.train.temperature = parse_double(k, v);
    else if (k == "bidirectional") out.train.bidirectional = parse_bool(k, v);
    else if (k == "checkpoint_every") out.train.checkpoint_every = parse_long(k, v);
    else if (k == "eval_beam") out.train.eval_beam = static_cast<int>(parse_long(k, v));
    else if (k == "corpus_dir") out.corpus_dir = v;
    else if (k == "mode") { /* handled by the CLI */ }
    else throw DataError("config: unknown key '" + k + "'");
  }
  return out;
}

// --- checkpoint container ---
// magic, format version, vocabulary hash, config kv block, parameter
// tensors (name, rows, cols, row-major float64 little-endian), optimizer
// step and first/second moments.

namespace {

constexpr char kMagic[8] = {'M', 'T', 'L', 'A', 'B', 'C', 'K', '1'};

void put_u32(std::ofstream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ofstream& out, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

void put_string(std::ofstream& out, const std::string& s) {
  put_u32(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void put_mat(std::ofstream& out, const std::string& name, const Mat& m) {
  put_string(out, name);
  put_u32(out, static_cast<uint32_t>(m.rows()));
  put_u32(out, static_cast<uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      uint64_t bits;
      const double v = m(i, j);
      static_assert(sizeof(bits) == sizeof(v));
      std::memcpy(&bits, &v, 8);
      put_u64(out, bits);
    }
}

uint32_t get_u32(std::ifstream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw DataError("checkpoint: truncated file");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

uint64_t get_u64(std::ifstream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw DataError("checkpoint: truncated file");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

std::string get_string(std::ifstream& in) {
  const uint32_t n = get_u32(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw DataError("checkpoint: truncated file");
  return s;
}

std::pair<std::string, Mat> get_mat(std::ifstream& in) {
  const std::string name = get_string(in);
  const uint32_t rows = get_u32(in);
  const uint32_t cols = get_u32(in);
  Mat m(rows, cols);
  for (uint32_t i = 0; i < rows; ++i)
    for (uint32_t j = 0; j < cols; ++j) {
      const uint64_t bits = get_u64(in);
      double v;
      std::memcpy(&v, &bits, 8);
      m(i, j) = v;
    }
  return {name, std::move(m)};
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const OptimizerState& opt, uint64_t vocab_hash,
                     const std::vector<std::pair<std::string, std::string>>& kv) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("checkpoint: cannot write " + tmp);
    out.write(kMagic, 8);
    put_u32(out, 1);
    put_u64(out, vocab_hash);
    put_u32(out, static_cast<uint32_t>(kv.size()));
    for (const auto& [k, v] : kv) {
      put_string(out, k);
      put_string(out, v);
    }
    const auto& tensors = params.tensors();
    put_u32(out, static_cast<uint32_t>(tensors.size()));
    for (const Tensor* t : tensors) put_mat(out, t->name, t->value);
    put_u64(out, static_cast<uint64_t>(opt.step));
    for (size_t i = 0; i < tensors.size(); ++i) {
      put_mat(out, "m:" + tensors[i]->name, opt.m[i]);
      put_mat(out, "v:" + tensors[i]->name, opt.v[i]);
    }
    if (!out) throw DataError("checkpoint: write failed for " + tmp);
  }
  fs::rename(tmp, path);
}

LoadedCheckpoint load_checkpoint(const std::string& path,
                                 const Vocabulary* expect_vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw DataError("checkpoint: bad magic in " + path);
  const uint32_t version = get_u32(in);
  if (version != 1)
    throw DataError("checkpoint: unsupported version " + std::to_string(version));

  LoadedCheckpoint out;
  out.vocab_hash = get_u64(in);
  if (expect_vocab && expect_vocab->content_hash() != out.vocab_hash)
    throw DataError("checkpoint: vocabulary hash mismatch (model was trained "
                    "with a different vocabulary)");

  const uint32_t n_kv = get_u32(in);
  for (uint32_t i = 0; i < n_kv; ++i) {
    const std::string k = get_string(in);
    out.kv[k] = get_string(in);
  }
  const ParsedConfig cfg = parse_configs(out.kv);
  out.model_cfg = cfg.model;
  out.train_cfg = cfg.train;
  out.corpus_dir = cfg.corpus_dir;

  out.params = std::make_unique<ModelParams>(out.model_cfg, /*seed=*/0);
  const uint32_t n_tensors = get_u32(in);
  if (n_tensors != out.params->tensors().size())
    throw DataError("checkpoint: tensor count mismatch");
  for (uint32_t i = 0; i < n_tensors; ++i) {
    auto [name, m] = get_mat(in);
    Tensor* t = out.params->find(name);
    if (!t) throw DataError("checkpoint: unknown tensor '" + name + "'");
    if (t->value.rows() != m.rows() || t->value.cols() != m.cols())
      throw DataError("checkpoint: shape mismatch for '" + name + "'");
    t->value = std::move(m);
  }
  out.opt.step = static_cast<long>(get_u64(in));
  for (size_t i = 0; i < out.params->tensors().size(); ++i) {
    auto [mn, mm] = get_mat(in);
    auto [vn, vm] = get_mat(in);
    if (mn != "m:" + out.params->tensors()[i]->name ||
        vn != "v:" + out.params->tensors()[i]->name)
      throw DataError("checkpoint: optimizer state out of order at '" + mn + "'");
    out.opt.m.push_back(std::move(mm));
    out.opt.v.push_back(std::move(vm));
  }
  return out;
}

// --- full run ---

RunResult run_training(const CorpusSet& corpus, const Vocabulary& vocab,
                       const SynonymDictionary* dict, ModelConfig model_cfg,
                       TrainConfig train_cfg, const std::string& out_dir,
                       const std::string& corpus_dir,
                       const std::string& resume_path) {
  model_cfg.vocab_size = vocab.size();
  model_cfg.validate();
  train_cfg.validate();
  fs::create_directories(out_dir);

  BatcherOptions bo;
  bo.batch_tokens = train_cfg.batch_tokens;
  bo.temperature = train_cfg.temperature;
  bo.p_replace = train_cfg.p_replace;
  bo.use_aa = train_cfg.use_aa;
  bo.use_mono = train_cfg.use_mono;
  bo.seed = train_cfg.seed;
  bo.bidirectional = train_cfg.bidirectional;
  Batcher batcher(corpus, vocab, dict, bo);

  std::vector<std::pair<std::string, std::string>> kv = model_config_to_kv(model_cfg);
  for (auto& e : train_config_to_kv(train_cfg)) kv.push_back(e);
  kv.push_back({"corpus_dir", corpus_dir});

  std::unique_ptr<ModelParams> params;
  OptimizerState opt;
  long start_step = 0;
  if (!resume_path.empty()) {
    LoadedCheckpoint ck = load_checkpoint(resume_path, &vocab);
    if (model_config_to_kv(ck.model_cfg) != model_config_to_kv(model_cfg) ||
        train_config_to_kv(ck.train_cfg) != train_config_to_kv(train_cfg))
      throw DataError("resume: checkpoint configuration differs from the "
                      "requested run");
    params = std::move(ck.params);
    opt = std::move(ck.opt);
    start_step = opt.step;
  } else {
    params = std::make_unique<ModelParams>(
        model_cfg, mix_seed({train_cfg.seed, fnv1a64("init")}));
    opt = OptimizerState::init(*params);
  }

  const std::string log_path = out_dir + "/train_log.tsv";
  std::ofstream log(log_path,
                    start_step == 0 ? std::ios::binary
                                    : std::ios::binary | std::ios::app);
  if (!log) throw DataError("cannot write " + log_path);
  if (start_step == 0)
    log << "step\tlr\tgrad_norm\tmt\tctl\tcombined\tavg_seq_len\ttokens\trows\n";

  Trainer trainer(*params, opt, batcher, train_cfg);
  RunResult result;
  char line[256];
  for (long k = start_step + 1; k <= train_cfg.total_steps; ++k) {
    const StepInfo info = trainer.step(k);
    std::snprintf(line, sizeof(line),
                  "%ld\t%.9g\t%.9g\t%.9g\t%.9g\t%.9g\t%.9g\t%ld\t%d\n", k,
                  info.lr, info.grad_norm, info.report.mt, info.report.ctl,
                  info.report.combined, info.report.avg_seq_len,
                  info.report.token_count, info.report.batch_rows);
    log << line;
    result.history.push_back(info);
    if (train_cfg.checkpoint_every > 0 && k % train_cfg.checkpoint_every == 0 &&
        k < train_cfg.total_steps) {
      char name[64];
      std::snprintf(name, sizeof(name), "checkpoint_%06ld.ckpt", k);
      save_checkpoint(out_dir + "/" + name, *params, opt,
                      vocab.content_hash(), kv);
    }
  }
  log.flush();

  result.final_checkpoint = out_dir + "/model_final.ckpt";
  save_checkpoint(result.final_checkpoint, *params, opt, vocab.content_hash(),
                  kv);
  return result;
}

}  // namespace mtlab
