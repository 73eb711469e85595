// Copyright (c) 2026 mtlab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mtlab/loss.hpp"
#include "mtlab/model.hpp"

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace mtlab {

struct TrainConfig {
  double lr_peak = 3e-4;
  long warmup_steps = 500;
  long total_steps = 5000;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps_adam = 1e-6;
  double clip_norm = 5.0;
  double lambda = 1.0;
  double tau = 0.1;
  double p_replace = 0.9;
  uint64_t seed = 1;
  bool use_ctl = false;
  bool use_aa = false;
  bool use_mono = false;
  bool ctl_include_positive = true;
  long batch_tokens = 512;
  double temperature = 5.0;
  bool bidirectional = true;
  long checkpoint_every = 0;  // 0: final checkpoint only
  int eval_beam = 1;

  void validate() const;
};

// Ablation rows: baseline / +CTL / +AA / +AA+CTL / full (+AA+CTL+mono).
void apply_mode(TrainConfig& cfg, const std::string& mode);
std::vector<std::string> known_modes();

// Linear warmup to lr_peak, then degree-1 polynomial decay to 0 at
// total_steps.
double lr_schedule(long step, const TrainConfig& cfg);

// Global-norm clipping across all parameters; returns the pre-clip norm.
// Non-finite gradients abort, naming the parameter.
double clip_gradients(ModelParams& params, double clip_norm);

struct OptimizerState {
  long step = 0;
  std::vector<Mat> m, v;  // aligned with params.tensors()

  static OptimizerState init(const ModelParams& params);
};

// One Adam update with bias correction, consuming current gradients.
void adam_step(ModelParams& params, OptimizerState& opt, const TrainConfig& cfg,
               double lr);

struct StepInfo {
  LossReport report;
  double lr = 0.0;
  double grad_norm = 0.0;
};

// Owns one optimization step: forward, combined loss per mode flags,
// backward, clip, Adam. Step k is a pure function of (params, opt state, k).
class Trainer {
 public:
  Trainer(ModelParams& params, OptimizerState& opt, const Batcher& batcher,
          const TrainConfig& cfg);

  StepInfo step(long step_index);  // 1-based

 private:
  ModelParams& params_;
  OptimizerState& opt_;
  const Batcher& batcher_;
  TrainConfig cfg_;
};

// --- configuration files (flat key = value) ---

std::vector<std::pair<std::string, std::string>> train_config_to_kv(
    const TrainConfig& cfg);
std::vector<std::pair<std::string, std::string>> model_config_to_kv(
    const ModelConfig& cfg);

// Parses both config families from one kv map; unknown keys are errors.
// Recognized non-config keys: corpus_dir.
struct ParsedConfig {
  ModelConfig model;
  TrainConfig train;
  std::string corpus_dir;
};
ParsedConfig parse_configs(const std::map<std::string, std::string>& kv,
                           const ModelConfig& model_base = ModelConfig{},
                           const TrainConfig& train_base = TrainConfig{});

// --- checkpointing (atomic write, bit-exact round trip) ---

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const OptimizerState& opt, uint64_t vocab_hash,
                     const std::vector<std::pair<std::string, std::string>>& kv);

struct LoadedCheckpoint {
  std::unique_ptr<ModelParams> params;
  OptimizerState opt;
  uint64_t vocab_hash = 0;
  std::map<std::string, std::string> kv;
  ModelConfig model_cfg;
  TrainConfig train_cfg;
  std::string corpus_dir;
};

// expect_vocab, when given, must hash-match the checkpoint.
LoadedCheckpoint load_checkpoint(const std::string& path,
                                 const Vocabulary* expect_vocab);

// --- full training run (training log + checkpoints under out_dir) ---

struct RunResult {
  std::string final_checkpoint;
  std::vector<StepInfo> history;
};

RunResult run_training(const CorpusSet& corpus, const Vocabulary& vocab,
                       const SynonymDictionary* dict, ModelConfig model_cfg,
                       TrainConfig train_cfg, const std::string& out_dir,
                       const std::string& corpus_dir,
                       const std::string& resume_path = "");

}  // namespace mtlab
