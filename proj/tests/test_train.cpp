// Copyright (c) 2026 mtlab contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtlab/train.hpp"

#include <doctest.h>

#include <cmath>

#include "support.hpp"

using namespace mtlab;
using mtest::TempDir;

namespace {

ModelConfig overfit_model_config() {
  ModelConfig c;
  c.n_layers_enc = 2;
  c.n_layers_dec = 2;
  c.d_model = 32;
  c.n_heads = 4;
  c.d_ffn = 64;
  c.max_len = 32;
  c.dropout_rate = 0.0;
  return c;
}

// A corpus with exactly one parallel pair.
struct SinglePairSetup {
  TempDir dir{"train"};
  CorpusSet corpus;
  Vocabulary vocab;

  SinglePairSetup() {
    GenOptions o;
    o.base_vocab_size = 12;
    o.n_languages = 2;
    o.n_sentences = 1;
    o.min_len = 5;
    o.max_len = 5;
    o.heldout_sentences = 1;
    o.seed = 9;
    corpus = generate_synthetic_languages(o);
    write_corpus_dir(corpus, SynonymDictionary{}, dir.str("corpus"));
    vocab = Vocabulary::load(dir.str("corpus") + "/vocab.txt");
  }
};

}  // namespace

TEST_CASE("lr schedule: warmup boundary, midpoint, terminal zero") {
  TrainConfig c;
  c.lr_peak = 3e-4;
  c.warmup_steps = 500;
  c.total_steps = 5000;
  CHECK(lr_schedule(500, c) == 3e-4);
  CHECK(lr_schedule(250, c) == doctest::Approx(1.5e-4).epsilon(1e-12));
  CHECK(lr_schedule(5000, c) == 0.0);
  CHECK(lr_schedule(2750, c) == doctest::Approx(1.5e-4).epsilon(1e-12));
  CHECK_THROWS_AS(lr_schedule(0, c), std::invalid_argument);
}

TEST_CASE("train config validation") {
  TrainConfig c;
  c.warmup_steps = 10;
  c.total_steps = 10;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = TrainConfig{};
  c.clip_norm = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("mode flags reproduce the five ablation rows") {
  TrainConfig c;
  apply_mode(c, "baseline");
  CHECK((!c.use_ctl && !c.use_aa && !c.use_mono));
  apply_mode(c, "ctl");
  CHECK((c.use_ctl && !c.use_aa && !c.use_mono));
  apply_mode(c, "aa");
  CHECK((!c.use_ctl && c.use_aa && !c.use_mono));
  apply_mode(c, "aa-ctl");
  CHECK((c.use_ctl && c.use_aa && !c.use_mono));
  apply_mode(c, "full");
  CHECK((c.use_ctl && c.use_aa && c.use_mono));
  CHECK_THROWS_AS(apply_mode(c, "bogus"), std::invalid_argument);
}

TEST_CASE("gradient clipping: boundary, scaling, zeros, non-finite") {
  ModelConfig mc;
  mc.vocab_size = 8;
  mc.d_model = 4;
  mc.n_heads = 2;
  mc.d_ffn = 8;
  mc.n_layers_enc = 1;
  mc.n_layers_dec = 1;
  ModelParams params(mc, 3);

  SUBCASE("zero gradients stay zero with norm 0") {
    params.zero_grads();
    CHECK(clip_gradients(params, 5.0) == 0.0);
    for (const Tensor* t : params.tensors()) CHECK(t->grad.norm() == 0.0);
  }
  SUBCASE("norm exactly at the threshold is untouched") {
    params.zero_grads();
    params.embedding->grad(0, 0) = 3.0;
    params.embedding->grad(0, 1) = 4.0;
    CHECK(clip_gradients(params, 5.0) == 5.0);
    CHECK(params.embedding->grad(0, 0) == 3.0);
    CHECK(params.embedding->grad(0, 1) == 4.0);
  }
  SUBCASE("larger norms scale back to the threshold") {
    params.zero_grads();
    params.embedding->grad(0, 0) = 6.0;
    params.embedding->grad(0, 1) = 8.0;
    CHECK(clip_gradients(params, 5.0) == 10.0);
    CHECK(params.embedding->grad(0, 0) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(params.embedding->grad(0, 1) == doctest::Approx(4.0).epsilon(1e-12));
  }
  SUBCASE("non-finite gradients name the parameter") {
    params.zero_grads();
    params.enc[0].self.wq->grad(0, 0) = std::nan("");
    CHECK_THROWS_WITH_AS(clip_gradients(params, 5.0),
                         doctest::Contains("enc.0.self.wq"), NumericError);
  }
}

TEST_CASE("adam: zero gradient leaves parameters bit-identical") {
  ModelConfig mc;
  mc.vocab_size = 8;
  mc.d_model = 4;
  mc.n_heads = 2;
  mc.d_ffn = 8;
  mc.n_layers_enc = 1;
  mc.n_layers_dec = 1;
  ModelParams params(mc, 3);
  OptimizerState opt = OptimizerState::init(params);
  const Mat before = params.embedding->value;
  params.zero_grads();
  TrainConfig tc;
  adam_step(params, opt, tc, 1e-3);
  CHECK(params.embedding->value == before);
  CHECK(opt.step == 1);
}

TEST_CASE("config round trip and unknown-key rejection") {
  TrainConfig tc;
  tc.lr_peak = 7e-4;
  tc.use_ctl = true;
  tc.seed = 99;
  ModelConfig mc;
  mc.d_model = 48;
  mc.n_heads = 6;
  mc.vocab_size = 50;

  std::map<std::string, std::string> kv;
  for (const auto& [k, v] : train_config_to_kv(tc)) kv[k] = v;
  for (const auto& [k, v] : model_config_to_kv(mc)) kv[k] = v;
  kv["corpus_dir"] = "/data/c1";
  const ParsedConfig parsed = parse_configs(kv);
  CHECK(parsed.train.lr_peak == 7e-4);
  CHECK(parsed.train.use_ctl);
  CHECK(parsed.train.seed == 99);
  CHECK(parsed.model.d_model == 48);
  CHECK(parsed.corpus_dir == "/data/c1");

  kv["lr_peek"] = "1";
  CHECK_THROWS_WITH_AS(parse_configs(kv), doctest::Contains("lr_peek"), DataError);
}

TEST_CASE("two identical runs produce identical step streams") {
  SinglePairSetup s;
  ModelConfig mc = overfit_model_config();
  TrainConfig tc;
  tc.total_steps = 12;
  tc.warmup_steps = 4;
  tc.batch_tokens = 32;
  tc.seed = 13;

  const auto run = [&](const std::string& out) {
    return run_training(s.corpus, s.vocab, nullptr, mc, tc, s.dir.str(out),
                        s.dir.str("corpus"));
  };
  const RunResult r1 = run("runA");
  const RunResult r2 = run("runB");
  REQUIRE(r1.history.size() == r2.history.size());
  for (size_t i = 0; i < r1.history.size(); ++i) {
    CHECK(r1.history[i].report.combined == r2.history[i].report.combined);
    CHECK(r1.history[i].grad_norm == r2.history[i].grad_norm);
  }
  CHECK(mtest::read_file(s.dir.str("runA") + "/train_log.tsv") ==
        mtest::read_file(s.dir.str("runB") + "/train_log.tsv"));
  CHECK(mtest::read_file(r1.final_checkpoint) ==
        mtest::read_file(r2.final_checkpoint));
}

TEST_CASE("overfit smoke test: one pair, 200 steps, near-zero loss, exact decode") {
  SinglePairSetup s;
  ModelConfig mc = overfit_model_config();
  TrainConfig tc;
  tc.total_steps = 200;
  tc.warmup_steps = 20;
  tc.lr_peak = 3e-3;
  tc.batch_tokens = 32;
  tc.seed = 4;
  tc.bidirectional = false;  // one fixed directed pair

  const RunResult r = run_training(s.corpus, s.vocab, nullptr, mc, tc,
                                   s.dir.str("overfit"), s.dir.str("corpus"));
  const StepInfo& last = r.history.back();
  const double per_token =
      last.report.mt / static_cast<double>(last.report.token_count);
  CHECK(per_token < 0.1);

  // trailing window: loss is monotone non-increasing up to 5% upticks
  const size_t w = 50;
  size_t upticks = 0;
  for (size_t i = r.history.size() - w + 1; i < r.history.size(); ++i)
    if (r.history[i].report.combined > r.history[i - 1].report.combined)
      ++upticks;
  CHECK(upticks <= static_cast<size_t>(0.05 * w));

  // greedy decode reproduces the training target exactly
  LoadedCheckpoint ck = load_checkpoint(r.final_checkpoint, &s.vocab);
  const auto& pair = s.corpus.parallel[0];
  const auto hyp = translate(*ck.params, s.vocab, pair.a[0], "l1", "l2", 1);
  CHECK(hyp == pair.b[0]);
}

TEST_CASE("checkpoint: bit-exact round trip and vocabulary hash guard") {
  SinglePairSetup s;
  ModelConfig mc = overfit_model_config();
  mc.vocab_size = s.vocab.size();
  ModelParams params(mc, 21);
  OptimizerState opt = OptimizerState::init(params);
  opt.step = 17;
  Rng rng(2);
  for (Tensor* t : params.tensors())
    for (Eigen::Index i = 0; i < t->value.size(); ++i)
      t->value.data()[i] = rng.uniform(-1.0, 1.0);
  opt.m[3].setConstant(0.25);
  opt.v[3].setConstant(0.5);

  std::vector<std::pair<std::string, std::string>> kv = model_config_to_kv(mc);
  for (auto& e : train_config_to_kv(TrainConfig{})) kv.push_back(e);
  const std::string path = s.dir.str("x.ckpt");
  save_checkpoint(path, params, opt, s.vocab.content_hash(), kv);

  LoadedCheckpoint back = load_checkpoint(path, &s.vocab);
  CHECK(back.opt.step == 17);
  for (size_t i = 0; i < params.tensors().size(); ++i) {
    CHECK(back.params->tensors()[i]->value == params.tensors()[i]->value);
    CHECK(back.opt.m[i] == opt.m[i]);
    CHECK(back.opt.v[i] == opt.v[i]);
  }

  // altered vocabulary must be rejected
  mtest::write_file(s.dir.str("other.txt"), "w9 w8\n");
  Vocabulary other = Vocabulary::build({s.dir.str("other.txt")}, {"l1", "l2"}, 1);
  CHECK_THROWS_WITH_AS(load_checkpoint(path, &other),
                       doctest::Contains("vocabulary"), DataError);
}

TEST_CASE("resume reproduces the uninterrupted run bit-for-bit") {
  SinglePairSetup s;
  ModelConfig mc = overfit_model_config();
  TrainConfig tc;
  tc.total_steps = 16;
  tc.warmup_steps = 4;
  tc.batch_tokens = 32;
  tc.seed = 31;

  const RunResult full = run_training(s.corpus, s.vocab, nullptr, mc, tc,
                                      s.dir.str("full"), s.dir.str("corpus"));

  TrainConfig tc_ck = tc;
  tc_ck.checkpoint_every = 8;
  run_training(s.corpus, s.vocab, nullptr, mc, tc_ck, s.dir.str("half"),
               s.dir.str("corpus"));
  // resume the run that checkpointed at step 8
  const RunResult resumed = run_training(
      s.corpus, s.vocab, nullptr, mc, tc_ck, s.dir.str("resumed"),
      s.dir.str("corpus"), s.dir.str("half") + "/checkpoint_000008.ckpt");
  REQUIRE(resumed.history.size() == 8);
  for (size_t i = 0; i < 8; ++i) {
    CHECK(resumed.history[i].report.combined ==
          full.history[8 + i].report.combined);
    CHECK(resumed.history[i].grad_norm == full.history[8 + i].grad_norm);
  }
  // final checkpoints differ only in the config kv (checkpoint_every), so
  // compare the parameter payloads
  LoadedCheckpoint a = load_checkpoint(full.final_checkpoint, &s.vocab);
  LoadedCheckpoint b = load_checkpoint(resumed.final_checkpoint, &s.vocab);
  for (size_t i = 0; i < a.params->tensors().size(); ++i) {
    CHECK(a.params->tensors()[i]->value == b.params->tensors()[i]->value);
    CHECK(a.opt.m[i] == b.opt.m[i]);
    CHECK(a.opt.v[i] == b.opt.v[i]);
  }
}

TEST_CASE("flag contract: combined equals mt exactly when CTL is off") {
  SinglePairSetup s;
  ModelConfig mc = overfit_model_config();
  TrainConfig tc;
  tc.total_steps = 3;
  tc.warmup_steps = 1;
  tc.batch_tokens = 32;
  tc.use_ctl = false;
  const RunResult r = run_training(s.corpus, s.vocab, nullptr, mc, tc,
                                   s.dir.str("noctl"), s.dir.str("corpus"));
  for (const auto& info : r.history)
    CHECK(info.report.combined == info.report.mt);
}
