// Copyright (c) 2026 mtlab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mtlab/augment.hpp"
#include "mtlab/common.hpp"
#include "mtlab/vocab.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mtlab {

// A synthetic language: a bijective relabeling of latent concept ids into
// per-language surface tokens ("l2_17"). Gives exact translation ground
// truth between any two languages.
struct Cipher {
  std::string lang;
  std::vector<int> perm;     // concept -> surface index
  std::vector<int> inverse;  // surface index -> concept

  std::string token(int concept_id) const {
    return lang + "_" + std::to_string(perm[concept_id]);
  }
  int concept_of(const std::string& token) const;
};

struct ParallelCorpus {
  std::string lang_a, lang_b;
  std::vector<std::vector<std::string>> a, b;  // line-aligned
  std::string pair_name() const { return lang_a + "-" + lang_b; }
};

struct MonoCorpus {
  std::string lang;
  std::vector<std::vector<std::string>> lines;
};

struct GenOptions {
  int base_vocab_size = 100;  // latent concepts per language
  int n_languages = 4;
  int n_sentences = 2000;  // per parallel corpus
  int min_len = 3;
  int max_len = 8;
  int heldout_sentences = 1000;  // multi-way aligned evaluation set
  double zipf_exponent = 1.1;
  double synonym_coverage = 0.6;
  bool identity_ciphers = false;
  uint64_t seed = 1;
};

// Parallel + monolingual corpora over the cipher languages, with a multi-way
// aligned held-out set. Parallel data exists only for hub-centric pairs
// (l1 <-> li); with three or more languages the last one is monolingual-only.
struct CorpusSet {
  std::vector<std::string> languages;  // l1 is the hub
  std::vector<ParallelCorpus> parallel;
  std::vector<MonoCorpus> mono;
  std::vector<std::string> mono_only;
  std::map<std::string, std::vector<std::vector<std::string>>> multiway;
  std::vector<Cipher> ciphers;
  GenOptions options;

  const Cipher& cipher(const std::string& lang) const;
  bool is_mono_only(const std::string& lang) const;
  bool has_parallel(const std::string& a, const std::string& b) const;

  // Exact translation oracle: relabel each token through the two ciphers.
  std::vector<std::string> oracle_translate(const std::vector<std::string>& tokens,
                                            const std::string& src_lang,
                                            const std::string& tgt_lang) const;

  // supervised: pair with parallel data; unsupervised: either side is
  // monolingual-only; zero-shot: both seen in training but never paired.
  std::string direction_class(const std::string& src, const std::string& tgt) const;
};

CorpusSet generate_synthetic_languages(const GenOptions& opt);

// Cross-lingual synonym entries derived from the ciphers over a random
// subset of concepts (coverage fraction of the base vocabulary).
SynonymDictionary make_synonym_dictionary(const CorpusSet& corpus,
                                          double coverage, uint64_t seed);

void write_corpus_dir(const CorpusSet& corpus, const SynonymDictionary& dict,
                      const std::string& dir);
CorpusSet load_corpus_dir(const std::string& dir);

// Temperature-balanced sampling: p_i proportional to (n_i / sum_j n_j)^(1/T).
std::vector<double> temperature_sample_weights(const std::vector<long>& counts,
                                               double T);

// Padded token-id matrices with masks for one training step.
struct Batch {
  IntMat src_ids, src_mask;                 // B x S, encoder input
  IntMat tgt_input, tgt_output, tgt_mask;   // B x T, teacher forcing
  IntMat tgt_enc_ids, tgt_enc_mask;         // B x Te, target in encoder format
  std::vector<PairKind> kinds;
  std::vector<std::string> src_langs, tgt_langs;

  int rows() const { return static_cast<int>(kinds.size()); }
  int src_len(int b) const { return src_mask.row(b).sum(); }
  int tgt_len(int b) const { return tgt_mask.row(b).sum(); }
  int tgt_enc_len(int b) const { return tgt_enc_mask.row(b).sum(); }
  double mean_target_len() const;
  long total_tokens() const;
};

struct BatcherOptions {
  long batch_tokens = 512;
  bool bidirectional = true;  // parallel pairs are drawn in both directions
  double temperature = 5.0;
  double p_replace = 0.9;
  bool use_aa = false;
  bool use_mono = false;
  uint64_t seed = 1;
  int max_rejects = 16;  // consecutive duplicate draws before closing a batch
};

// Deterministic batch stream: batch k is a pure function of (options.seed, k),
// so training can resume mid-stream bit-for-bit. Rows are drawn per
// temperature weights over all included corpora, without duplicates within
// one batch, until the token budget (sum of source+target tokens) is full.
class Batcher {
 public:
  Batcher(const CorpusSet& corpus, const Vocabulary& vocab,
          const SynonymDictionary* dict, BatcherOptions opt);

  Batch make(int64_t index) const;
  const std::vector<double>& weights() const { return weights_; }
  int n_sources() const { return static_cast<int>(sources_.size()); }

  static size_t sample_index(Rng& rng, const std::vector<double>& weights);

 private:
  struct Source {
    bool parallel;
    int idx;  // into corpus.parallel or corpus.mono
    long count;
  };

  SentencePair draw_pair(Rng& rng, size_t source, long line,
                         int64_t batch_index) const;
  Batch assemble(const std::vector<SentencePair>& rows) const;

  const CorpusSet& corpus_;
  const Vocabulary& vocab_;
  const SynonymDictionary* dict_;
  BatcherOptions opt_;
  std::vector<Source> sources_;
  std::vector<double> weights_;
};

}  // namespace mtlab
