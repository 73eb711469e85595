// Copyright (c) 2026 mtlab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mtlab/common.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace mtlab {

enum class PairKind { kParallel, kPseudoParallel, kPseudoSelfParallel };

const char* pair_kind_name(PairKind k);

// One training example: token sequences plus language codes on both sides.
struct SentencePair {
  std::string src_lang;
  std::string tgt_lang;
  std::vector<std::string> src;
  std::vector<std::string> tgt;
  PairKind kind = PairKind::kParallel;
};

// Cross-lingual synonym table keyed by (language, word). Only the listed
// directions are stored; no symmetry is implied.
class SynonymDictionary {
 public:
  using Entry = std::pair<std::string, std::string>;  // (language, word)

  // TSV columns: src_lang, src_word, tgt_lang, tgt_word. Duplicates are
  // dropped, first occurrence wins the ordering.
  static SynonymDictionary load(const std::string& path);

  void add(const std::string& src_lang, const std::string& src_word,
           const std::string& tgt_lang, const std::string& tgt_word);
  void save(const std::string& path) const;

  // Empty result means "no entry"; empty lists are never stored.
  const std::vector<Entry>* lookup(const std::string& lang,
                                   const std::string& word) const;

  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  std::map<Entry, std::vector<Entry>> entries_;
  std::vector<Entry> key_order_;  // insertion order, for save()
};

// Code-switch substitution: each token with a dictionary entry is replaced
// with probability p_replace by a uniformly chosen synonym. Length and the
// positions of untouched tokens are preserved. Pure in (x, lang, dict,
// p_replace, seed).
std::vector<std::string> augment(const std::vector<std::string>& tokens,
                                 const std::string& lang,
                                 const SynonymDictionary& dict,
                                 double p_replace, uint64_t seed);

// Parallel (x_i, x_j) -> pseudo-parallel (C(x_i), x_j).
SentencePair make_pseudo_pair(const SentencePair& parallel,
                              const SynonymDictionary& dict, double p_replace,
                              uint64_t seed);

// Monolingual x_i -> pseudo-self-parallel (C(x_i), x_i).
SentencePair make_pseudo_self_pair(const std::vector<std::string>& tokens,
                                   const std::string& lang,
                                   const SynonymDictionary& dict,
                                   double p_replace, uint64_t seed);

}  // namespace mtlab
