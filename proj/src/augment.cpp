// Copyright (c) 2026 mtlab contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtlab/augment.hpp"

#include <algorithm>
#include <fstream>

namespace mtlab {

const char* pair_kind_name(PairKind k) {
  switch (k) {
    case PairKind::kParallel: return "parallel";
    case PairKind::kPseudoParallel: return "pseudo_parallel";
    case PairKind::kPseudoSelfParallel: return "pseudo_self_parallel";
  }
  return "?";
}

SynonymDictionary SynonymDictionary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("synonym dictionary: cannot open " + path);
  SynonymDictionary dict;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    size_t start = 0;
    while (true) {
      size_t tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab == std::string::npos
                                            ? std::string::npos
                                            : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (cols.size() != 4 || cols[0].empty() || cols[1].empty() ||
        cols[2].empty() || cols[3].empty())
      throw DataError("synonym dictionary: malformed line " +
                      std::to_string(line_no) + " in " + path);
    dict.add(cols[0], cols[1], cols[2], cols[3]);
  }
  return dict;
}

void SynonymDictionary::add(const std::string& src_lang,
                            const std::string& src_word,
                            const std::string& tgt_lang,
                            const std::string& tgt_word) {
  if (src_lang == tgt_lang && src_word == tgt_word)
    throw DataError("synonym dictionary: '" + src_word +
                    "' maps to itself in language " + src_lang);
  const Entry key{src_lang, src_word};
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    entries_[key] = {{tgt_lang, tgt_word}};
    key_order_.push_back(key);
    return;
  }
  const Entry val{tgt_lang, tgt_word};
  if (std::find(it->second.begin(), it->second.end(), val) == it->second.end())
    it->second.push_back(val);
}

void SynonymDictionary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("synonym dictionary: cannot write " + path);
  for (const auto& key : key_order_)
    for (const auto& [lang, word] : entries_.at(key))
      out << key.first << '\t' << key.second << '\t' << lang << '\t' << word
          << "\n";
}

const std::vector<SynonymDictionary::Entry>* SynonymDictionary::lookup(
    const std::string& lang, const std::string& word) const {
  auto it = entries_.find({lang, word});
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::string> augment(const std::vector<std::string>& tokens,
                                 const std::string& lang,
                                 const SynonymDictionary& dict,
                                 double p_replace, uint64_t seed) {
  if (p_replace < 0.0 || p_replace > 1.0)
    throw std::invalid_argument("augment: p_replace must be in [0,1], got " +
                                std::to_string(p_replace));
  Rng rng(seed);
  std::vector<std::string> out = tokens;
  for (size_t i = 0; i < out.size(); ++i) {
    const auto* syns = dict.lookup(lang, out[i]);
    if (!syns) continue;
    // Draw both decisions unconditionally so the stream consumed per token
    // does not depend on p_replace.
    const double u = rng.uniform();
    const size_t pick = static_cast<size_t>(rng.uniform_int(
        static_cast<int64_t>(syns->size())));
    if (u < p_replace) out[i] = (*syns)[pick].second;
  }
  return out;
}

SentencePair make_pseudo_pair(const SentencePair& parallel,
                              const SynonymDictionary& dict, double p_replace,
                              uint64_t seed) {
  SentencePair out = parallel;
  out.src = augment(parallel.src, parallel.src_lang, dict, p_replace, seed);
  out.kind = PairKind::kPseudoParallel;
  return out;
}

SentencePair make_pseudo_self_pair(const std::vector<std::string>& tokens,
                                   const std::string& lang,
                                   const SynonymDictionary& dict,
                                   double p_replace, uint64_t seed) {
  SentencePair out;
  out.src_lang = lang;
  out.tgt_lang = lang;
  out.src = augment(tokens, lang, dict, p_replace, seed);
  out.tgt = tokens;
  out.kind = PairKind::kPseudoSelfParallel;
  return out;
}

}  // namespace mtlab
