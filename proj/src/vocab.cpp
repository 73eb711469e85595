// Copyright (c) 2026 mtlab contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtlab/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace mtlab {

namespace {
const char* kReserved[] = {"PAD", "BOS", "EOS", "UNK"};

std::string indicator(const std::string& code) { return "LANG_" + code; }
}  // namespace

std::vector<std::string> split_tokens(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

void Vocabulary::add_token(const std::string& token) {
  token_to_id_.emplace(token, static_cast<int>(id_to_token_.size()));
  id_to_token_.push_back(token);
}

Vocabulary Vocabulary::build(const std::vector<std::string>& corpus_files,
                             const std::vector<std::string>& languages,
                             int min_count) {
  std::set<std::string> seen_langs;
  for (const auto& l : languages)
    if (!seen_langs.insert(l).second)
      throw DataError("build_vocabulary: duplicate language code '" + l + "'");

  std::map<std::string, long> counts;
  long total_tokens = 0;
  for (const auto& path : corpus_files) {
    std::ifstream in(path);
    if (!in) throw DataError("build_vocabulary: cannot open " + path);
    std::string line;
    while (std::getline(in, line)) {
      for (const auto& tok : split_tokens(line)) {
        ++counts[tok];
        ++total_tokens;
      }
    }
  }
  if (total_tokens == 0)
    throw DataError("build_vocabulary: empty corpus");

  Vocabulary v;
  for (const char* r : kReserved) v.add_token(r);
  for (const auto& l : languages) {
    v.lang_to_id_[l] = static_cast<int>(v.id_to_token_.size());
    v.languages_.push_back(l);
    v.add_token(indicator(l));
  }

  std::vector<std::pair<std::string, long>> kept(counts.begin(), counts.end());
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  for (const auto& [tok, n] : kept)
    if (n >= min_count) v.add_token(tok);
  return v;
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("vocabulary: cannot open " + path);
  Vocabulary v;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (v.token_to_id_.count(line))
      throw DataError("vocabulary: duplicate token '" + line + "' in " + path);
    if (line.rfind("LANG_", 0) == 0) {
      const std::string code = line.substr(5);
      v.lang_to_id_[code] = static_cast<int>(v.id_to_token_.size());
      v.languages_.push_back(code);
    }
    v.add_token(line);
  }
  for (int i = 0; i < 4; ++i)
    if (v.size() <= i || v.id_to_token_[i] != kReserved[i])
      throw DataError("vocabulary: reserved tokens missing or misplaced in " +
                      path);
  return v;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("vocabulary: cannot write " + path);
  for (const auto& tok : id_to_token_) out << tok << "\n";
}

int Vocabulary::id(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size())
    throw DataError("vocabulary: id " + std::to_string(id) + " out of range");
  return id_to_token_[id];
}

bool Vocabulary::has_language(const std::string& code) const {
  return lang_to_id_.count(code) > 0;
}

int Vocabulary::lang_id(const std::string& code) const {
  auto it = lang_to_id_.find(code);
  if (it == lang_to_id_.end())
    throw DataError("vocabulary: unregistered language '" + code + "'");
  return it->second;
}

std::vector<int> Vocabulary::encode_tokens(const std::vector<std::string>& tokens,
                                           const std::string& lang,
                                           bool add_lang_token) const {
  std::vector<int> ids;
  ids.reserve(tokens.size() + 2);
  if (add_lang_token) ids.push_back(lang_id(lang));
  for (const auto& tok : tokens) ids.push_back(id(tok));
  if (add_lang_token) ids.push_back(kEos);
  return ids;
}

std::vector<int> Vocabulary::encode(const std::string& sentence,
                                    const std::string& lang,
                                    bool add_lang_token) const {
  return encode_tokens(split_tokens(sentence), lang, add_lang_token);
}

std::vector<std::string> Vocabulary::decode_tokens(
    const std::vector<int>& ids) const {
  std::vector<std::string> out;
  for (int id : ids) {
    if (id == kPad || id == kBos || id == kEos) continue;
    const std::string& tok = token(id);
    if (tok.rfind("LANG_", 0) == 0) continue;
    out.push_back(tok);
  }
  return out;
}

std::string Vocabulary::decode(const std::vector<int>& ids) const {
  std::string out;
  for (const auto& tok : decode_tokens(ids)) {
    if (!out.empty()) out += ' ';
    out += tok;
  }
  return out;
}

uint64_t Vocabulary::content_hash() const {
  std::string all;
  for (const auto& tok : id_to_token_) {
    all += tok;
    all += '\n';
  }
  return fnv1a64(all);
}

}  // namespace mtlab
