// Copyright (c) 2026 mtlab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mtlab/common.hpp"

#include <map>
#include <string>
#include <vector>

namespace mtlab {

// Shared multilingual vocabulary. Ids are dense: PAD, BOS, EOS, UNK occupy
// 0..3, one LANG_<code> indicator per registered language follows, then
// corpus tokens ordered by descending count (ties lexicographic).
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;

  Vocabulary() = default;

  // Token count ≥ min_count keeps a token. Files are UTF-8, one sentence per
  // line, whitespace tokenized.
  static Vocabulary build(const std::vector<std::string>& corpus_files,
                          const std::vector<std::string>& languages,
                          int min_count);

  static Vocabulary load(const std::string& path);
  void save(const std::string& path) const;

  int id(const std::string& token) const;  // kUnk when absent
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(id_to_token_.size()); }

  bool has_language(const std::string& code) const;
  int lang_id(const std::string& code) const;  // indicator token id
  const std::vector<std::string>& languages() const { return languages_; }

  // [LANG_lang] + ids + [EOS] when add_lang_token is set; raw token ids
  // otherwise. Unknown tokens map to UNK.
  std::vector<int> encode(const std::string& sentence, const std::string& lang,
                          bool add_lang_token = true) const;
  std::vector<int> encode_tokens(const std::vector<std::string>& tokens,
                                 const std::string& lang,
                                 bool add_lang_token = true) const;

  // Space-joined tokens with PAD/BOS/EOS and language indicators stripped.
  std::string decode(const std::vector<int>& ids) const;
  std::vector<std::string> decode_tokens(const std::vector<int>& ids) const;

  uint64_t content_hash() const;

 private:
  void add_token(const std::string& token);

  std::map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
  std::vector<std::string> languages_;
  std::map<std::string, int> lang_to_id_;
};

std::vector<std::string> split_tokens(const std::string& line);

}  // namespace mtlab
