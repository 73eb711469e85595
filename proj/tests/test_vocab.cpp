// Copyright (c) 2026 mtlab contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtlab/vocab.hpp"

#include <doctest.h>

#include <set>

#include "support.hpp"

using namespace mtlab;
using mtest::TempDir;

namespace {

Vocabulary tiny_vocab(const TempDir& dir, int min_count) {
  mtest::write_file(dir.str("c.txt"), "a b\na\n");
  return Vocabulary::build({dir.str("c.txt")}, {"L1"}, min_count);
}

}  // namespace

TEST_CASE("build: reserved + indicator + corpus tokens") {
  TempDir dir("vocab");
  Vocabulary v = tiny_vocab(dir, 1);
  CHECK(v.size() == 7);
  CHECK(v.token(0) == "PAD");
  CHECK(v.token(1) == "BOS");
  CHECK(v.token(2) == "EOS");
  CHECK(v.token(3) == "UNK");
  CHECK(v.token(4) == "LANG_L1");
  CHECK(v.token(5) == "a");  // count 2 beats count 1
  CHECK(v.token(6) == "b");
  CHECK(v.lang_id("L1") == 4);
}

TEST_CASE("build: min_count drops rare tokens, encode maps them to UNK") {
  TempDir dir("vocab");
  Vocabulary v = tiny_vocab(dir, 2);
  CHECK(v.size() == 6);
  const auto ids = v.encode("a b", "L1");
  CHECK(ids == std::vector<int>{4, 5, Vocabulary::kUnk, Vocabulary::kEos});
}

TEST_CASE("build: deterministic files") {
  TempDir dir("vocab");
  mtest::write_file(dir.str("c.txt"), "z a m a\nq z z\n");
  Vocabulary v1 = Vocabulary::build({dir.str("c.txt")}, {"L1", "L2"}, 1);
  Vocabulary v2 = Vocabulary::build({dir.str("c.txt")}, {"L1", "L2"}, 1);
  v1.save(dir.str("v1.txt"));
  v2.save(dir.str("v2.txt"));
  CHECK(mtest::read_file(dir.str("v1.txt")) == mtest::read_file(dir.str("v2.txt")));
  // descending count, ties lexicographic
  CHECK(v1.token(6) == "z");
  CHECK(v1.token(7) == "a");
  CHECK(v1.token(8) == "m");
  CHECK(v1.token(9) == "q");
}

TEST_CASE("build errors") {
  TempDir dir("vocab");
  mtest::write_file(dir.str("empty.txt"), "");
  CHECK_THROWS_AS(Vocabulary::build({dir.str("empty.txt")}, {"L1"}, 1), DataError);
  mtest::write_file(dir.str("c.txt"), "a\n");
  CHECK_THROWS_AS(Vocabulary::build({dir.str("c.txt")}, {"L1", "L1"}, 1), DataError);
  CHECK_THROWS_AS(Vocabulary::build({dir.str("missing.txt")}, {"L1"}, 1), DataError);
}

TEST_CASE("encode forms") {
  TempDir dir("vocab");
  Vocabulary v = tiny_vocab(dir, 1);
  CHECK(v.encode("a b", "L1") == std::vector<int>{4, 5, 6, 2});
  CHECK(v.encode("", "L1") == std::vector<int>{4, 2});
  CHECK(v.encode("a zzz", "L1") == std::vector<int>{4, 5, 3, 2});
  CHECK(v.encode("a b", "L1", false) == std::vector<int>{5, 6});
  CHECK_THROWS_AS(v.encode("a", "L9"), DataError);
}

TEST_CASE("decode strips language token, EOS and PAD") {
  TempDir dir("vocab");
  Vocabulary v = tiny_vocab(dir, 1);
  CHECK(v.decode({4, 5, 6, 2, 0, 0}) == "a b");
}

TEST_CASE("round trip and injectivity over in-vocabulary sentences") {
  TempDir dir("vocab");
  mtest::write_file(dir.str("c.txt"), "w0 w1 w2 w3 w4 w5 w6 w7\n");
  Vocabulary v = Vocabulary::build({dir.str("c.txt")}, {"L1"}, 1);
  Rng rng(5);
  std::set<std::vector<int>> seen;
  std::set<std::string> sentences;
  for (int trial = 0; trial < 200; ++trial) {
    const int len = 1 + static_cast<int>(rng.uniform_int(6));
    std::string s;
    for (int i = 0; i < len; ++i) {
      if (i) s += ' ';
      s += "w" + std::to_string(rng.uniform_int(8));
    }
    CHECK(v.decode(v.encode(s, "L1")) == s);
    seen.insert(v.encode(s, "L1"));
    sentences.insert(s);
  }
  CHECK(seen.size() == sentences.size());
}

TEST_CASE("save/load round trip") {
  TempDir dir("vocab");
  Vocabulary v = tiny_vocab(dir, 1);
  v.save(dir.str("vocab.txt"));
  Vocabulary w = Vocabulary::load(dir.str("vocab.txt"));
  CHECK(w.size() == v.size());
  CHECK(w.lang_id("L1") == 4);
  CHECK(w.id("b") == v.id("b"));
  CHECK(w.content_hash() == v.content_hash());
}
