// Copyright (c) 2026 mtlab contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtlab/corpus.hpp"

#include "mtlab/kvfile.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace mtlab {

namespace {

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

std::string join_csv(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += ',';
    out += s;
  }
  return out;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

void shuffle_ints(std::vector<int>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[static_cast<size_t>(rng.uniform_int(
                            static_cast<int64_t>(i)))]);
}

// Cumulative distribution over concepts, p_c proportional to (c+1)^-s.
std::vector<double> zipf_cdf(int n, double s) {
  std::vector<double> cdf(n);
  double sum = 0.0;
  for (int c = 0; c < n; ++c) {
    sum += std::pow(static_cast<double>(c + 1), -s);
    cdf[c] = sum;
  }
  for (int c = 0; c < n; ++c) cdf[c] /= sum;
  cdf.back() = 1.0;
  return cdf;
}

int draw_from_cdf(Rng& rng, const std::vector<double>& cdf) {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return static_cast<int>(std::min<ptrdiff_t>(it - cdf.begin(),
                                              static_cast<ptrdiff_t>(cdf.size()) - 1));
}

std::vector<int> draw_concepts(Rng& rng, const std::vector<double>& cdf,
                               int min_len, int max_len) {
  const int len = min_len + static_cast<int>(rng.uniform_int(max_len - min_len + 1));
  std::vector<int> out(len);
  for (int i = 0; i < len; ++i) out[i] = draw_from_cdf(rng, cdf);
  return out;
}

std::vector<std::string> render(const std::vector<int>& concepts,
                                const Cipher& cipher) {
  std::vector<std::string> out;
  out.reserve(concepts.size());
  for (int c : concepts) out.push_back(cipher.token(c));
  return out;
}

void write_lines(const fs::path& path,
                 const std::vector<std::vector<std::string>>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& toks : lines) out << join_tokens(toks) << "\n";
}

std::vector<std::vector<std::string>> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::vector<std::string>> out;
  std::string line;
  while (std::getline(in, line)) out.push_back(split_tokens(line));
  return out;
}

}  // namespace

int Cipher::concept_of(const std::string& token) const {
  const std::string prefix = lang + "_";
  if (token.rfind(prefix, 0) != 0)
    throw DataError("cipher " + lang + ": token '" + token +
                    "' is not in this language");
  int surface = -1;
  try {
    surface = std::stoi(token.substr(prefix.size()));
  } catch (const std::exception&) {
    throw DataError("cipher " + lang + ": malformed token '" + token + "'");
  }
  if (surface < 0 || surface >= static_cast<int>(inverse.size()))
    throw DataError("cipher " + lang + ": token '" + token +
                    "' outside the vocabulary");
  return inverse[surface];
}

const Cipher& CorpusSet::cipher(const std::string& lang) const {
  for (const auto& c : ciphers)
    if (c.lang == lang) return c;
  throw DataError("no cipher for language '" + lang + "'");
}

bool CorpusSet::is_mono_only(const std::string& lang) const {
  return std::find(mono_only.begin(), mono_only.end(), lang) != mono_only.end();
}

bool CorpusSet::has_parallel(const std::string& a, const std::string& b) const {
  for (const auto& p : parallel)
    if ((p.lang_a == a && p.lang_b == b) || (p.lang_a == b && p.lang_b == a))
      return true;
  return false;
}

std::vector<std::string> CorpusSet::oracle_translate(
    const std::vector<std::string>& tokens, const std::string& src_lang,
    const std::string& tgt_lang) const {
  const Cipher& src = cipher(src_lang);
  const Cipher& tgt = cipher(tgt_lang);
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& tok : tokens) out.push_back(tgt.token(src.concept_of(tok)));
  return out;
}

std::string CorpusSet::direction_class(const std::string& src,
                                       const std::string& tgt) const {
  if (is_mono_only(src) || is_mono_only(tgt)) return "unsupervised";
  if (has_parallel(src, tgt)) return "supervised";
  return "zero-shot";
}

CorpusSet generate_synthetic_languages(const GenOptions& opt) {
  if (opt.n_languages < 2)
    throw std::invalid_argument("generate_synthetic_languages: need >= 2 languages");
  if (opt.base_vocab_size < 1 || opt.n_sentences < 1 || opt.min_len < 1 ||
      opt.max_len < opt.min_len || opt.heldout_sentences < 0 ||
      opt.zipf_exponent <= 0.0)
    throw std::invalid_argument("generate_synthetic_languages: invalid ranges");

  CorpusSet cs;
  cs.options = opt;
  for (int i = 1; i <= opt.n_languages; ++i)
    cs.languages.push_back("l" + std::to_string(i));

  for (int i = 0; i < opt.n_languages; ++i) {
    Cipher c;
    c.lang = cs.languages[i];
    c.perm.resize(opt.base_vocab_size);
    for (int k = 0; k < opt.base_vocab_size; ++k) c.perm[k] = k;
    if (!opt.identity_ciphers) {
      Rng rng(mix_seed({opt.seed, fnv1a64("cipher"), static_cast<uint64_t>(i)}));
      shuffle_ints(c.perm, rng);
    }
    c.inverse.resize(opt.base_vocab_size);
    for (int k = 0; k < opt.base_vocab_size; ++k) c.inverse[c.perm[k]] = k;
    cs.ciphers.push_back(std::move(c));
  }

  const std::vector<double> cdf = zipf_cdf(opt.base_vocab_size, opt.zipf_exponent);
  const Cipher& hub = cs.ciphers[0];
  std::set<std::vector<int>> training_sentences;

  // Hub-centric parallel corpora; the last language stays monolingual-only
  // once there are at least three languages.
  const int last_parallel = opt.n_languages == 2 ? 2 : opt.n_languages - 1;
  for (int i = 2; i <= last_parallel; ++i) {
    ParallelCorpus pc;
    pc.lang_a = cs.languages[0];
    pc.lang_b = cs.languages[i - 1];
    Rng rng(mix_seed({opt.seed, fnv1a64("parallel"), static_cast<uint64_t>(i)}));
    for (int n = 0; n < opt.n_sentences; ++n) {
      const std::vector<int> concepts =
          draw_concepts(rng, cdf, opt.min_len, opt.max_len);
      training_sentences.insert(concepts);
      pc.a.push_back(render(concepts, hub));
      pc.b.push_back(render(concepts, cs.ciphers[i - 1]));
    }
    cs.parallel.push_back(std::move(pc));
  }
  for (int i = last_parallel + 1; i <= opt.n_languages; ++i)
    cs.mono_only.push_back(cs.languages[i - 1]);

  for (int i = 1; i <= opt.n_languages; ++i) {
    MonoCorpus mc;
    mc.lang = cs.languages[i - 1];
    const bool only = cs.is_mono_only(mc.lang);
    const int count = only ? opt.n_sentences : (opt.n_sentences + 1) / 2;
    Rng rng(mix_seed({opt.seed, fnv1a64("mono"), static_cast<uint64_t>(i)}));
    for (int n = 0; n < count; ++n) {
      const std::vector<int> concepts =
          draw_concepts(rng, cdf, opt.min_len, opt.max_len);
      training_sentences.insert(concepts);
      mc.lines.push_back(render(concepts, cs.ciphers[i - 1]));
    }
    cs.mono.push_back(std::move(mc));
  }

  // Held-out sentences are unique and unseen in training: retrieval gold
  // indices stay well-defined and BLEU never scores memorized lines.
  Rng rng(mix_seed({opt.seed, fnv1a64("multiway")}));
  std::set<std::vector<int>> seen;
  std::vector<std::vector<int>> heldout;
  long attempts = 0;
  const long max_attempts = 200L * std::max(opt.heldout_sentences, 1);
  while (static_cast<int>(heldout.size()) < opt.heldout_sentences) {
    if (++attempts > max_attempts)
      throw DataError("generate: cannot draw " +
                      std::to_string(opt.heldout_sentences) +
                      " distinct held-out sentences; enlarge the vocabulary "
                      "or the length range");
    std::vector<int> concepts = draw_concepts(rng, cdf, opt.min_len, opt.max_len);
    if (training_sentences.count(concepts) || !seen.insert(concepts).second)
      continue;
    heldout.push_back(std::move(concepts));
  }
  for (int i = 0; i < opt.n_languages; ++i) {
    auto& lines = cs.multiway[cs.languages[i]];
    for (const auto& concepts : heldout)
      lines.push_back(render(concepts, cs.ciphers[i]));
  }
  return cs;
}

SynonymDictionary make_synonym_dictionary(const CorpusSet& corpus,
                                          double coverage, uint64_t seed) {
  if (coverage < 0.0 || coverage > 1.0)
    throw std::invalid_argument("synonym coverage must be in [0,1]");
  const int v = corpus.options.base_vocab_size;
  const int covered = static_cast<int>(std::lround(coverage * v));
  std::vector<int> concepts(v);
  for (int i = 0; i < v; ++i) concepts[i] = i;
  Rng rng(mix_seed({seed, fnv1a64("synonyms")}));
  shuffle_ints(concepts, rng);
  concepts.resize(covered);
  std::sort(concepts.begin(), concepts.end());

  SynonymDictionary dict;
  for (int c : concepts)
    for (const auto& ci : corpus.ciphers)
      for (const auto& cj : corpus.ciphers)
        if (ci.lang != cj.lang)
          dict.add(ci.lang, ci.token(c), cj.lang, cj.token(c));
  return dict;
}

void write_corpus_dir(const CorpusSet& corpus, const SynonymDictionary& dict,
                      const std::string& dir) {
  const fs::path root(dir);
  fs::create_directories(root);

  std::vector<std::string> pair_names;
  for (const auto& p : corpus.parallel) pair_names.push_back(p.pair_name());
  const GenOptions& o = corpus.options;
  write_kv_file((root / "manifest.txt").string(),
                {{"kind", "corpus"},
                 {"languages", join_csv(corpus.languages)},
                 {"parallel_pairs", join_csv(pair_names)},
                 {"mono_only", join_csv(corpus.mono_only)},
                 {"base_vocab_size", std::to_string(o.base_vocab_size)},
                 {"n_languages", std::to_string(o.n_languages)},
                 {"n_sentences", std::to_string(o.n_sentences)},
                 {"min_len", std::to_string(o.min_len)},
                 {"max_len", std::to_string(o.max_len)},
                 {"heldout_sentences", std::to_string(o.heldout_sentences)},
                 {"zipf_exponent", std::to_string(o.zipf_exponent)},
                 {"synonym_coverage", std::to_string(o.synonym_coverage)},
                 {"identity_ciphers", o.identity_ciphers ? "1" : "0"},
                 {"seed", std::to_string(o.seed)}});

  for (const auto& p : corpus.parallel) {
    write_lines(root / (p.pair_name() + "." + p.lang_a + ".txt"), p.a);
    write_lines(root / (p.pair_name() + "." + p.lang_b + ".txt"), p.b);
  }
  for (const auto& m : corpus.mono)
    write_lines(root / ("mono." + m.lang + ".txt"), m.lines);
  for (const auto& [lang, lines] : corpus.multiway)
    write_lines(root / ("multiway." + lang + ".txt"), lines);
  for (const auto& c : corpus.ciphers) {
    std::ofstream out(root / ("cipher." + c.lang + ".tsv"), std::ios::binary);
    if (!out) throw DataError("cannot write cipher file for " + c.lang);
    for (size_t k = 0; k < c.perm.size(); ++k)
      out << k << '\t' << c.token(static_cast<int>(k)) << "\n";
  }
  dict.save((root / "synonyms.tsv").string());

  // Shared vocabulary over every corpus file, including the held-out set:
  // the synthetic vocabulary is closed, so no token may fall to UNK.
  std::vector<std::string> files;
  for (const auto& p : corpus.parallel) {
    files.push_back((root / (p.pair_name() + "." + p.lang_a + ".txt")).string());
    files.push_back((root / (p.pair_name() + "." + p.lang_b + ".txt")).string());
  }
  for (const auto& m : corpus.mono)
    files.push_back((root / ("mono." + m.lang + ".txt")).string());
  for (const auto& [lang, lines] : corpus.multiway)
    files.push_back((root / ("multiway." + lang + ".txt")).string());
  Vocabulary vocab = Vocabulary::build(files, corpus.languages, 1);
  vocab.save((root / "vocab.txt").string());
}

CorpusSet load_corpus_dir(const std::string& dir) {
  const fs::path root(dir);
  const auto kv = read_kv_file((root / "manifest.txt").string());
  const auto need = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end())
      throw DataError(dir + "/manifest.txt: missing key '" + key + "'");
    return it->second;
  };

  CorpusSet cs;
  cs.languages = split_csv(need("languages"));
  cs.mono_only = split_csv(need("mono_only"));
  cs.options.base_vocab_size = std::stoi(need("base_vocab_size"));
  cs.options.n_languages = std::stoi(need("n_languages"));
  cs.options.n_sentences = std::stoi(need("n_sentences"));
  cs.options.min_len = std::stoi(need("min_len"));
  cs.options.max_len = std::stoi(need("max_len"));
  cs.options.heldout_sentences = std::stoi(need("heldout_sentences"));
  cs.options.zipf_exponent = std::stod(need("zipf_exponent"));
  cs.options.synonym_coverage = std::stod(need("synonym_coverage"));
  cs.options.identity_ciphers = need("identity_ciphers") == "1";
  cs.options.seed = std::stoull(need("seed"));

  for (const auto& pair : split_csv(need("parallel_pairs"))) {
    const size_t dash = pair.find('-');
    if (dash == std::string::npos)
      throw DataError("manifest: malformed pair name '" + pair + "'");
    ParallelCorpus pc;
    pc.lang_a = pair.substr(0, dash);
    pc.lang_b = pair.substr(dash + 1);
    pc.a = read_lines(root / (pair + "." + pc.lang_a + ".txt"));
    pc.b = read_lines(root / (pair + "." + pc.lang_b + ".txt"));
    if (pc.a.size() != pc.b.size())
      throw DataError("parallel corpus " + pair + ": sides are not line-aligned");
    cs.parallel.push_back(std::move(pc));
  }
  for (const auto& lang : cs.languages) {
    MonoCorpus mc;
    mc.lang = lang;
    mc.lines = read_lines(root / ("mono." + lang + ".txt"));
    cs.mono.push_back(std::move(mc));
  }
  size_t heldout = 0;
  for (const auto& lang : cs.languages) {
    auto lines = read_lines(root / ("multiway." + lang + ".txt"));
    if (heldout == 0) heldout = lines.size();
    if (lines.size() != heldout)
      throw DataError("multiway set: " + lang + " is not line-aligned");
    cs.multiway[lang] = std::move(lines);
  }
  for (const auto& lang : cs.languages) {
    std::ifstream in(root / ("cipher." + lang + ".tsv"));
    if (!in) throw DataError("missing cipher file for " + lang);
    Cipher c;
    c.lang = lang;
    c.perm.assign(cs.options.base_vocab_size, -1);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const size_t tab = line.find('\t');
      if (tab == std::string::npos)
        throw DataError("cipher." + lang + ".tsv: malformed line");
      const int concept_id = std::stoi(line.substr(0, tab));
      const std::string tok = line.substr(tab + 1);
      const size_t us = tok.rfind('_');
      if (us == std::string::npos)
        throw DataError("cipher." + lang + ".tsv: malformed token " + tok);
      c.perm.at(concept_id) = std::stoi(tok.substr(us + 1));
    }
    c.inverse.assign(c.perm.size(), -1);
    for (size_t k = 0; k < c.perm.size(); ++k) {
      if (c.perm[k] < 0)
        throw DataError("cipher." + lang + ".tsv: concept " + std::to_string(k) +
                        " missing");
      c.inverse[c.perm[k]] = static_cast<int>(k);
    }
    cs.ciphers.push_back(std::move(c));
  }
  return cs;
}

std::vector<double> temperature_sample_weights(const std::vector<long>& counts,
                                               double T) {
  if (counts.empty())
    throw std::invalid_argument("temperature_sample_weights: no corpora");
  if (T <= 0.0)
    throw std::invalid_argument("temperature_sample_weights: T must be > 0");
  double total = 0.0;
  for (long n : counts) {
    if (n <= 0) throw DataError("temperature_sample_weights: zero corpus count");
    total += static_cast<double>(n);
  }
  std::vector<double> w(counts.size());
  double wsum = 0.0;
  for (size_t i = 0; i < counts.size(); ++i) {
    w[i] = std::pow(static_cast<double>(counts[i]) / total, 1.0 / T);
    wsum += w[i];
  }
  for (double& x : w) x /= wsum;
  return w;
}

double Batch::mean_target_len() const {
  double sum = 0.0;
  for (int b = 0; b < rows(); ++b) sum += tgt_len(b);
  return sum / rows();
}

long Batch::total_tokens() const {
  long sum = 0;
  for (int b = 0; b < rows(); ++b) sum += src_len(b) + tgt_len(b);
  return sum;
}

Batcher::Batcher(const CorpusSet& corpus, const Vocabulary& vocab,
                 const SynonymDictionary* dict, BatcherOptions opt)
    : corpus_(corpus), vocab_(vocab), dict_(dict), opt_(opt) {
  for (size_t i = 0; i < corpus.parallel.size(); ++i)
    sources_.push_back({true, static_cast<int>(i),
                        static_cast<long>(corpus.parallel[i].a.size())});
  if (opt_.use_mono)
    for (size_t i = 0; i < corpus.mono.size(); ++i)
      sources_.push_back({false, static_cast<int>(i),
                          static_cast<long>(corpus.mono[i].lines.size())});
  if (sources_.empty())
    throw DataError("batcher: no corpora selected (parallel empty, mono off)");

  std::vector<long> counts;
  for (const auto& s : sources_) counts.push_back(s.count);
  weights_ = temperature_sample_weights(counts, opt_.temperature);

  long longest = 0;
  for (const auto& s : sources_) {
    if (s.parallel) {
      const auto& pc = corpus_.parallel[s.idx];
      for (size_t l = 0; l < pc.a.size(); ++l)
        longest = std::max<long>(longest, static_cast<long>(pc.a[l].size()) +
                                              static_cast<long>(pc.b[l].size()) + 4);
    } else {
      for (const auto& line : corpus_.mono[s.idx].lines)
        longest = std::max<long>(longest, 2 * (static_cast<long>(line.size()) + 2));
    }
  }
  if (opt_.batch_tokens < longest)
    throw DataError("batcher: token budget " + std::to_string(opt_.batch_tokens) +
                    " smaller than the longest sentence pair (" +
                    std::to_string(longest) + " tokens)");
}

size_t Batcher::sample_index(Rng& rng, const std::vector<double>& weights) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (size_t i = 0; i < weights.size(); ++i) {
    cum += weights[i];
    if (u < cum) return i;
  }
  return weights.size() - 1;
}

SentencePair Batcher::draw_pair(Rng& rng, size_t source, long line,
                                int64_t batch_index) const {
  const Source& s = sources_[source];
  const uint64_t aug_seed =
      mix_seed({opt_.seed, fnv1a64("aa"), static_cast<uint64_t>(source),
                static_cast<uint64_t>(line), static_cast<uint64_t>(batch_index)});
  if (s.parallel) {
    const ParallelCorpus& pc = corpus_.parallel[s.idx];
    const bool flip = opt_.bidirectional && rng.uniform() < 0.5;
    SentencePair p;
    p.src_lang = flip ? pc.lang_b : pc.lang_a;
    p.tgt_lang = flip ? pc.lang_a : pc.lang_b;
    p.src = flip ? pc.b[line] : pc.a[line];
    p.tgt = flip ? pc.a[line] : pc.b[line];
    p.kind = PairKind::kParallel;
    if (opt_.use_aa && dict_)
      p = make_pseudo_pair(p, *dict_, opt_.p_replace, aug_seed);
    return p;
  }
  const MonoCorpus& mc = corpus_.mono[s.idx];
  if (opt_.use_aa && dict_)
    return make_pseudo_self_pair(mc.lines[line], mc.lang, *dict_,
                                 opt_.p_replace, aug_seed);
  SentencePair p;
  p.src_lang = mc.lang;
  p.tgt_lang = mc.lang;
  p.src = mc.lines[line];
  p.tgt = mc.lines[line];
  p.kind = PairKind::kPseudoSelfParallel;
  return p;
}

Batch Batcher::make(int64_t index) const {
  Rng rng(mix_seed({opt_.seed, fnv1a64("batch"), static_cast<uint64_t>(index)}));
  std::vector<SentencePair> rows;
  std::set<std::pair<size_t, long>> used;
  long tokens = 0;
  int rejects = 0;
  while (rejects < opt_.max_rejects) {
    const size_t s = sample_index(rng, weights_);
    const long line = rng.uniform_int(sources_[s].count);
    if (!used.insert({s, line}).second) {
      ++rejects;
      continue;
    }
    SentencePair p = draw_pair(rng, s, line, index);
    const long cost = static_cast<long>(p.src.size()) +
                      static_cast<long>(p.tgt.size()) + 4;
    if (tokens + cost > opt_.batch_tokens) break;
    rows.push_back(std::move(p));
    tokens += cost;
    rejects = 0;
  }
  return assemble(rows);
}

Batch Batcher::assemble(const std::vector<SentencePair>& rows) const {
  if (rows.empty()) throw DataError("batcher: assembled an empty batch");
  const int b = static_cast<int>(rows.size());
  int s_max = 0, t_max = 0, te_max = 0;
  for (const auto& r : rows) {
    s_max = std::max(s_max, static_cast<int>(r.src.size()) + 2);
    t_max = std::max(t_max, static_cast<int>(r.tgt.size()) + 1);
    te_max = std::max(te_max, static_cast<int>(r.tgt.size()) + 2);
  }

  Batch out;
  out.src_ids = IntMat::Constant(b, s_max, Vocabulary::kPad);
  out.src_mask = IntMat::Zero(b, s_max);
  out.tgt_input = IntMat::Constant(b, t_max, Vocabulary::kPad);
  out.tgt_output = IntMat::Constant(b, t_max, Vocabulary::kPad);
  out.tgt_mask = IntMat::Zero(b, t_max);
  out.tgt_enc_ids = IntMat::Constant(b, te_max, Vocabulary::kPad);
  out.tgt_enc_mask = IntMat::Zero(b, te_max);

  for (int i = 0; i < b; ++i) {
    const SentencePair& r = rows[i];
    const std::vector<int> src = vocab_.encode_tokens(r.src, r.src_lang, true);
    const std::vector<int> tgt_raw = vocab_.encode_tokens(r.tgt, r.tgt_lang, false);
    const int lang = vocab_.lang_id(r.tgt_lang);

    for (size_t j = 0; j < src.size(); ++j) {
      out.src_ids(i, static_cast<int>(j)) = src[j];
      out.src_mask(i, static_cast<int>(j)) = 1;
    }
    out.tgt_input(i, 0) = lang;
    out.tgt_mask(i, 0) = 1;
    for (size_t j = 0; j < tgt_raw.size(); ++j) {
      out.tgt_input(i, static_cast<int>(j) + 1) = tgt_raw[j];
      out.tgt_output(i, static_cast<int>(j)) = tgt_raw[j];
      out.tgt_mask(i, static_cast<int>(j) + 1) = 1;
    }
    out.tgt_output(i, static_cast<int>(tgt_raw.size())) = Vocabulary::kEos;
    out.tgt_enc_ids(i, 0) = lang;
    out.tgt_enc_mask(i, 0) = 1;
    for (size_t j = 0; j < tgt_raw.size(); ++j) {
      out.tgt_enc_ids(i, static_cast<int>(j) + 1) = tgt_raw[j];
      out.tgt_enc_mask(i, static_cast<int>(j) + 1) = 1;
    }
    out.tgt_enc_ids(i, static_cast<int>(tgt_raw.size()) + 1) = Vocabulary::kEos;
    out.tgt_enc_mask(i, static_cast<int>(tgt_raw.size()) + 1) = 1;

    out.kinds.push_back(r.kind);
    out.src_langs.push_back(r.src_lang);
    out.tgt_langs.push_back(r.tgt_lang);
  }
  return out;
}

}  // namespace mtlab
