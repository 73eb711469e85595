// Copyright (c) 2026 mtlab contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtlab/eval.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

namespace mtlab {

EmbedFn model_embedder(const ModelParams& params, const Vocabulary& vocab) {
  return [&params, &vocab](const std::vector<std::string>& tokens,
                           const std::string& lang) {
    return pooled_representation(params, vocab, tokens, lang);
  };
}

TranslateFn model_translator(const ModelParams& params, const Vocabulary& vocab,
                             int beam) {
  return [&params, &vocab, beam](const std::vector<std::string>& tokens,
                                 const std::string& src_lang,
                                 const std::string& tgt_lang) {
    return translate(params, vocab, tokens, src_lang, tgt_lang, beam);
  };
}

TranslateFn oracle_translator(const CorpusSet& corpus) {
  return [&corpus](const std::vector<std::string>& tokens,
                   const std::string& src_lang, const std::string& tgt_lang) {
    return corpus.oracle_translate(tokens, src_lang, tgt_lang);
  };
}

namespace {

double cosine_value(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0)
    throw NumericError("retrieval: zero-norm representation");
  return a.dot(b) / (na * nb);
}

double accuracy_from_embeddings(const Mat& src, const Mat& cand,
                                const std::vector<int>& gold) {
  long correct = 0;
  for (Eigen::Index i = 0; i < src.rows(); ++i) {
    int best = 0;
    double best_sim = -2.0;
    for (Eigen::Index k = 0; k < cand.rows(); ++k) {
      const double sim = cosine_value(src.row(i), cand.row(k));
      if (sim > best_sim) {
        best_sim = sim;
        best = static_cast<int>(k);
      }
    }
    if (best == gold[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(src.rows());
}

Mat embed_all(const EmbedFn& embed,
              const std::vector<std::vector<std::string>>& sentences,
              const std::string& lang) {
  if (sentences.empty()) throw DataError("retrieval: empty sentence set");
  Mat first = embed(sentences[0], lang);
  Mat out(static_cast<Eigen::Index>(sentences.size()), first.cols());
  out.row(0) = first.row(0);
  for (size_t i = 1; i < sentences.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = embed(sentences[i], lang).row(0);
  return out;
}

}  // namespace

double similarity_search_accuracy(const EmbedFn& embed,
                                  const RetrievalTask& task) {
  if (task.sources.empty() || task.candidates.empty())
    throw DataError("similarity search: empty task");
  if (task.gold.size() != task.sources.size())
    throw DataError("similarity search: gold map does not cover the sources");
  const Mat src = embed_all(embed, task.sources, task.src_lang);
  const Mat cand = embed_all(embed, task.candidates, task.cand_lang);
  return accuracy_from_embeddings(src, cand, task.gold);
}

double bleu(const std::vector<std::vector<std::string>>& hypotheses,
            const std::vector<std::vector<std::string>>& references) {
  if (hypotheses.empty())
    throw DataError("bleu: empty corpus");
  if (hypotheses.size() != references.size())
    throw DataError("bleu: " + std::to_string(hypotheses.size()) +
                    " hypotheses vs " + std::to_string(references.size()) +
                    " references");
  constexpr int kMaxN = 4;
  long match[kMaxN + 1] = {0};
  long total[kMaxN + 1] = {0};
  long hyp_len = 0, ref_len = 0;

  const auto ngram_counts = [](const std::vector<std::string>& toks, int n) {
    std::map<std::string, long> counts;
    if (static_cast<int>(toks.size()) < n) return counts;
    for (size_t i = 0; i + n <= toks.size(); ++i) {
      std::string key;
      for (int j = 0; j < n; ++j) {
        key += toks[i + j];
        key += '\x1f';
      }
      ++counts[key];
    }
    return counts;
  };

  for (size_t s = 0; s < hypotheses.size(); ++s) {
    hyp_len += static_cast<long>(hypotheses[s].size());
    ref_len += static_cast<long>(references[s].size());
    for (int n = 1; n <= kMaxN; ++n) {
      const auto hyp_counts = ngram_counts(hypotheses[s], n);
      const auto ref_counts = ngram_counts(references[s], n);
      for (const auto& [key, cnt] : hyp_counts) {
        total[n] += cnt;
        const auto it = ref_counts.find(key);
        if (it != ref_counts.end()) match[n] += std::min(cnt, it->second);
      }
    }
  }
  if (hyp_len == 0) return 0.0;

  double log_sum = 0.0;
  for (int n = 1; n <= kMaxN; ++n) {
    double p;
    if (n == 1) {
      if (match[1] == 0) return 0.0;
      p = static_cast<double>(match[1]) / static_cast<double>(total[1]);
    } else if (match[n] == 0) {
      p = (static_cast<double>(match[n]) + 1.0) /
          (static_cast<double>(total[n]) + 1.0);
    } else {
      p = static_cast<double>(match[n]) / static_cast<double>(total[n]);
    }
    log_sum += std::log(p);
  }
  const double bp =
      hyp_len < ref_len
          ? std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len))
          : 1.0;
  return 100.0 * bp * std::exp(log_sum / kMaxN);
}

std::vector<std::pair<std::string, std::string>> all_directions(
    const CorpusSet& corpus) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& a : corpus.languages)
    for (const auto& b : corpus.languages)
      if (a != b) out.emplace_back(a, b);
  return out;
}

std::vector<DirectionReport> evaluate_directions(
    const TranslateFn& translate, const CorpusSet& corpus,
    const std::vector<std::pair<std::string, std::string>>& directions,
    const EvalOptions& opt) {
  std::vector<DirectionReport> reports;
  for (const auto& [src, tgt] : directions) {
    if (!corpus.multiway.count(src) || !corpus.multiway.count(tgt))
      throw DataError("evaluate: unknown direction " + src + "->" + tgt);
    const auto& src_lines = corpus.multiway.at(src);
    const auto& tgt_lines = corpus.multiway.at(tgt);
    const size_t n = std::min<size_t>(src_lines.size(),
                                      static_cast<size_t>(opt.max_sentences));
    if (n == 0) throw DataError("evaluate: empty held-out set");
    std::vector<std::vector<std::string>> hyps, refs;
    hyps.reserve(n);
    refs.reserve(n);
    for (size_t i = 0; i < n; ++i) {
      hyps.push_back(translate(src_lines[i], src, tgt));
      refs.push_back(tgt_lines[i]);
    }
    reports.push_back({src + "->" + tgt, "bleu", bleu(hyps, refs),
                       static_cast<long>(n)});
  }
  std::sort(reports.begin(), reports.end(),
            [](const DirectionReport& a, const DirectionReport& b) {
              return a.direction < b.direction;
            });
  return reports;
}

RetrievalSummary retrieval_suite(const EmbedFn& embed, const CorpusSet& corpus,
                                 int max_sentences) {
  RetrievalSummary out;
  std::map<std::string, Mat> reps;
  size_t n = 0;
  for (const auto& lang : corpus.languages) {
    const auto& lines = corpus.multiway.at(lang);
    n = std::min<size_t>(lines.size(), static_cast<size_t>(max_sentences));
    if (n == 0) throw DataError("retrieval: empty held-out set");
    std::vector<std::vector<std::string>> subset(lines.begin(),
                                                 lines.begin() + n);
    reps[lang] = embed_all(embed, subset, lang);
  }
  std::vector<int> gold(n);
  for (size_t i = 0; i < n; ++i) gold[i] = static_cast<int>(i);

  std::map<std::string, double> acc;
  for (const auto& [a, b] : all_directions(corpus)) {
    const double v = accuracy_from_embeddings(reps.at(a), reps.at(b), gold);
    acc[a + "->" + b] = v;
    out.per_pair.push_back({a + "->" + b, "retrieval_top1", v,
                            static_cast<long>(n)});
  }

  const std::string hub = corpus.languages.front();
  double enc_sum = 0.0;
  int enc_n = 0;
  for (const auto& lang : corpus.languages) {
    if (lang == hub) continue;
    enc_sum += 0.5 * (acc.at(hub + "->" + lang) + acc.at(lang + "->" + hub));
    ++enc_n;
  }
  out.encentric_avg = enc_n ? enc_sum / enc_n : 0.0;

  double all_sum = 0.0, zs_sum = 0.0;
  int all_n = 0, zs_n = 0;
  for (const auto& [a, b] : all_directions(corpus)) {
    const double v = acc.at(a + "->" + b);
    all_sum += v;
    ++all_n;
    if (corpus.direction_class(a, b) == "zero-shot") {
      zs_sum += v;
      ++zs_n;
    }
  }
  out.multiway_avg = all_n ? all_sum / all_n : 0.0;
  out.zero_shot_avg = zs_n ? zs_sum / zs_n : 0.0;
  return out;
}

ScenarioSummary summarize_bleu(const CorpusSet& corpus,
                               const std::vector<DirectionReport>& reports) {
  ScenarioSummary s;
  for (const auto& r : reports) {
    if (r.metric != "bleu") continue;
    const size_t arrow = r.direction.find("->");
    if (arrow == std::string::npos)
      throw DataError("summarize: malformed direction " + r.direction);
    const std::string a = r.direction.substr(0, arrow);
    const std::string b = r.direction.substr(arrow + 2);
    const std::string cls = corpus.direction_class(a, b);
    if (cls == "supervised") {
      s.supervised += r.value;
      ++s.n_supervised;
    } else if (cls == "unsupervised") {
      s.unsupervised += r.value;
      ++s.n_unsupervised;
    } else {
      s.zero_shot += r.value;
      ++s.n_zero_shot;
    }
  }
  if (s.n_supervised) s.supervised /= s.n_supervised;
  if (s.n_unsupervised) s.unsupervised /= s.n_unsupervised;
  if (s.n_zero_shot) s.zero_shot /= s.n_zero_shot;
  return s;
}

void write_reports(const std::string& path,
                   const std::vector<DirectionReport>& reports) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << "direction\tmetric\tvalue\tn\n";
  char line[160];
  for (const auto& r : reports) {
    std::snprintf(line, sizeof(line), "%s\t%s\t%.6f\t%ld\n", r.direction.c_str(),
                  r.metric.c_str(), r.value, r.n);
    out << line;
  }
}

Pca2 pca2(const Mat& data) {
  if (data.cols() < 2)
    throw std::invalid_argument("pca2: need at least 2 dimensions, got " +
                                std::to_string(data.cols()));
  Pca2 out;
  out.mean = data.colwise().mean();
  Mat centered = data.rowwise() - out.mean;
  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(data.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success)
    throw NumericError("pca2: eigendecomposition failed");
  // Eigen orders eigenvalues ascending; take the top two.
  out.components.resize(data.cols(), 2);
  for (int c = 0; c < 2; ++c) {
    Eigen::VectorXd comp = solver.eigenvectors().col(data.cols() - 1 - c);
    Eigen::Index imax = 0;
    comp.cwiseAbs().maxCoeff(&imax);
    if (comp(imax) < 0.0) comp = -comp;
    out.components.col(c) = comp;
  }
  out.projected = centered * out.components;
  return out;
}

void export_representations(const EmbedFn& embed, const CorpusSet& corpus,
                            const std::string& out_path,
                            const std::string& projection, int max_sentences) {
  if (projection != "none" && projection != "pca2")
    throw std::invalid_argument("export: projection must be none or pca2");
  std::vector<std::string> langs;
  std::vector<long> line_ids;
  Mat rows;
  size_t n = 0;
  for (const auto& lang : corpus.languages) {
    const auto& lines = corpus.multiway.at(lang);
    n = std::min<size_t>(lines.size(), static_cast<size_t>(max_sentences));
    if (n == 0) throw DataError("export: empty held-out set");
    for (size_t i = 0; i < n; ++i) {
      const Mat r = embed(lines[i], lang);
      if (rows.size() == 0)
        rows.resize(static_cast<Eigen::Index>(corpus.languages.size() * n),
                    r.cols());
      rows.row(static_cast<Eigen::Index>(langs.size())) = r.row(0);
      langs.push_back(lang);
      line_ids.push_back(static_cast<long>(i));
    }
  }
  Mat emit = rows;
  if (projection == "pca2") emit = pca2(rows).projected;

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw DataError("cannot write " + out_path);
  char buf[64];
  for (size_t i = 0; i < langs.size(); ++i) {
    out << langs[i] << '\t' << line_ids[i];
    for (Eigen::Index j = 0; j < emit.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "\t%.8g", emit(static_cast<Eigen::Index>(i), j));
      out << buf;
    }
    out << "\n";
  }
}

}  // namespace mtlab
