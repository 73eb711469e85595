// Copyright (c) 2026 mtlab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mtlab/corpus.hpp"
#include "mtlab/model.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace mtlab {

// Sentence -> pooled representation row; sentence x languages -> tokens.
// The model supplies the production implementations; tests may substitute
// the exact cipher oracle or forced outputs.
using EmbedFn = std::function<Mat(const std::vector<std::string>& tokens,
                                  const std::string& lang)>;
using TranslateFn = std::function<std::vector<std::string>(
    const std::vector<std::string>& tokens, const std::string& src_lang,
    const std::string& tgt_lang)>;

EmbedFn model_embedder(const ModelParams& params, const Vocabulary& vocab);
TranslateFn model_translator(const ModelParams& params, const Vocabulary& vocab,
                             int beam);
TranslateFn oracle_translator(const CorpusSet& corpus);

struct RetrievalTask {
  std::vector<std::vector<std::string>> sources;
  std::vector<std::vector<std::string>> candidates;
  std::string src_lang, cand_lang;
  std::vector<int> gold;  // gold[i] = index of the correct candidate
};

// Fraction of sources whose nearest candidate by cosine similarity of the
// pooled representations is the gold one; ties break to the lowest index.
double similarity_search_accuracy(const EmbedFn& embed, const RetrievalTask& task);

struct DirectionReport {
  std::string direction;  // "l1->l2"
  std::string metric;
  double value = 0.0;
  long n = 0;
};

// Corpus-level BLEU in [0,100]: modified n-gram precisions n=1..4 with
// uniform weights, brevity penalty exp(1 - r/c) for c < r, add-one smoothing
// on zero precisions for n >= 2.
double bleu(const std::vector<std::vector<std::string>>& hypotheses,
            const std::vector<std::vector<std::string>>& references);

struct EvalOptions {
  int max_sentences = 200;  // per direction, from the multi-way held-out set
};

// Decode + BLEU per ordered direction; reports sorted by direction name.
std::vector<DirectionReport> evaluate_directions(
    const TranslateFn& translate, const CorpusSet& corpus,
    const std::vector<std::pair<std::string, std::string>>& directions,
    const EvalOptions& opt);

// All ordered pairs of the corpus languages.
std::vector<std::pair<std::string, std::string>> all_directions(
    const CorpusSet& corpus);

struct RetrievalSummary {
  std::vector<DirectionReport> per_pair;  // metric "retrieval_top1"
  double encentric_avg = 0.0;   // mean over X of avg(l1->X, X->l1)
  double multiway_avg = 0.0;    // mean over all ordered pairs
  double zero_shot_avg = 0.0;   // mean over zero-shot ordered pairs
};

// Multi-way retrieval over the held-out set (embeddings computed once per
// language).
RetrievalSummary retrieval_suite(const EmbedFn& embed, const CorpusSet& corpus,
                                 int max_sentences);

struct ScenarioSummary {
  double supervised = 0.0, unsupervised = 0.0, zero_shot = 0.0;
  int n_supervised = 0, n_unsupervised = 0, n_zero_shot = 0;
};

ScenarioSummary summarize_bleu(const CorpusSet& corpus,
                               const std::vector<DirectionReport>& reports);

void write_reports(const std::string& path,
                   const std::vector<DirectionReport>& reports);

struct Pca2 {
  Mat projected;             // n x 2
  Mat components;            // d x 2, descending eigenvalue order
  Eigen::RowVectorXd mean;   // 1 x d
};

// Eigendecomposition of the centered covariance; component signs fixed so
// the largest-magnitude loading is positive.
Pca2 pca2(const Mat& data);

// TSV rows (language, line_id, v1..vd) or 2-D PCA coordinates.
void export_representations(const EmbedFn& embed, const CorpusSet& corpus,
                            const std::string& out_path,
                            const std::string& projection, int max_sentences);

}  // namespace mtlab
