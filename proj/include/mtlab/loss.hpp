// Copyright (c) 2026 mtlab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mtlab/corpus.hpp"
#include "mtlab/tensor.hpp"

#include <vector>

namespace mtlab {

// Per-step losses. mt is summed over target tokens, ctl over batch rows;
// combined = mt + lambda * avg_seq_len * ctl with the effective lambda
// (0 when the contrastive term is disabled).
struct LossReport {
  double mt = 0.0;
  double ctl = 0.0;
  double combined = 0.0;
  double avg_seq_len = 0.0;
  long token_count = 0;
  int batch_rows = 0;
};

// Sum over unmasked positions of -log softmax(logits)[gold]; PAD positions
// contribute nothing.
Var mt_loss_rows(Var logits, const std::vector<int>& targets,
                 const std::vector<Scalar>& mask);

// Translation loss over a whole batch of per-row logits.
Var mt_loss(const std::vector<Var>& logits, const Batch& batch);

struct CtlOptions {
  double tau = 0.1;
  // Whether the positive pair is part of the denominator (InfoNCE
  // convention) or only the in-batch negatives are.
  bool include_positive = true;
};

// In-batch contrastive loss over pooled representations: row b's positive is
// (r_src[b], r_tgt[b]); every other target row serves as a negative.
// Similarity is cosine, scaled by 1/tau. Summed over rows.
Var contrastive_loss(const std::vector<Var>& r_src,
                     const std::vector<Var>& r_tgt, const CtlOptions& opt);

double combined_loss(double mt, double ctl, double lambda, double avg_seq_len);

LossReport make_loss_report(double mt, double ctl, double effective_lambda,
                            double avg_seq_len, long token_count, int batch_rows);

}  // namespace mtlab
