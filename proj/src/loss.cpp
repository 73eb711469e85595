// Copyright (c) 2026 mtlab contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtlab/loss.hpp"

#include <cmath>

namespace mtlab {

Var mt_loss_rows(Var logits, const std::vector<int>& targets,
                 const std::vector<Scalar>& mask) {
  return cross_entropy_rows(logits, targets, mask);
}

Var mt_loss(const std::vector<Var>& logits, const Batch& batch) {
  if (static_cast<int>(logits.size()) != batch.rows())
    throw std::invalid_argument("mt_loss: " + std::to_string(logits.size()) +
                                " logit rows for a batch of " +
                                std::to_string(batch.rows()));
  Var total{};
  for (int b = 0; b < batch.rows(); ++b) {
    const int len = batch.tgt_len(b);
    std::vector<int> targets(len);
    for (int j = 0; j < len; ++j) targets[j] = batch.tgt_output(b, j);
    Var l = cross_entropy_rows(logits[b], targets,
                               std::vector<Scalar>(len, 1.0));
    total = b == 0 ? l : add(total, l);
  }
  return total;
}

Var contrastive_loss(const std::vector<Var>& r_src,
                     const std::vector<Var>& r_tgt, const CtlOptions& opt) {
  const int b = static_cast<int>(r_src.size());
  if (b == 0 || r_tgt.size() != r_src.size())
    throw std::invalid_argument("contrastive_loss: need aligned nonempty rows");
  if (opt.tau <= 0.0)
    throw std::invalid_argument("contrastive_loss: tau must be > 0");

  std::vector<std::vector<Var>> sims(b, std::vector<Var>(b));
  for (int i = 0; i < b; ++i)
    for (int k = 0; k < b; ++k) sims[i][k] = cosine(r_src[i], r_tgt[k]);

  if (opt.include_positive) {
    std::vector<Var> rows;
    std::vector<int> targets;
    std::vector<Scalar> mask(b, 1.0);
    for (int i = 0; i < b; ++i) {
      rows.push_back(concat_cols(sims[i]));
      targets.push_back(i);
    }
    Var logits = scale(concat_rows(rows), 1.0 / opt.tau);
    return cross_entropy_rows(logits, targets, mask);
  }

  if (b < 2)
    throw std::invalid_argument(
        "contrastive_loss: negatives-only denominator needs at least 2 rows");
  Var total{};
  for (int i = 0; i < b; ++i) {
    std::vector<Var> negs;
    negs.reserve(b - 1);
    for (int k = 0; k < b; ++k)
      if (k != i) negs.push_back(sims[i][k]);
    Var lse = logsumexp_rows(scale(concat_cols(negs), 1.0 / opt.tau));
    Var li = add(lse, scale(sims[i][i], -1.0 / opt.tau));
    total = i == 0 ? li : add(total, li);
  }
  return total;
}

double combined_loss(double mt, double ctl, double lambda, double avg_seq_len) {
  if (!std::isfinite(mt) || !std::isfinite(ctl))
    throw NumericError("combined_loss: non-finite inputs (mt=" +
                       std::to_string(mt) + ", ctl=" + std::to_string(ctl) + ")");
  return mt + lambda * avg_seq_len * ctl;
}

LossReport make_loss_report(double mt, double ctl, double effective_lambda,
                            double avg_seq_len, long token_count,
                            int batch_rows) {
  LossReport r;
  r.mt = mt;
  r.ctl = ctl;
  r.combined = combined_loss(mt, ctl, effective_lambda, avg_seq_len);
  r.avg_seq_len = avg_seq_len;
  r.token_count = token_count;
  r.batch_rows = batch_rows;
  return r;
}

}  // namespace mtlab
